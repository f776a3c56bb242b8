#ifndef FHN_PROFILE_HPP
#define FHN_PROFILE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fhn/errors.hpp"

namespace fhn {

/// A coefficient function on [0,1]: a constant, a table of values at the cell
/// centres (i + 1/2)/L (linearly interpolated, flat beyond the outer centres),
/// or an arbitrary callable.
class Profile {
 public:
  enum class Kind { constant, table, function };

  static Profile constant(double value) {
    Profile p;
    p.kind_ = Kind::constant;
    p.value_ = value;
    return p;
  }

  static Profile table(std::vector<double> values) {
    require(!values.empty(), "profile table must not be empty");
    Profile p;
    p.kind_ = Kind::table;
    p.table_ = std::move(values);
    return p;
  }

  static Profile function(std::function<double(double)> fn, std::string label = "function") {
    Profile p;
    p.kind_ = Kind::function;
    p.fn_ = std::move(fn);
    p.label_ = std::move(label);
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return kind_ == Kind::constant; }
  double constant_value() const noexcept { return value_; }
  const std::vector<double>& table_values() const noexcept { return table_; }
  const std::string& label() const noexcept { return label_; }

  double operator()(double xi) const {
    switch (kind_) {
      case Kind::constant:
        return value_;
      case Kind::function:
        return fn_(xi);
      case Kind::table:
        break;
    }
    const auto n = static_cast<double>(table_.size());
    double pos = xi * n - 0.5;
    if (pos <= 0) return table_.front();
    if (pos >= n - 1) return table_.back();
    auto i = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(i);
    return (1 - frac) * table_[i] + frac * table_[i + 1];
  }

 private:
  Profile() = default;

  Kind kind_ = Kind::constant;
  double value_ = 0;
  std::vector<double> table_;
  std::function<double(double)> fn_;
  std::string label_;
};

}  // namespace fhn

#endif  // FHN_PROFILE_HPP
