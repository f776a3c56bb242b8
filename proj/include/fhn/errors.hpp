#ifndef FHN_ERRORS_HPP
#define FHN_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fhn {

/// Invalid parameters or configuration. The CLI maps this to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite state produced by time stepping. The CLI maps this to exit status 3.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(std::int64_t step, double time, const std::string& what)
      : std::runtime_error(what + " (step " + std::to_string(step) + ", t = " +
                           std::to_string(time) + ")"),
        step_(step),
        time_(time) {}

  std::int64_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }

 private:
  std::int64_t step_;
  double time_;
};

/// Broken internal invariant (e.g. a non-Hurwitz mode matrix under valid parameters).
class NumericalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace fhn

#endif  // FHN_ERRORS_HPP
