#ifndef FHN_NONLINEARITY_HPP
#define FHN_NONLINEARITY_HPP

// The FitzHugh-Nagumo cubic, its monotone shift f_eta, the Lipschitz
// regularisation f_{eta,eps} and their pseudo-spectral field versions.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fhn/errors.hpp"
#include "fhn/model.hpp"

namespace fhn {

/// eta and xi0 are always derived from xi1.
struct DriftParams {
  double xi1 = 0.5;
  double eps = 0.0;

  double eta() const { return fhn_eta(xi1); }
  double xi0() const { return fhn_xi0(xi1); }
};

/// f(u) = -u (u - 1)(u - xi1).
inline double f(double u, double xi1) { return -u * (u - 1.0) * (u - xi1); }

/// f(u) - eta u, evaluated in the shifted form -(u - xi0)^3 - xi0^3.
inline double f_eta(double u, const DriftParams& dp) {
  double v = u - dp.xi0();
  double x0 = dp.xi0();
  return -v * v * v - x0 * x0 * x0;
}

/// 1 + eps (1 - xi0 (u - xi0) + (u - xi0)^2). Its discriminant in u - xi0 is
/// xi0^2 - 4 < 0, so it is >= 1 for eps >= 0; the guard still rejects anything else.
inline double regularization_denominator(double u, const DriftParams& dp) {
  double v = u - dp.xi0();
  double d = 1.0 + dp.eps * (1.0 - dp.xi0() * v + v * v);
  if (!(d > 0)) {
    throw ConfigError("f_eta_eps: nonpositive denominator (eps = " + std::to_string(dp.eps) +
                      ", xi0 = " + std::to_string(dp.xi0()) + ")");
  }
  return d;
}

inline double f_eta_eps(double u, const DriftParams& dp) {
  if (dp.eps < 0) throw ConfigError("f_eta_eps: eps must be >= 0");
  if (dp.eps == 0) return f_eta(u, dp);
  return f_eta(u, dp) / regularization_denominator(u, dp);
}

/// d/du f_{eta,eps}(u) = -3 v^2 / D - eps (2 v - xi0)(-v^3 - xi0^3) / D^2, v = u - xi0.
inline double f_eta_eps_prime(double u, const DriftParams& dp) {
  double v = u - dp.xi0();
  double d = dp.eps == 0 ? 1.0 : regularization_denominator(u, dp);
  double num = f_eta(u, dp);
  return -3.0 * v * v / d - dp.eps * (2.0 * v - dp.xi0()) * num / (d * d);
}

/// h_eps(u) = -(u - xi0)^3 / D.
inline double h_eps(double u, const DriftParams& dp) {
  double v = u - dp.xi0();
  double d = dp.eps == 0 ? 1.0 : regularization_denominator(u, dp);
  return -v * v * v / d;
}

/// |u - xi0 + h_eps(u)^{1/3}| (real cube root).
inline double cube_root_gap(double u, const DriftParams& dp) {
  return std::abs(u - dp.xi0() + std::cbrt(h_eps(u, dp)));
}

/// Row of a diagnostic scan: u, f, f_eta, f_eta_eps, f_eta_eps'.
inline std::vector<std::array<double, 5>> drift_scan(const DriftParams& dp, double lo, double hi, int n) {
  require(n >= 2 && hi > lo, "drift_scan: need n >= 2 and hi > lo");
  std::vector<std::array<double, 5>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double u = lo + (hi - lo) * i / (n - 1);
    rows.push_back({u, f(u, dp.xi1), f_eta(u, dp), f_eta_eps(u, dp), f_eta_eps_prime(u, dp)});
  }
  return rows;
}

/// Largest |f_eta_eps'| on a uniform scan of [lo, hi]; finite for eps > 0.
inline double measured_lipschitz(const DriftParams& dp, double lo, double hi, int n) {
  double best = 0;
  for (const auto& row : drift_scan(dp, lo, hi, n)) best = std::max(best, std::abs(row[4]));
  return best;
}

// ---------------------------------------------------------------------------
// Field versions. The u-component goes to the grid, g is applied pointwise and
// the result is projected back onto the retained modes. With n_grid >= 2 n_modes
// and the cosine basis the projection of a cubic is exact.

template <class Fn>
StateH apply_pointwise(const StateH& x, const Model& model, Fn&& g) {
  check_same_size(x, model.zero_state());
  Eigen::VectorXd grid = model.to_grid(x.u);
  for (Eigen::Index j = 0; j < grid.size(); ++j) grid(j) = g(grid(j));
  return {model.project(grid), Eigen::VectorXd::Zero(model.n_modes())};
}

/// F(x) = (f(u), 0).
inline StateH apply_F(const StateH& x, const Model& model) {
  const double xi1 = model.params().xi1;
  return apply_pointwise(x, model, [xi1](double u) { return f(u, xi1); });
}

/// F_eta(x) = (f(u) - eta u, 0).
inline StateH apply_F_eta(const StateH& x, const Model& model) {
  DriftParams dp{model.params().xi1, 0.0};
  return apply_pointwise(x, model, [dp](double u) { return f_eta(u, dp); });
}

/// F_{eta,eps}(x) = (f_{eta,eps}(u), 0).
inline StateH apply_F_eta_eps(const StateH& x, const Model& model, double eps) {
  DriftParams dp{model.params().xi1, eps};
  return apply_pointwise(x, model, [dp](double u) { return f_eta_eps(u, dp); });
}

/// <F_eta(x) - F_eta(y), x - y>_H; nonpositive up to rounding.
inline double monotonicity_gap(const StateH& x, const StateH& y, const Model& model) {
  return inner_product_H(apply_F_eta(x, model) - apply_F_eta(y, model), x - y, model);
}

/// |u|_{L^6} by quadrature on the collocation grid.
inline double norm_L6(const Eigen::VectorXd& u_coeffs, const Model& model) {
  Eigen::VectorXd g = model.to_grid(u_coeffs);
  double s = g.array().pow(6).sum() / model.n_grid();
  return std::pow(s, 1.0 / 6.0);
}

}  // namespace fhn

#endif  // FHN_NONLINEARITY_HPP
