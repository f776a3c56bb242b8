#ifndef FHN_KOLMOGOROV_HPP
#define FHN_KOLMOGOROV_HPP

// Cylinder exponentials phi(x) = exp(<x, h>_H), the Kolmogorov operator
// N0 phi = 1/2 Tr[C D^2 phi] + <A x + F(x), D phi>_H on them, its
// Ornstein-Uhlenbeck part L, and Monte Carlo checks of Dynkin's formula.
//
// Derivatives are H-gradients: D phi = phi h, D^2 phi = phi h (x) h. The noise
// adds lambda_k^i dt to the variance of each spectral coordinate, so as an
// operator on H its covariance is C (u, w) = (gamma Q1 u, Q2 w) and
// <C h, h>_H = sum_k lambda_k^1 (gamma h_{u,k})^2 + lambda_k^2 h_{w,k}^2.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "fhn/errors.hpp"
#include "fhn/mat2.hpp"
#include "fhn/model.hpp"
#include "fhn/noise.hpp"
#include "fhn/nonlinearity.hpp"
#include "fhn/parallel.hpp"
#include "fhn/solver.hpp"
#include "fhn/stats.hpp"

namespace fhn {

/// <C h, h>_H in closed form.
inline double noise_form(const StateH& h, const NoiseSpec& noise, double gamma) {
  double s = 0;
  for (int k = 0; k < h.size(); ++k) {
    auto ku = static_cast<std::size_t>(k);
    double gu = gamma * h.u(k);
    s += noise.lambda1[ku] * gu * gu + noise.lambda2[ku] * h.w(k) * h.w(k);
  }
  return s;
}

/// C applied to v as an operator on H.
inline StateH apply_noise_covariance(const StateH& v, const NoiseSpec& noise, double gamma) {
  StateH out = v;
  for (int k = 0; k < v.size(); ++k) {
    auto ku = static_cast<std::size_t>(k);
    out.u(k) = gamma * noise.lambda1[ku] * v.u(k);
    out.w(k) = noise.lambda2[ku] * v.w(k);
  }
  return out;
}

/// Tr[C (h (x) h)] summed over the H-orthonormal basis {(gamma^{-1/2} e_k, 0)} U {(0, e_k)}.
inline double noise_form_basis_sum(const StateH& h, const NoiseSpec& noise, double gamma) {
  const int n = h.size();
  const StateH ch = apply_noise_covariance(h, noise, gamma);
  double s = 0;
  for (int k = 0; k < n; ++k) {
    for (int c = 0; c < 2; ++c) {
      StateH g = StateH::zero(n);
      if (c == 0) {
        g.u(k) = 1.0 / std::sqrt(gamma);
      } else {
        g.w(k) = 1.0;
      }
      s += inner_product_H(h, g, gamma) * inner_product_H(ch, g, gamma);
    }
  }
  return s;
}

/// Direction h of phi(x) = exp(<x, h>_H), with finitely many nonzero modes.
class CylinderFunction {
 public:
  using Terms = std::vector<std::pair<int, double>>;

  CylinderFunction(const Model& model, const NoiseSpec& noise, const Terms& h_u, const Terms& h_w)
      : h_(model.zero_state()) {
    validate(noise, model.n_modes());
    for (auto [k, c] : h_u) {
      require(k >= 0 && k < model.n_modes(), "cylinder function: u-mode out of range");
      h_.u(k) += c;
    }
    for (auto [k, c] : h_w) {
      require(k >= 0 && k < model.n_modes(), "cylinder function: w-mode out of range");
      h_.w(k) += c;
    }
    q_ = fhn::noise_form(h_, noise, model.gamma());
  }

  CylinderFunction(const Model& model, const NoiseSpec& noise, StateH h) : h_(std::move(h)) {
    validate(noise, model.n_modes());
    check_same_size(h_, model.zero_state());
    q_ = fhn::noise_form(h_, noise, model.gamma());
  }

  const StateH& direction() const { return h_; }
  double noise_form() const { return q_; }

 private:
  StateH h_;
  double q_ = 0;
};

struct PhiValue {
  double value = 0;
  double log_value = 0;
  bool overflow = false;
};

inline PhiValue phi_eval(const CylinderFunction& phi, const StateH& x, const Model& model) {
  PhiValue r;
  r.log_value = inner_product_H(x, phi.direction(), model);
  r.overflow = r.log_value > 700.0;
  r.value = r.overflow ? std::numeric_limits<double>::infinity() : std::exp(r.log_value);
  return r;
}

/// D phi(x) = phi(x) h.
inline StateH phi_gradient(const CylinderFunction& phi, const StateH& x, const Model& model) {
  return phi_eval(phi, x, model).value * phi.direction();
}

/// <D^2 phi(x) v, v'>_H = phi(x) <h, v>_H <h, v'>_H.
inline double phi_hessian_form(const CylinderFunction& phi, const StateH& x, const StateH& v, const StateH& v2,
                               const Model& model) {
  return phi_eval(phi, x, model).value * inner_product_H(phi.direction(), v, model) *
         inner_product_H(phi.direction(), v2, model);
}

/// L phi(x) = phi(x) [1/2 <C h, h>_H + <A x, h>_H].
inline double apply_L(const CylinderFunction& phi, const StateH& x, const Model& model) {
  return phi_eval(phi, x, model).value *
         (0.5 * phi.noise_form() + inner_product_H(apply_A(x, model), phi.direction(), model));
}

/// N0 phi(x) for the drift actually simulated by a given integrator kind:
/// cubic: A x + F(x); regularized: A_eta x + F_{eta,eps}(x); linear: A_eta x.
inline double apply_N0(const CylinderFunction& phi, const StateH& x, const Model& model,
                       DriftKind kind = DriftKind::cubic, double eps = 0.0) {
  StateH drift;
  switch (kind) {
    case DriftKind::cubic:
      drift = apply_A(x, model) + apply_F(x, model);
      break;
    case DriftKind::regularized:
      drift = apply_A_eta(x, model) + apply_F_eta_eps(x, model, eps);
      break;
    case DriftKind::linear:
      drift = apply_A_eta(x, model);
      break;
  }
  return phi_eval(phi, x, model).value * (0.5 * phi.noise_form() + inner_product_H(drift, phi.direction(), model));
}

/// E phi(X_t) for the linear system dX = A_eta X dt + sqrt(Q) dW started at x:
/// exp(<m_t, h>_H + 1/2 sum_k a_k^T Sigma_k(t) a_k), a_k = (gamma h_{u,k}, h_{w,k}).
inline double ou_expectation(const CylinderFunction& phi, const StateH& x, double t, const Model& model,
                             const NoiseSpec& noise) {
  if (!model.constant_p()) throw ConfigError("ou_expectation: needs constant p");
  const auto& h = phi.direction();
  double expo = 0;
  for (int k = 0; k < model.n_modes(); ++k) {
    Vec2 a(model.gamma() * h.u(k), h.w(k));
    if (a.isZero(0.0)) continue;
    Mat2 m = shifted_mode_matrix(k, model);
    Vec2 mean = expm(t * m) * Vec2(x.u(k), x.w(k));
    Mat2 cov = t > 0 ? convolution_covariance(m, mode_noise(noise, k), t) : Mat2::Zero().eval();
    expo += a.dot(mean) + 0.5 * a.dot(cov * a);
  }
  return std::exp(expo);
}

// ---------------------------------------------------------------------------
// Dynkin's formula E phi(X_t) = phi(x) + E int_0^t N0 phi(X_s) ds

struct DynkinReport {
  double t = 0;
  double dt = 0;
  int n_paths = 0;
  int rejected = 0;         // paths dropped because phi overflowed
  MeanSe terminal;          // E phi(X_t)
  MeanSe integral;          // E int_0^t N0 phi(X_s) ds (left-point rule)
  double phi0 = 0;
  double residual = 0;      // mean of phi(X_t) - phi(x) - int, signed
  double residual_se = 0;
  // Same with the discrete martingale sum_n <D phi(X_n), Z_n>_H removed; it has
  // mean zero exactly, so what remains is the time-discretisation bias.
  double cv_residual = 0;
  double cv_residual_se = 0;
  double exact = std::numeric_limits<double>::quiet_NaN();  // OU closed form when available
};

inline DynkinReport dynkin_residual(const CylinderFunction& phi, const StateH& x, double t, int n_paths,
                                    const TrajectoryConfig& cfg, const Model& model, const NoiseSpec& noise,
                                    unsigned workers = default_workers()) {
  require(t >= 0, "dynkin: t must be >= 0");
  require(n_paths >= 2, "dynkin: need at least 2 paths");
  DynkinReport rep;
  rep.t = t;
  rep.dt = cfg.dt;
  rep.n_paths = n_paths;
  rep.phi0 = phi_eval(phi, x, model).value;
  const DriftKind kind = cfg.drift();
  if (kind == DriftKind::linear && model.constant_p()) rep.exact = ou_expectation(phi, x, t, model, noise);
  if (t == 0) {
    rep.terminal = {rep.phi0, 0, 0, static_cast<std::size_t>(n_paths)};
    rep.integral = {0, 0, 0, static_cast<std::size_t>(n_paths)};
    return rep;
  }
  TrajectoryConfig c = cfg;
  c.T = t;
  c.x0 = x;
  validate(c, model);
  Integrator integ(model, noise, c.dt, c.lattice_dt(), kind, c.eps);
  const auto n_steps = static_cast<std::int64_t>(std::llround(t / c.dt));
  const std::int64_t i0 = lattice_index(c.start_time, integ.noise_dt());

  const auto np = static_cast<std::size_t>(n_paths);
  std::vector<double> term(np), integ_sum(np), mart(np);
  std::vector<char> ok(np, 1);
  parallel_for(
      np,
      [&](std::size_t path) {
        NoiseStream stream{c.master_seed, c.path_id + path};
        StateH xn = x;
        double acc = 0, m = 0;
        StateH z;
        for (std::int64_t n = 0; n < n_steps; ++n) {
          auto pv = phi_eval(phi, xn, model);
          if (pv.overflow) {
            ok[path] = 0;
            return;
          }
          acc += c.dt * apply_N0(phi, xn, model, kind, c.eps);
          xn = integ.step(xn, i0 + n * integ.quanta_per_step(), stream, &z);
          if (!xn.finite()) {
            throw BlowUpError(n + 1, c.start_time + static_cast<double>(n + 1) * c.dt, "dynkin: non-finite state");
          }
          m += pv.value * inner_product_H(phi.direction(), z, model);
        }
        auto pv = phi_eval(phi, xn, model);
        if (pv.overflow) {
          ok[path] = 0;
          return;
        }
        term[path] = pv.value;
        integ_sum[path] = acc;
        mart[path] = m;
      },
      workers);
  std::vector<double> a, b, d, dcv;
  for (std::size_t p = 0; p < np; ++p) {
    if (!ok[p]) {
      ++rep.rejected;
      continue;
    }
    a.push_back(term[p]);
    b.push_back(integ_sum[p]);
    d.push_back(term[p] - rep.phi0 - integ_sum[p]);
    dcv.push_back(term[p] - rep.phi0 - integ_sum[p] - mart[p]);
  }
  require(a.size() >= 2, "dynkin: fewer than 2 paths survived the overflow guard");
  rep.terminal = mean_se(a);
  rep.integral = mean_se(b);
  auto md = mean_se(d);
  auto mc = mean_se(dcv);
  rep.residual = md.mean;
  rep.residual_se = md.se;
  rep.cv_residual = mc.mean;
  rep.cv_residual_se = mc.se;
  return rep;
}

// ---------------------------------------------------------------------------
// Linear growth of L on oscillatory cylinder functions

struct LinearGrowthReport {
  double a = 0;  // fitted envelope |L phi(x)| <= a + b |x|_H
  double b = 0;
  double a_exact = 0;  // 1/2 <C h, h>_H
  double b_exact = 0;  // |A^* h|_H
  int fit_violations = 0;
  int fresh_violations = 0;
  double fresh_max_excess = 0;  // max over the fresh sample of |L phi| / (a + b |x|) - 1
  int exact_violations = 0;     // analytic envelope, both samples
};

/// |L phi(x)| for phi(x) = exp(i <x, h>_H): L phi = phi (-1/2 <C h, h>_H + i <A x, h>_H).
inline double abs_L_oscillatory(const CylinderFunction& phi, const StateH& x, const Model& model) {
  double re = -0.5 * phi.noise_form();
  double im = inner_product_H(apply_A(x, model), phi.direction(), model);
  return std::hypot(re, im);
}

/// States r d with d uniform on the H unit sphere of the truncated space and r
/// uniform on [0, radius].
inline std::vector<StateH> random_states(const Model& model, int count, double radius, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, radius);
  std::vector<StateH> out;
  const int n = model.n_modes();
  for (int i = 0; i < count; ++i) {
    StateH x = StateH::zero(n);
    for (int k = 0; k < n; ++k) {
      x.u(k) = nd(gen) / std::sqrt(model.gamma());
      x.w(k) = nd(gen);
    }
    out.push_back(with_norm_H(std::move(x), ud(gen), model.gamma()));
  }
  return out;
}

/// Envelope a + b |x| of |L phi| fitted on one sample as the upper support line
/// minimising the mean envelope height (so the fitting sample has no
/// violations), then checked on a second sample.
inline LinearGrowthReport linear_growth_check_L(const CylinderFunction& phi, const std::vector<StateH>& fit_sample,
                                                const std::vector<StateH>& fresh_sample, const Model& model) {
  require(fit_sample.size() >= 2, "linear_growth_check_L: need at least two fitting states");
  LinearGrowthReport r;
  r.a_exact = 0.5 * phi.noise_form();
  // A^* h in H: <A x, h>_H = <x, A^* h>_H for all x; build it column by column.
  const int n = model.n_modes();
  StateH adj = StateH::zero(n);
  for (int k = 0; k < n; ++k) {
    StateH e = StateH::zero(n);
    e.u(k) = 1.0;
    adj.u(k) = inner_product_H(apply_A(e, model), phi.direction(), model) / model.gamma();
    e = StateH::zero(n);
    e.w(k) = 1.0;
    adj.w(k) = inner_product_H(apply_A(e, model), phi.direction(), model);
  }
  r.b_exact = std::sqrt(norm_H_sq(adj, model));

  std::vector<double> xs, ys;
  for (const auto& s : fit_sample) {
    xs.push_back(std::sqrt(norm_H_sq(s, model)));
    ys.push_back(abs_L_oscillatory(phi, s, model));
  }
  // Minimise a + b * mean(x) over lines above all points: the optimum is a
  // supporting line through two points of the upper hull, or a horizontal line.
  const double xbar = mean_se(xs).mean;
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double a, double b) {
    if (a < 0 || b < 0) return;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (ys[i] > a + b * xs[i] + 1e-12 * (1 + ys[i])) return;
    double cost = a + b * xbar;
    if (cost < best) {
      best = cost;
      r.a = a;
      r.b = b;
    }
  };
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return xs[i] < xs[j]; });
  std::vector<std::size_t> hull;
  for (auto i : order) {
    while (hull.size() >= 2) {
      auto p = hull[hull.size() - 2], q = hull.back();
      double cross = (xs[q] - xs[p]) * (ys[i] - ys[p]) - (ys[q] - ys[p]) * (xs[i] - xs[p]);
      if (cross >= 0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  consider(*std::max_element(ys.begin(), ys.end()), 0.0);
  for (std::size_t j = 0; j + 1 < hull.size(); ++j) {
    auto p = hull[j], q = hull[j + 1];
    if (xs[q] == xs[p]) continue;
    double b = (ys[q] - ys[p]) / (xs[q] - xs[p]);
    consider(ys[p] - b * xs[p], b);
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ys[i] > r.a + r.b * xs[i] + 1e-12 * (1 + ys[i])) ++r.fit_violations;
    if (ys[i] > r.a_exact + r.b_exact * xs[i] + 1e-12 * (1 + ys[i])) ++r.exact_violations;
  }
  for (const auto& s : fresh_sample) {
    double x = std::sqrt(norm_H_sq(s, model));
    double y = abs_L_oscillatory(phi, s, model);
    double env = r.a + r.b * x;
    if (y > env + 1e-12 * (1 + y)) ++r.fresh_violations;
    if (env > 0) r.fresh_max_excess = std::max(r.fresh_max_excess, y / env - 1.0);
    if (y > r.a_exact + r.b_exact * x + 1e-12 * (1 + y)) ++r.exact_violations;
  }
  return r;
}

}  // namespace fhn

#endif  // FHN_KOLMOGOROV_HPP
