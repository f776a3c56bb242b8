#ifndef FHN_NOISE_HPP
#define FHN_NOISE_HPP

// Diagonal trace-class noise: spectra, a counter-based Gaussian source indexed
// by absolute time, exact per-mode Ornstein-Uhlenbeck steps and trace
// diagnostics of the stochastic convolution.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "fhn/errors.hpp"
#include "fhn/mat2.hpp"
#include "fhn/model.hpp"
#include "fhn/parallel.hpp"

namespace fhn {

/// Covariance spectra of the two noise channels: Q_i e_k = lambda_k^i e_k.
struct NoiseSpec {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  double sigma2 = 0.01;
  double s = 1.0;
  bool explicit_tables = false;

  /// lambda_k^i = sigma2 (1 + k)^{-2 s} on both channels.
  static NoiseSpec power_law(int n_modes, double sigma2 = 0.01, double s = 1.0) {
    require(n_modes >= 1, "noise: n_modes must be >= 1");
    require(sigma2 >= 0 && std::isfinite(sigma2), "noise.sigma2 must be >= 0");
    require(s > 0.5, "noise.s must be > 1/2 for a summable spectrum");
    NoiseSpec spec;
    spec.sigma2 = sigma2;
    spec.s = s;
    for (int k = 0; k < n_modes; ++k) {
      double lam = sigma2 * std::pow(1.0 + k, -2.0 * s);
      spec.lambda1.push_back(lam);
      spec.lambda2.push_back(lam);
    }
    return spec;
  }

  static NoiseSpec from_tables(std::vector<double> l1, std::vector<double> l2) {
    NoiseSpec spec;
    spec.lambda1 = std::move(l1);
    spec.lambda2 = std::move(l2);
    spec.explicit_tables = true;
    spec.sigma2 = std::numeric_limits<double>::quiet_NaN();
    spec.s = std::numeric_limits<double>::quiet_NaN();
    return spec;
  }

  int size() const { return static_cast<int>(lambda1.size()); }

  bool is_zero() const {
    return std::all_of(lambda1.begin(), lambda1.end(), [](double v) { return v == 0; }) &&
           std::all_of(lambda2.begin(), lambda2.end(), [](double v) { return v == 0; });
  }
};

inline void validate(const NoiseSpec& spec, int n_modes) {
  require(spec.lambda1.size() == spec.lambda2.size(), "noise: lambda1 and lambda2 differ in length");
  require(spec.size() == n_modes, "noise: spectrum length must equal model.n_modes");
  for (std::size_t k = 0; k < spec.lambda1.size(); ++k) {
    require(spec.lambda1[k] >= 0 && std::isfinite(spec.lambda1[k]), "noise.lambda1 entries must be finite and >= 0");
    require(spec.lambda2[k] >= 0 && std::isfinite(spec.lambda2[k]), "noise.lambda2 entries must be finite and >= 0");
  }
}

/// Tr Q = sum_k (lambda_k^1 + lambda_k^2).
inline double trace_Q(const NoiseSpec& spec) {
  double t = 0;
  for (std::size_t k = 0; k < spec.lambda1.size(); ++k) t += spec.lambda1[k] + spec.lambda2[k];
  return t;
}

/// Tr Q summed as <Q g, g>_H over the H-orthonormal basis
/// {(gamma^{-1/2} e_k, 0)} U {(0, e_k)}, where Q acts blockwise as diag(Q1, Q2).
inline double trace_Q_weighted(const NoiseSpec& spec, double gamma) {
  double t = 0;
  const double scale = 1.0 / std::sqrt(gamma);
  for (std::size_t k = 0; k < spec.lambda1.size(); ++k) {
    double gu = scale;
    t += gamma * (spec.lambda1[k] * gu) * gu;
    t += spec.lambda2[k];
  }
  return t;
}

/// Infinite-truncation limit of one power-law channel: sigma2 zeta(2 s).
inline double power_law_channel_limit(double sigma2, double s) { return sigma2 * std::riemann_zeta(2.0 * s); }

// ---------------------------------------------------------------------------
// Counter-based Gaussian source

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Standard normals keyed by (master_seed, path_id, interval, mode). The interval
/// is an index on the absolute-time noise lattice, so runs started at different
/// times see the same increments on overlapping intervals.
struct NoiseStream {
  std::uint64_t master_seed = 0;
  std::uint64_t path_id = 0;

  /// Hash of (master_seed, path_id, interval); combine with a mode via normals_at.
  std::uint64_t interval_key(std::int64_t interval) const {
    std::uint64_t key = splitmix64(master_seed);
    key = splitmix64(key ^ path_id);
    return splitmix64(key ^ static_cast<std::uint64_t>(interval));
  }

  static std::array<double, 2> normals_at(std::uint64_t interval_key, int mode) {
    std::uint64_t key = splitmix64(interval_key ^ static_cast<std::uint64_t>(mode));
    constexpr double inv53 = 1.0 / 9007199254740992.0;
    double u1 = (static_cast<double>(key >> 11) + 0.5) * inv53;
    double u2 = static_cast<double>(splitmix64(key) >> 11) * inv53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(th), r * std::sin(th)};
  }

  std::array<double, 2> normals(std::int64_t interval, int mode) const {
    return normals_at(interval_key(interval), mode);
  }
};

/// Brownian increment of sqrt(Q) W over an interval of length dt:
/// coefficient (k, i) has variance lambda_k^i dt.
inline StateH sample_increment(double dt, const NoiseStream& stream, std::int64_t interval, const NoiseSpec& spec) {
  require(dt >= 0, "sample_increment: dt must be >= 0");
  const int n = spec.size();
  StateH dw = StateH::zero(n);
  if (dt == 0) return dw;
  for (int k = 0; k < n; ++k) {
    auto z = stream.normals(interval, k);
    auto ku = static_cast<std::size_t>(k);
    dw.u(k) = std::sqrt(spec.lambda1[ku] * dt) * z[0];
    dw.w(k) = std::sqrt(spec.lambda2[ku] * dt) * z[1];
  }
  return dw;
}

// ---------------------------------------------------------------------------
// Exact per-mode OU law

inline Mat2 mode_noise(const NoiseSpec& spec, int k) {
  auto ku = static_cast<std::size_t>(k);
  Mat2 q = Mat2::Zero();
  q(0, 0) = spec.lambda1[ku];
  q(1, 1) = spec.lambda2[ku];
  return q;
}

/// gamma S_uu + S_ww: expected squared H-norm of a mode with coordinate covariance S.
inline double trace_H(const Mat2& s, double gamma) { return gamma * s(0, 0) + s(1, 1); }

/// int_0^t e^{sM} Q e^{sM^T} ds = S_inf - e^{tM} S_inf e^{tM^T} for Hurwitz M.
inline Mat2 convolution_covariance(const Mat2& m, const Mat2& q, double t) {
  if (!is_hurwitz(m)) throw NumericalError("convolution_covariance: mode matrix is not Hurwitz");
  if (std::isinf(t)) return lyapunov(m, q);
  Mat2 s_inf = lyapunov(m, q);
  Mat2 e = expm(t * m);
  Mat2 s = s_inf - e * s_inf * e.transpose();
  return 0.5 * (s + s.transpose());
}

/// Exact one-step law of dx = M x dt + sqrt(Q) dW over dt.
struct OuPropagator {
  Mat2 drift;
  Mat2 transition;  // e^{M dt}
  Mat2 covariance;  // Sigma(dt)
  Mat2 chol;
  double dt = 0;
};

inline OuPropagator ou_propagator(const Mat2& m, const Mat2& q, double dt) {
  require(dt > 0, "ou_propagator: dt must be > 0");
  OuPropagator p;
  p.drift = m;
  p.dt = dt;
  p.transition = expm(dt * m);
  p.covariance = convolution_covariance(m, q, dt);
  p.chol = cholesky_psd(p.covariance);
  return p;
}

inline Vec2 exact_ou_step(const Vec2& x, const OuPropagator& prop, const std::array<double, 2>& z) {
  return prop.transition * x + prop.chol * Vec2(z[0], z[1]);
}

/// One exact step of mode k of the linear system dX = A_eta X dt + sqrt(Q) dW.
inline Vec2 exact_ou_step(const Vec2& xk, int k, double dt, const Model& model, const NoiseSpec& spec,
                          const NoiseStream& stream, std::int64_t interval) {
  if (!model.constant_p()) throw ConfigError("exact_ou_step: needs constant p");
  auto prop = ou_propagator(shifted_mode_matrix(k, model), mode_noise(spec, k), dt);
  return exact_ou_step(xk, prop, stream.normals(interval, k));
}

// ---------------------------------------------------------------------------
// Trace diagnostics of the stochastic convolution W_{A_eta}

/// s -> Tr_H[e^{s A_eta} Q e^{s A_eta^*}], summed over modes.
inline double convolution_trace_density(const Model& model, const NoiseSpec& spec, double s) {
  double t = 0;
  for (int k = 0; k < model.n_modes(); ++k) {
    Mat2 e = expm(s * shifted_mode_matrix(k, model));
    t += trace_H(e * mode_noise(spec, k) * e.transpose(), model.gamma());
  }
  return t;
}

/// int_0^horizon Tr_H[e^{s A_eta} Q e^{s A_eta^*}] ds in closed form; horizon may be +inf.
inline double convolution_trace_integral(const Model& model, const NoiseSpec& spec, double horizon) {
  require(horizon >= 0, "convolution_trace_integral: horizon must be >= 0");
  validate(spec, model.n_modes());
  if (horizon == 0) return 0;
  double t = 0;
  for (int k = 0; k < model.n_modes(); ++k) {
    t += trace_H(convolution_covariance(shifted_mode_matrix(k, model), mode_noise(spec, k), horizon), model.gamma());
  }
  return t;
}

/// Tr(Q) / (2 omega).
inline double convolution_trace_bound(const Model& model, const NoiseSpec& spec) {
  return trace_Q(spec) / (2.0 * model.constants().omega);
}

struct SupStatistic {
  double mean = 0;
  double se = 0;
  double median = 0;
  double q90 = 0;
};

struct ConvolutionSupReport {
  double horizon = 0;
  double dt = 0;
  int n_paths = 0;
  SupStatistic m1;  // sup_t |W(t)|_H^2
  SupStatistic m2;  // sup_t |W(t)|_H^4
};

namespace detail {

inline SupStatistic summarize_sup(std::vector<double> v) {
  SupStatistic s;
  const auto n = static_cast<double>(v.size());
  double sum = 0, sum2 = 0;
  for (double x : v) {
    sum += x;
    sum2 += x * x;
  }
  s.mean = sum / n;
  double var = v.size() > 1 ? std::max(0.0, (sum2 - n * s.mean * s.mean) / (n - 1)) : 0.0;
  s.se = std::sqrt(var / n);
  std::sort(v.begin(), v.end());
  auto at = [&](double q) { return v[static_cast<std::size_t>(q * (n - 1) + 0.5)]; };
  s.median = at(0.5);
  s.q90 = at(0.9);
  return s;
}

}  // namespace detail

/// Monte Carlo statistics of sup_{t <= T} |W_{A_eta}(t)|_H^{2m}, m = 1, 2, from
/// exact per-mode recursions sampled every dt. Requires constant p.
inline ConvolutionSupReport convolution_sup_statistics(double horizon, int n_paths, const Model& model,
                                                       const NoiseSpec& spec, std::uint64_t master_seed,
                                                       double dt = 0.01, unsigned workers = default_workers()) {
  require(horizon > 0 && dt > 0 && n_paths >= 2, "convolution_sup_statistics: bad horizon, dt or n_paths");
  validate(spec, model.n_modes());
  const int n = model.n_modes();
  std::vector<OuPropagator> props;
  for (int k = 0; k < n; ++k) props.push_back(ou_propagator(shifted_mode_matrix(k, model), mode_noise(spec, k), dt));
  const auto steps = static_cast<std::int64_t>(std::llround(horizon / dt));
  std::vector<double> sup2(static_cast<std::size_t>(n_paths)), sup4(static_cast<std::size_t>(n_paths));
  parallel_for(
      static_cast<std::size_t>(n_paths),
      [&](std::size_t path) {
        NoiseStream stream{master_seed, path};
        std::vector<Vec2> x(static_cast<std::size_t>(n), Vec2::Zero());
        double best = 0;
        for (std::int64_t i = 0; i < steps; ++i) {
          double h2 = 0;
          for (int k = 0; k < n; ++k) {
            auto ku = static_cast<std::size_t>(k);
            x[ku] = exact_ou_step(x[ku], props[ku], stream.normals(i, k));
            h2 += model.gamma() * x[ku](0) * x[ku](0) + x[ku](1) * x[ku](1);
          }
          best = std::max(best, h2);
        }
        sup2[path] = best;
        sup4[path] = best * best;
      },
      workers);
  ConvolutionSupReport r;
  r.horizon = horizon;
  r.dt = dt;
  r.n_paths = n_paths;
  r.m1 = detail::summarize_sup(sup2);
  r.m2 = detail::summarize_sup(sup4);
  return r;
}

}  // namespace fhn

#endif  // FHN_NOISE_HPP
