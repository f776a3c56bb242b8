#ifndef FHN_MODEL_HPP
#define FHN_MODEL_HPP

// State space H = L^2 x L^2 with the gamma-weighted inner product, the Neumann
// eigenbasis of u -> (c u')', the linear block operator and its dissipativity
// constants.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fhn/errors.hpp"
#include "fhn/mat2.hpp"
#include "fhn/profile.hpp"

namespace fhn {

struct ModelParams {
  double alpha = 1.0;
  double gamma = 0.5;
  double xi1 = 0.5;
  Profile c = Profile::constant(1.0);
  Profile p = Profile::constant(0.3);
  int n_modes = 32;
  int n_grid = 64;
};

/// Cell-centred collocation points (j + 1/2)/m. The midpoint rule on this grid
/// integrates cos(k pi x) exactly for 0 < k < 2m.
inline std::vector<double> collocation_grid(int m) {
  std::vector<double> xi(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) xi[static_cast<std::size_t>(j)] = (j + 0.5) / m;
  return xi;
}

inline double fhn_eta(double xi1) { return (xi1 * xi1 - xi1 + 1.0) / 3.0; }
inline double fhn_xi0(double xi1) { return (1.0 + xi1) / 3.0; }

struct DerivedConstants {
  double eta = 0;
  double xi0 = 0;
  double c_min = 0;
  double p_min = 0;
  double omega = 0;
  double omega1 = 0;
  double omega2 = 0;
};

namespace detail {

inline std::pair<double, double> profile_min_max(const Profile& prof, int n_grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : collocation_grid(n_grid)) {
    double v = prof(x);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace detail

inline void validate(const ModelParams& p) {
  require(std::isfinite(p.alpha) && p.alpha > 0, "model.alpha must be > 0");
  require(std::isfinite(p.gamma) && p.gamma > 0, "model.gamma must be > 0");
  require(p.xi1 > 0 && p.xi1 < 1, "model.xi1 must lie in (0,1)");
  require(p.n_modes >= 1, "model.n_modes must be >= 1");
  require(p.n_grid >= 2 * p.n_modes, "model.n_grid must be >= 2 * n_modes");
  auto [cmin, cmax] = detail::profile_min_max(p.c, p.n_grid);
  auto [pmin, pmax] = detail::profile_min_max(p.p, p.n_grid);
  require(std::isfinite(cmax) && cmin > 0, "model.c must be positive on the grid");
  require(std::isfinite(pmax) && pmin > 0, "model.p must be positive on the grid");
  require(3 * pmin - (p.xi1 * p.xi1 - p.xi1 + 1) >= 0,
          "model.p: need 3 min p - (xi1^2 - xi1 + 1) >= 0, got min p = " + std::to_string(pmin));
}

inline DerivedConstants derive_constants(const ModelParams& p) {
  DerivedConstants d;
  d.eta = fhn_eta(p.xi1);
  d.xi0 = fhn_xi0(p.xi1);
  d.c_min = detail::profile_min_max(p.c, p.n_grid).first;
  d.p_min = detail::profile_min_max(p.p, p.n_grid).first;
  d.omega = std::min(d.p_min - d.eta, p.alpha);
  d.omega1 = d.omega;
  d.omega2 = std::min({d.c_min, d.p_min - d.eta, p.alpha});
  return d;
}

// ---------------------------------------------------------------------------
// Eigenbasis

/// Neumann eigenpairs tabulated on the collocation grid.
struct EigenBasis {
  std::vector<double> grid;
  Eigen::VectorXd mu;         // eigenvalues, mu[0] = 0, nonincreasing
  Eigen::MatrixXd modes;      // n_grid x n_modes, column k = e_k on the grid
  Eigen::MatrixXd grad_gram;  // <e_k', e_l'>_{L^2}
  double sup_bound = 0;       // max_k max_j |e_k(xi_j)|
  bool analytic = false;

  int n_modes() const { return static_cast<int>(mu.size()); }
  int n_grid() const { return static_cast<int>(grid.size()); }
};

/// Gauss-Legendre nodes and weights on [0,1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const double pi = std::numbers::pi;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 1; j <= n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    auto lo = static_cast<std::size_t>(i);
    auto hi = static_cast<std::size_t>(n - 1 - i);
    x[lo] = 0.5 * (1 - z);
    x[hi] = 0.5 * (1 + z);
    w[lo] = w[hi] = 1.0 / ((1 - z * z) * dp * dp);
  }
}

/// Builds the first n_modes Neumann eigenpairs of u -> (c u')'.
///
/// Constant c uses e_0 = 1, e_k = sqrt(2) cos(k pi x), mu_k = -c k^2 pi^2.
/// Otherwise the operator is discretised by Galerkin projection onto the first
/// n_grid cosines (stiffness integrals by Gauss-Legendre quadrature) and the
/// symmetric stiffness matrix is diagonalised. Because the midpoint rule is
/// exact for the cosine products involved, the tabulated modes are orthonormal
/// on the collocation grid.
inline EigenBasis build_eigenbasis(const ModelParams& params) {
  validate(params);
  const int n = params.n_modes;
  const int m = params.n_grid;
  const double pi = std::numbers::pi;
  EigenBasis b;
  b.grid = collocation_grid(m);
  b.mu.resize(n);
  b.modes.resize(m, n);
  b.grad_gram = Eigen::MatrixXd::Zero(n, n);

  auto cosine = [](int k, double xi) {
    return k == 0 ? 1.0 : std::numbers::sqrt2 * std::cos(k * std::numbers::pi * xi);
  };

  if (params.c.is_constant()) {
    b.analytic = true;
    const double c = params.c.constant_value();
    for (int k = 0; k < n; ++k) {
      b.mu(k) = -c * k * k * pi * pi;
      b.grad_gram(k, k) = k * k * pi * pi;
      for (int j = 0; j < m; ++j) b.modes(j, k) = cosine(k, b.grid[static_cast<std::size_t>(j)]);
    }
  } else {
    const int kdim = m;
    std::vector<double> qx, qw;
    gauss_legendre(4 * kdim + 32, qx, qw);
    const auto nq = static_cast<Eigen::Index>(qx.size());
    Eigen::MatrixXd sines(nq, kdim);
    Eigen::VectorXd cw(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
      auto qi = static_cast<std::size_t>(q);
      double cv = params.c(qx[qi]);
      if (!(cv > 0) || !std::isfinite(cv)) throw ConfigError("model.c must be positive on [0,1]");
      cw(q) = qw[qi] * cv;
      for (int j = 0; j < kdim; ++j) sines(q, j) = std::numbers::sqrt2 * j * pi * std::sin(j * pi * qx[qi]);
    }
    Eigen::MatrixXd stiff = sines.transpose() * cw.asDiagonal() * sines;
    stiff = 0.5 * (stiff + stiff.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stiff);
    if (es.info() != Eigen::Success) {
      throw NumericalError("eigenbasis: symmetric eigen-solve did not converge");
    }
    Eigen::MatrixXd vecs = es.eigenvectors().leftCols(n);
    for (int k = 0; k < n; ++k) {
      Eigen::Index imax = 0;
      vecs.col(k).cwiseAbs().maxCoeff(&imax);
      if (vecs(imax, k) < 0) vecs.col(k) *= -1.0;
      b.mu(k) = -es.eigenvalues()(k);
    }
    Eigen::MatrixXd table(m, kdim);
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < kdim; ++l) table(j, l) = cosine(l, b.grid[static_cast<std::size_t>(j)]);
    b.modes = table * vecs;
    Eigen::VectorXd freq2(kdim);
    for (int l = 0; l < kdim; ++l) freq2(l) = l * l * pi * pi;
    b.grad_gram = vecs.transpose() * freq2.asDiagonal() * vecs;
  }

  Eigen::MatrixXd gram = b.modes.transpose() * b.modes / static_cast<double>(m);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      double target = k == l ? 1.0 : 0.0;
      if (std::abs(gram(k, l) - target) > 1e-8) {
        throw NumericalError("eigenbasis: mode " + std::to_string(k) +
                             " fails quadrature orthonormality against mode " + std::to_string(l));
      }
    }
  }
  b.sup_bound = b.modes.cwiseAbs().maxCoeff();
  return b;
}

// ---------------------------------------------------------------------------
// States

/// Element of H in truncated spectral coordinates.
struct StateH {
  Eigen::VectorXd u;
  Eigen::VectorXd w;

  static StateH zero(int n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)}; }

  int size() const { return static_cast<int>(u.size()); }
  bool finite() const { return u.allFinite() && w.allFinite(); }

  StateH& operator+=(const StateH& o) {
    u += o.u;
    w += o.w;
    return *this;
  }
  StateH& operator-=(const StateH& o) {
    u -= o.u;
    w -= o.w;
    return *this;
  }
  StateH& operator*=(double s) {
    u *= s;
    w *= s;
    return *this;
  }
  friend StateH operator+(StateH a, const StateH& b) { return a += b; }
  friend StateH operator-(StateH a, const StateH& b) { return a -= b; }
  friend StateH operator*(double s, StateH a) { return a *= s; }
  friend bool operator==(const StateH& a, const StateH& b) { return a.u == b.u && a.w == b.w; }
};

inline void check_same_size(const StateH& x, const StateH& y) {
  if (x.u.size() != y.u.size() || x.w.size() != y.w.size() || x.u.size() != x.w.size()) {
    throw ConfigError("state dimension mismatch");
  }
}

/// gamma <u_x, u_y> + <w_x, w_y>.
inline double inner_product_H(const StateH& x, const StateH& y, double gamma) {
  check_same_size(x, y);
  return gamma * x.u.dot(y.u) + x.w.dot(y.w);
}

inline double norm_H_sq(const StateH& x, double gamma) { return inner_product_H(x, x, gamma); }

// ---------------------------------------------------------------------------
// Model

/// Validated parameters plus eigenbasis and transforms. Immutable.
class Model {
 public:
  explicit Model(ModelParams params)
      : params_(std::move(params)), constants_(derive_constants(params_)), basis_(build_eigenbasis(params_)) {
    const int m = params_.n_grid;
    project_ = basis_.modes.transpose() / static_cast<double>(m);
    p_grid_.resize(m);
    for (int j = 0; j < m; ++j) p_grid_(j) = params_.p(basis_.grid[static_cast<std::size_t>(j)]);
  }

  const ModelParams& params() const { return params_; }
  const DerivedConstants& constants() const { return constants_; }
  const EigenBasis& basis() const { return basis_; }
  int n_modes() const { return params_.n_modes; }
  int n_grid() const { return params_.n_grid; }
  double gamma() const { return params_.gamma; }
  bool constant_p() const { return params_.p.is_constant(); }
  double p_min() const { return constants_.p_min; }
  const Eigen::VectorXd& p_grid() const { return p_grid_; }

  Eigen::VectorXd to_grid(const Eigen::VectorXd& coeffs) const { return basis_.modes * coeffs; }
  Eigen::VectorXd project(const Eigen::VectorXd& values) const { return project_ * values; }

  StateH zero_state() const { return StateH::zero(n_modes()); }

 private:
  ModelParams params_;
  DerivedConstants constants_;
  EigenBasis basis_;
  Eigen::MatrixXd project_;
  Eigen::VectorXd p_grid_;
};

inline double inner_product_H(const StateH& x, const StateH& y, const Model& model) {
  return inner_product_H(x, y, model.gamma());
}
inline double norm_H_sq(const StateH& x, const Model& model) { return norm_H_sq(x, model.gamma()); }

/// H-norm squared from grid values (midpoint quadrature).
inline double quadrature_norm_H_sq(const StateH& x, const Model& model) {
  const double m = model.n_grid();
  return model.gamma() * model.to_grid(x.u).squaredNorm() / m + model.to_grid(x.w).squaredNorm() / m;
}

/// ||x||_V^2 = gamma (|u|^2 + |u'|^2) + |w|^2.
inline double norm_V_sq(const StateH& x, const Model& model) {
  check_same_size(x, model.zero_state());
  const auto& g = model.basis().grad_gram;
  double grad = x.u.dot(g * x.u);
  return model.gamma() * (x.u.squaredNorm() + grad) + x.w.squaredNorm();
}

/// (A0 u - p u - w, gamma u - alpha w). Non-constant p is applied on the grid.
inline StateH apply_A(const StateH& x, const Model& model) {
  check_same_size(x, model.zero_state());
  const auto& prm = model.params();
  StateH out;
  out.u = model.basis().mu.cwiseProduct(x.u) - x.w;
  if (model.constant_p()) {
    out.u -= prm.p.constant_value() * x.u;
  } else {
    out.u -= model.project(model.p_grid().cwiseProduct(model.to_grid(x.u)));
  }
  out.w = prm.gamma * x.u - prm.alpha * x.w;
  return out;
}

/// A_eta x = A x + eta (u, 0).
inline StateH apply_A_eta(const StateH& x, const Model& model) {
  StateH out = apply_A(x, model);
  out.u += model.constants().eta * x.u;
  return out;
}

/// Per-mode block of A for constant p: [[mu_k - p, -1], [gamma, -alpha]].
inline Mat2 mode_matrix(int k, const Model& model) {
  if (!model.constant_p()) {
    throw ConfigError("mode_matrix: per-mode reduction needs constant p");
  }
  require(k >= 0 && k < model.n_modes(), "mode_matrix: mode index out of range");
  const auto& prm = model.params();
  Mat2 m;
  m << model.basis().mu(k) - prm.p.constant_value(), -1.0, prm.gamma, -prm.alpha;
  return m;
}

/// Per-mode block of the linear part used for time stepping:
/// [[mu_k - min p + eta, -1], [gamma, -alpha]], i.e. A_eta with p frozen at its
/// minimum. For constant p this is exactly the block of A_eta.
inline Mat2 shifted_mode_matrix(int k, const Model& model) {
  require(k >= 0 && k < model.n_modes(), "shifted_mode_matrix: mode index out of range");
  const auto& prm = model.params();
  Mat2 m;
  m << model.basis().mu(k) - model.p_min() + model.constants().eta, -1.0, prm.gamma, -prm.alpha;
  return m;
}

// ---------------------------------------------------------------------------
// Initial data

inline StateH project_grid(const Model& model, const Eigen::VectorXd& u_values, const Eigen::VectorXd& w_values) {
  require(u_values.size() == model.n_grid() && w_values.size() == model.n_grid(),
          "initial grid data must have n_grid values per component");
  return {model.project(u_values), model.project(w_values)};
}

inline StateH constant_state(const Model& model, double u, double w) {
  StateH x = model.zero_state();
  x.u(0) = u;
  x.w(0) = w;
  return x;
}

/// u = u_amp e_k, w = w_amp e_k.
inline StateH cosine_state(const Model& model, int k, double u_amp, double w_amp) {
  require(k >= 0 && k < model.n_modes(), "cosine_state: mode index out of range");
  StateH x = model.zero_state();
  x.u(k) = u_amp;
  x.w(k) = w_amp;
  return x;
}

/// Rescales x to the requested H-norm (x must be nonzero).
inline StateH with_norm_H(StateH x, double target, double gamma) {
  double n = std::sqrt(norm_H_sq(x, gamma));
  require(n > 0, "with_norm_H: cannot rescale the zero state");
  return (target / n) * std::move(x);
}

}  // namespace fhn

#endif  // FHN_MODEL_HPP
