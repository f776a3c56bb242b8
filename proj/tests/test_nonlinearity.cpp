#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fhn/model.hpp"
#include "fhn/nonlinearity.hpp"
#include "fhn/stats.hpp"

namespace {

using fhn::DriftParams;
using fhn::Model;
using fhn::ModelParams;
using fhn::StateH;

StateH random_state(const Model& model, std::mt19937_64& gen, double amp = 1.0) {
  std::normal_distribution<double> nd;
  StateH x = model.zero_state();
  for (int k = 0; k < model.n_modes(); ++k) {
    x.u(k) = amp * nd(gen) / (1.0 + k);
    x.w(k) = amp * nd(gen) / (1.0 + k);
  }
  return x;
}

TEST(Cubic, PointValues) {
  EXPECT_EQ(fhn::f(0.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(fhn::f(2.0, 0.5), -3.0);
  EXPECT_DOUBLE_EQ(fhn::f(0.25, 0.5), -0.046875);
}

TEST(ShiftedCubic, PointValuesAndIdentity) {
  DriftParams dp{0.5, 0.0};
  EXPECT_EQ(fhn::f_eta(0.0, dp), 0.0);
  EXPECT_DOUBLE_EQ(fhn::f_eta(2.0, dp), -3.5);
  EXPECT_DOUBLE_EQ(fhn::f(2.0, 0.5) - dp.eta() * 2.0, -3.5);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> xi(0.01, 0.99), ud(-10, 10);
  for (int i = 0; i < 20; ++i) {
    DriftParams p{xi(gen), 0.0};
    for (int j = 0; j < 5000; ++j) {
      double u = ud(gen);
      EXPECT_LE(std::abs(fhn::f(u, p.xi1) - p.eta() * u - fhn::f_eta(u, p)), 1e-12 * (1 + std::abs(u * u * u)));
    }
  }
}

TEST(ShiftedCubic, SupOfDerivativeIsEta) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> xi(0.01, 0.99);
  for (int i = 0; i < 5; ++i) {
    const double xi1 = xi(gen);
    const int n = 1000001;
    const double lo = -100, hi = 100, h = (hi - lo) / (n - 1);
    double best = -1e300, arg = 0;
    for (int j = 0; j < n; ++j) {
      double u = lo + j * h;
      // f'(u) = -3u^2 + 2(1 + xi1)u - xi1
      double d = -3 * u * u + 2 * (1 + xi1) * u - xi1;
      if (d > best) {
        best = d;
        arg = u;
      }
    }
    EXPECT_NEAR(best, fhn::fhn_eta(xi1), 1e-7);
    EXPECT_NEAR(arg, fhn::fhn_xi0(xi1), h);
  }
}

TEST(Regularized, PointValues) {
  DriftParams dp{0.5, 0.1};
  EXPECT_DOUBLE_EQ(fhn::f_eta_eps(2.0, dp), -2.8);
  EXPECT_EQ(fhn::f_eta_eps(0.0, dp), 0.0);
  EXPECT_EQ(fhn::f_eta_eps(0.0, DriftParams{0.5, 3.0}), 0.0);
  DriftParams raw{0.5, 0.0};
  for (double u : {-3.0, -0.2, 0.7, 5.0}) EXPECT_EQ(fhn::f_eta_eps(u, raw), fhn::f_eta(u, raw));
  EXPECT_THROW(fhn::f_eta_eps(1.0, DriftParams{0.5, -0.1}), fhn::ConfigError);
}

TEST(Regularized, DerivativeMatchesFiniteDifference) {
  DriftParams dp{0.5, 0.1};
  const double h = 1e-5;
  for (double u : {-7.0, -1.0, 0.0, 0.5, 2.0, 9.0}) {
    double fd = (fhn::f_eta_eps(u + h, dp) - fhn::f_eta_eps(u - h, dp)) / (2 * h);
    EXPECT_NEAR(fhn::f_eta_eps_prime(u, dp), fd, 1e-6 * (1 + std::abs(fd))) << "u = " << u;
  }
}

TEST(Regularized, DerivativeNonpositive) {
  for (double eps : {1e-3, 1e-1, 1.0}) {
    for (double xi1 : {0.1, 0.5, 0.9}) {
      DriftParams dp{xi1, eps};
      EXPECT_LE(fhn::f_eta_eps_prime(dp.xi0(), dp), 0.0);
      for (const auto& row : fhn::drift_scan(dp, -50, 50, 20001)) EXPECT_LE(row[4], 1e-12) << "u = " << row[0];
    }
  }
}

TEST(Regularized, LipschitzFinite) {
  DriftParams dp{0.5, 0.1};
  double l = fhn::measured_lipschitz(dp, -1000, 1000, 200001);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_GT(l, 0.0);
  EXPECT_LT(l, 100.0);
}

TEST(Regularized, ConvergesAtOrderOne) {
  for (double u : {-4.0, 0.1, 1.3, 6.0}) {
    std::vector<double> le, lerr;
    for (int k = 12; k <= 22; ++k) {
      double eps = std::ldexp(1.0, -k);
      DriftParams dp{0.5, eps};
      double err = std::abs(fhn::f_eta_eps(u, dp) - fhn::f_eta(u, dp));
      le.push_back(std::log(eps));
      lerr.push_back(std::log(err));
    }
    EXPECT_GE(fhn::ols(le, lerr).slope, 0.95) << "u = " << u;
  }
}

TEST(Regularized, DenominatorAtLeastOne) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> ud(-100, 100), ed(0, 10), xd(0.01, 0.99);
  for (int i = 0; i < 10000; ++i) {
    DriftParams dp{xd(gen), ed(gen)};
    EXPECT_GE(fhn::regularization_denominator(ud(gen), dp), 1.0 - 1e-12);
  }
}

TEST(AuxiliaryH, Values) {
  DriftParams dp{0.5, 0.0};
  EXPECT_EQ(fhn::h_eps(0.5, dp), 0.0);
  EXPECT_DOUBLE_EQ(fhn::h_eps(2.0, dp), -3.375);
  EXPECT_NEAR(fhn::cube_root_gap(2.0, dp), 0.0, 1e-15);
}

TEST(AuxiliaryH, CubeRootGapBoundedByEps) {
  // gap = |v| (1 - D^{-1/3}) <= |v| (D - 1) / 3 with D - 1 = eps (1 - xi0 v + v^2).
  for (double u : {-10.0, -2.0, 0.5, 0.7, 3.0, 10.0}) {
    double prev = 1e300;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
      DriftParams dp{0.5, eps};
      double v = u - dp.xi0();
      double g = fhn::cube_root_gap(u, dp);
      EXPECT_LE(g, std::abs(v) * eps * (1 - dp.xi0() * v + v * v) / 3 + 1e-14) << u << " " << eps;
      EXPECT_LE(g, prev + 1e-15);
      prev = g;
    }
  }
}

TEST(FieldDrift, ConstantFieldReducesToScalar) {
  Model model(ModelParams{});
  StateH zero = fhn::apply_F(model.zero_state(), model);
  EXPECT_EQ(zero.u.norm() + zero.w.norm(), 0.0);
  for (double ub : {-1.5, 0.3, 2.0}) {
    StateH x = fhn::constant_state(model, ub, 0.7);
    StateH fx = fhn::apply_F(x, model);
    EXPECT_NEAR(fx.u(0), fhn::f(ub, 0.5), 1e-10);
    for (int k = 1; k < model.n_modes(); ++k) EXPECT_NEAR(fx.u(k), 0.0, 1e-10);
    EXPECT_EQ(fx.w.norm(), 0.0);
  }
}

TEST(FieldDrift, CubeOfCosineProjectsExactly) {
  // (sqrt2 cos x)^3 = (3 sqrt2 / 2) cos x + (sqrt2 / 2) cos 3x, so in the basis
  // e_k = sqrt2 cos(k pi xi): u^3 for u = e_1 has coefficients 3/2 on e_1 and 1/2 on e_3.
  Model model(ModelParams{});
  StateH x = fhn::cosine_state(model, 1, 1.0, 0.0);
  StateH cube = fhn::apply_pointwise(x, model, [](double u) { return u * u * u; });
  for (int k = 0; k < model.n_modes(); ++k) {
    double expect = k == 1 ? 1.5 : (k == 3 ? 0.5 : 0.0);
    EXPECT_NEAR(cube.u(k), expect, 1e-13);
  }
}

TEST(FieldDrift, Monotonicity) {
  Model model(ModelParams{});
  std::mt19937_64 gen(10);
  for (int i = 0; i < 2000; ++i) {
    StateH x = random_state(model, gen, 2.0), y = random_state(model, gen, 2.0);
    double d = fhn::norm_H_sq(x - y, model);
    EXPECT_LE(fhn::monotonicity_gap(x, y, model), 1e-9 * (1 + d));
  }
  StateH x = random_state(model, gen);
  EXPECT_NEAR(fhn::monotonicity_gap(x, x, model), 0.0, 1e-15);
}

TEST(FieldDrift, ScalarMonotoneReduction) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ud(-5, 5);
  DriftParams dp{0.5, 0.0};
  for (int i = 0; i < 10000; ++i) {
    double a = ud(gen), b = ud(gen);
    EXPECT_LE(0.5 * (fhn::f_eta(a, dp) - fhn::f_eta(b, dp)) * (a - b), 1e-12);
  }
}

TEST(FieldDrift, GrowthEnvelopeInL6) {
  Model model(ModelParams{});
  std::mt19937_64 gen(12);
  auto ratio = [&](const StateH& x) {
    double l6 = fhn::norm_L6(x.u, model);
    return std::sqrt(fhn::norm_H_sq(fhn::apply_F_eta(x, model), model)) / (1 + l6 * l6 * l6);
  };
  double c_fit = 0;
  for (int i = 0; i < 500; ++i) c_fit = std::max(c_fit, ratio(random_state(model, gen, 0.5 + i * 0.02)));
  EXPECT_TRUE(std::isfinite(c_fit));
  for (int i = 0; i < 500; ++i) EXPECT_LE(ratio(random_state(model, gen, 0.5 + i * 0.02)), 1.5 * c_fit);
}

TEST(FieldDrift, L6OfConstant) {
  Model model(ModelParams{});
  EXPECT_NEAR(fhn::norm_L6(fhn::constant_state(model, -2.0, 0.0).u, model), 2.0, 1e-13);
}

}  // namespace
