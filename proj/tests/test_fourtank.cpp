#include <cmath>

#include "support.hpp"
#include "ykmpc/fourtank.hpp"
#include "ykmpc/mpc.hpp"
#include "ykmpc/youla.hpp"

using namespace ykmpc;
using ykmpc::testing::Gen;
using ykmpc::testing::max_abs;
using ykmpc::testing::throws_code;

namespace {

Levels h0_of(const FourTankParams& p) { return Levels(p.h0[0], p.h0[1], p.h0[2], p.h0[3]); }
Input2 u0_of(const FourTankParams& p) { return Input2(p.u0[0], p.u0[1]); }

// Levels at which the nominal voltages hold the plant exactly still.
Levels exact_equilibrium(const FourTankParams& p) {
  const double g2 = 2 * p.g;
  const double q1 = p.k1 * p.u0[0], q2 = p.k2 * p.u0[1];
  Levels h;
  h(2) = std::pow((1 - p.gamma2) * q2 / p.a[2], 2) / g2;
  h(3) = std::pow((1 - p.gamma1) * q1 / p.a[3], 2) / g2;
  h(0) = std::pow((p.gamma1 * q1 + (1 - p.gamma2) * q2) / p.a[0], 2) / g2;
  h(1) = std::pow((p.gamma2 * q2 + (1 - p.gamma1) * q1) / p.a[1], 2) / g2;
  return h;
}

// Jacobian of dynamics() by central differences.
std::pair<Mat, Mat> fd_jacobian(const FourTankParams& p, const Levels& h, const Input2& u) {
  Mat Ac(4, 4), Bc(4, 2);
  const Input2 d = Input2::Zero();
  for (int j = 0; j < 4; ++j) {
    const double s = 1e-6 * std::max(1.0, h(j));
    Levels hp = h, hm = h;
    hp(j) += s;
    hm(j) -= s;
    Ac.col(j) = (dynamics(p, hp, u, d).dh - dynamics(p, hm, u, d).dh) / (2 * s);
  }
  for (int j = 0; j < 2; ++j) {
    Input2 up = u, um = u;
    up(j) += 1e-6;
    um(j) -= 1e-6;
    Bc.col(j) = (dynamics(p, h, up, d).dh - dynamics(p, h, um, d).dh) / 2e-6;
  }
  return {Ac, Bc};
}

double rel_err(const Mat& a, const Mat& b) { return max_abs(a - b) / std::max(1e-300, max_abs(b)); }

}  // namespace

TEST(Params, Defaults) {
  const FourTankParams p;
  EXPECT_EQ(p.A, (std::array<double, 4>{28.0, 32.0, 28.0, 32.0}));
  EXPECT_EQ(p.a, (std::array<double, 4>{0.071, 0.057, 0.071, 0.057}));
  EXPECT_EQ(p.h0, (std::array<double, 4>{12.4, 12.7, 1.8, 1.4}));
  EXPECT_EQ(p.u0, (std::array<double, 2>{3.0, 3.0}));
  EXPECT_EQ(p.kc, 0.5);
  EXPECT_EQ(p.g, 981.0);
  EXPECT_EQ(p.k1, 3.33);
  EXPECT_EQ(p.k2, 3.35);
  EXPECT_EQ(p.gamma1, 0.7);
  EXPECT_EQ(p.gamma2, 0.6);
  EXPECT_NO_THROW(p.validate());
}

TEST(Params, Validation) {
  FourTankParams p;
  p.gamma1 = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = FourTankParams{};
  p.a[2] = -0.1;
  EXPECT_THROW(p.validate(), Error);
  p = FourTankParams{};
  p.h0[0] = -1;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Dynamics, NominalPointNearlyStill) {
  const FourTankParams p;
  const TankRate r = dynamics(p, h0_of(p), u0_of(p), Input2::Zero());
  EXPECT_LE(r.dh.cwiseAbs().maxCoeff(), 1e-2);
  EXPECT_FALSE(r.clamped);
}

TEST(Dynamics, DrainedAndUnpowered) {
  const TankRate r = dynamics(FourTankParams{}, Levels::Zero(), Input2::Zero(), Input2::Zero());
  EXPECT_EQ(r.dh.cwiseAbs().maxCoeff(), 0);
}

TEST(Dynamics, MassBalance) {
  const FourTankParams p;
  Gen g(91);
  for (int t = 0; t < 100; ++t) {
    const Levels h(g.uniform(0, 20), g.uniform(0, 20), g.uniform(0, 20), g.uniform(0, 20));
    const Input2 u(g.uniform(0, 10), g.uniform(0, 10)), d(g.uniform(-1, 1), g.uniform(-1, 1));
    const Levels dh = dynamics(p, h, u, d).dh;
    double stored = 0;
    for (int i = 0; i < 4; ++i) stored += p.A[static_cast<size_t>(i)] * dh(i);
    const double in = p.k1 * (u(0) + d(0)) + p.k2 * (u(1) + d(1));
    const double out = p.a[0] * std::sqrt(2 * p.g * h(0)) + p.a[1] * std::sqrt(2 * p.g * h(1));
    EXPECT_NEAR(stored, in - out, 1e-12 * (1 + std::abs(in)));
  }
}

TEST(Dynamics, NegativeLevelClamped) {
  const FourTankParams p;
  const TankRate r = dynamics(p, Levels(-1, 5, 5, 5), u0_of(p), Input2::Zero());
  EXPECT_TRUE(r.clamped);
  EXPECT_TRUE(r.dh.allFinite());
}

TEST(Linearize, MatchesFiniteDifferencesAtNominalPoint) {
  const FourTankParams p;
  const ContinuousModel m = linearize(p);
  const auto [Ac, Bc] = fd_jacobian(p, h0_of(p), u0_of(p));
  EXPECT_LE(rel_err(m.Ac, Ac), 1e-6);
  EXPECT_LE(rel_err(m.Bc, Bc), 1e-6);
  EXPECT_MAT_NEAR(m.Ec, m.Bc, 0);
  Mat Cc = Mat::Zero(2, 4);
  Cc(0, 0) = Cc(1, 1) = p.kc;
  EXPECT_MAT_NEAR(m.Cc, Cc, 0);
}

TEST(Linearize, MatchesFiniteDifferencesAtRandomPoints) {
  Gen g(92);
  for (int t = 0; t < 10; ++t) {
    FourTankParams p;
    for (auto& h : p.h0) h = g.uniform(0.5, 25);
    for (auto& u : p.u0) u = g.uniform(0.5, 9);
    const ContinuousModel m = linearize(p);
    const auto [Ac, Bc] = fd_jacobian(p, h0_of(p), u0_of(p));
    EXPECT_LE(rel_err(m.Ac, Ac), 1e-6) << "point " << t;
    EXPECT_LE(rel_err(m.Bc, Bc), 1e-6) << "point " << t;
  }
}

TEST(Linearize, ValveLimitDecouplesUpperTanks) {
  FourTankParams p;
  p.gamma1 = p.gamma2 = 1 - 1e-12;
  const ContinuousModel m = linearize(p);
  EXPECT_LE(max_abs(m.Bc.bottomRows(2)), 1e-10);
}

TEST(Linearize, StableRealPoles) {
  const ContinuousModel m = linearize(FourTankParams{});
  const auto ev = eigenvalues(m.Ac);
  for (Index i = 0; i < ev.size(); ++i) {
    EXPECT_LT(ev(i).real(), 0);
    EXPECT_EQ(ev(i).imag(), 0);
  }
}

TEST(Linearize, DegenerateLevel) {
  FourTankParams p;
  p.h0[3] = 0;
  EXPECT_TRUE(throws_code(ErrorCode::DegenerateLevel, [&] { linearize(p); }));
}

TEST(Zoh, ZeroDynamics) {
  Gen g(93);
  const Mat Bc = g.mat(3, 2);
  const auto [A, B] = discretize_zoh(Mat::Zero(3, 3), Bc, 0.5);
  EXPECT_MAT_NEAR(A, Mat::Identity(3, 3), 1e-15);
  EXPECT_MAT_NEAR(B, Mat(0.5 * Bc), 1e-15);
}

TEST(Zoh, ScalarClosedForm) {
  const auto [A, B] = discretize_zoh(Mat::Constant(1, 1, -1), Mat::Ones(1, 1), 1.0);
  EXPECT_NEAR(A(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(B(0, 0), 1 - std::exp(-1.0), 1e-15);
}

TEST(Zoh, FourTankMatchesFineIntegration) {
  const ContinuousModel m = linearize(FourTankParams{});
  const auto [A, B] = discretize_zoh(m.Ac, m.Bc, 1.0);
  EXPECT_LT(spectral_radius(A), 1.0);
  Gen g(94);
  for (int t = 0; t < 5; ++t) {
    const Vec x0 = g.vec(4, 3), u = g.vec(2, 2);
    auto f = [&](const Vec& x) { return Vec(m.Ac * x + m.Bc * u); };
    Vec x = x0;
    const double dt = 1e-3;
    for (int k = 0; k < 1000; ++k) {
      const Vec k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2), k4 = f(x + dt * k3);
      x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    EXPECT_MAT_NEAR(Vec(A * x0 + B * u), x, 1e-8);
  }
}

TEST(Zoh, RejectsBadStep) { EXPECT_THROW(discretize_zoh(Mat::Zero(1, 1), Mat::Ones(1, 1), 0.0), Error); }

TEST(Rk4, ExactEquilibriumStaysFixed) {
  const FourTankParams p;
  const Levels he = exact_equilibrium(p);
  EXPECT_LE(dynamics(p, he, u0_of(p), Input2::Zero()).dh.cwiseAbs().maxCoeff(), 1e-12);
  Levels h = he;
  for (int k = 0; k < 100; ++k) {
    const Levels next = step_rk4(p, h, u0_of(p), Input2::Zero(), 1.0, 10);
    ASSERT_LE((next - h).cwiseAbs().maxCoeff(), 1e-9);
    h = next;
  }
}

TEST(Rk4, FourthOrderConvergence) {
  const FourTankParams p;
  Levels a = h0_of(p), b = a;
  Gen g(95);
  for (int k = 0; k < 60; ++k) {
    const Input2 u(g.uniform(1, 6), g.uniform(1, 6));
    a = step_rk4(p, a, u, Input2::Zero(), 1.0, 10);
    b = step_rk4(p, b, u, Input2::Zero(), 1.0, 20);
  }
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Rk4, UnpoweredDrainage) {
  const FourTankParams p;
  Levels h = h0_of(p);
  auto volume = [&](const Levels& x) {
    double v = 0;
    for (int i = 0; i < 4; ++i) v += p.A[static_cast<size_t>(i)] * x(i);
    return v;
  };
  double v = volume(h);
  for (int k = 0; k < 3000; ++k) {
    h = step_rk4(p, h, Input2::Zero(), Input2::Zero(), 1.0, 10);
    ASSERT_GE(h.minCoeff(), 0);
    const double vn = volume(h);
    ASSERT_LE(vn, v + 1e-12);
    v = vn;
  }
  EXPECT_LT(h.maxCoeff(), 0.05);
}

TEST(Rk4, NominalInputsDriftLittle) {
  const FourTankParams p;
  Levels h = h0_of(p);
  for (int k = 0; k < 100; ++k) h = step_rk4(p, h, u0_of(p), Input2::Zero(), 1.0, 10);
  EXPECT_LE((h - h0_of(p)).cwiseAbs().maxCoeff(), 0.2);
}

TEST(Deviation, NominalIsZero) {
  const FourTankParams p;
  const Deviation d = to_deviation(p, h0_of(p), u0_of(p));
  EXPECT_EQ(d.x.cwiseAbs().maxCoeff(), 0);
  EXPECT_EQ(d.y.cwiseAbs().maxCoeff(), 0);
  EXPECT_EQ(d.u_dev.cwiseAbs().maxCoeff(), 0);
}

TEST(Deviation, RoundTrip) {
  const FourTankParams p;
  Gen g(96);
  for (int t = 0; t < 20; ++t) {
    const Levels h(g.uniform(0, 20), g.uniform(0, 20), g.uniform(0, 20), g.uniform(0, 20));
    const Input2 u(g.uniform(0, 10), g.uniform(0, 10));
    const Deviation d = to_deviation(p, h, u);
    EXPECT_MAT_NEAR(levels_from_deviation(p, d.x), h, 1e-14);
    EXPECT_MAT_NEAR(input_from_deviation(p, d.u_dev), u, 1e-15);
    EXPECT_NEAR(d.y(0), p.kc * (h(0) - p.h0[0]), 1e-14);
  }
}

TEST(Deviation, ConstantReferenceSettlesAtScaledLevel) {
  const FourTankParams p;
  const DiscreteModel m = discrete_model(p);
  const Mat Lx = unconstrained_gains(build_condensed(m.plant(), MpcConfig::defaults(2, 2))).Lx;
  const Mat Kff = feedforward_gain(m.A, m.B, m.C, Lx);
  const Vec r = (Vec(2) << 0.4, -0.3).finished();
  Vec x = Vec::Zero(4);
  for (int k = 0; k < 5000; ++k) x = m.A * x + m.B * (Lx * x + Kff * r);
  const Levels h = levels_from_deviation(p, x);
  EXPECT_NEAR(h(0), p.h0[0] + r(0) / p.kc, 1e-6);
  EXPECT_NEAR(h(1), p.h0[1] + r(1) / p.kc, 1e-6);
}
