#include <cmath>
#include <complex>

#include "support.hpp"
#include "ykmpc/fourtank.hpp"

using namespace ykmpc;
using ykmpc::testing::Gen;
using ykmpc::testing::impulse_sample;
using ykmpc::testing::max_abs;
using ykmpc::testing::throws_code;
using ykmpc::testing::CMat;
using ykmpc::testing::tf;
using ykmpc::testing::unit_circle;

namespace {

StateSpace scalar_sys(double a, double b, double c, double d) {
  Mat A(1, 1), B(1, 1), C(1, 1), D(1, 1);
  A << a;
  B << b;
  C << c;
  D << d;
  return {A, B, C, D};
}

StateSpace static_gain(double k) {
  return StateSpace::gain(Mat::Constant(1, 1, k));
}

}  // namespace

TEST(IsStable, Examples) {
  EXPECT_TRUE(is_stable(scalar_sys(0, 1, 1, 0)));
  EXPECT_FALSE(is_stable(scalar_sys(1, 1, 1, 0)));
  const DiscreteModel m = discrete_model(FourTankParams{});
  EXPECT_TRUE(is_stable(m.plant()));
  double rho = 0;
  for (auto l : eigenvalues(m.A)) rho = std::max(rho, std::abs(l));
  EXPECT_LT(rho, 1.0);
}

TEST(Interconnect, StaticExamples) {
  StateSpace two = static_gain(2), three = static_gain(3);
  EXPECT_NEAR(series(two, three).D(0, 0), 6, 1e-15);
  EXPECT_NEAR(parallel(two, three).D(0, 0), 5, 1e-15);
  EXPECT_NEAR(feedback(static_gain(1), static_gain(1), -1).D(0, 0), 0.5, 1e-15);
}

TEST(Interconnect, IllPosedLoop) {
  EXPECT_TRUE(throws_code(ErrorCode::IllPosed, [] { feedback(static_gain(1), static_gain(1), +1); }));
}

TEST(Interconnect, StateDimensionsAdd) {
  Gen g(11);
  for (int t = 0; t < 20; ++t) {
    const Index n1 = g.integer(0, 4), n2 = g.integer(0, 4);
    StateSpace a = g.system(n1, 2, 2), b = g.system(n2, 2, 2);
    EXPECT_EQ(series(a, b).nx(), n1 + n2);
    EXPECT_EQ(parallel(a, b).nx(), n1 + n2);
    StateSpace small = {b.A, 0.1 * b.B, b.C, 0.1 * b.D};
    EXPECT_EQ(feedback(a, small).nx(), n1 + n2);
  }
}

TEST(Interconnect, SeriesAndParallelFrequency) {
  Gen g(12);
  for (int t = 0; t < 20; ++t) {
    StateSpace a = g.system(3, 2, 3), b = g.system(2, 3, 2), c = g.system(4, 2, 3);
    for (int i = 0; i < 8; ++i) {
      const auto z = unit_circle(i, 8);
      EXPECT_LE((tf(series(a, b), z) - tf(b, z) * tf(a, z)).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((tf(parallel(a, c), z) - tf(a, z) - tf(c, z)).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Feedback, FourTankLoopMatchesSimulation) {
  const DiscreteModel m = discrete_model(FourTankParams{});
  const StateSpace G = m.plant();
  Gen g(13);
  StateSpace K = g.system(3, 2, 2, 0.7);
  K.B *= 0.05;
  K.D *= 0.05;
  const StateSpace cl = feedback(G, K, -1);
  ASSERT_TRUE(is_stable(cl));
  // unit impulse on each reference channel, loop simulated sample by sample
  for (Index j = 0; j < 2; ++j) {
    Vec xg = Vec::Zero(G.nx()), xk = Vec::Zero(K.nx());
    const auto h = impulse_response(cl, 200);
    for (Index k = 0; k < 200; ++k) {
      Vec r = Vec::Zero(2);
      if (k == 0) r(j) = 1;
      const Vec y = G.C * xg;  // G has no feedthrough
      const Vec u = r - (K.C * xk + K.D * y);
      EXPECT_LE((h[static_cast<size_t>(k)].col(j) - y).cwiseAbs().maxCoeff(), 1e-9);
      xg = G.A * xg + G.B * u;
      xk = K.A * xk + K.B * y;
    }
  }
}

TEST(Lft, DecoupledLowerReturnsP11) {
  Gen g(14);
  StateSpace p11 = g.system(2, 2, 2), p22 = g.system(2, 1, 1);
  // P12 = 0 and P21 = 0
  StateSpace p = append(p11, p22);
  StateSpace k = g.system(1, 1, 1);
  StateSpace cl = lft_lower(p, k);
  EXPECT_LE(impulse_distance(cl, p11, 50), 0.0);
  StateSpace up = lft_upper(p, g.system(1, 2, 2));
  EXPECT_LE(impulse_distance(up, p22, 50), 1e-15);
}

TEST(Lft, LowerFrequencyOracle) {
  Gen g(15);
  for (int t = 0; t < 30; ++t) {
    const Index nw = g.integer(1, 3), nz = g.integer(1, 3), nu = g.integer(1, 2), ny = g.integer(1, 2);
    StateSpace p = g.system(g.integer(0, 4), nw + nu, nz + ny);
    StateSpace k = g.system(g.integer(0, 3), ny, nu);
    k.D *= 0.3;
    StateSpace cl = lft_lower(p, k);
    for (int i = 0; i < 16; ++i) {
      const auto z = unit_circle(i, 16);
      const CMat P = tf(p, z), K = tf(k, z);
      const CMat P11 = P.topLeftCorner(nz, nw), P12 = P.topRightCorner(nz, nu);
      const CMat P21 = P.bottomLeftCorner(ny, nw), P22 = P.bottomRightCorner(ny, nu);
      const CMat expect =
          P11 + P12 * K * (CMat::Identity(ny, ny) - P22 * K).fullPivLu().solve(P21);
      EXPECT_LE((tf(cl, z) - expect).cwiseAbs().maxCoeff(), 1e-8 * (1 + expect.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Lft, UpperFrequencyOracle) {
  Gen g(16);
  for (int t = 0; t < 30; ++t) {
    const Index nw = g.integer(1, 3), nz = g.integer(1, 3), ns = g.integer(1, 2), nq = g.integer(1, 2);
    // p: [q; w] -> [s; z], s closes s -> q
    StateSpace p = g.system(g.integer(0, 4), nq + nw, ns + nz);
    StateSpace s = g.system(g.integer(0, 3), ns, nq);
    s.D *= 0.3;
    StateSpace cl = lft_upper(p, s);
    for (int i = 0; i < 16; ++i) {
      const auto z = unit_circle(i, 16);
      const CMat P = tf(p, z), S = tf(s, z);
      const CMat P11 = P.topLeftCorner(ns, nq), P12 = P.topRightCorner(ns, nw);
      const CMat P21 = P.bottomLeftCorner(nz, nq), P22 = P.bottomRightCorner(nz, nw);
      const CMat expect = P22 + P21 * S * (CMat::Identity(ns, ns) - P11 * S).fullPivLu().solve(P12);
      EXPECT_LE((tf(cl, z) - expect).cwiseAbs().maxCoeff(), 1e-8 * (1 + expect.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Lft, IllPosed) {
  StateSpace p = StateSpace::gain(Mat::Ones(2, 2));
  EXPECT_TRUE(throws_code(ErrorCode::IllPosed, [&] { lft_lower(p, static_gain(1)); }));
}

TEST(Impulse, Examples) {
  auto h = impulse_response(static_gain(2.5), 4);
  EXPECT_EQ(h[0](0, 0), 2.5);
  EXPECT_EQ(h[3](0, 0), 0);
  auto g = impulse_response(scalar_sys(0.5, 1, 1, 0), 5);
  const double expect[] = {0, 1, 0.5, 0.25, 0.125};
  for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(g[static_cast<size_t>(k)](0, 0), expect[k]);
}

TEST(Impulse, MatchesRecursionAndDecays) {
  Gen g(17);
  for (int t = 0; t < 20; ++t) {
    StateSpace s = g.system(4, 2, 3, 0.9);
    auto h = impulse_response(s, 500);
    for (Index k : {0, 1, 2, 7, 30}) EXPECT_MAT_NEAR(h[static_cast<size_t>(k)], impulse_sample(s, k), 1e-12);
    EXPECT_LE(h.back().norm(), 1e-8);
  }
}

TEST(H2Norm, Examples) {
  Mat D(2, 2);
  D << 1, 2, 3, 4;
  EXPECT_NEAR(h2_norm(StateSpace::gain(D)), D.norm(), 1e-15);
  EXPECT_NEAR(h2_norm(scalar_sys(0.5, 1, 1, 0)), std::sqrt(4.0 / 3.0), 1e-14);
  EXPECT_TRUE(throws_code(ErrorCode::UnstableSystem, [] { h2_norm(scalar_sys(1.2, 1, 1, 0)); }));
}

TEST(H2Norm, ImpulseSumOracle) {
  Gen g(18);
  for (int t = 0; t < 30; ++t) {
    StateSpace s = g.system(g.integer(1, 6), g.integer(1, 3), g.integer(1, 3), 0.95);
    double sum = 0;
    Mat x = s.B;
    sum += s.D.squaredNorm();
    for (int k = 1; k < 2000; ++k) {
      sum += (s.C * x).squaredNorm();
      x = s.A * x;
    }
    EXPECT_NEAR(h2_norm(s), std::sqrt(sum), 1e-6);
  }
}

TEST(DcGain, Examples) {
  EXPECT_NEAR(dc_gain(static_gain(3)).value(), 3, 0);
  EXPECT_NEAR(dc_gain(scalar_sys(0.5, 1, 1, 0)).value(), 2, 1e-15);
  EXPECT_TRUE(throws_code(ErrorCode::PoleAtOne, [] { dc_gain(scalar_sys(1, 1, 1, 0)); }));
}

TEST(DcGain, FourTankLongRun) {
  const StateSpace G = discrete_model(FourTankParams{}).plant();
  const Mat y = step_response_sim(G, Mat(Mat::Ones(2, 5000)));
  Mat u1 = Mat::Zero(2, 5000);
  u1.row(0).setOnes();
  const Mat y1 = step_response_sim(G, u1);
  const Mat dc = dc_gain(G);
  EXPECT_LE((y.col(4999) - dc.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((y1.col(4999) - dc.col(0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(StepSim, Examples) {
  Gen g(19);
  Mat u = g.mat(2, 10);
  EXPECT_MAT_NEAR(step_response_sim(StateSpace::identity(2), u), u, 0);
  EXPECT_MAT_NEAR(step_response_sim(StateSpace::zero(3, 2), u), Mat::Zero(3, 10), 0);
}

TEST(StepSim, ConvolutionOracle) {
  Gen g(20);
  for (int t = 0; t < 10; ++t) {
    StateSpace s = g.system(3, 2, 2);
    Mat u = g.mat(2, 40);
    Mat y = step_response_sim(s, u);
    for (Index k = 0; k < 40; ++k) {
      Vec acc = Vec::Zero(2);
      for (Index j = 0; j <= k; ++j) acc += impulse_sample(s, k - j) * u.col(j);
      EXPECT_LE((y.col(k) - acc).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Inverse, RoundTrip) {
  Gen g(21);
  StateSpace s = g.system(3, 2, 2);
  s.D += 3 * Mat::Identity(2, 2);
  StateSpace id = series(s, inverse(s));
  EXPECT_LE(impulse_distance(id, StateSpace::identity(2), 100), 1e-10);
}

TEST(IoPartition, Validation) {
  auto io = IoPartition::from_sizes({{"y", 2}, {"u", 2}}, {{"u", 2}});
  EXPECT_EQ(io.input("u").start, 2);
  EXPECT_NO_THROW(io.validate(4, 2));
  EXPECT_THROW(io.validate(5, 2), Error);
  EXPECT_THROW(io.input("eps"), Error);
}

TEST(StateSpace, RejectsInconsistentData) {
  EXPECT_THROW(StateSpace(Mat::Zero(2, 2), Mat::Zero(3, 1), Mat::Zero(1, 2), Mat::Zero(1, 1)), Error);
  EXPECT_THROW(StateSpace(Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), 0.0), Error);
  Mat bad = Mat::Zero(1, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(StateSpace(bad, Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1)), Error);
}
