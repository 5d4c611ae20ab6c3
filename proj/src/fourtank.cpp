#include "ykmpc/fourtank.hpp"

#include <cmath>

namespace ykmpc {

void FourTankParams::validate() const {
  for (int i = 0; i < 4; ++i) {
    if (!(A[i] > 0) || !(a[i] > 0)) throw Error(ErrorCode::ConfigError, "tank areas must be positive");
    if (!(h0[i] >= 0)) throw Error(ErrorCode::ConfigError, "linearization levels must be nonnegative");
  }
  if (!(k1 > 0) || !(k2 > 0) || !(kc > 0) || !(g > 0)) throw Error(ErrorCode::ConfigError, "gains must be positive");
  if (!(gamma1 > 0 && gamma1 < 1) || !(gamma2 > 0 && gamma2 < 1))
    throw Error(ErrorCode::ConfigError, "valve splits must lie in (0, 1)");
}

TankRate dynamics(const FourTankParams& p, const Levels& h, const Input2& u, const Input2& d) {
  TankRate r;
  double q[4];
  for (int i = 0; i < 4; ++i) {
    double hi = h(i);
    if (hi < 0) {
      hi = 0;
      r.clamped = true;
    }
    q[i] = p.a[i] * std::sqrt(2.0 * p.g * hi);
  }
  const double v1 = u(0) + d(0), v2 = u(1) + d(1);
  r.dh(0) = (-q[0] + q[2] + p.gamma1 * p.k1 * v1) / p.A[0];
  r.dh(1) = (-q[1] + q[3] + p.gamma2 * p.k2 * v2) / p.A[1];
  r.dh(2) = (-q[2] + (1.0 - p.gamma2) * p.k2 * v2) / p.A[2];
  r.dh(3) = (-q[3] + (1.0 - p.gamma1) * p.k1 * v1) / p.A[3];
  return r;
}

ContinuousModel linearize(const FourTankParams& p) {
  for (double h : p.h0)
    if (!(h > 1e-9)) throw Error(ErrorCode::DegenerateLevel, "linearization level must be positive");
  double T[4];
  for (int i = 0; i < 4; ++i) T[i] = (p.A[i] / p.a[i]) * std::sqrt(2.0 * p.h0[i] / p.g);
  ContinuousModel m;
  m.Ac = Mat::Zero(4, 4);
  for (int i = 0; i < 4; ++i) m.Ac(i, i) = -1.0 / T[i];
  m.Ac(0, 2) = p.A[2] / (p.A[0] * T[2]);
  m.Ac(1, 3) = p.A[3] / (p.A[1] * T[3]);
  m.Bc = Mat::Zero(4, 2);
  m.Bc(0, 0) = p.gamma1 * p.k1 / p.A[0];
  m.Bc(1, 1) = p.gamma2 * p.k2 / p.A[1];
  m.Bc(2, 1) = (1.0 - p.gamma2) * p.k2 / p.A[2];
  m.Bc(3, 0) = (1.0 - p.gamma1) * p.k1 / p.A[3];
  m.Cc = Mat::Zero(2, 4);
  m.Cc(0, 0) = p.kc;
  m.Cc(1, 1) = p.kc;
  m.Ec = m.Bc;
  return m;
}

std::pair<Mat, Mat> discretize_zoh(const Mat& Ac, const Mat& Bc, double Ts) {
  if (!(Ts > 0)) throw Error(ErrorCode::InvalidArgument, "sampling period must be positive");
  const Index n = Ac.rows(), m = Bc.cols();
  Mat M = Mat::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = Ac * Ts;
  M.topRightCorner(n, m) = Bc * Ts;
  const Mat E = expm(M);
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

Levels step_rk4(const FourTankParams& p, const Levels& h, const Input2& u, const Input2& d, double dt, int substeps,
                bool* clamped) {
  if (!(dt > 0) || substeps < 1) throw Error(ErrorCode::InvalidArgument, "step_rk4: dt and substeps must be positive");
  const double hs = dt / substeps;
  Levels x = h;
  bool any = false;
  for (int s = 0; s < substeps; ++s) {
    const TankRate k1 = dynamics(p, x, u, d);
    const TankRate k2 = dynamics(p, x + 0.5 * hs * k1.dh, u, d);
    const TankRate k3 = dynamics(p, x + 0.5 * hs * k2.dh, u, d);
    const TankRate k4 = dynamics(p, x + hs * k3.dh, u, d);
    x += hs / 6.0 * (k1.dh + 2.0 * k2.dh + 2.0 * k3.dh + k4.dh);
    any = any || k1.clamped || k2.clamped || k3.clamped || k4.clamped || (x.array() < 0).any();
    x = x.cwiseMax(0.0);
  }
  if (clamped) *clamped = any;
  return x;
}

StateSpace DiscreteModel::plant() const { return {A, B, C, Mat::Zero(C.rows(), B.cols()), Ts}; }

DiscreteModel discrete_model(const FourTankParams& p, double Ts) {
  const ContinuousModel c = linearize(p);
  DiscreteModel m;
  std::tie(m.A, m.B) = discretize_zoh(c.Ac, c.Bc, Ts);
  m.C = c.Cc;
  m.E = m.B;
  m.Ts = Ts;
  return m;
}

Deviation to_deviation(const FourTankParams& p, const Levels& h_abs, const Input2& u_abs) {
  Deviation d;
  d.x = Vec(4);
  for (int i = 0; i < 4; ++i) d.x(i) = h_abs(i) - p.h0[i];
  d.y = p.kc * d.x.head(2);
  d.u_dev = Vec(2);
  for (int i = 0; i < 2; ++i) d.u_dev(i) = u_abs(i) - p.u0[i];
  return d;
}

Levels levels_from_deviation(const FourTankParams& p, const Vec& x) {
  Levels h;
  for (int i = 0; i < 4; ++i) h(i) = x(i) + p.h0[i];
  return h;
}

Input2 input_from_deviation(const FourTankParams& p, const Vec& u_dev) {
  return Input2(u_dev(0) + p.u0[0], u_dev(1) + p.u0[1]);
}

}  // namespace ykmpc
