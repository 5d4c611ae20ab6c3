#include "ykmpc/mpc.hpp"

#include <vector>

namespace ykmpc {

namespace {

Mat stack_weight(const Mat& W, int N) { return kron(Mat::Identity(N, N), W); }

void check_psd(const Mat& W, const char* name) {
  if (W.rows() != W.cols()) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be square");
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + W.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(W);
  if (W.size() > 0 && es.eigenvalues().minCoeff() < -1e-12)
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive semidefinite");
}

std::vector<Mat> powers(const Mat& A, int count) {
  std::vector<Mat> p;
  p.reserve(static_cast<size_t>(count));
  p.push_back(Mat::Identity(A.rows(), A.cols()));
  for (int i = 1; i < count; ++i) p.push_back(A * p.back());
  return p;
}

Vec expand_bound(const Vec& b, Index dim, int N) {
  if (b.size() == dim) return tile(b, N);
  if (b.size() == dim * N) return b;
  throw Error(ErrorCode::InfeasibleBoundsShape, "bound vector has the wrong length");
}

}  // namespace

MpcConfig MpcConfig::defaults(Index ny, Index nu) {
  MpcConfig c;
  c.N = 20;
  c.Wz = Mat::Identity(ny, ny);
  c.Wu = 1e-4 * Mat::Identity(nu, nu);
  c.Wdu = 0.1 * Mat::Identity(nu, nu);
  return c;
}

void MpcConfig::validate(Index ny, Index nu) const {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
  if (Wz.rows() != ny || Wu.rows() != nu || Wdu.rows() != nu)
    throw Error(ErrorCode::InvalidArgument, "weight dimensions do not match the model");
  check_psd(Wz, "Wz");
  check_psd(Wu, "Wu");
  check_psd(Wdu, "Wdu");
}

Vec tile(const Vec& v, int N) { return v.replicate(N, 1); }

std::pair<Mat, Mat> build_prediction(const StateSpace& sys, int N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
  const Index nx = sys.nx(), nu = sys.nu(), ny = sys.ny();
  const auto Ak = powers(sys.A, N + 1);
  Mat Phi(N * ny, nx), Gamma = Mat::Zero(N * ny, N * nu);
  std::vector<Mat> Hi;  // Hi[i] = C A^i B
  for (int i = 0; i < N; ++i) {
    Phi.middleRows(i * ny, ny) = sys.C * Ak[i + 1];
    Hi.push_back(sys.C * Ak[i] * sys.B);
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j <= i; ++j) Gamma.block(i * ny, j * nu, ny, nu) = Hi[i - j];
  return {Phi, Gamma};
}

Mat build_lambda(Index nu, int N) {
  Mat L = Mat::Identity(N * nu, N * nu);
  for (int i = 1; i < N; ++i) L.block(i * nu, (i - 1) * nu, nu, nu) = -Mat::Identity(nu, nu);
  return L;
}

CondensedQp build_condensed(const StateSpace& sys, const MpcConfig& cfg) {
  cfg.validate(sys.ny(), sys.nu());
  CondensedQp qp;
  qp.N = cfg.N;
  qp.nx = sys.nx();
  qp.nu = sys.nu();
  qp.ny = sys.ny();
  qp.A = sys.A;
  qp.B = sys.B;
  qp.C = sys.C;
  std::tie(qp.Phi_x, qp.Gamma) = build_prediction(sys, cfg.N);
  qp.Lambda = build_lambda(qp.nu, cfg.N);
  qp.I0 = Mat::Zero(cfg.N * qp.nu, qp.nu);
  qp.I0.topRows(qp.nu).setIdentity();
  qp.Wz_bar = stack_weight(cfg.Wz, cfg.N);
  qp.Wu_bar = stack_weight(cfg.Wu, cfg.N);
  qp.Wdu_bar = stack_weight(cfg.Wdu, cfg.N);
  const Mat WG = qp.Wz_bar * qp.Gamma;
  const Mat WL = qp.Wdu_bar * qp.Lambda;
  qp.Hz = WG.transpose() * WG;
  qp.Hu = qp.Wu_bar.transpose() * qp.Wu_bar;
  qp.Hdu = WL.transpose() * WL;
  qp.H = qp.Hz + qp.Hu + qp.Hdu;
  Eigen::SelfAdjointEigenSolver<Mat> es(qp.H);
  if (!(es.eigenvalues().minCoeff() > 1e-12)) throw Error(ErrorCode::IndefiniteH, "condensed Hessian not positive definite");
  return qp;
}

GradientTerms gradient_terms(const CondensedQp& qp, const Vec& xhat, const Vec& Zbar, const Vec& Ubar,
                             const Vec& u_prev) {
  if (xhat.size() != qp.nx || Zbar.size() != qp.N * qp.ny || Ubar.size() != qp.N * qp.nu || u_prev.size() != qp.nu)
    throw Error(ErrorCode::InvalidArgument, "gradient: stack dimensions");
  GradientTerms t;
  const Vec ez = qp.Wz_bar * (qp.Phi_x * xhat - Zbar);
  t.g_z = (qp.Wz_bar * qp.Gamma).transpose() * ez;
  t.rho_z = 0.5 * ez.squaredNorm();
  const Vec eu = qp.Wu_bar * Ubar;
  t.g_u = -qp.Wu_bar.transpose() * eu;
  t.rho_u = 0.5 * eu.squaredNorm();
  const Vec edu = qp.Wdu_bar * qp.I0 * u_prev;
  t.g_du = -(qp.Wdu_bar * qp.Lambda).transpose() * edu;
  t.rho_du = 0.5 * edu.squaredNorm();
  return t;
}

Vec gradient(const CondensedQp& qp, const Vec& xhat, const Vec& Zbar, const Vec& Ubar, const Vec& u_prev) {
  return gradient_terms(qp, xhat, Zbar, Ubar, u_prev).g();
}

MpcGains unconstrained_gains(const CondensedQp& qp) {
  Eigen::LLT<Mat> llt(qp.H);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::IndefiniteH, "Hessian not positive definite");
  const Mat I0t = qp.I0.transpose();
  const Mat WzWz = qp.Wz_bar.transpose() * qp.Wz_bar;
  const Mat first = llt.solve(qp.I0).transpose();  // I0' H^{-1}
  MpcGains k;
  k.LZ = first * qp.Gamma.transpose() * WzWz;
  k.Lx = -k.LZ * qp.Phi_x;
  k.LU = first * qp.Wu_bar.transpose() * qp.Wu_bar;
  k.LDu = first * qp.Lambda.transpose() * qp.Wdu_bar.transpose() * qp.Wdu_bar * qp.I0;
  if (spectral_radius((qp.A + qp.B * k.Lx).eval()) >= 1.0)
    throw Error(ErrorCode::UnstableClosedLoop, "A + B Lx is not Schur stable");
  return k;
}

Vec control_law(const MpcGains& k, const Vec& xhat, const Vec& Zbar, const Vec& Ubar, const Vec& u_prev) {
  return k.Lx * xhat + k.LZ * Zbar + k.LU * Ubar + k.LDu * u_prev;
}

Mat disturbance_prediction(const StateSpace& sys, const Mat& E, int N) {
  const Index nx = sys.nx(), ny = sys.ny();
  if (E.rows() != nx) throw Error(ErrorCode::InvalidArgument, "E row count");
  Mat Phi_d(N * ny, E.cols());
  Mat Xn = Mat::Zero(nx, nx), Ak = Mat::Identity(nx, nx);
  for (int i = 0; i < N; ++i) {
    Xn += Ak;
    Ak = sys.A * Ak;
    Phi_d.middleRows(i * ny, ny) = sys.C * Xn * E;
  }
  return Phi_d;
}

Vec offset_free_gradient(const CondensedQp& qp, const Mat& Phi_d, const Vec& xhat, const Vec& dhat, const Vec& Zbar) {
  if (Phi_d.cols() != dhat.size() || Phi_d.rows() != qp.N * qp.ny)
    throw Error(ErrorCode::InvalidArgument, "offset_free_gradient: dimensions");
  const Vec ez = qp.Wz_bar * (qp.Phi_x * xhat + Phi_d * dhat - Zbar);
  return (qp.Wz_bar * qp.Gamma).transpose() * ez;
}

FfMpcProblem build_ffmpc(const StateSpace& sys, const Mat& Lx, const Mat& Kff, const MpcConfig& cfg,
                         const FfMpcBounds& bounds) {
  cfg.validate(sys.ny(), sys.nu());
  FfMpcProblem p;
  const int N = cfg.N;
  const Index nx = sys.nx(), nu = sys.nu(), ny = sys.ny();
  p.N = N;
  p.nx = nx;
  p.nu = nu;
  p.ny = ny;
  p.Lx = Lx;
  p.Kff = Kff;
  p.Acl = sys.A + sys.B * Lx;
  p.Bcl = sys.B * Kff;
  if (spectral_radius(p.Acl) >= 1.0) throw Error(ErrorCode::UnstableClosedLoop, "A + B Lx is not Schur stable");

  const auto Ak = powers(p.Acl, N + 1);
  p.Phi_cl.resize(N * nx, nx);
  p.Phi_cl0.resize(N * nx, nx);
  p.Gamma_cl = Mat::Zero(N * nx, N * nu);
  p.Gamma_cl0 = Mat::Zero(N * nx, N * nu);
  for (int i = 0; i < N; ++i) {
    p.Phi_cl.middleRows(i * nx, nx) = Ak[i + 1];
    p.Phi_cl0.middleRows(i * nx, nx) = Ak[i];
    for (int j = 0; j <= i; ++j) {
      p.Gamma_cl.block(i * nx, j * nu, nx, nu) = Ak[i - j] * p.Bcl;
      if (j < i) p.Gamma_cl0.block(i * nx, j * nu, nx, nu) = Ak[i - 1 - j] * p.Bcl;
    }
  }
  p.Lbar_x = kron(Mat::Identity(N, N), Lx);
  p.Kbar_ff = kron(Mat::Identity(N, N), Kff);
  p.Cbar = kron(Mat::Identity(N, N), sys.C);
  p.Psi_x = p.Lbar_x * p.Phi_cl0;
  p.Psi_r = p.Lbar_x * p.Gamma_cl0 + p.Kbar_ff;
  p.Lambda = build_lambda(nu, N);
  p.I0 = Mat::Zero(N * nu, nu);
  p.I0.topRows(nu).setIdentity();
  p.Wz_bar = stack_weight(cfg.Wz, N);
  p.Wu_bar = stack_weight(cfg.Wu, N);
  p.Wdu_bar = stack_weight(cfg.Wdu, N);

  const Mat Gz = p.Wz_bar * p.Cbar * p.Gamma_cl;
  const Mat Gu = p.Wu_bar * p.Psi_r;
  const Mat Gdu = p.Wdu_bar * p.Lambda * p.Psi_r;
  p.H = Gz.transpose() * Gz + Gu.transpose() * Gu + Gdu.transpose() * Gdu;
  p.H = 0.5 * (p.H + p.H.transpose()).eval();

  std::vector<Mat> rows, sx, su;
  std::vector<Vec> lo, hi;
  Index at = 0;
  auto add = [&](const std::optional<Bounds>& b, Index dim, const Mat& A, const Mat& Sx, const Mat& Su) {
    if (!b) return;
    Vec l = expand_bound(b->lower, dim, N), h = expand_bound(b->upper, dim, N);
    if ((l.array() > h.array()).any()) throw Error(ErrorCode::InvalidArgument, "bounds not ordered");
    rows.push_back(A);
    sx.push_back(Sx);
    su.push_back(Su);
    lo.push_back(l);
    hi.push_back(h);
    at += A.rows();
  };
  const Mat zero_u = Mat::Zero(N * nx, nu);
  add(bounds.x, nx, p.Gamma_cl, p.Phi_cl, zero_u);
  add(bounds.y, ny, p.Cbar * p.Gamma_cl, p.Cbar * p.Phi_cl, Mat::Zero(N * ny, nu));
  if (bounds.u) p.u_row0 = at;
  add(bounds.u, nu, p.Psi_r, p.Psi_x, Mat::Zero(N * nu, nu));
  add(bounds.du, nu, p.Lambda * p.Psi_r, p.Lambda * p.Psi_x, -p.I0);

  p.Aineq.resize(at, N * nu);
  p.Sx.resize(at, nx);
  p.Su.resize(at, nu);
  p.lo.resize(at);
  p.hi.resize(at);
  Index r = 0;
  for (size_t k = 0; k < rows.size(); ++k) {
    const Index m = rows[k].rows();
    p.Aineq.middleRows(r, m) = rows[k];
    p.Sx.middleRows(r, m) = sx[k];
    p.Su.middleRows(r, m) = su[k];
    p.lo.segment(r, m) = lo[k];
    p.hi.segment(r, m) = hi[k];
    r += m;
  }
  return p;
}

FfMpcSolution solve_ffmpc(const FfMpcProblem& p, const Vec& x, const Vec& Zbar, const Vec& Ubar, const Vec& u_prev,
                          const AppliedMove* applied, const Vec* warm) {
  if (x.size() != p.nx || Zbar.size() != p.N * p.ny || Ubar.size() != p.N * p.nu || u_prev.size() != p.nu)
    throw Error(ErrorCode::InvalidArgument, "solve_ffmpc: stack dimensions");
  const Mat Gz = p.Wz_bar * p.Cbar * p.Gamma_cl;
  const Mat Gu = p.Wu_bar * p.Psi_r;
  const Mat Gdu = p.Wdu_bar * p.Lambda * p.Psi_r;
  QpProblem qp;
  qp.H = p.H;
  qp.g = Gz.transpose() * (p.Wz_bar * (p.Cbar * p.Phi_cl * x - Zbar)) +
         Gu.transpose() * (p.Wu_bar * (p.Psi_x * x - Ubar)) +
         Gdu.transpose() * (p.Wdu_bar * (p.Lambda * p.Psi_x * x - p.I0 * u_prev));
  qp.A = p.Aineq;
  Vec shift = p.Sx * x + p.Su * u_prev;
  if (applied && p.u_row0 >= 0) {
    if (applied->offset.size() != p.nu || applied->gain.rows() != p.nu || applied->gain.cols() != p.nu)
      throw Error(ErrorCode::InvalidArgument, "applied move dimensions");
    // First move exactly; later moves keep the current feedback discrepancy as a constant offset.
    const Vec delta = applied->offset - p.Lx * x;
    qp.A.middleRows(p.u_row0, p.nu).setZero();
    qp.A.block(p.u_row0, 0, p.nu, p.nu) = applied->gain;
    shift.segment(p.u_row0, p.nu) = applied->offset;
    for (int i = 1; i < p.N; ++i) shift.segment(p.u_row0 + i * p.nu, p.nu) += delta;
  }
  qp.lower = p.lo - shift;
  qp.upper = p.hi - shift;
  const QpResult res = solve(qp, QpSettings{}, warm);
  if (res.status == QpStatus::Infeasible) throw Error(ErrorCode::Infeasible, "feedforward MPC problem infeasible");
  if (res.status == QpStatus::MaxIterations) throw Error(ErrorCode::MaxIterations, "feedforward MPC did not converge");
  FfMpcSolution s;
  s.Rbar = res.v;
  s.r = res.v.head(p.nu);
  s.Upred = p.Psi_x * x + p.Psi_r * res.v;
  s.status = res.status;
  s.iterations = res.iterations;
  return s;
}

}  // namespace ykmpc
