#include "ykmpc/qdesign.hpp"

#include <cmath>

namespace ykmpc {

StateSpace build_generalized_plant(const Mat& A, const Mat& B, const Mat& C, const Mat& E, double Ts) {
  const Index n = A.rows(), nu = B.cols(), ny = C.rows(), nd = E.cols();
  if (B.rows() != n || C.cols() != n || E.rows() != n)
    throw Error(ErrorCode::InvalidArgument, "build_generalized_plant: dimensions");
  Mat Bp(n, nd + nu), Cp(2 * ny + nu, n);
  Bp << E, B;
  Cp << C, C, Mat::Zero(nu, n);
  Mat Dp = Mat::Zero(2 * ny + nu, nd + nu);
  Dp.bottomRightCorner(nu, nu).setIdentity();
  return {A, Bp, Cp, Dp, Ts};
}

StateSpace build_T(const StateSpace& P, const StateSpace& J, const IoPartition& J_io, Index L_check) {
  J_io.validate(J.nu(), J.ny());
  const Index nm = J_io.input("meas").size, nu = J_io.output("u").size;
  const Index neps = J.nu() - nm, neta = J.ny() - nu;
  const Index ne = P.ny() - nm, nd = P.nu() - nu;
  if (ne < 0 || nd < 0) throw Error(ErrorCode::InvalidArgument, "build_T: P too small for the loop channels");
  const StateSpace T = star_lower(P, J, nu, nm);
  if (!is_stable(T)) throw Error(ErrorCode::UnstableSystem, "T is not stable");
  const double t22 = impulse_distance(subsystem(T, ne, neta, nd, neps), StateSpace::zero(neta, neps, T.Ts), L_check);
  if (!(t22 <= 1e-9)) throw Error(ErrorCode::NonzeroT22, "T22 impulse response is not zero");
  return T;
}

StateSpace make_lowpass_weight(double a, double b, Index ny, double Ts) {
  if (!(std::abs(a) < 1.0)) throw Error(ErrorCode::UnstablePole, "weight pole must lie inside the unit circle");
  return {a * Mat::Identity(ny, ny), Mat::Identity(ny, ny), b * Mat::Identity(ny, ny), Mat::Zero(ny, ny), Ts};
}

QDesignProblem make_qdesign_problem(const StateSpace& P, const StateSpace& J, const IoPartition& J_io,
                                    const StateSpace& W, Index Nq, Index L_ir) {
  if (Nq < 1 || L_ir < Nq) throw Error(ErrorCode::InvalidArgument, "need Nq >= 1 and L_ir >= Nq");
  if (!is_stable(W)) throw Error(ErrorCode::UnstablePole, "weight not stable");
  QDesignProblem q;
  q.P = P;
  q.W = W;
  q.T = build_T(P, J, J_io, L_ir);
  q.Nq = Nq;
  q.L_ir = L_ir;
  const Index nm = J_io.input("meas").size, nu = J_io.output("u").size;
  q.neps = J.nu() - nm;
  q.neta = J.ny() - nu;
  q.ne = P.ny() - nm;
  q.nd = P.nu() - nu;
  if (W.nu() != q.ne) throw Error(ErrorCode::InvalidArgument, "weight width must match the performance channel");
  q.T11 = subsystem(q.T, 0, q.ne, 0, q.nd);
  q.T12 = subsystem(q.T, 0, q.ne, q.nd, q.neps);
  q.T21 = subsystem(q.T, q.ne, q.neta, 0, q.nd);
  return q;
}

StateSpace fir_realization(const std::vector<Mat>& taps, double Ts) {
  if (taps.empty()) throw Error(ErrorCode::InvalidArgument, "FIR needs at least one tap");
  const Index ni = taps.front().cols(), no = taps.front().rows();
  const Index Nq = static_cast<Index>(taps.size());
  const Index n = (Nq - 1) * ni;
  Mat A = Mat::Zero(n, n), B = Mat::Zero(n, ni), C(no, n);
  if (n > 0) {
    A.bottomLeftCorner(n - ni, n - ni).setIdentity();
    B.topRows(ni).setIdentity();
    for (Index q = 1; q < Nq; ++q) C.middleCols((q - 1) * ni, ni) = taps[static_cast<size_t>(q)];
  }
  return {A, B, C, taps.front(), Ts};
}

FirQ synthesize_q_fir(const QDesignProblem& prob) {
  const Index L = prob.L_ir, Nq = prob.Nq;
  const Index ne = prob.ne, nd = prob.nd, neps = prob.neps, neta = prob.neta;
  const auto h = impulse_response(prob.W * prob.T11, L);
  const auto a = impulse_response(prob.W * prob.T12, L);
  const auto b = impulse_response(prob.T21, L);

  // vec(a_p Theta b_s) = kron(b_s', a_p) vec(Theta); G[s] sums over the splits p + r = s.
  const Index rb = ne * nd, cb = neps * neta;
  std::vector<Mat> G(static_cast<size_t>(L), Mat::Zero(rb, cb));
  for (Index s = 0; s < L; ++s)
    for (Index p = 0; p <= s; ++p) G[s] += kron(b[static_cast<size_t>(s - p)].transpose(), a[static_cast<size_t>(p)]);

  Mat M = Mat::Zero(L * rb, Nq * cb);
  Vec y(L * rb);
  for (Index k = 0; k < L; ++k) {
    y.segment(k * rb, rb) = Eigen::Map<const Vec>(h[static_cast<size_t>(k)].data(), rb);
    for (Index q = 0; q < std::min(Nq, k + 1); ++q) M.block(k * rb, q * cb, rb, cb) = G[static_cast<size_t>(k - q)];
  }
  // The regressor is rank deficient whenever T21 spans fewer directions than eta, so use the
  // minimum-norm solution.
  const Vec theta = lstsq_min_norm(M, (-y).eval());

  FirQ out;
  for (Index q = 0; q < Nq; ++q)
    out.taps.push_back(Eigen::Map<const Mat>(theta.data() + q * cb, neps, neta));
  out.realized = fir_realization(out.taps, prob.T.Ts);
  const Vec resid = M * theta + y;
  out.surrogate_cost = resid.squaredNorm();
  out.zero_cost = y.squaredNorm();
  const double ref = (M.transpose() * y).norm();
  out.stationarity = ref > 0 ? (M.transpose() * resid).norm() / ref : 0.0;
  return out;
}

double weighted_h2_cost(const QDesignProblem& prob, const StateSpace& Q) {
  if (!is_stable(Q)) throw Error(ErrorCode::UnstableSystem, "Q is not stable");
  // T22 = 0, so the lower LFT equals T11 + T12 Q T21.
  const StateSpace closed = prob.W * lft_lower(prob.T, Q);
  const double n = h2_norm(closed);
  return n * n;
}

}  // namespace ykmpc
