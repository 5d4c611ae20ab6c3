#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>

#include "ykmpc/errors.hpp"

namespace ykmpc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = Matrix<double>;
using Vec = Vector<double>;
using Index = Eigen::Index;

// Shared numerical thresholds. Solvers and tests both read these.
namespace tol {
inline constexpr double pivot = 1e-12;            // relative to ||A||_F
inline constexpr double stability_margin = 1e-9;  // rho(A) < 1 - margin
inline constexpr double dare_convergence = 1e-14;
inline constexpr int dare_max_doublings = 100;
inline constexpr int dlyap_max_doublings = 64;
inline constexpr double lstsq_rank = 1e-10;
inline constexpr double well_posed_rcond = 1e-10;
inline constexpr double qp_kkt = 1e-8;
inline constexpr double expm_scaled_norm = 0.5;
}  // namespace tol

template <typename DA, typename DB>
Matrix<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  Matrix<typename DA::Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename DA, typename DB>
Matrix<typename DA::Scalar> block_diag(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  Matrix<typename DA::Scalar> out =
      Matrix<typename DA::Scalar>::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

template <typename DA, typename DB>
Matrix<typename DA::Scalar> solve_linear(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
  using Scalar = typename DA::Scalar;
  if (A.rows() != A.cols() || A.rows() != B.rows())
    throw Error(ErrorCode::InvalidArgument, "solve_linear: dimension mismatch");
  if (A.rows() == 0) return Matrix<Scalar>(0, B.cols());
  Eigen::PartialPivLU<Matrix<Scalar>> lu(A);
  const Scalar scale = A.norm();
  const Scalar min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot > Scalar(tol::pivot) * scale))
    throw Error(ErrorCode::SingularMatrix, "pivot below threshold");
  return lu.solve(B);
}

template <typename Derived>
Matrix<typename Derived::Scalar> inverse(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  return solve_linear(A, Matrix<Scalar>::Identity(A.rows(), A.cols()));
}

template <typename Derived>
Vector<std::complex<typename Derived::Scalar>> eigenvalues(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  if (A.rows() != A.cols()) throw Error(ErrorCode::InvalidArgument, "eigenvalues: matrix not square");
  if (A.rows() == 0) return {};
  Eigen::EigenSolver<Matrix<Scalar>> es(A.eval(), false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "eigenvalue iteration");
  return es.eigenvalues();
}

template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& A) {
  if (A.rows() == 0) return 0;
  return eigenvalues(A).cwiseAbs().maxCoeff();
}

// Solves P = A P A^T + Qm by squared Smith doubling.
template <typename DA, typename DQ>
Matrix<typename DA::Scalar> solve_dlyap(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DQ>& Qm) {
  using Scalar = typename DA::Scalar;
  if (A.rows() != A.cols() || Qm.rows() != A.rows() || Qm.cols() != A.rows())
    throw Error(ErrorCode::InvalidArgument, "solve_dlyap: dimension mismatch");
  if (spectral_radius(A) >= Scalar(1) - Scalar(tol::stability_margin))
    throw Error(ErrorCode::UnstableA, "solve_dlyap requires a Schur-stable A");
  Matrix<Scalar> P = Qm;
  Matrix<Scalar> Ak = A;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int it = 0; it < tol::dlyap_max_doublings; ++it) {
    Matrix<Scalar> step = Ak * P * Ak.transpose();
    P += step;
    Ak = (Ak * Ak).eval();
    if (step.norm() <= eps * P.norm()) break;
  }
  return (P + P.transpose()) / Scalar(2);
}

// Stabilizing solution of A^T P A - P - A^T P B (R + B^T P B)^{-1} B^T P A + Q = 0,
// computed with the structure-preserving doubling algorithm.
template <typename DA, typename DB, typename DQ, typename DR>
Matrix<typename DA::Scalar> solve_dare(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B,
                                       const Eigen::MatrixBase<DQ>& Qm, const Eigen::MatrixBase<DR>& Rm) {
  using Scalar = typename DA::Scalar;
  using M = Matrix<Scalar>;
  const Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Qm.rows() != n || Qm.cols() != n || Rm.rows() != B.cols() ||
      Rm.cols() != B.cols())
    throw Error(ErrorCode::InvalidArgument, "solve_dare: dimension mismatch");
  const M I = M::Identity(n, n);
  M Ak = A;
  M Gk = B * solve_linear(Rm, B.transpose());
  M Hk = Qm;
  bool converged = false;
  for (int it = 0; it < tol::dare_max_doublings; ++it) {
    Eigen::PartialPivLU<M> W(I + Gk * Hk);
    if (!(W.rcond() > Scalar(1e-14))) break;
    const M WiA = W.solve(Ak);
    const M WiG = W.solve(Gk);
    M Hn = Hk + Ak.transpose() * Hk * WiA;
    M Gn = Gk + Ak * WiG * Ak.transpose();
    M An = Ak * WiA;
    const Scalar change = (Hn - Hk).norm();
    Hk = (Hn + Hn.transpose()) / Scalar(2);
    Gk = (Gn + Gn.transpose()) / Scalar(2);
    Ak = An;
    if (!Hk.allFinite()) break;
    if (change <= Scalar(tol::dare_convergence) * (Scalar(1) + Hk.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorCode::NoStabilizingSolution, "doubling iteration did not converge");
  const M K = solve_linear((Rm + B.transpose() * Hk * B).eval(), (B.transpose() * Hk * A).eval());
  if (spectral_radius((A - B * K).eval()) >= Scalar(1))
    throw Error(ErrorCode::NoStabilizingSolution, "closed loop not stable");
  return Hk;
}

template <typename DA, typename DB, typename DQ, typename DR, typename DP>
typename DA::Scalar dare_residual(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B,
                                  const Eigen::MatrixBase<DQ>& Qm, const Eigen::MatrixBase<DR>& Rm,
                                  const Eigen::MatrixBase<DP>& P) {
  using M = Matrix<typename DA::Scalar>;
  const M BtPA = B.transpose() * P * A;
  const M R = A.transpose() * P * A - P -
              BtPA.transpose() * solve_linear((Rm + B.transpose() * P * B).eval(), BtPA) + Qm;
  return R.norm();
}

// Matrix exponential, diagonal Pade(6) with scaling and squaring.
template <typename Derived>
Matrix<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  using Mx = Matrix<Scalar>;
  const Index n = M.rows();
  if (M.cols() != n) throw Error(ErrorCode::InvalidArgument, "expm: matrix not square");
  if (n == 0) return Mx(0, 0);
  const Scalar norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(static_cast<double>(norm1))) throw Error(ErrorCode::Overflow, "expm: non-finite input");
  int s = 0;
  if (norm1 > Scalar(tol::expm_scaled_norm))
    s = static_cast<int>(std::ceil(std::log2(static_cast<double>(norm1 / Scalar(tol::expm_scaled_norm)))));
  if (s > 1000) throw Error(ErrorCode::Overflow, "expm: norm beyond representable scaling");
  const Mx X = M / std::ldexp(Scalar(1), s);

  constexpr int q = 6;
  Scalar c = 1;
  const Mx I = Mx::Identity(n, n);
  Mx num = I, den = I, Xk = I;
  for (int k = 1; k <= q; ++k) {
    c = c * Scalar(q - k + 1) / Scalar(k * (2 * q - k + 1));
    Xk = (Xk * X).eval();
    num += c * Xk;
    den += ((k % 2) ? -c : c) * Xk;
  }
  Mx E = solve_linear(den, num);
  for (int i = 0; i < s; ++i) E = (E * E).eval();
  if (!E.allFinite()) throw Error(ErrorCode::Overflow, "expm: result overflow");
  return E;
}

// Least squares for full-column-rank A via column-pivoted QR.
template <typename DA, typename DB>
Matrix<typename DA::Scalar> lstsq(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  if (A.rows() != b.rows()) throw Error(ErrorCode::InvalidArgument, "lstsq: dimension mismatch");
  if (A.rows() < A.cols()) throw Error(ErrorCode::RankDeficient, "lstsq: fewer rows than columns");
  if (A.cols() == 0) return Matrix<Scalar>(0, b.cols());
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(A);
  const auto R = qr.matrixQR().diagonal().cwiseAbs();
  if (!(R.minCoeff() > Scalar(tol::lstsq_rank) * A.norm()))
    throw Error(ErrorCode::RankDeficient, "lstsq: QR diagonal below threshold");
  return qr.solve(b);
}

// Minimum-norm least squares; directions with pivots below rel_threshold * max pivot are dropped.
template <typename DA, typename DB>
Matrix<typename DA::Scalar> lstsq_min_norm(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b,
                                           double rel_threshold = tol::lstsq_rank) {
  using Scalar = typename DA::Scalar;
  if (A.rows() != b.rows()) throw Error(ErrorCode::InvalidArgument, "lstsq: dimension mismatch");
  if (A.cols() == 0) return Matrix<Scalar>(0, b.cols());
  Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod;
  cod.setThreshold(Scalar(rel_threshold));
  cod.compute(A);
  return cod.solve(b);
}

}  // namespace ykmpc
