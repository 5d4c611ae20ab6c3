#include "ykmpc/estimation.hpp"

namespace ykmpc {

KalmanDesign stationary_gain(const Mat& A, const Mat& C, const Mat& Qn, const Mat& Rn) {
  KalmanDesign d;
  d.Qn = Qn;
  d.Rn = Rn;
  d.P = solve_dare(A.transpose(), C.transpose(), Qn, Rn);
  const Mat S = C * d.P * C.transpose() + Rn;
  d.Kfx = solve_linear(S, (C * d.P).eval()).transpose();
  const Mat F = (Mat::Identity(A.rows(), A.rows()) - d.Kfx * C) * A;
  if (spectral_radius(F) >= 1.0) throw Error(ErrorCode::NoStabilizingSolution, "filter matrix not stable");
  return d;
}

Mat default_process_noise(const Mat& E) {
  return E * E.transpose() + 1e-9 * Mat::Identity(E.rows(), E.rows());
}

Vec filter_step(const KalmanDesign& design, const StateSpace& sys, const Vec& xhat_prev, const Vec& u_prev,
                const Vec& y) {
  const Vec pred = sys.A * xhat_prev + sys.B * u_prev;
  return pred + design.Kfx * (y - sys.C * pred);
}

StateSpace AugmentedModel::system(double Ts) const {
  return {Aa, Ba, Ca, Mat::Zero(Ca.rows(), Ba.cols()), Ts};
}

AugmentedModel augment(const Mat& A, const Mat& B, const Mat& C, const Mat& E) {
  const Index n = A.rows(), nd = E.cols(), ny = C.rows();
  if (A.cols() != n || B.rows() != n || C.cols() != n || E.rows() != n)
    throw Error(ErrorCode::InvalidArgument, "augment: dimensions");
  AugmentedModel m;
  m.nx = n;
  m.nd = nd;
  m.E = E;
  m.Aa = Mat::Identity(n + nd, n + nd);
  m.Aa.topLeftCorner(n, n) = A;
  m.Aa.topRightCorner(n, nd) = E;
  m.Ba = Mat::Zero(n + nd, B.cols());
  m.Ba.topRows(n) = B;
  m.Ca = Mat::Zero(ny, n + nd);
  m.Ca.leftCols(n) = C;
  if (nd > 0) {
    // PBH test at z = 1, the only eigenvalue the augmentation adds.
    Mat pbh(n + nd + ny, n + nd);
    pbh << Mat::Identity(n + nd, n + nd) - m.Aa, m.Ca;
    Eigen::JacobiSVD<Mat> svd(pbh);
    const auto& s = svd.singularValues();
    if (!(s(s.size() - 1) > 1e-10 * std::max(1.0, s(0))))
      throw Error(ErrorCode::UndetectableAugmentation, "PBH matrix at z = 1 loses rank");
  }
  return m;
}

Mat augmented_process_noise(const AugmentedModel& m, double qd_scale) {
  return block_diag(default_process_noise(m.E), (qd_scale * Mat::Identity(m.nd, m.nd)).eval());
}

AugmentedEstimate augmented_filter_step(const KalmanDesign& design, const AugmentedModel& m, const Vec& xa_prev,
                                        const Vec& u_prev, const Vec& y) {
  const Vec pred = m.Aa * xa_prev + m.Ba * u_prev;
  AugmentedEstimate e;
  e.xa = pred + design.Kfx * (y - m.Ca * pred);
  e.xhat = e.xa.head(m.nx);
  e.dhat = e.xa.tail(m.nd);
  return e;
}

}  // namespace ykmpc
