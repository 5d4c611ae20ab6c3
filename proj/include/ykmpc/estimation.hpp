#pragma once

#include "ykmpc/state_space.hpp"

namespace ykmpc {

// Stationary filter in current form: xhat_k = (I - Kfx C)(A xhat_{k-1} + B u_{k-1}) + Kfx y_k.
struct KalmanDesign {
  Mat Kfx;
  Mat Qn, Rn;
  Mat P;  // a priori error covariance
};

KalmanDesign stationary_gain(const Mat& A, const Mat& C, const Mat& Qn, const Mat& Rn);

// E E' + 1e-9 I
Mat default_process_noise(const Mat& E);

Vec filter_step(const KalmanDesign& design, const StateSpace& sys, const Vec& xhat_prev, const Vec& u_prev,
                const Vec& y);

// x+ = A x + B u + E d, d+ = d.
struct AugmentedModel {
  Mat Aa, Ba, Ca;
  Mat E;
  Index nx = 0, nd = 0;

  StateSpace system(double Ts = 1.0) const;
};

AugmentedModel augment(const Mat& A, const Mat& B, const Mat& C, const Mat& E);

// blkdiag(E E' + 1e-9 I, qd_scale I)
Mat augmented_process_noise(const AugmentedModel& m, double qd_scale = 1.0);

struct AugmentedEstimate {
  Vec xa;
  Vec xhat, dhat;
};

AugmentedEstimate augmented_filter_step(const KalmanDesign& design, const AugmentedModel& m, const Vec& xa_prev,
                                        const Vec& u_prev, const Vec& y);

}  // namespace ykmpc
