#pragma once

#include <vector>

#include "ykmpc/state_space.hpp"

namespace ykmpc {

// Generalized plant: inputs [d; u], outputs [e; y; u] with e = C x the performance channel and
// [y; u] the measurement fed to the controller.
StateSpace build_generalized_plant(const Mat& A, const Mat& B, const Mat& C, const Mat& E, double Ts = 1.0);

// Closes P's measurement/control loop with J's "meas" input and "u" output groups.
// Result: inputs [d; eps], outputs [e; eta].
StateSpace build_T(const StateSpace& P, const StateSpace& J, const IoPartition& J_io, Index L_check = 400);

// diag(b / (z - a)) over ny channels.
StateSpace make_lowpass_weight(double a, double b, Index ny, double Ts = 1.0);

struct QDesignProblem {
  StateSpace P, W, T;
  StateSpace T11, T12, T21;
  Index L_ir = 400;
  Index Nq = 40;
  Index ne = 0, nd = 0, neps = 0, neta = 0;
};

QDesignProblem make_qdesign_problem(const StateSpace& P, const StateSpace& J, const IoPartition& J_io,
                                    const StateSpace& W, Index Nq = 40, Index L_ir = 400);

struct FirQ {
  std::vector<Mat> taps;  // Theta_0 .. Theta_{Nq-1}, each neps x neta
  StateSpace realized;
  double surrogate_cost = 0;
  double zero_cost = 0;  // surrogate at Theta = 0
  double stationarity = 0;  // |M'(M theta + h)| / |M' h|
};

// Shift-register realization of the taps.
StateSpace fir_realization(const std::vector<Mat>& taps, double Ts = 1.0);

FirQ synthesize_q_fir(const QDesignProblem& prob);

// |W (T11 + T12 Q T21)|_2^2 from the Lyapunov equation.
double weighted_h2_cost(const QDesignProblem& prob, const StateSpace& Q);

}  // namespace ykmpc
