#pragma once

#include <optional>
#include <utility>

#include "ykmpc/qp.hpp"
#include "ykmpc/state_space.hpp"

namespace ykmpc {

struct MpcConfig {
  int N = 20;
  Mat Wz, Wu, Wdu;  // per-stage weights

  // Wz = I, Wu = 1e-4 I, Wdu = 0.1 I.
  static MpcConfig defaults(Index ny, Index nu);
  void validate(Index ny, Index nu) const;
};

// Condensed form of the tracking problem over U = [u_0; ...; u_{N-1}]:
//   phi = 1/2 |Wz (Phi_x x + Gamma U - Z)|^2 + 1/2 |Wu (U - Ubar)|^2 + 1/2 |Wdu (Lambda U - I0 u_prev)|^2
//       = 1/2 U' H U + g' U + rho
struct CondensedQp {
  int N = 0;
  Index nx = 0, nu = 0, ny = 0;
  Mat A, B, C;
  Mat Phi_x, Gamma, Lambda, I0;
  Mat Wz_bar, Wu_bar, Wdu_bar;
  Mat Hz, Hu, Hdu, H;
};

struct GradientTerms {
  Vec g_z, g_u, g_du;
  double rho_z = 0, rho_u = 0, rho_du = 0;

  Vec g() const { return g_z + g_u + g_du; }
  double rho() const { return rho_z + rho_u + rho_du; }
};

struct MpcGains {
  Mat Lx, LZ, LU, LDu;
};

std::pair<Mat, Mat> build_prediction(const StateSpace& sys, int N);
Mat build_lambda(Index nu, int N);
CondensedQp build_condensed(const StateSpace& sys, const MpcConfig& cfg);

GradientTerms gradient_terms(const CondensedQp& qp, const Vec& xhat, const Vec& Zbar, const Vec& Ubar,
                             const Vec& u_prev);
Vec gradient(const CondensedQp& qp, const Vec& xhat, const Vec& Zbar, const Vec& Ubar, const Vec& u_prev);

MpcGains unconstrained_gains(const CondensedQp& qp);
Vec control_law(const MpcGains& k, const Vec& xhat, const Vec& Zbar, const Vec& Ubar, const Vec& u_prev);

// Rows C * sum_{j<i} A^j * E for i = 1..N: effect of a constant disturbance on the predicted outputs.
Mat disturbance_prediction(const StateSpace& sys, const Mat& E, int N);
Vec offset_free_gradient(const CondensedQp& qp, const Mat& Phi_d, const Vec& xhat, const Vec& dhat, const Vec& Zbar);

Vec tile(const Vec& v, int N);

// Element-wise bounds, given either per stage (tiled over the horizon) or already stacked.
struct Bounds {
  Vec lower, upper;
};

struct FfMpcBounds {
  std::optional<Bounds> x, y, u, du;
};

// Feedforward MPC over the injected reference sequence R = [r_0; ...; r_{N-1}] for the nominal
// closed loop x+ = Acl x + Bcl r, u = Lx x + Kff r.
struct FfMpcProblem {
  int N = 0;
  Index nx = 0, nu = 0, ny = 0;
  Mat Lx, Kff;
  Mat Acl, Bcl;
  Mat Phi_cl, Gamma_cl;    // states x_1..x_N
  Mat Phi_cl0, Gamma_cl0;  // states x_0..x_{N-1}
  Mat Lbar_x, Kbar_ff, Cbar;
  Mat Psi_x, Psi_r;  // predicted U = Psi_x x + Psi_r R
  Mat Lambda, I0;
  Mat Wz_bar, Wu_bar, Wdu_bar;
  Mat H;
  // Stacked inequality rows lo - shift <= Aineq R <= hi - shift, shift = Sx x + Su u_prev.
  Mat Aineq, Sx, Su;
  Vec lo, hi;
  Index u_row0 = -1;  // first row of the U block in Aineq, -1 if absent
};

FfMpcProblem build_ffmpc(const StateSpace& sys, const Mat& Lx, const Mat& Kff, const MpcConfig& cfg,
                         const FfMpcBounds& bounds = {});

// Physical first move u_0 = offset + gain r_0 when it differs from the nominal Lx x + Kff r_0.
struct AppliedMove {
  Vec offset;
  Mat gain;
};

struct FfMpcSolution {
  Vec Rbar;
  Vec r;      // first block, injected as the reference
  Vec Upred;  // nominal predicted controls
  QpStatus status = QpStatus::Solved;
  int iterations = 0;
};

FfMpcSolution solve_ffmpc(const FfMpcProblem& p, const Vec& x, const Vec& Zbar, const Vec& Ubar, const Vec& u_prev,
                          const AppliedMove* applied = nullptr, const Vec* warm = nullptr);

}  // namespace ykmpc
