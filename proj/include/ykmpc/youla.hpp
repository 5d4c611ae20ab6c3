#pragma once

#include <utility>
#include <vector>

#include "ykmpc/state_space.hpp"

namespace ykmpc {

// Positive-feedback convention throughout: the loop is u = K y.

// K_n: inputs [y; u], output u_fb. Observer state update of the current-form filter followed by Lx.
StateSpace build_nominal_controller(const Mat& A, const Mat& B, const Mat& C, const Mat& Lx, const Mat& Kfx,
                                    double Ts = 1.0);
// G_n: input u, outputs [y; u].
StateSpace build_nominal_plant(const Mat& A, const Mat& B, const Mat& C, double Ts = 1.0);

// Right factors [M U; N V] and left factors [Vt -Ut; -Nt Mt] of the pair (G, K).
struct CoprimeFactors {
  StateSpace M, N, U, V, Mt, Nt, Ut, Vt;
  Mat F, Fc;
  StateSpace right;  // [M U; N V]
  StateSpace left;   // [Vt -Ut; -Nt Mt]
  StateSpace G, K;
};

CoprimeFactors coprime_factorize(const StateSpace& G, const StateSpace& K, const Mat& F, const Mat& Fc);

// Max impulse-response deviation of left * right from the identity over L samples.
double verify_bezout(const CoprimeFactors& f, Index L = 200);

// J = [K_n, Vt^-1; V^-1, -V^-1 N]: inputs [(y,u); eps], outputs [u; eta].
StateSpace build_J(const CoprimeFactors& f, const StateSpace& Kn);
// J_G = [-M^-1 U, M^-1; Mt^-1, G_n]: inputs [s_out; u], outputs [s_in; (y,u)].
StateSpace build_JG(const CoprimeFactors& f, const StateSpace& Gn);

// [C (I - A - B Lx)^-1 B]^-1
Mat feedforward_gain(const Mat& A, const Mat& B, const Mat& C, const Mat& Lx);

// Prepends the feedforward column [Kff; -V^-1 N Uf] with Uf = Vt Kff. Returns (Jaug, Uf).
std::pair<StateSpace, StateSpace> augment_J(const StateSpace& J, const StateSpace& Kff_sys, const CoprimeFactors& f);
// Appends the disturbance column [-M^-1 U Nd; Gd] with Nd = Mt Gd. Returns (JGaug, Nd).
std::pair<StateSpace, StateSpace> augment_JG(const StateSpace& JG, const StateSpace& Gd, const CoprimeFactors& f);

// (U + M Q)(V + N Q)^-1
StateSpace parameterize_controller(const CoprimeFactors& f, const StateSpace& Q);
// (N + V S)(M + U S)^-1
StateSpace parameterize_plant(const CoprimeFactors& f, const StateSpace& S);

// Ks (I + Gs Ks)^-1
StateSpace yk_parameter_stable(const StateSpace& Gs, const StateSpace& Ks);

struct DualS {
  StateSpace S;
  CoprimeFactors actual;
  double validation_error = 0;
};

// S = V^-1 V_act (Nt_act M - Mt_act N) from a fresh factorization of (G_act, Kn) with the same F, Fc,
// validated by comparing lft_upper(J_G, S) with G_act over L impulse samples.
DualS dual_s_from_actual(const CoprimeFactors& f, const StateSpace& G_act, const StateSpace& Kn, Index L = 200,
                         double tol = 1e-5);

// Fig.-2 style loop: plant side lft_upper(JGaug, S) with inputs [u; d], controller side lft_lower(Jaug, Q) with
// inputs [r; (y,u)]. Result: inputs [r; d], outputs [(y,u)].
StateSpace assemble_closed_loop(const StateSpace& JGaug, const StateSpace& Jaug, const StateSpace& Q,
                                const StateSpace& S);

// Reorders/duplicates channels: output rows `outs`, input columns `ins`.
StateSpace select_channels(const StateSpace& g, const std::vector<Index>& outs, const std::vector<Index>& ins);

// Closes a controller's own-output feedback: k has inputs [w; u] and output u (dim nu). Result: w -> u.
StateSpace close_self_loop(const StateSpace& k, Index nu);

struct YkBlocks {
  StateSpace J, JG, Jaug, JGaug, Uf, Nd;
  IoPartition J_io, JG_io, Jaug_io, JGaug_io;
};

YkBlocks build_yk_blocks(const CoprimeFactors& f, const StateSpace& Kn, const StateSpace& Gn, const Mat& Kff,
                         const StateSpace& Gd);

}  // namespace ykmpc
