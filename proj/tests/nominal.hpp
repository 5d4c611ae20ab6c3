#pragma once

#include "ykmpc/estimation.hpp"
#include "ykmpc/fourtank.hpp"
#include "ykmpc/mpc.hpp"
#include "ykmpc/youla.hpp"

namespace ykmpc::testing {

// Nominal four-tank design assembled from the individual modules.
struct Nominal {
  DiscreteModel d = discrete_model(FourTankParams{});
  Mat Lx = unconstrained_gains(build_condensed(d.plant(), MpcConfig::defaults(2, 2))).Lx;
  Mat Kfx = stationary_gain(d.A, d.C, default_process_noise(d.E), 0.01 * Mat::Identity(2, 2)).Kfx;
  StateSpace Kn = build_nominal_controller(d.A, d.B, d.C, Lx, Kfx);
  StateSpace Gn = build_nominal_plant(d.A, d.B, d.C);
  CoprimeFactors f = coprime_factorize(Gn, Kn, Lx, Mat::Zero(4, 4));
  Mat Kff = feedforward_gain(d.A, d.B, d.C, Lx);
  StateSpace Gd{d.A, d.E, Mat((Mat(4, 4) << d.C, Mat::Zero(2, 4)).finished()), Mat::Zero(4, 2), 1.0};
  YkBlocks blk = build_yk_blocks(f, Kn, Gn, Kff, Gd);

  StateSpace Q0() const { return StateSpace::zero(2, 4); }
  StateSpace S0() const { return StateSpace::zero(4, 2); }
};

}  // namespace ykmpc::testing
