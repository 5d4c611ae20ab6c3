#pragma once

#include <array>
#include <utility>

#include "ykmpc/state_space.hpp"

namespace ykmpc {

// Quadruple-tank process with the standard lab parameters. Lengths in cm, time in s, voltages in V.
struct FourTankParams {
  std::array<double, 4> A{28.0, 32.0, 28.0, 32.0};
  std::array<double, 4> a{0.071, 0.057, 0.071, 0.057};
  std::array<double, 4> h0{12.4, 12.7, 1.8, 1.4};
  std::array<double, 2> u0{3.0, 3.0};
  double k1 = 3.33, k2 = 3.35;
  double kc = 0.5;
  double g = 981.0;
  double gamma1 = 0.7, gamma2 = 0.6;

  void validate() const;
};

using Levels = Eigen::Vector4d;
using Input2 = Eigen::Vector2d;

struct TankRate {
  Levels dh;
  bool clamped = false;  // a negative level was clamped to zero
};

// d enters additively on the pump voltages.
TankRate dynamics(const FourTankParams& p, const Levels& h, const Input2& u, const Input2& d);

struct ContinuousModel {
  Mat Ac, Bc, Cc, Ec;
};

// Jacobian at (h0, u0).
ContinuousModel linearize(const FourTankParams& p);

std::pair<Mat, Mat> discretize_zoh(const Mat& Ac, const Mat& Bc, double Ts);

Levels step_rk4(const FourTankParams& p, const Levels& h, const Input2& u, const Input2& d, double dt, int substeps,
                bool* clamped = nullptr);

struct DiscreteModel {
  Mat A, B, C, E;
  double Ts = 1.0;

  StateSpace plant() const;  // (A, B, C, 0)
};

// Linearized, ZOH-sampled model with E = B.
DiscreteModel discrete_model(const FourTankParams& p, double Ts = 1.0);

struct Deviation {
  Vec x;      // h - h0
  Vec y;      // kc (h_{1,2} - h0_{1,2})
  Vec u_dev;  // u - u0
};

Deviation to_deviation(const FourTankParams& p, const Levels& h_abs, const Input2& u_abs);
Levels levels_from_deviation(const FourTankParams& p, const Vec& x);
Input2 input_from_deviation(const FourTankParams& p, const Vec& u_dev);

}  // namespace ykmpc
