#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include "ykmpc/state_space.hpp"

namespace ykmpc::testing {

class Gen {
 public:
  explicit Gen(unsigned seed) : rng_(seed) {}

  double uniform(double lo = -1, double hi = 1) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Mat mat(Index r, Index c, double scale = 1) {
    Mat m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * uniform();
    return m;
  }
  Vec vec(Index n, double scale = 1) { return mat(n, 1, scale); }

  // Random matrix rescaled to the given spectral radius.
  Mat stable(Index n, double rho = 0.9) {
    Mat a = mat(n, n);
    const double r = spectral_radius(a);
    return r > 0 ? Mat(a * (rho * uniform(0.3, 1.0) / r)) : a;
  }

  Mat spd(Index n, double floor = 0.1) {
    Mat m = mat(n, n);
    return m * m.transpose() + floor * Mat::Identity(n, n);
  }

  StateSpace system(Index nx, Index nu, Index ny, double rho = 0.9, bool feedthrough = true) {
    return {stable(nx, rho), mat(nx, nu), mat(ny, nx), feedthrough ? mat(ny, nu) : Mat::Zero(ny, nu), 1.0};
  }

 private:
  std::mt19937 rng_;
};

inline bool throws_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Independent impulse oracle: direct recursion on the state.
inline Mat impulse_sample(const StateSpace& g, Index k) {
  if (k == 0) return g.D;
  Mat x = g.B;
  for (Index i = 1; i < k; ++i) x = g.A * x;
  return g.C * x;
}

using CMat = Eigen::MatrixXcd;

// Transfer matrix at z, straight from the definition.
inline CMat tf(const StateSpace& g, std::complex<double> z) {
  const Index n = g.nx();
  CMat D = g.D.cast<std::complex<double>>();
  if (n == 0) return D;
  CMat M = z * CMat::Identity(n, n) - g.A.cast<std::complex<double>>();
  return g.C.cast<std::complex<double>>() * M.fullPivLu().solve(g.B.cast<std::complex<double>>()) + D;
}

inline std::complex<double> unit_circle(int i, int n) { return std::polar(1.0, M_PI * (i + 0.5) / n); }

}  // namespace ykmpc::testing
