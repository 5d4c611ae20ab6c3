#pragma once

#include <string>

#include "ykmpc/lina.hpp"

namespace ykmpc {

// minimize 1/2 v'Hv + g'v  subject to  lower <= A v <= upper.
// Infinite bounds are allowed; rows with lower == upper are equalities.
struct QpProblem {
  Mat H;
  Vec g;
  Mat A;
  Vec lower, upper;

  Index n() const { return H.rows(); }
  Index m() const { return A.rows(); }
  void validate() const;
};

enum class QpStatus { Solved, Infeasible, MaxIterations };

const char* to_string(QpStatus s);

struct QpSettings {
  double tol = tol::qp_kkt;
  int max_iter = 20000;
  double admm_tol = 1e-6;  // switch to active-set polishing below this
  double alpha = 1.6;      // over-relaxation
  double sigma = 1e-9;
  int polish_every = 25;
  int infeasible_run = 100;
};

struct QpResult {
  Vec v;
  Vec duals;  // H v + g + A' duals = 0; positive on upper-active rows, negative on lower-active
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  double objective = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double complementarity = 0;
};

struct KktResiduals {
  double primal = 0;
  double dual = 0;
  double complementarity = 0;
};

KktResiduals kkt_residuals(const QpProblem& qp, const Vec& v, const Vec& duals);
double qp_objective(const QpProblem& qp, const Vec& v);

// Pure function: all iteration state is local, so concurrent calls are safe.
QpResult solve(const QpProblem& qp, const QpSettings& settings = {}, const Vec* warm_v = nullptr,
               const Vec* warm_duals = nullptr);

}  // namespace ykmpc
