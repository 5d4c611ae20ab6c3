#include "ykmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ykmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBig = 1e19;

bool finite_bound(double b) { return std::abs(b) < kBig; }

enum class Active { None, Lower, Upper, Equality };

struct PolishOutcome {
  bool ok = false;
  Vec v, duals;
};

// Equality-constrained KKT solve on a fixed working set, refined by adding the most violated
// constraint or dropping the worst wrong-signed multiplier until the KKT conditions hold.
PolishOutcome polish(const QpProblem& qp, std::vector<Active> set, double tol, int max_rounds) {
  const Index n = qp.n(), m = qp.m();
  PolishOutcome out;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<Index> rows;
    for (Index i = 0; i < m; ++i)
      if (set[i] != Active::None) rows.push_back(i);
    const Index k = static_cast<Index>(rows.size());
    Mat K = Mat::Zero(n + k, n + k);
    Vec rhs(n + k);
    K.topLeftCorner(n, n) = qp.H;
    rhs.head(n) = -qp.g;
    for (Index j = 0; j < k; ++j) {
      const Index i = rows[j];
      K.block(n + j, 0, 1, n) = qp.A.row(i);
      K.block(0, n + j, n, 1) = qp.A.row(i).transpose();
      rhs(n + j) = (set[i] == Active::Lower) ? qp.lower(i) : qp.upper(i);
    }
    Vec sol;
    if (k == 0) {
      sol = qp.H.llt().solve(rhs);
    } else {
      Eigen::CompleteOrthogonalDecomposition<Mat> cod;
      cod.setThreshold(1e-13);
      cod.compute(K);
      sol = cod.solve(rhs);
    }
    Vec v = sol.head(n);
    Vec y = Vec::Zero(m);
    for (Index j = 0; j < k; ++j) y(rows[j]) = sol(n + j);

    const Vec Av = qp.A * v;
    double worst_viol = 0, worst_sign = 0;
    Index viol_i = -1, sign_i = -1;
    bool viol_upper = false;
    for (Index i = 0; i < m; ++i) {
      if (set[i] == Active::None) {
        const double up = Av(i) - qp.upper(i), lo = qp.lower(i) - Av(i);
        if (up > worst_viol) {
          worst_viol = up;
          viol_i = i;
          viol_upper = true;
        }
        if (lo > worst_viol) {
          worst_viol = lo;
          viol_i = i;
          viol_upper = false;
        }
      } else if (set[i] == Active::Lower && y(i) > worst_sign) {
        worst_sign = y(i);
        sign_i = i;
      } else if (set[i] == Active::Upper && -y(i) > worst_sign) {
        worst_sign = -y(i);
        sign_i = i;
      }
    }
    if (worst_viol <= tol && worst_sign <= tol) {
      // Multipliers with a negligible wrong sign are clipped to zero.
      for (Index i = 0; i < m; ++i) {
        if (set[i] == Active::Lower) y(i) = std::min(y(i), 0.0);
        if (set[i] == Active::Upper) y(i) = std::max(y(i), 0.0);
      }
      const KktResiduals r = kkt_residuals(qp, v, y);
      if (r.primal <= tol && r.dual <= tol && r.complementarity <= tol) {
        out.ok = true;
        out.v = v;
        out.duals = y;
      }
      return out;
    }
    if (sign_i >= 0 && worst_sign >= worst_viol)
      set[sign_i] = Active::None;
    else
      set[viol_i] = viol_upper ? Active::Upper : Active::Lower;
  }
  return out;
}

}  // namespace

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Solved: return "solved";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

void QpProblem::validate() const {
  const Index nv = H.rows();
  if (H.cols() != nv || g.size() != nv || A.cols() != nv || lower.size() != A.rows() || upper.size() != A.rows())
    throw Error(ErrorCode::InvalidArgument, "QP dimensions inconsistent");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + H.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::InvalidArgument, "QP Hessian not symmetric");
  for (Index i = 0; i < A.rows(); ++i)
    if (lower(i) > upper(i)) throw Error(ErrorCode::InvalidArgument, "QP bounds not ordered");
}

double qp_objective(const QpProblem& qp, const Vec& v) { return 0.5 * v.dot(qp.H * v) + qp.g.dot(v); }

KktResiduals kkt_residuals(const QpProblem& qp, const Vec& v, const Vec& y) {
  KktResiduals r;
  const Vec Av = qp.A * v;
  for (Index i = 0; i < qp.m(); ++i) {
    r.primal = std::max({r.primal, Av(i) - qp.upper(i), qp.lower(i) - Av(i)});
    double slack = 0;
    if (y(i) > 0) slack = finite_bound(qp.upper(i)) ? std::abs(qp.upper(i) - Av(i)) : kInf;
    if (y(i) < 0) slack = finite_bound(qp.lower(i)) ? std::abs(Av(i) - qp.lower(i)) : kInf;
    if (y(i) != 0) r.complementarity = std::max(r.complementarity, std::abs(y(i)) * slack);
  }
  const Vec stat = qp.H * v + qp.g + qp.A.transpose() * y;
  r.dual = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

QpResult solve(const QpProblem& qp, const QpSettings& s, const Vec* warm_v, const Vec* warm_duals) {
  qp.validate();
  const Index n = qp.n(), m = qp.m();
  QpResult res;
  if (m == 0) {
    Eigen::LLT<Mat> llt(qp.H);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "QP Hessian not positive definite");
    res.v = llt.solve(-qp.g);
    res.duals = Vec(0);
    res.status = QpStatus::Solved;
  } else {
    Vec lo = qp.lower, hi = qp.upper;
    for (Index i = 0; i < m; ++i) {
      if (!finite_bound(lo(i))) lo(i) = -kInf;
      if (!finite_bound(hi(i))) hi(i) = kInf;
    }
    // Step size from the relative scale of H and the constraint rows.
    const double h_scale = std::max(qp.H.trace() / static_cast<double>(n), 1e-12);
    const double a_scale = std::max(qp.A.squaredNorm() / static_cast<double>(m), 1e-12);
    const double rho0 = h_scale / a_scale;
    Vec rho(m);
    for (Index i = 0; i < m; ++i) rho(i) = (lo(i) == hi(i)) ? 1e3 * rho0 : rho0;

    Mat K = qp.H + qp.A.transpose() * rho.asDiagonal() * qp.A;
    K.diagonal().array() += s.sigma;
    Eigen::LLT<Mat> llt(K);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "QP Hessian not positive definite");

    Vec x = (warm_v && warm_v->size() == n) ? *warm_v : Vec::Zero(n);
    Vec y = (warm_duals && warm_duals->size() == m) ? *warm_duals : Vec::Zero(m);
    Vec z = (qp.A * x).cwiseMax(lo).cwiseMin(hi);
    int infeasible_count = 0;
    const double eps_inf = 1e-9;

    for (int it = 1; it <= s.max_iter; ++it) {
      const Vec rhs = s.sigma * x - qp.g + qp.A.transpose() * (rho.cwiseProduct(z) - y);
      const Vec xt = llt.solve(rhs);
      const Vec zt = qp.A * xt;
      x = s.alpha * xt + (1.0 - s.alpha) * x;
      const Vec zr = s.alpha * zt + (1.0 - s.alpha) * z;
      const Vec z_new = (zr + y.cwiseQuotient(rho)).cwiseMax(lo).cwiseMin(hi);
      const Vec dy = rho.cwiseProduct(zr - z_new);
      y += dy;
      z = z_new;
      res.iterations = it;

      // Primal infeasibility certificate on the dual increment.
      const double dy_norm = dy.cwiseAbs().maxCoeff();
      bool certificate = false;
      if (dy_norm > 1e-12) {
        double support = 0;
        for (Index i = 0; i < m; ++i) {
          if (dy(i) > 0) support += std::isfinite(hi(i)) ? hi(i) * dy(i) : kInf;
          if (dy(i) < 0) support += std::isfinite(lo(i)) ? lo(i) * dy(i) : kInf;
        }
        certificate = (qp.A.transpose() * dy).cwiseAbs().maxCoeff() <= eps_inf * dy_norm &&
                      support < -eps_inf * dy_norm;
      }
      infeasible_count = certificate ? infeasible_count + 1 : 0;
      if (infeasible_count >= s.infeasible_run) {
        res.status = QpStatus::Infeasible;
        res.v = x;
        res.duals = y;
        return res;
      }

      const double r_prim = (qp.A * x - z).cwiseAbs().maxCoeff();
      const double r_dual = (qp.H * x + qp.g + qp.A.transpose() * y).cwiseAbs().maxCoeff();
      const double scale = 1.0 + std::max(qp.g.cwiseAbs().maxCoeff(), (qp.A * x).cwiseAbs().maxCoeff());
      const bool converged = r_prim <= s.admm_tol * scale && r_dual <= s.admm_tol * scale;
      if (converged || it % s.polish_every == 0) {
        std::vector<Active> set(static_cast<size_t>(m), Active::None);
        for (Index i = 0; i < m; ++i) {
          if (lo(i) == hi(i))
            set[i] = Active::Equality;
          else if (z(i) - lo(i) < -y(i) / rho(i))
            set[i] = Active::Lower;
          else if (hi(i) - z(i) < y(i) / rho(i))
            set[i] = Active::Upper;
        }
        PolishOutcome p = polish(qp, set, s.tol, static_cast<int>(2 * m + 10));
        if (p.ok) {
          res.v = p.v;
          res.duals = p.duals;
          res.status = QpStatus::Solved;
          break;
        }
      }
    }
    if (res.status != QpStatus::Solved) {
      res.v = x;
      res.duals = y;
    }
  }
  const KktResiduals r = kkt_residuals(qp, res.v, res.duals);
  res.primal_residual = r.primal;
  res.dual_residual = r.dual;
  res.complementarity = r.complementarity;
  res.objective = qp_objective(qp, res.v);
  return res;
}

}  // namespace ykmpc
