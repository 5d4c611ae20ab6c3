#include "ykmpc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "ykmpc/serialization.hpp"

namespace ykmpc {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::RefControl: return "ref_control";
    case Mode::FfmpcConstrained: return "ffmpc_constrained";
    case Mode::FfmpcUnconstrained: return "ffmpc_unconstrained";
    case Mode::StandardMpc: return "standard_mpc";
    case Mode::AugmentedMpc: return "augmented_mpc";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  for (Mode m : kAllModes)
    if (s == to_string(m)) return m;
  throw Error(ErrorCode::ConfigError, "unknown mode: " + s);
}

bool is_yk_mode(Mode m) {
  return m == Mode::RefControl || m == Mode::FfmpcConstrained || m == Mode::FfmpcUnconstrained;
}

void Scenario::validate() const {
  if (duration <= 0) throw Error(ErrorCode::ConfigError, "scenario duration must be positive");
  if (u_limit && !(std::isfinite(*u_limit) && *u_limit > 0))
    throw Error(ErrorCode::ConfigError, "u_limit must be finite and positive");
  for (const auto& e : events) {
    if (e.time < 0 || e.time > duration) throw Error(ErrorCode::ConfigError, "event time outside the run");
    if (e.channel < 0 || e.channel > 1) throw Error(ErrorCode::ConfigError, "event channel must be 1 or 2");
    if (!std::isfinite(e.magnitude)) throw Error(ErrorCode::ConfigError, "event magnitude not finite");
  }
}

Scenario default_scenario(Mode mode) {
  Scenario s;
  s.mode = mode;
  s.duration = 60;
  s.u_limit = 10.0;
  s.events = {{3, 0, EventKind::Reference, 0.5},
              {17, 1, EventKind::Reference, 0.5},
              {31, 0, EventKind::Disturbance, 0.5},
              {45, 1, EventKind::Disturbance, 0.5}};
  return s;
}

Scenario scaled_references(Scenario s, double factor) {
  for (auto& e : s.events)
    if (e.kind == EventKind::Reference) e.magnitude *= factor;
  return s;
}

namespace {

Mat dc_map(const Mat& A, const Mat& B, const Mat& C) {
  return C * solve_linear(Mat(Mat::Identity(A.rows(), A.cols()) - A), B);
}

}  // namespace

Synthesis synthesize(const Config& cfg) {
  cfg.plant.validate();
  cfg.scenario.validate();
  if (cfg.substeps < 1) throw Error(ErrorCode::ConfigError, "substeps must be at least 1");
  if (!(cfg.Ts > 0)) throw Error(ErrorCode::ConfigError, "Ts must be positive");
  try {
    Synthesis s;
    s.config = cfg;
    s.model = discrete_model(cfg.plant, cfg.Ts);
    const Mat& A = s.model.A;
    const Mat& B = s.model.B;
    const Mat& C = s.model.C;
    const Mat& E = s.model.E;
    const Index nx = A.rows(), nu = B.cols(), ny = C.rows();
    s.plant = s.model.plant();
    s.qp = build_condensed(s.plant, cfg.mpc);
    s.gains = unconstrained_gains(s.qp);
    s.Phi_d = disturbance_prediction(s.plant, E, cfg.mpc.N);

    s.kalman = stationary_gain(A, C, default_process_noise(E), cfg.kalman.Rn_scale * Mat::Identity(ny, ny));
    s.aug = augment(A, B, C, E);
    s.aug_kalman = stationary_gain(s.aug.Aa, s.aug.Ca, augmented_process_noise(s.aug, cfg.kalman.Qd_scale),
                                   cfg.kalman.Rn_scale * Mat::Identity(ny, ny));

    s.Kn = build_nominal_controller(A, B, C, s.gains.Lx, s.kalman.Kfx, cfg.Ts);
    s.Gn = build_nominal_plant(A, B, C, cfg.Ts);
    Mat CD(ny + nu, nx);
    CD << C, Mat::Zero(nu, nx);
    s.Gd = StateSpace(A, E, CD, Mat::Zero(ny + nu, E.cols()), cfg.Ts);

    s.factors = coprime_factorize(s.Gn, s.Kn, s.gains.Lx, Mat::Zero(s.Kn.nu(), s.Kn.nx()));
    s.Kff = feedforward_gain(A, B, C, s.gains.Lx);
    s.blocks = build_yk_blocks(s.factors, s.Kn, s.Gn, s.Kff, s.Gd);

    const StateSpace P = build_generalized_plant(A, B, C, E, cfg.Ts);
    const StateSpace W = make_lowpass_weight(cfg.qdesign.pole, cfg.qdesign.gain, ny, cfg.Ts);
    s.qproblem = make_qdesign_problem(P, s.blocks.J, s.blocks.J_io, W, cfg.qdesign.Nq, cfg.qdesign.L);
    s.q = synthesize_q_fir(s.qproblem);

    s.controller = close_self_loop(lft_lower(s.blocks.Jaug, s.q.realized), nu);
    const StateSpace Q0 = StateSpace::zero(s.q.realized.ny(), s.q.realized.nu(), cfg.Ts);
    s.controller_q0 = close_self_loop(lft_lower(s.blocks.Jaug, Q0), nu);

    s.Gdc = dc_map(A, B, C);
    s.Gd_dc = dc_map(A, E, C);
    return s;
  } catch (const Error& e) {
    throw Error(ErrorCode::SynthesisFailed, std::string(to_string(e.code())) + ": " + e.what());
  }
}

namespace {

Mat tile_rows(const Vec& v, Index n) {
  return v.replicate(n, 1);
}

// One time step of a discrete system with explicit state.
struct Stepper {
  const StateSpace& sys;
  Vec x;
  explicit Stepper(const StateSpace& g) : sys(g), x(Vec::Zero(g.nx())) {}
  Vec output(const Vec& in) const { return sys.C * x + sys.D * in; }
  void advance(const Vec& in) { x = sys.A * x + sys.B * in; }
};

FfMpcProblem ffmpc_problem(const Synthesis& syn, const std::optional<double>& u_limit) {
  FfMpcBounds b;
  if (u_limit) {
    const Vec u0 = Eigen::Map<const Eigen::Vector2d>(syn.config.plant.u0.data());
    b.u = Bounds{-u0, Vec::Constant(u0.size(), *u_limit) - u0};
  }
  return build_ffmpc(syn.plant, syn.gains.Lx, syn.Kff, syn.config.mpc, b);
}

}  // namespace

SimResult run_scenario(const Synthesis& syn, const Scenario& s, bool with_q) {
  s.validate();
  const auto& p = syn.config.plant;
  const int N = syn.config.mpc.N;
  const Index nu = 2, ny = 2, T = s.duration + 1;
  const Vec u0 = Eigen::Map<const Eigen::Vector2d>(p.u0.data());
  const Mode mode = s.mode;
  const StateSpace& K = with_q ? syn.controller : syn.controller_q0;

  SimResult res;
  res.mode = mode;
  res.u_limit = s.u_limit;
  res.disturbance_dc_gain = syn.Gd_dc;
  res.t.resize(static_cast<size_t>(T));
  res.y = Mat::Zero(T, ny);
  res.y_abs = Mat::Zero(T, ny);
  res.r = Mat::Zero(T, ny);
  res.u = Mat::Zero(T, nu);
  res.d = Mat::Zero(T, nu);
  res.h = Mat::Zero(T, 4);
  const bool has_xhat = mode == Mode::StandardMpc || mode == Mode::AugmentedMpc;
  if (has_xhat) res.xhat = Mat::Zero(T, syn.model.A.rows());
  if (mode == Mode::AugmentedMpc) res.dhat = Mat::Zero(T, syn.aug.nd);
  res.qp_status.assign(static_cast<size_t>(T), "none");

  Levels h = Eigen::Map<const Levels>(p.h0.data());
  Vec r = Vec::Zero(ny), d = Vec::Zero(nu), u_prev = Vec::Zero(nu);

  // YK loop state
  Stepper ctrl(K);
  const Mat Dr = K.D.leftCols(ny), Dy = K.D.rightCols(ny);
  // feedforward MPC state
  std::optional<FfMpcProblem> ff;
  if (mode == Mode::FfmpcConstrained) ff = ffmpc_problem(syn, s.u_limit);
  if (mode == Mode::FfmpcUnconstrained) ff = ffmpc_problem(syn, std::nullopt);
  const Mat Acl = syn.model.A + syn.model.B * syn.gains.Lx;
  const Mat Bcl = syn.model.B * syn.Kff;
  Vec x_ff = Vec::Zero(syn.model.A.rows()), u_nom_prev = Vec::Zero(nu), ff_warm;
  // estimator-based MPC state
  Vec xhat = Vec::Zero(syn.model.A.rows()), xa = Vec::Zero(syn.aug.Aa.rows()), dhat = Vec::Zero(syn.aug.nd);
  QpProblem box;
  Vec mpc_warm;
  if (has_xhat) {
    box.H = syn.qp.H;
    box.A = Mat(0, N * nu);
    box.lower = box.upper = Vec(0);
    if (s.u_limit) {
      box.A = Mat::Identity(N * nu, N * nu);
      box.lower = tile_rows(-u0, N);
      box.upper = tile_rows(Vec::Constant(nu, *s.u_limit) - u0, N);
    }
  }
  const Eigen::PartialPivLU<Mat> Gdc_lu(syn.Gdc);

  for (Index k = 0; k < T; ++k) {
    for (const auto& e : s.events)
      if (e.time == k) (e.kind == EventKind::Reference ? r : d)(e.channel) += e.magnitude;
    const Vec y = p.kc * (h.head(2) - Eigen::Map<const Eigen::Vector2d>(p.h0.data()));
    Vec u(nu);
    try {
      switch (mode) {
        case Mode::RefControl: {
          Vec in(2 * ny);
          in << r, y;
          u = ctrl.output(in);
          ctrl.advance(in);
          break;
        }
        case Mode::FfmpcConstrained:
        case Mode::FfmpcUnconstrained: {
          AppliedMove mv{ctrl.sys.C * ctrl.x + Dy * y, Dr};
          const Vec Zbar = tile(r, N);
          const Vec Ubar = tile(Gdc_lu.solve(r), N);
          const FfMpcSolution sol =
              solve_ffmpc(*ff, x_ff, Zbar, Ubar, u_nom_prev, &mv, ff_warm.size() ? &ff_warm : nullptr);
          u = mv.offset + mv.gain * sol.r;
          Vec in(2 * ny);
          in << sol.r, y;
          ctrl.advance(in);
          x_ff = Acl * x_ff + Bcl * sol.r;
          u_nom_prev = sol.Upred.head(nu);
          ff_warm = sol.Rbar;
          res.qp_status[static_cast<size_t>(k)] = to_string(sol.status);
          break;
        }
        case Mode::StandardMpc:
        case Mode::AugmentedMpc: {
          const Vec Zbar = tile(r, N);
          Vec g;
          if (mode == Mode::StandardMpc) {
            xhat = filter_step(syn.kalman, syn.plant, xhat, u_prev, y);
            g = gradient(syn.qp, xhat, Zbar, tile(Gdc_lu.solve(r), N), u_prev);
          } else {
            const AugmentedEstimate est = augmented_filter_step(syn.aug_kalman, syn.aug, xa, u_prev, y);
            xa = est.xa;
            xhat = est.xhat;
            dhat = est.dhat;
            const Vec Ubar = tile(Gdc_lu.solve(Vec(r - syn.Gd_dc * dhat)), N);
            GradientTerms gt = gradient_terms(syn.qp, xhat, Zbar, Ubar, u_prev);
            gt.g_z = offset_free_gradient(syn.qp, syn.Phi_d, xhat, dhat, Zbar);
            g = gt.g();
            res.dhat.row(k) = dhat.transpose();
          }
          res.xhat.row(k) = xhat.transpose();
          box.g = g;
          const QpResult qr = solve(box, QpSettings{}, mpc_warm.size() ? &mpc_warm : nullptr);
          res.qp_status[static_cast<size_t>(k)] = to_string(qr.status);
          if (qr.status != QpStatus::Solved)
            throw Error(ErrorCode::SolverFailed, std::string("QP ") + to_string(qr.status));
          u = qr.v.head(nu);
          mpc_warm = qr.v;
          break;
        }
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::SolverFailed, "step " + std::to_string(k) + " (" + to_string(mode) + "): " + e.what());
    }
    const Input2 u_abs = u0 + u;
    res.t[static_cast<size_t>(k)] = static_cast<double>(k) * syn.config.Ts;
    res.y.row(k) = y.transpose();
    res.y_abs.row(k) = (p.kc * h.head(2)).transpose();
    res.r.row(k) = r.transpose();
    res.u.row(k) = u_abs.transpose();
    res.d.row(k) = d.transpose();
    res.h.row(k) = h.transpose();
    h = step_rk4(p, h, u_abs, Input2(d), syn.config.Ts, syn.config.substeps);
    u_prev = u;
  }
  return res;
}

std::vector<SimResult> run_modes(const Synthesis& syn, const Scenario& base, const std::vector<Mode>& modes) {
  std::vector<std::future<SimResult>> jobs;
  jobs.reserve(modes.size());
  for (Mode m : modes) {
    Scenario s = base;
    s.mode = m;
    jobs.push_back(std::async(std::launch::async, [&syn, s] { return run_scenario(syn, s); }));
  }
  std::vector<SimResult> out;
  out.reserve(modes.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

Metrics compute_metrics(const SimResult& res, const Scenario& s) {
  Metrics m;
  m.mode = res.mode;
  const Index T = res.y.rows();
  if (res.r.rows() != T || res.u.rows() != T) throw Error(ErrorCode::InvalidArgument, "series lengths differ");
  const Mat e = res.y - res.r;
  for (const auto& ev : s.events) {
    if (ev.time >= T) continue;
    EventMetrics em;
    em.event = ev;
    Index end = T;
    for (const auto& other : s.events)
      if (other.time > ev.time) end = std::min<Index>(end, other.time);
    em.window_end = static_cast<int>(end);
    const Index len = end - ev.time;
    const Index tail = std::min<Index>(3, len);
    em.steady_state_error = e.middleRows(end - tail, tail).colwise().mean().transpose();

    double scale = std::abs(ev.magnitude);
    if (ev.kind == EventKind::Disturbance && res.disturbance_dc_gain.size() > 0)
      scale = (res.disturbance_dc_gain.col(ev.channel) * ev.magnitude).cwiseAbs().maxCoeff();
    const double band = 0.02 * scale;
    int last = -1;
    for (Index i = 0; i < len; ++i) {
      const double dev = (e.row(ev.time + i).transpose() - em.steady_state_error).cwiseAbs().maxCoeff();
      em.peak_deviation = std::max(em.peak_deviation, dev);
      if (dev > band) last = static_cast<int>(i);
    }
    em.settling_time = last + 1;
    if (ev.kind == EventKind::Reference && ev.magnitude != 0) {
      const double sgn = ev.magnitude > 0 ? 1.0 : -1.0;
      double over = 0;
      for (Index i = ev.time; i < end; ++i) over = std::max(over, sgn * e(i, ev.channel));
      em.overshoot = over / std::abs(ev.magnitude);
    }
    m.events.push_back(em);
  }
  if (T > 0) {
    m.max_abs_u = res.u.cwiseAbs().maxCoeff();
    m.max_u = res.u.maxCoeff();
  }
  if (res.u_limit) {
    for (Index i = 0; i < res.u.rows(); ++i)
      for (Index j = 0; j < res.u.cols(); ++j)
        if (res.u(i, j) > *res.u_limit + 1e-6 || res.u(i, j) < -1e-6) ++m.violations;
  }
  return m;
}

void export_csv(const SimResult& res, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  const auto& cols = csv_columns();
  for (size_t i = 0; i < cols.size(); ++i) f << cols[i] << (i + 1 < cols.size() ? "," : "\n");
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    f << buf << ',';
  };
  for (Index k = 0; k < res.y.rows(); ++k) {
    num(res.t[static_cast<size_t>(k)]);
    for (Index j = 0; j < 2; ++j) num(res.y(k, j));
    for (Index j = 0; j < 2; ++j) num(res.r(k, j));
    for (Index j = 0; j < 2; ++j) num(res.u(k, j));
    for (Index j = 0; j < 2; ++j) num(res.d(k, j));
    for (Index j = 0; j < 4; ++j) num(res.h(k, j));
    f << to_string(res.mode) << '\n';
  }
  if (!f) throw Error(ErrorCode::IoError, "write failed: " + path);
}

SimResult import_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::string line;
  std::getline(f, line);
  std::string expected;
  for (const auto& c : csv_columns()) expected += (expected.empty() ? "" : ",") + c;
  if (line != expected) throw Error(ErrorCode::IoError, "unexpected CSV header in " + path);
  std::vector<std::vector<double>> rows;
  std::string mode;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    for (int i = 0; i < 13; ++i) {
      if (!std::getline(ss, cell, ',')) throw Error(ErrorCode::IoError, "short CSV row in " + path);
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::IoError, "bad number in " + path + ": " + cell);
      }
    }
    std::getline(ss, mode);
    rows.push_back(std::move(row));
  }
  SimResult res;
  if (!mode.empty()) res.mode = mode_from_string(mode);
  const Index T = static_cast<Index>(rows.size());
  res.y.resize(T, 2);
  res.r.resize(T, 2);
  res.u.resize(T, 2);
  res.d.resize(T, 2);
  res.h.resize(T, 4);
  for (Index k = 0; k < T; ++k) {
    const auto& v = rows[static_cast<size_t>(k)];
    res.t.push_back(v[0]);
    res.y.row(k) << v[1], v[2];
    res.r.row(k) << v[3], v[4];
    res.u.row(k) << v[5], v[6];
    res.d.row(k) << v[7], v[8];
    res.h.row(k) << v[9], v[10], v[11], v[12];
  }
  res.qp_status.assign(static_cast<size_t>(T), "none");
  return res;
}

void compare_report(const std::vector<std::pair<Scenario, Metrics>>& rows, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [s, m] : rows) j.push_back({{"scenario", to_json(s)}, {"metrics", to_json(m)}});
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << nlohmann::json{{"runs", j}}.dump(2) << '\n';
  if (!f) throw Error(ErrorCode::IoError, "write failed: " + path);
}

MismatchStudy mismatch_study(const Synthesis& syn, double level_scale, int duration) {
  MismatchStudy out;
  FourTankParams act = syn.config.plant;
  for (double& h : act.h0) h *= level_scale;
  const DiscreteModel m = discrete_model(act, syn.config.Ts);
  const StateSpace G_act = build_nominal_plant(m.A, m.B, m.C, syn.config.Ts);
  out.dual = dual_s_from_actual(syn.factors, G_act, syn.Kn);
  out.s_h2 = h2_norm(out.dual.S);

  const auto& p = syn.config.plant;
  Scenario s;
  s.mode = Mode::RefControl;
  s.duration = duration;
  s.u_limit.reset();
  for (int i = 0; i < 2; ++i)
    s.events.push_back({0, i, EventKind::Reference, p.kc * (level_scale - 1.0) * p.h0[static_cast<size_t>(i)]});
  s.events.push_back({duration / 2, 0, EventKind::Disturbance, 0.5});
  out.run = run_scenario(syn, s);
  out.steady_state_error = (out.run.y - out.run.r).bottomRows(3).colwise().mean().transpose();
  return out;
}

}  // namespace ykmpc
