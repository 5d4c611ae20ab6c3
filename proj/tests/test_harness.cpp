#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "support.hpp"
#include "ykmpc/harness.hpp"

using namespace ykmpc;
using ykmpc::testing::max_abs;
using ykmpc::testing::throws_code;
namespace fs = std::filesystem;

namespace {

const Synthesis& syn() {
  static const Synthesis s = synthesize(Config{});
  return s;
}

const SimResult& default_run(Mode m) {
  static std::map<Mode, SimResult> cache = [] {
    std::map<Mode, SimResult> out;
    const auto runs = run_modes(syn(), default_scenario(), {kAllModes.begin(), kAllModes.end()});
    for (const auto& r : runs) out.emplace(r.mode, r);
    return out;
  }();
  return cache.at(m);
}

const EventMetrics& event(const Metrics& m, int time) {
  for (const auto& e : m.events)
    if (e.event.time == time) return e;
  throw std::runtime_error("no event at that time");
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "ykmpc_harness_test";
  fs::create_directories(d);
  return d / name;
}

SimResult blank(int T) {
  SimResult r;
  for (int k = 0; k < T; ++k) r.t.push_back(k);
  r.y = r.r = r.u = r.d = Mat::Zero(T, 2);
  r.y_abs = Mat::Zero(T, 2);
  r.h = Mat::Zero(T, 4);
  return r;
}

}  // namespace

TEST(Scenario, Defaults) {
  const Scenario s = default_scenario();
  EXPECT_EQ(s.duration, 60);
  ASSERT_TRUE(s.u_limit.has_value());
  EXPECT_EQ(*s.u_limit, 10.0);
  ASSERT_EQ(s.events.size(), 4u);
  const int times[] = {3, 17, 31, 45};
  const int channels[] = {0, 1, 0, 1};
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s.events[i].time, times[i]);
    EXPECT_EQ(s.events[i].channel, channels[i]);
    EXPECT_EQ(s.events[i].kind, i < 2 ? EventKind::Reference : EventKind::Disturbance);
    EXPECT_GT(s.events[i].magnitude, 0);
  }
}

TEST(Scenario, ScaledReferencesOnlyTouchReferences) {
  const Scenario s = scaled_references(default_scenario(), 5);
  EXPECT_EQ(s.events[0].magnitude, 5 * default_scenario().events[0].magnitude);
  EXPECT_EQ(s.events[2].magnitude, default_scenario().events[2].magnitude);
}

TEST(Scenario, Validation) {
  Scenario s = default_scenario();
  s.events.push_back({61, 0, EventKind::Reference, 1});
  EXPECT_TRUE(throws_code(ErrorCode::ConfigError, [&] { s.validate(); }));
  s = default_scenario();
  s.events[0].magnitude = NAN;
  EXPECT_TRUE(throws_code(ErrorCode::ConfigError, [&] { s.validate(); }));
  s = default_scenario();
  s.events[0].channel = 2;
  EXPECT_TRUE(throws_code(ErrorCode::ConfigError, [&] { s.validate(); }));
  s = default_scenario();
  s.u_limit = -1.0;
  EXPECT_TRUE(throws_code(ErrorCode::ConfigError, [&] { s.validate(); }));
}

TEST(Scenario, ModeNames) {
  for (Mode m : kAllModes) EXPECT_EQ(mode_from_string(to_string(m)), m);
  EXPECT_STREQ(to_string(Mode::FfmpcConstrained), "ffmpc_constrained");
  EXPECT_TRUE(throws_code(ErrorCode::ConfigError, [] { mode_from_string("pid"); }));
  EXPECT_TRUE(is_yk_mode(Mode::RefControl));
  EXPECT_FALSE(is_yk_mode(Mode::AugmentedMpc));
}

TEST(Synthesis, ErrorsAreClassified) {
  Config c;
  c.substeps = 0;
  EXPECT_TRUE(throws_code(ErrorCode::ConfigError, [&] { synthesize(c); }));
  c = Config{};
  c.mpc.Wz.setZero();
  c.mpc.Wu.setZero();
  c.mpc.Wdu.setZero();
  EXPECT_TRUE(throws_code(ErrorCode::SynthesisFailed, [&] { synthesize(c); }));
}

TEST(Metrics, ZeroResultGivesZeroMetrics) {
  SimResult r = blank(61);
  r.disturbance_dc_gain = Mat::Identity(2, 2);
  const Metrics m = compute_metrics(r, default_scenario());
  ASSERT_EQ(m.events.size(), 4u);
  for (const auto& e : m.events) {
    EXPECT_EQ(e.steady_state_error.cwiseAbs().maxCoeff(), 0);
    EXPECT_EQ(e.settling_time, 0);
    EXPECT_EQ(e.overshoot, 0);
    EXPECT_EQ(e.peak_deviation, 0);
  }
  EXPECT_EQ(m.max_abs_u, 0);
  EXPECT_EQ(m.violations, 0);
}

TEST(Metrics, FirstOrderSettlingTime) {
  for (double a : {0.6, 0.8, 0.9, 0.95}) {
    const int T = 400;
    SimResult r = blank(T + 1);
    Scenario s;
    s.duration = T;
    s.u_limit.reset();
    s.events = {{10, 0, EventKind::Reference, 1.0}};
    for (int k = 10; k <= T; ++k) {
      r.r(k, 0) = 1.0;
      r.y(k, 0) = 1.0 - std::pow(a, k - 10);
    }
    const Metrics m = compute_metrics(r, s);
    const double tau = -1.0 / std::log(a);
    EXPECT_NEAR(m.events[0].settling_time, 4 * tau, 1.0) << "pole " << a;
    EXPECT_NEAR(m.events[0].overshoot, 0, 1e-15);
  }
}

TEST(Metrics, OvershootAndViolations) {
  SimResult r = blank(21);
  r.u_limit = 10.0;
  Scenario s;
  s.duration = 20;
  s.events = {{0, 1, EventKind::Reference, 2.0}};
  r.r.col(1).setConstant(2.0);
  r.y.col(1).setConstant(2.0);
  r.y(5, 1) = 2.5;
  r.u(3, 0) = 10.5;
  r.u(4, 1) = -0.2;
  const Metrics m = compute_metrics(r, s);
  EXPECT_NEAR(m.events[0].overshoot, 0.25, 1e-15);
  EXPECT_EQ(m.violations, 2);
  EXPECT_EQ(m.max_u, 10.5);
}

TEST(Runs, SeriesShapes) {
  const SimResult& r = default_run(Mode::RefControl);
  EXPECT_EQ(r.t.size(), 61u);
  EXPECT_EQ(r.y.rows(), 61);
  EXPECT_EQ(r.u.rows(), 61);
  EXPECT_EQ(r.h.rows(), 61);
  EXPECT_EQ(r.h.cols(), 4);
}

TEST(Runs, ConstrainedModeRespectsLimit) {
  const Scenario s = default_scenario(Mode::FfmpcConstrained);
  const Metrics m = compute_metrics(default_run(Mode::FfmpcConstrained), s);
  EXPECT_LE(m.max_u, 10 + 1e-6);
  EXPECT_EQ(m.violations, 0);
  const Scenario big = scaled_references(s, 5);
  const Metrics mb = compute_metrics(run_scenario(syn(), big), big);
  EXPECT_LE(mb.max_u, 10 + 1e-6);
  EXPECT_EQ(mb.violations, 0);
}

TEST(Runs, SaturationAtFiveTimesReference) {
  Scenario s = scaled_references(default_scenario(Mode::FfmpcUnconstrained), 5);
  const SimResult un = run_scenario(syn(), s);
  s.mode = Mode::FfmpcConstrained;
  const SimResult con = run_scenario(syn(), s);
  const Metrics mu = compute_metrics(un, s), mc = compute_metrics(con, s);
  EXPECT_GT(mu.max_u, 10.0);
  EXPECT_LE(mc.max_u, 10.0 + 1e-6);
  EXPECT_GT(mu.max_abs_u, mc.max_abs_u);
}

TEST(Runs, DisturbanceRejectionRanking) {
  const Scenario s = default_scenario();
  auto metrics = [&](Mode m) { return compute_metrics(default_run(m), s); };
  const Metrics std_m = metrics(Mode::StandardMpc), aug = metrics(Mode::AugmentedMpc);
  for (int t : {31, 45}) {
    EXPECT_GT(event(std_m, t).steady_state_error.cwiseAbs().maxCoeff(), 0.05) << "t " << t;
    EXPECT_LE(event(aug, t).steady_state_error.cwiseAbs().maxCoeff(), 1e-2) << "t " << t;
  }
  for (Mode m : {Mode::RefControl, Mode::FfmpcConstrained, Mode::FfmpcUnconstrained}) {
    const Metrics yk = metrics(m);
    for (int t : {31, 45}) {
      EXPECT_LE(event(yk, t).steady_state_error.cwiseAbs().maxCoeff(), 1e-2) << to_string(m) << " t " << t;
      EXPECT_LT(event(yk, t).steady_state_error.cwiseAbs().maxCoeff(),
                event(std_m, t).steady_state_error.cwiseAbs().maxCoeff());
    }
    EXPECT_LT(event(yk, 31).settling_time, event(aug, 31).settling_time) << to_string(m);
    EXPECT_LE((default_run(m).y.row(60) - default_run(m).r.row(60)).cwiseAbs().maxCoeff(), 1e-2);
  }
}

TEST(Runs, YoulaParameterImprovesRejection) {
  const Scenario s = default_scenario();
  const Metrics with_q = compute_metrics(default_run(Mode::RefControl), s);
  const Metrics no_q = compute_metrics(run_scenario(syn(), s, false), s);
  EXPECT_LT(event(with_q, 31).steady_state_error.cwiseAbs().maxCoeff(),
            event(no_q, 31).steady_state_error.cwiseAbs().maxCoeff());
}

TEST(Runs, ParallelMatchesSequential) {
  const Scenario s = default_scenario();
  for (Mode m : kAllModes) {
    Scenario one = s;
    one.mode = m;
    const SimResult seq = run_scenario(syn(), one);
    EXPECT_EQ(max_abs(seq.u - default_run(m).u), 0) << to_string(m);
    EXPECT_EQ(max_abs(seq.y - default_run(m).y), 0) << to_string(m);
  }
}

TEST(Csv, HeaderRowsAndRoundTrip) {
  const SimResult& r = default_run(Mode::AugmentedMpc);
  const fs::path p = scratch("aug.csv");
  export_csv(r, p.string());
  std::ifstream f(p);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "t,y1,y2,r1,r2,u1,u2,d1,d2,h1,h2,h3,h4,mode");
  int rows = 0;
  for (std::string line; std::getline(f, line);) ++rows;
  EXPECT_EQ(rows, 61);
  const SimResult back = import_csv(p.string());
  EXPECT_EQ(back.mode, Mode::AugmentedMpc);
  EXPECT_LE(max_abs(back.y - r.y), 1e-12);
  EXPECT_LE(max_abs(back.u - r.u), 1e-12);
  EXPECT_LE(max_abs(back.h - r.h), 1e-12);
  EXPECT_LE(max_abs(back.r - r.r), 1e-12);
  EXPECT_LE(max_abs(back.d - r.d), 1e-12);
}

TEST(Csv, DeterministicOutput) {
  const Scenario s = default_scenario(Mode::FfmpcConstrained);
  const fs::path a = scratch("det_a.csv"), b = scratch("det_b.csv");
  export_csv(run_scenario(synthesize(Config{}), s), a.string());
  export_csv(run_scenario(synthesize(Config{}), s), b.string());
  const std::string sa = slurp(a), sb = slurp(b);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
}

TEST(Csv, BadInput) {
  const fs::path p = scratch("bad.csv");
  {
    std::ofstream f(p);
    f << "t,y1\n0,1\n";
  }
  EXPECT_THROW(import_csv(p.string()), Error);
  EXPECT_TRUE(throws_code(ErrorCode::IoError, [] { import_csv("/nonexistent/dir/x.csv"); }));
  EXPECT_TRUE(throws_code(ErrorCode::IoError,
                          [] { export_csv(default_run(Mode::RefControl), "/nonexistent/dir/x.csv"); }));
}

TEST(Report, WritesOneEntryPerRun) {
  std::vector<std::pair<Scenario, Metrics>> rows;
  for (Mode m : kAllModes) {
    const Scenario s = default_scenario(m);
    rows.emplace_back(s, compute_metrics(default_run(m), s));
  }
  const fs::path p = scratch("report.json");
  compare_report(rows, p.string());
  const std::string text = slurp(p);
  for (Mode m : kAllModes) EXPECT_NE(text.find(to_string(m)), std::string::npos);
}

TEST(Mismatch, DualParameterAndRejection) {
  const MismatchStudy st = mismatch_study(syn());
  EXPECT_LE(st.dual.validation_error, 1e-5);
  EXPECT_TRUE(is_stable(st.dual.S));
  EXPECT_GT(st.s_h2, 0);
  EXPECT_LE(st.steady_state_error.cwiseAbs().maxCoeff(), 1e-2);
}
