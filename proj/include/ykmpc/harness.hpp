#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ykmpc/estimation.hpp"
#include "ykmpc/fourtank.hpp"
#include "ykmpc/mpc.hpp"
#include "ykmpc/qdesign.hpp"
#include "ykmpc/youla.hpp"

namespace ykmpc {

enum class Mode { RefControl, FfmpcConstrained, FfmpcUnconstrained, StandardMpc, AugmentedMpc };

inline constexpr std::array<Mode, 5> kAllModes{Mode::RefControl, Mode::FfmpcConstrained, Mode::FfmpcUnconstrained,
                                               Mode::StandardMpc, Mode::AugmentedMpc};

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);
bool is_yk_mode(Mode m);

enum class EventKind { Reference, Disturbance };

struct Event {
  int time = 0;     // samples
  int channel = 0;  // zero-based
  EventKind kind = EventKind::Reference;
  double magnitude = 0;
};

struct Scenario {
  Mode mode = Mode::RefControl;
  int duration = 60;
  std::vector<Event> events;
  std::optional<double> u_limit = 10.0;  // absolute upper pump voltage; lower limit is 0 V

  void validate() const;
};

// r1 at t=3, r2 at t=17 (0.5 output units), d1 at t=31, d2 at t=45 (0.5 V); 60 samples; 10 V limit.
Scenario default_scenario(Mode mode = Mode::RefControl);
Scenario scaled_references(Scenario s, double factor);

struct KalmanSettings {
  double Rn_scale = 0.01;
  double Qd_scale = 1.0;  // disturbance random-walk intensity of the augmented filter
};

struct QDesignSettings {
  int Nq = 40;
  int L = 400;
  double pole = 0.95;
  double gain = 0.05;
};

struct Config {
  FourTankParams plant;
  MpcConfig mpc = MpcConfig::defaults(2, 2);
  KalmanSettings kalman;
  QDesignSettings qdesign;
  Scenario scenario = default_scenario();
  int substeps = 10;
  double Ts = 1.0;
};

// Everything the five modes share, built once per configuration.
struct Synthesis {
  Config config;
  DiscreteModel model;
  StateSpace plant;
  CondensedQp qp;
  MpcGains gains;
  Mat Phi_d;
  KalmanDesign kalman;
  AugmentedModel aug;
  KalmanDesign aug_kalman;
  StateSpace Kn, Gn, Gd;
  CoprimeFactors factors;
  YkBlocks blocks;
  Mat Kff;
  QDesignProblem qproblem;
  FirQ q;
  StateSpace controller;     // [r; y] -> u with the designed Q
  StateSpace controller_q0;  // same with Q = 0
  Mat Gdc;    // plant DC gain u -> y
  Mat Gd_dc;  // disturbance DC gain d -> y
};

// Wraps any failure as SynthesisFailed.
Synthesis synthesize(const Config& cfg);

struct SimResult {
  Mode mode = Mode::RefControl;
  std::vector<double> t;
  Mat y, y_abs, r, u, d, h;  // one row per sample; u in V (absolute), y in output units (deviation)
  Mat xhat, dhat;            // estimator traces where the mode has them
  std::vector<std::string> qp_status;
  Mat disturbance_dc_gain;
  std::optional<double> u_limit;
};

SimResult run_scenario(const Synthesis& syn, const Scenario& s, bool with_q = true);

// Independent jobs, run concurrently.
std::vector<SimResult> run_modes(const Synthesis& syn, const Scenario& base, const std::vector<Mode>& modes);

struct EventMetrics {
  Event event;
  int window_end = 0;  // exclusive
  Vec steady_state_error;
  double peak_deviation = 0;
  double overshoot = 0;  // fraction of the step, reference events only
  int settling_time = 0;
};

struct Metrics {
  Mode mode = Mode::RefControl;
  std::vector<EventMetrics> events;
  double max_abs_u = 0;
  double max_u = 0;
  int violations = 0;
};

Metrics compute_metrics(const SimResult& res, const Scenario& s);

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"t",  "y1", "y2", "r1", "r2", "u1", "u2",
                                             "d1", "d2", "h1", "h2", "h3", "h4", "mode"};
  return cols;
}

void export_csv(const SimResult& res, const std::string& path);
SimResult import_csv(const std::string& path);
void compare_report(const std::vector<std::pair<Scenario, Metrics>>& rows, const std::string& path);

struct MismatchStudy {
  DualS dual;
  double s_h2 = 0;
  SimResult run;
  Vec steady_state_error;
};

// Plant relinearized at level_scale * h0: dual parameter S, its validation, and a nonlinear run of the
// YK loop driven to the shifted operating point with a d1 step halfway.
MismatchStudy mismatch_study(const Synthesis& syn, double level_scale = 1.1, int duration = 400);

}  // namespace ykmpc
