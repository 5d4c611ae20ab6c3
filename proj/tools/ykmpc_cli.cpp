#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ykmpc/harness.hpp"
#include "ykmpc/serialization.hpp"

namespace fs = std::filesystem;
using namespace ykmpc;

namespace {

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << j.dump(2) << '\n';
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::SynthesisFailed: return 2;
    case ErrorCode::SolverFailed: return 3;
    case ErrorCode::ConfigError:
    case ErrorCode::IoError: return 4;
    default: return 2;
  }
}

std::vector<Mode> pick_modes(const std::string& mode, const json& cfg_json, const Config& cfg) {
  if (mode == "all") return {kAllModes.begin(), kAllModes.end()};
  if (!mode.empty()) return {mode_from_string(mode)};
  if (cfg_json.contains("scenario") && cfg_json["scenario"].contains("mode")) return {cfg.scenario.mode};
  return {kAllModes.begin(), kAllModes.end()};
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, const std::string& mode) {
  const json cj = config_path.empty() ? json::object() : read_json(config_path);
  const Config cfg = config_from_json(cj);
  const auto modes = pick_modes(mode, cj, cfg);
  const Synthesis syn = synthesize(cfg);
  const auto results = run_modes(syn, cfg.scenario, modes);
  fs::create_directories(out_dir);
  std::vector<std::pair<Scenario, Metrics>> rows;
  json files = json::array();
  for (const auto& r : results) {
    Scenario s = cfg.scenario;
    s.mode = r.mode;
    const std::string name = std::string(to_string(r.mode)) + ".csv";
    export_csv(r, (fs::path(out_dir) / name).string());
    files.push_back(name);
    rows.emplace_back(s, compute_metrics(r, s));
    const auto& m = rows.back().second;
    std::cout << to_string(r.mode) << ": max u " << m.max_u << " V, violations " << m.violations << '\n';
  }
  compare_report(rows, (fs::path(out_dir) / "metrics.json").string());
  write_json({{"config", to_json(cfg)}, {"files", files}, {"disturbance_dc_gain", to_json(syn.Gd_dc)}},
             (fs::path(out_dir) / "run.json").string());
  return 0;
}

int cmd_qsynth(const std::string& config_path, const std::string& out) {
  const Config cfg = config_path.empty() ? Config{} : load_config(config_path);
  const Synthesis syn = synthesize(cfg);
  const double cost_q = weighted_h2_cost(syn.qproblem, syn.q.realized);
  const double cost_0 = weighted_h2_cost(syn.qproblem, StateSpace::zero(syn.q.realized.ny(), syn.q.realized.nu()));
  json j = to_json(syn.q);
  j["Nq"] = cfg.qdesign.Nq;
  j["L"] = cfg.qdesign.L;
  j["cost"] = cost_q;
  j["cost_q0"] = cost_0;
  if (out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json(j, out);
  std::cout << "weighted H2 cost " << cost_q << " (Q = 0: " << cost_0 << ")\n";
  return 0;
}

int cmd_bezout(const std::string& config_path) {
  const Config cfg = config_path.empty() ? Config{} : load_config(config_path);
  const Synthesis syn = synthesize(cfg);
  const double res = verify_bezout(syn.factors, 200);
  std::cout << json{{"bezout_residual", res}, {"samples", 200}, {"ok", res <= 1e-7}}.dump(2) << '\n';
  return res <= 1e-7 ? 0 : 2;
}

int cmd_gains(const std::string& config_path) {
  const Config cfg = config_path.empty() ? Config{} : load_config(config_path);
  const Synthesis syn = synthesize(cfg);
  json j = to_json(syn.gains);
  j["Kff"] = to_json(syn.Kff);
  j["Kfx"] = to_json(syn.kalman.Kfx);
  j["spectral_radius_A"] = spectral_radius(syn.model.A);
  j["spectral_radius_closed_loop"] = spectral_radius(Mat(syn.model.A + syn.model.B * syn.gains.Lx));
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out) {
  const json run = read_json((fs::path(in_dir) / "run.json").string());
  const Config cfg = config_from_json(run.at("config"));
  const Mat Gd = matrix_from_json(run.at("disturbance_dc_gain"));
  std::vector<std::pair<Scenario, Metrics>> rows;
  for (const auto& f : run.at("files")) {
    SimResult r = import_csv((fs::path(in_dir) / f.get<std::string>()).string());
    r.disturbance_dc_gain = Gd;
    r.u_limit = cfg.scenario.u_limit;
    Scenario s = cfg.scenario;
    s.mode = r.mode;
    rows.emplace_back(s, compute_metrics(r, s));
  }
  compare_report(rows, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Youla-Kucera / MPC four-tank toolkit"};
  app.require_subcommand(1);
  std::string config, out, in, mode;

  auto* sim = app.add_subcommand("simulate", "run scenarios on the nonlinear plant and export CSV");
  sim->add_option("--config", config, "config JSON");
  sim->add_option("--out", out, "output directory")->required();
  sim->add_option("--mode", mode, "mode name or 'all'");

  auto* qs = app.add_subcommand("qsynth", "synthesize the FIR Youla parameter");
  qs->add_option("--config", config, "config JSON");
  qs->add_option("--out", out, "output JSON");

  auto* bz = app.add_subcommand("bezout-check", "double Bezout residual of the factorization");
  bz->add_option("--config", config, "config JSON");

  auto* gn = app.add_subcommand("gains", "print MPC, feedforward and filter gains");
  gn->add_option("--config", config, "config JSON");

  auto* rp = app.add_subcommand("report", "metrics summary from a simulate output directory");
  rp->add_option("--in", in, "simulate output directory")->required();
  rp->add_option("--out", out, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  }

  try {
    if (*sim) return cmd_simulate(config, out, mode);
    if (*qs) return cmd_qsynth(config, out);
    if (*bz) return cmd_bezout(config);
    if (*gn) return cmd_gains(config);
    if (*rp) return cmd_report(in, out);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
