#include "ykmpc/serialization.hpp"

#include <algorithm>
#include <fstream>

namespace ykmpc {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

double number(const json& j, const char* key) {
  if (!j.is_number()) bad(std::string("expected a number for ") + key);
  return j.get<double>();
}

json io_to_json(const IoPartition& io) {
  auto groups = [](const std::vector<ChannelGroup>& gs) {
    json a = json::array();
    for (const auto& g : gs) a.push_back({{"name", g.name}, {"start", g.start}, {"size", g.size}});
    return a;
  };
  return {{"inputs", groups(io.inputs)}, {"outputs", groups(io.outputs)}};
}

}  // namespace

json to_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array()) bad("matrix must be an array of rows");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  if (!j[0].is_array()) bad("matrix rows must be arrays");
  const Index cols = static_cast<Index>(j[0].size());
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) bad("ragged matrix");
    for (Index k = 0; k < cols; ++k) m(i, k) = number(row[static_cast<size_t>(k)], "matrix entry");
  }
  return m;
}

Mat weight_from_json(const json& j, Index n) {
  if (j.is_number()) return j.get<double>() * Mat::Identity(n, n);
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    if (static_cast<Index>(j.size()) != n) bad("weight diagonal has the wrong length");
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = number(j[static_cast<size_t>(i)], "weight");
    return v.asDiagonal();
  }
  Mat m = matrix_from_json(j);
  if (m.rows() != n || m.cols() != n) bad("weight matrix has the wrong size");
  return m;
}

json to_json(const StateSpace& g) {
  return {{"A", to_json(g.A)}, {"B", to_json(g.B)}, {"C", to_json(g.C)}, {"D", to_json(g.D)}, {"Ts", g.Ts},
          {"nx", g.nx()}, {"nu", g.nu()}, {"ny", g.ny()}};
}

StateSpace state_space_from_json(const json& j) {
  try {
    Mat A = matrix_from_json(j.at("A")), B = matrix_from_json(j.at("B"));
    Mat C = matrix_from_json(j.at("C")), D = matrix_from_json(j.at("D"));
    const double Ts = j.value("Ts", 1.0);
    // empty arrays lose their inner dimension
    const Index nx = A.rows();
    const Index nu = j.contains("nu") ? j["nu"].get<Index>() : (D.size() ? D.cols() : B.cols());
    const Index ny = j.contains("ny") ? j["ny"].get<Index>() : (D.size() ? D.rows() : C.rows());
    if (A.size() == 0) A.resize(nx, nx);
    if (B.size() == 0) B.resize(nx, nu);
    if (C.size() == 0) C.resize(ny, nx);
    if (D.size() == 0) D = Mat::Zero(ny, nu);
    return StateSpace(A, B, C, D, Ts);
  } catch (const json::exception& e) {
    bad(std::string("state space: ") + e.what());
  } catch (const Error& e) {
    bad(std::string("state space: ") + e.what());
  }
}

json to_json(const CoprimeFactors& f) {
  return {{"M", to_json(f.M)},   {"N", to_json(f.N)},   {"U", to_json(f.U)},   {"V", to_json(f.V)},
          {"Mt", to_json(f.Mt)}, {"Nt", to_json(f.Nt)}, {"Ut", to_json(f.Ut)}, {"Vt", to_json(f.Vt)},
          {"F", to_json(f.F)},   {"Fc", to_json(f.Fc)}};
}

json to_json(const YkBlocks& b) {
  return {{"J", to_json(b.J)},         {"JG", to_json(b.JG)},         {"Jaug", to_json(b.Jaug)},
          {"JGaug", to_json(b.JGaug)}, {"Uf", to_json(b.Uf)},         {"Nd", to_json(b.Nd)},
          {"J_io", io_to_json(b.J_io)}, {"JG_io", io_to_json(b.JG_io)}, {"Jaug_io", io_to_json(b.Jaug_io)},
          {"JGaug_io", io_to_json(b.JGaug_io)}};
}

json to_json(const FirQ& q) {
  json taps = json::array();
  for (const auto& t : q.taps) taps.push_back(to_json(t));
  return {{"taps", taps},
          {"realization", to_json(q.realized)},
          {"surrogate_cost", q.surrogate_cost},
          {"zero_cost", q.zero_cost},
          {"stationarity", q.stationarity}};
}

json to_json(const MpcGains& k) {
  return {{"Lx", to_json(k.Lx)}, {"LZ", to_json(k.LZ)}, {"LU", to_json(k.LU)}, {"LDu", to_json(k.LDu)}};
}

json to_json(const FourTankParams& p) {
  json j;
  for (int i = 0; i < 4; ++i) {
    const auto n = std::to_string(i + 1);
    j["A" + n] = p.A[static_cast<size_t>(i)];
    j["a" + n] = p.a[static_cast<size_t>(i)];
    j["h0_" + n] = p.h0[static_cast<size_t>(i)];
  }
  j["u0_1"] = p.u0[0];
  j["u0_2"] = p.u0[1];
  j["k1"] = p.k1;
  j["k2"] = p.k2;
  j["kc"] = p.kc;
  j["g"] = p.g;
  j["gamma1"] = p.gamma1;
  j["gamma2"] = p.gamma2;
  return j;
}

FourTankParams params_from_json(const json& j) {
  if (!j.is_object()) bad("plant must be an object");
  FourTankParams p;
  auto read = [&](const std::string& key, double& dst) {
    if (j.contains(key)) dst = number(j[key], key.c_str());
  };
  for (int i = 0; i < 4; ++i) {
    const auto n = std::to_string(i + 1);
    read("A" + n, p.A[static_cast<size_t>(i)]);
    read("a" + n, p.a[static_cast<size_t>(i)]);
    read("h0_" + n, p.h0[static_cast<size_t>(i)]);
  }
  read("u0_1", p.u0[0]);
  read("u0_2", p.u0[1]);
  read("k1", p.k1);
  read("k2", p.k2);
  read("kc", p.kc);
  read("g", p.g);
  read("gamma1", p.gamma1);
  read("gamma2", p.gamma2);
  for (const auto& [key, _] : j.items()) {
    static const char* known[] = {"A1",   "A2",   "A3", "A4", "a1", "a2", "a3", "a4", "h0_1",   "h0_2",  "h0_3",
                                  "h0_4", "u0_1", "u0_2", "k1", "k2", "kc", "g",  "gamma1", "gamma2"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) bad("unknown plant field: " + key);
  }
  p.validate();
  return p;
}

json to_json(const Scenario& s) {
  json ev = json::array();
  for (const auto& e : s.events)
    ev.push_back({{"time", e.time},
                  {"channel", e.channel + 1},
                  {"kind", e.kind == EventKind::Reference ? "reference" : "disturbance"},
                  {"magnitude", e.magnitude}});
  json j{{"mode", to_string(s.mode)}, {"duration", s.duration}, {"events", ev}};
  j["u_limit"] = s.u_limit ? json(*s.u_limit) : json(nullptr);
  return j;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) bad("scenario must be an object");
  Scenario s = default_scenario();
  try {
    if (j.contains("mode")) s.mode = mode_from_string(j["mode"].get<std::string>());
    if (j.contains("duration")) s.duration = j["duration"].get<int>();
    if (j.contains("u_limit")) {
      if (j["u_limit"].is_null())
        s.u_limit.reset();
      else
        s.u_limit = number(j["u_limit"], "u_limit");
    }
    if (j.contains("events")) {
      s.events.clear();
      for (const auto& e : j["events"]) {
        Event ev;
        ev.time = e.at("time").get<int>();
        ev.channel = e.at("channel").get<int>() - 1;
        const std::string kind = e.at("kind").get<std::string>();
        if (kind == "reference")
          ev.kind = EventKind::Reference;
        else if (kind == "disturbance")
          ev.kind = EventKind::Disturbance;
        else
          bad("unknown event kind: " + kind);
        ev.magnitude = number(e.at("magnitude"), "magnitude");
        s.events.push_back(ev);
      }
    }
  } catch (const json::exception& e) {
    bad(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

json to_json(const Config& c) {
  return {{"plant", to_json(c.plant)},
          {"mpc", {{"N", c.mpc.N}, {"Wz", to_json(c.mpc.Wz)}, {"Wu", to_json(c.mpc.Wu)}, {"Wdu", to_json(c.mpc.Wdu)}}},
          {"kalman", {{"Rn_scale", c.kalman.Rn_scale}, {"Qd_scale", c.kalman.Qd_scale}}},
          {"qdesign",
           {{"Nq", c.qdesign.Nq}, {"L", c.qdesign.L}, {"W", {{"pole", c.qdesign.pole}, {"gain", c.qdesign.gain}}}}},
          {"scenario", to_json(c.scenario)},
          {"substeps", c.substeps},
          {"Ts", c.Ts}};
}

Config config_from_json(const json& j) {
  if (!j.is_object()) bad("config must be an object");
  static const char* known[] = {"plant", "mpc", "kalman", "qdesign", "scenario", "substeps", "Ts"};
  for (const auto& [key, _] : j.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) bad("unknown config field: " + key);
  Config c;
  try {
    if (j.contains("plant")) c.plant = params_from_json(j["plant"]);
    if (j.contains("mpc")) {
      const json& m = j["mpc"];
      if (m.contains("N")) c.mpc.N = m["N"].get<int>();
      if (m.contains("Wz")) c.mpc.Wz = weight_from_json(m["Wz"], 2);
      if (m.contains("Wu")) c.mpc.Wu = weight_from_json(m["Wu"], 2);
      if (m.contains("Wdu")) c.mpc.Wdu = weight_from_json(m["Wdu"], 2);
    }
    if (j.contains("kalman")) {
      const json& k = j["kalman"];
      if (k.contains("Rn_scale")) c.kalman.Rn_scale = number(k["Rn_scale"], "Rn_scale");
      if (k.contains("Qd_scale")) c.kalman.Qd_scale = number(k["Qd_scale"], "Qd_scale");
    }
    if (j.contains("qdesign")) {
      const json& q = j["qdesign"];
      if (q.contains("Nq")) c.qdesign.Nq = q["Nq"].get<int>();
      if (q.contains("L")) c.qdesign.L = q["L"].get<int>();
      if (q.contains("W")) {
        if (q["W"].contains("pole")) c.qdesign.pole = number(q["W"]["pole"], "W.pole");
        if (q["W"].contains("gain")) c.qdesign.gain = number(q["W"]["gain"], "W.gain");
      }
    }
    if (j.contains("scenario")) c.scenario = scenario_from_json(j["scenario"]);
    if (j.contains("substeps")) c.substeps = j["substeps"].get<int>();
    if (j.contains("Ts")) c.Ts = number(j["Ts"], "Ts");
  } catch (const json::exception& e) {
    bad(std::string("config: ") + e.what());
  }
  try {
    c.mpc.validate(2, 2);
  } catch (const Error& e) {
    bad(std::string("mpc: ") + e.what());
  }
  if (!(c.kalman.Rn_scale > 0) || !(c.kalman.Qd_scale > 0)) bad("kalman scales must be positive");
  if (c.qdesign.Nq < 1 || c.qdesign.L < 1) bad("qdesign Nq and L must be positive");
  if (c.substeps < 1) bad("substeps must be at least 1");
  if (!(c.Ts > 0)) bad("Ts must be positive");
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) bad("cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    bad(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

json to_json(const Metrics& m) {
  json ev = json::array();
  for (const auto& e : m.events) {
    ev.push_back({{"time", e.event.time},
                  {"channel", e.event.channel + 1},
                  {"kind", e.event.kind == EventKind::Reference ? "reference" : "disturbance"},
                  {"magnitude", e.event.magnitude},
                  {"window_end", e.window_end},
                  {"steady_state_error", std::vector<double>(e.steady_state_error.data(),
                                                             e.steady_state_error.data() + e.steady_state_error.size())},
                  {"peak_deviation", e.peak_deviation},
                  {"overshoot", e.overshoot},
                  {"settling_time", e.settling_time}});
  }
  return {{"mode", to_string(m.mode)},
          {"events", ev},
          {"max_abs_u", m.max_abs_u},
          {"max_u", m.max_u},
          {"violations", m.violations}};
}

}  // namespace ykmpc
