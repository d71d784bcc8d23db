#include "sppc/cli/config.hpp"

#include <fstream>
#include <set>

#include "sppc/errors.hpp"

namespace sppc::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where, "expected a finite number");
  return d;
}

std::uint64_t unsigned_int(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    fail(where, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

VectorXd vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of numbers");
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(Eigen::Index(i)) = number(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

MatrixXd matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t rows = v.size();
  if (!v[0].is_array() || v[0].empty()) fail(where, "rows must be non-empty arrays");
  const std::size_t cols = v[0].size();
  MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string row = where + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != cols) fail(row, "ragged matrix");
    for (std::size_t j = 0; j < cols; ++j)
      out(Eigen::Index(i), Eigen::Index(j)) = number(v[i][j], row + "[" + std::to_string(j) + "]");
  }
  return out;
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "<root>", {"plant", "horizon", "weights", "solver", "network", "sim", "quantizer", "output", "sweep"});
  ExperimentConfig cfg;
  cfg.source = j;

  // plant
  if (!j.contains("plant")) fail("plant", "required section missing");
  check_keys(j["plant"], "plant", {"A", "B"});
  if (!j["plant"].contains("A") || !j["plant"].contains("B")) fail("plant", "A and B are required");
  cfg.A = matrix(j["plant"]["A"], "plant.A");
  cfg.B = vector(j["plant"]["B"], "plant.B");
  const Eigen::Index n = cfg.A.rows();
  if (cfg.A.cols() != n) fail("plant.A", "must be square");
  if (cfg.B.size() != n) fail("plant.B", "length must equal the dimension of A");

  // horizon
  if (!j.contains("horizon")) fail("horizon", "required section missing");
  check_keys(j["horizon"], "horizon", {"N", "c_margin"});
  if (!j["horizon"].contains("N")) fail("horizon.N", "required");
  cfg.N = Eigen::Index(unsigned_int(j["horizon"]["N"], "horizon.N"));
  if (cfg.N < 1) fail("horizon.N", "must be >= 1");
  if (j["horizon"].contains("c_margin")) {
    cfg.c_margin = number(j["horizon"]["c_margin"], "horizon.c_margin");
    if (!(cfg.c_margin > 0)) fail("horizon.c_margin", "must be > 0");
  }

  // weights
  if (!j.contains("weights")) fail("weights", "required section missing");
  const json& w = j["weights"];
  check_keys(w, "weights", {"Q", "mu", "r", "epsilon", "P"});
  if (!w.contains("Q") || !w.contains("mu")) fail("weights", "Q and mu are required");
  cfg.Q = matrix(w["Q"], "weights.Q");
  if (cfg.Q.rows() != n || cfg.Q.cols() != n) fail("weights.Q", "must be n x n");
  if (!is_positive_definite(cfg.Q)) fail("weights.Q", "must be symmetric positive definite");
  cfg.mu = number(w["mu"], "weights.mu");
  if (!(cfg.mu > 0)) fail("weights.mu", "must be > 0");
  const int paths = int(w.contains("r")) + int(w.contains("epsilon")) + int(w.contains("P"));
  if (paths != 1) fail("weights", "exactly one of r, epsilon, P must be given");
  if (w.contains("r")) {
    cfg.terminal = TerminalWeight::FromR;
    cfg.r = number(w["r"], "weights.r");
    if (!(cfg.r > 0)) fail("weights.r", "must be > 0");
    cfg.epsilon = epsilon_from_r(cfg.mu, cfg.r);
  } else if (w.contains("epsilon")) {
    cfg.terminal = TerminalWeight::FromEpsilon;
    cfg.epsilon = number(w["epsilon"], "weights.epsilon");
    if (!(cfg.epsilon > 0)) fail("weights.epsilon", "must be > 0");
    cfg.r = r_from_epsilon(cfg.mu, cfg.epsilon);
  } else {
    cfg.terminal = TerminalWeight::Explicit;
    cfg.P = matrix(w["P"], "weights.P");
    if (cfg.P.rows() != n || cfg.P.cols() != n) fail("weights.P", "must be n x n");
    if (!is_positive_definite(cfg.P)) fail("weights.P", "must be symmetric positive definite");
  }

  // solver
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, "solver", {"convention", "tol", "kkt_tol", "max_iters", "acceleration", "warm_start", "polish", "controller"});
    if (s.contains("convention")) cfg.solver.convention = parse_convention(string(s["convention"], "solver.convention"));
    if (s.contains("tol")) cfg.solver.tol = number(s["tol"], "solver.tol");
    if (s.contains("kkt_tol")) cfg.solver.kkt_tol = number(s["kkt_tol"], "solver.kkt_tol");
    if (s.contains("max_iters")) cfg.solver.max_iters = long(unsigned_int(s["max_iters"], "solver.max_iters"));
    if (s.contains("acceleration")) {
      const auto a = string(s["acceleration"], "solver.acceleration");
      if (a == "none") cfg.solver.acceleration = Acceleration::None;
      else if (a == "momentum") cfg.solver.acceleration = Acceleration::Momentum;
      else fail("solver.acceleration", "expected 'none' or 'momentum'");
    }
    if (s.contains("polish")) {
      if (!s["polish"].is_boolean()) fail("solver.polish", "expected a boolean");
      cfg.solver.polish = s["polish"].get<bool>();
    }
    if (s.contains("warm_start")) {
      const auto ws = string(s["warm_start"], "solver.warm_start");
      if (ws == "zero") cfg.solver.warm_start = WarmStart::Zero;
      else if (ws == "least-squares") cfg.solver.warm_start = WarmStart::LeastSquares;
      else if (ws == "previous-packet") cfg.solver.warm_start = WarmStart::PreviousPacket;
      else fail("solver.warm_start", "expected 'zero', 'least-squares' or 'previous-packet'");
    }
    if (s.contains("controller")) cfg.controller = parse_controller(string(s["controller"], "solver.controller"));
    try {
      cfg.solver.validate();
    } catch (const ConfigError& e) {
      fail("solver", e.what());
    }
  }

  // network
  if (j.contains("network")) {
    const json& nw = j["network"];
    check_keys(nw, "network", {"kind", "p", "lo", "hi", "seed", "trace_file"});
    if (nw.contains("kind")) cfg.network.kind = parse_channel_kind(string(nw["kind"], "network.kind"));
    if (nw.contains("p")) cfg.network.p = number(nw["p"], "network.p");
    if (nw.contains("lo")) cfg.network.lo = std::uint32_t(unsigned_int(nw["lo"], "network.lo"));
    if (nw.contains("hi")) cfg.network.hi = std::uint32_t(unsigned_int(nw["hi"], "network.hi"));
    if (nw.contains("seed")) cfg.network.seed = unsigned_int(nw["seed"], "network.seed");
    if (nw.contains("trace_file")) {
      cfg.trace_file = string(nw["trace_file"], "network.trace_file");
      std::filesystem::path p(cfg.trace_file);
      if (p.is_relative()) p = base_dir / p;
      cfg.network.trace = load_trace_file(p);
    }
    if (cfg.network.kind == ChannelKind::DeterministicTrace && cfg.network.trace.length() == 0)
      fail("network", "deterministic-trace requires trace_file");
    try {
      cfg.network.validate();
    } catch (const ConfigError& e) {
      fail("network", e.what());
    }
  }

  // sim
  if (j.contains("sim")) {
    const json& s = j["sim"];
    check_keys(s, "sim", {"steps", "x0", "x0_distribution", "trials", "master_seed"});
    if (s.contains("steps")) cfg.steps = unsigned_int(s["steps"], "sim.steps");
    if (s.contains("x0") && s.contains("x0_distribution")) fail("sim", "give either x0 or x0_distribution, not both");
    if (s.contains("x0")) {
      cfg.x0 = vector(s["x0"], "sim.x0");
      if (cfg.x0->size() != n) fail("sim.x0", "length must equal the state dimension");
    }
    if (s.contains("x0_distribution") && string(s["x0_distribution"], "sim.x0_distribution") != "standard-normal")
      fail("sim.x0_distribution", "only 'standard-normal' is supported");
    if (s.contains("trials")) cfg.trials = unsigned_int(s["trials"], "sim.trials");
    if (s.contains("master_seed")) cfg.master_seed = unsigned_int(s["master_seed"], "sim.master_seed");
  }
  if (cfg.steps < 1) fail("sim.steps", "must be >= 1");
  if (cfg.trials < 1) fail("sim.trials", "must be >= 1");
  if (cfg.network.kind == ChannelKind::DeterministicTrace && cfg.network.trace.length() < cfg.steps)
    fail("network.trace_file", "trace is shorter than sim.steps");

  // quantizer
  if (j.contains("quantizer")) {
    const json& q = j["quantizer"];
    check_keys(q, "quantizer", {"enabled", "bits", "step"});
    if (q.contains("enabled")) {
      if (!q["enabled"].is_boolean()) fail("quantizer.enabled", "expected a boolean");
      cfg.quantizer_enabled = q["enabled"].get<bool>();
    }
    if (q.contains("bits")) cfg.quantizer.bits = int(unsigned_int(q["bits"], "quantizer.bits"));
    if (q.contains("step")) cfg.quantizer.step = number(q["step"], "quantizer.step");
    try {
      cfg.quantizer.validate();
    } catch (const ConfigError& e) {
      fail("quantizer", e.what());
    }
  }

  // output
  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"directory", "formats"});
    if (o.contains("directory")) cfg.output_directory = string(o["directory"], "output.directory");
    if (o.contains("formats")) {
      if (!o["formats"].is_array()) fail("output.formats", "expected an array");
      cfg.formats.clear();
      for (const auto& f : o["formats"]) {
        const auto s = string(f, "output.formats[]");
        if (s != "csv" && s != "json") fail("output.formats", "unknown format '" + s + "'");
        cfg.formats.push_back(s);
      }
    }
  }

  // sweep
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"mu_grid", "r_equals_mu"});
    if (s.contains("mu_grid")) {
      const VectorXd grid = vector(s["mu_grid"], "sweep.mu_grid");
      for (double m : grid)
        if (m < 0) fail("sweep.mu_grid", "values must be >= 0");
      cfg.mu_grid.assign(grid.data(), grid.data() + grid.size());
    }
    if (s.contains("r_equals_mu")) {
      if (!s["r_equals_mu"].is_boolean()) fail("sweep.r_equals_mu", "expected a boolean");
      cfg.sweep_r_equals_mu = s["r_equals_mu"].get<bool>();
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

Design build_design(const ExperimentConfig& cfg, std::optional<double> mu_override, bool r_equals_mu) {
  PlantModel<double> model(cfg.A, cfg.B);
  CostConfig<double> cost;
  cost.N = cfg.N;
  cost.Q = cfg.Q;
  cost.mu = mu_override.value_or(cfg.mu);

  std::optional<RiccatiSolution<double>> ricc;
  if (cfg.terminal == TerminalWeight::Explicit && !(mu_override && r_equals_mu)) {
    cost.P = cfg.P;
  } else {
    double r = cfg.r;
    if (mu_override && r_equals_mu) r = cost.mu;
    else if (mu_override && cfg.terminal == TerminalWeight::FromEpsilon) r = r_from_epsilon(cost.mu, cfg.epsilon);
    ricc = solve_dare(model, cfg.Q, r);
    cost.P = ricc->P;
  }
  auto hz = build_horizon(model, cost, cfg.c_margin);
  return Design{std::move(model), std::move(cost), std::move(ricc), std::move(hz)};
}

std::string config_hash(const ExperimentConfig& cfg) {
  // FNV-1a 64 over the compact JSON dump (keys are sorted by nlohmann::json)
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : cfg.source.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sppc::cli
