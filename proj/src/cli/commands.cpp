#include "sppc/cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

#include "sppc/cli/serialize.hpp"
#include "sppc/errors.hpp"
#include "sppc/stability.hpp"

namespace sppc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool wants(const ExperimentConfig& cfg, std::string_view format) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

fs::path out_dir(const ExperimentConfig& cfg, const CliOptions& opts) {
  return opts.out ? *opts.out : fs::path(cfg.output_directory);
}

VectorXd make_vector(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::fixed << std::setprecision(digits) << (v == 0.0 ? 0.0 : v);
  return os.str();
}

/// Maps library exceptions onto the exit-code contract.
template <typename F>
int guarded(std::ostream& err, int convergence_code, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConstructionError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CertificateError& e) {
    err << "certificate error: " << e.what() << '\n';
    return kCertificateError;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << " (defect " << e.defect() << ")\n";
    return convergence_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

StabilityCertificate<double> certify_design(const Design& d) {
  if (!d.riccati) throw CertificateError("an explicit P carries no Riccati solution; use weights.r or weights.epsilon");
  return stability_constants(d.horizon, d.cost.Q, d.cost.mu, *d.riccati, d.cost.N);
}

}  // namespace

void apply_overrides(ExperimentConfig& cfg, const CliOptions& opts) {
  if (opts.seed) {
    cfg.network.seed = *opts.seed;
    cfg.master_seed = *opts.seed;
  }
  if (opts.trials) {
    if (*opts.trials < 1) throw ConfigError("--trials must be >= 1");
    cfg.trials = *opts.trials;
  }
  if (opts.convention) cfg.solver.convention = *opts.convention;
}

SimulationConfig make_sim_config(const ExperimentConfig& cfg) {
  SimulationConfig sim;
  sim.controller = cfg.controller;
  sim.solver = cfg.solver;
  sim.channel = cfg.network;
  sim.steps = cfg.steps;
  if (cfg.quantizer_enabled) sim.quantizer = cfg.quantizer;
  return sim;
}

VectorXd initial_state(const ExperimentConfig& cfg) {
  if (cfg.x0) return *cfg.x0;
  return sample_initial_state(trial_seed(cfg.master_seed, 0), cfg.A.rows());
}

json metadata(const ExperimentConfig& cfg, std::string_view command) {
  return json{{"artifact", "sppc"},
              {"version", std::string(kVersion)},
              {"command", std::string(command)},
              {"config_hash", config_hash(cfg)},
              {"network_seed", cfg.network.seed},
              {"master_seed", cfg.master_seed},
              {"rng", std::string(kRngAlgorithm)},
              {"seed_derivation", std::string(kSeedDerivation)},
              {"config", cfg.source}};
}

// ---------------------------------------------------------------------------
// table1

const VectorXd& reference_sparse_packet() {
  static const VectorXd v = make_vector({-2.632, 0.085, -2.211, 0.0, 0.0});
  return v;
}

const VectorXd& reference_ridge_packet() {
  static const VectorXd v = make_vector({-2.632, -0.106, -1.869, 0.102, -0.679});
  return v;
}

bool table1_applicable(const Design& design) { return design.horizon.n == 4 && design.horizon.N == 5; }

Table1Result compute_table1(const Design& design, const SolverConfig& solver, const VectorXd& x0) {
  if (!table1_applicable(design)) throw ConfigError("table1: reference packets need n = 4 and N = 5");
  const auto& hz = design.horizon;
  Table1Result t;
  t.x0 = x0;
  t.ridge = l2_packet(hz, hz.mu, x0);
  t.ridge_deviation = (t.ridge - reference_ridge_packet()).lpNorm<Eigen::Infinity>();
  for (auto conv : {ThresholdConvention::ProxStandard, ThresholdConvention::Intermediate,
                    ThresholdConvention::PaperLiteral}) {
    SolverConfig sc = solver;
    sc.convention = conv;
    const auto rep = solve_packet(hz, sc, x0);
    Table1Row row;
    row.convention = conv;
    row.packet = rep.packet;
    row.converged = rep.converged;
    row.kkt_residual = rep.kkt_residual;
    row.max_deviation = (rep.packet - reference_sparse_packet()).lpNorm<Eigen::Infinity>();
    row.trailing_zeros = rep.packet(3) == 0.0 && rep.packet(4) == 0.0;
    row.matches = row.converged && row.trailing_zeros && row.max_deviation <= kTableTolerance;
    if (row.matches) t.matching.push_back(conv);
    t.sparse.push_back(std::move(row));
  }
  return t;
}

json to_json(const Table1Result& t) {
  json rows = json::array();
  for (const auto& r : t.sparse)
    rows.push_back({{"convention", std::string(to_string(r.convention))},
                    {"packet", to_json(r.packet)},
                    {"converged", r.converged},
                    {"kkt_residual", r.kkt_residual},
                    {"max_deviation", r.max_deviation},
                    {"trailing_zeros", r.trailing_zeros},
                    {"matches", r.matches}});
  json matching = json::array();
  for (auto c : t.matching) matching.push_back(std::string(to_string(c)));
  return json{{"x0", to_json(t.x0)},
              {"tolerance", kTableTolerance},
              {"reference_l1l2", to_json(reference_sparse_packet())},
              {"reference_l2", to_json(reference_ridge_packet())},
              {"l2", {{"packet", to_json(t.ridge)}, {"max_deviation", t.ridge_deviation},
                      {"matches", t.ridge_deviation <= kTableTolerance}}},
              {"l1l2", rows},
              {"matching_conventions", matching}};
}

std::string format_table1(const Table1Result& t) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "entry" << std::right << std::setw(12) << "ref l1l2";
  for (const auto& r : t.sparse) os << std::setw(16) << to_string(r.convention);
  os << std::setw(12) << "ref l2" << std::setw(12) << "l2" << '\n';
  for (Eigen::Index i = 0; i < t.ridge.size(); ++i) {
    os << std::left << std::setw(6) << ("u" + std::to_string(i)) << std::right << std::setw(12)
       << fixed(reference_sparse_packet()(i), 3);
    for (const auto& r : t.sparse) os << std::setw(16) << fixed(r.packet(i));
    os << std::setw(12) << fixed(reference_ridge_packet()(i), 3) << std::setw(12) << fixed(t.ridge(i)) << '\n';
  }
  os << std::left << std::setw(6) << "dev" << std::right << std::setw(12) << "";
  for (const auto& r : t.sparse) os << std::setw(16) << fixed(r.max_deviation);
  os << std::setw(12) << "" << std::setw(12) << fixed(t.ridge_deviation) << '\n';
  os << "matching l1l2 conventions:";
  if (t.matching.empty()) os << " none";
  for (auto c : t.matching) os << ' ' << to_string(c);
  os << "\nl2 within tolerance: " << (t.ridge_deviation <= kTableTolerance ? "yes" : "no") << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// sweep

std::vector<SweepRow> sweep_mu(const ExperimentConfig& cfg, const std::vector<double>& grid) {
  SPPC_EXPECT(!grid.empty(), "sweep_mu: empty grid");
  SimulationConfig sim = make_sim_config(cfg);
  sim.controller = ControllerKind::L1L2;
  // sparsity here is a property of the optimizer, so packets go out unquantized
  sim.quantizer.reset();
  sim.channel = DropoutModel::deterministic(generate_trace(cfg.network, cfg.steps));
  const VectorXd x0 = initial_state(cfg);

  std::vector<SweepRow> rows;
  for (double mu : grid) {
    SweepRow row;
    row.mu = mu;
    try {
      if (!(mu >= 0) || !std::isfinite(mu)) throw ConfigError("mu must be a finite number >= 0");
      row.mu_used = std::max(mu, kSweepMuFloor);
      const Design d = build_design(cfg, row.mu_used, cfg.sweep_r_equals_mu);
      const auto rec = run_closed_loop(d.model, d.horizon, sim, x0);
      if (!rec.ok()) throw ConvergenceError("closed loop aborted at k = " + std::to_string(*rec.aborted_at), 0.0);
      row.avg_sparsity = sparsity_stats(rec.packet_values()).avg_sparsity;
      row.traj_norm = trajectory_norm(rec);
      if (row.mu_used != mu) row.status = "ok (mu clamped to " + format_number(row.mu_used) + ")";
    } catch (const std::exception& e) {
      row.avg_sparsity = row.traj_norm = std::numeric_limits<double>::quiet_NaN();
      row.status = std::string("failed: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// entropy study

namespace {

ControllerStats aggregate(const std::vector<TrialSummary>& trials) {
  ControllerStats s;
  std::size_t ok = 0;
  for (const auto& t : trials) {
    if (t.failed) {
      ++s.failures;
      continue;
    }
    ++ok;
    s.mean_entropy_per_sample += t.entropy_per_sample;
    s.mean_entropy_per_packet += t.entropy_per_packet;
    s.mean_zero_count += double(t.zero_count);
    s.mean_avg_sparsity += t.avg_sparsity;
  }
  if (ok) {
    s.mean_entropy_per_sample /= double(ok);
    s.mean_entropy_per_packet /= double(ok);
    s.mean_zero_count /= double(ok);
    s.mean_avg_sparsity /= double(ok);
  } else {
    s.mean_entropy_per_sample = s.mean_entropy_per_packet = s.mean_zero_count = s.mean_avg_sparsity =
        std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

json to_json(const ControllerStats& s) {
  return json{{"mean_entropy_per_sample_bits", number_or_null(s.mean_entropy_per_sample)},
              {"mean_entropy_per_packet_bits", number_or_null(s.mean_entropy_per_packet)},
              {"mean_zero_count", number_or_null(s.mean_zero_count)},
              {"mean_avg_sparsity", number_or_null(s.mean_avg_sparsity)},
              {"failures", s.failures}};
}

}  // namespace

EntropyStudy entropy_study(const ExperimentConfig& cfg, const Design& design, std::size_t trials,
                           std::uint64_t master_seed, unsigned workers) {
  TrialSpec spec;
  spec.sim = make_sim_config(cfg);
  spec.x0 = cfg.x0;
  spec.stats_quantizer = cfg.quantizer;

  EntropyStudy st;
  st.trials = trials;
  spec.sim.controller = ControllerKind::L1L2;
  st.sparse_trials = run_trials(design.model, design.horizon, spec, trials, master_seed, workers);
  spec.sim.controller = ControllerKind::L2;
  st.ridge_trials = run_trials(design.model, design.horizon, spec, trials, master_seed, workers);
  st.sparse = aggregate(st.sparse_trials);
  st.ridge = aggregate(st.ridge_trials);

  std::size_t more_zeros = 0, lower_entropy = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto& a = st.sparse_trials[t];
    const auto& b = st.ridge_trials[t];
    if (a.failed || b.failed) continue;
    ++st.compared;
    if (a.zero_count > b.zero_count) ++more_zeros;
    if (a.entropy_per_packet < b.entropy_per_packet) ++lower_entropy;
  }
  if (st.compared) {
    st.frac_more_zeros = double(more_zeros) / double(st.compared);
    st.frac_lower_entropy = double(lower_entropy) / double(st.compared);
  }
  return st;
}

// ---------------------------------------------------------------------------
// commands

int cmd_certify(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, kCertificateError, [&] {
    const Design d = build_design(cfg);
    const auto cert = certify_design(d);
    json j = metadata(cfg, "certify");
    j["certificate"] = to_json(cert);
    const auto& ricc = *d.riccati;
    const double radius = closed_loop_spectral_radius(d.model, ricc);
    j["riccati"] = {{"iterations", ricc.iterations},
                    {"dare_defect", ricc.residual},
                    {"lyapunov_identity_residual", lyapunov_identity_residual(d.model, d.cost.Q, ricc)},
                    {"closed_loop_spectral_radius", radius},
                    {"closed_loop_stable", radius < 1.0}};
    json conv{{"active", std::string(to_string(cfg.solver.convention))}};
    if (table1_applicable(d)) {
      VectorXd ones = VectorXd::Ones(4);
      const auto t = compute_table1(d, cfg.solver, ones);
      json matching = json::array();
      for (auto c : t.matching) matching.push_back(std::string(to_string(c)));
      conv["reference_packet_match"] = matching;
    } else {
      conv["reference_packet_match"] = nullptr;
    }
    j["convention"] = conv;
    const fs::path path = out_dir(cfg, opts) / "certificate.json";
    write_json_file(path, j);
    if (!opts.quiet)
      out << "certificate: rho=" << format_number(cert.rho) << " Delta=" << format_number(cert.Delta)
          << " epsilon=" << format_number(cert.epsilon) << "\nwrote " << path.string() << '\n';
    return int(kOk);
  });
}

int cmd_run(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, kRuntimeError, [&]() -> int {
    const Design d = build_design(cfg);
    const SimulationConfig sim = make_sim_config(cfg);
    const auto rec = run_closed_loop(d.model, d.horizon, sim, initial_state(cfg));
    const fs::path dir = out_dir(cfg, opts);

    json report = metadata(cfg, "run");
    if (!rec.packets.empty()) {
      std::vector<VectorXd> quantized;
      for (const auto& p : rec.packets) quantized.push_back(quantize(cfg.quantizer, p.packet));
      const auto ent = entropy(flatten(quantized), rec.horizon);
      const auto sp = sparsity_stats(rec.packet_values());
      report["entropy"] = to_json(ent);
      report["sparsity"] = {{"avg_l0", sp.avg_l0}, {"avg_sparsity", sp.avg_sparsity}};
      if (wants(cfg, "csv")) {
        std::ostringstream hist;
        write_histogram_csv(hist, ent);
        write_text_file(dir / "histogram.csv", hist.str());
      }
    }
    report["assumption1"] = rec.assumption1;
    report["trajectory_norm"] = number_or_null(trajectory_norm(rec));
    if (d.riccati) {
      try {
        report["ultimate_bound"] = to_json(check_ultimate_bound(rec, certify_design(d)));
      } catch (const CertificateError& e) {
        report["ultimate_bound"] = {{"status", "inapplicable"}, {"note", e.what()}};
      }
    } else {
      report["ultimate_bound"] = {{"status", "inapplicable"}, {"note", "explicit P: no Riccati certificate"}};
    }
    if (!rec.ok()) report["aborted_at"] = *rec.aborted_at;

    if (wants(cfg, "csv")) {
      std::ostringstream csv;
      write_trajectory_csv(csv, rec);
      write_text_file(dir / "trajectory.csv", csv.str());
    }
    if (wants(cfg, "json")) {
      json packets = json::array();
      for (const auto& p : rec.packets)
        packets.push_back({{"k", p.k}, {"dropped", rec.received.dropped(p.k)}, {"packet", to_json(p.packet)}});
      write_json_file(dir / "packets.json", json{{"metadata", metadata(cfg, "run")}, {"packets", packets}});
      json full = to_json(rec);
      full["metadata"] = metadata(cfg, "run");
      write_json_file(dir / "record.json", full);
    }
    write_json_file(dir / "report.json", report);

    if (!rec.ok()) {
      err << "run aborted at k = " << *rec.aborted_at << ": " << rec.abort_reason << '\n';
      return kRuntimeError;
    }
    if (!opts.quiet) {
      out << "steps=" << rec.inputs.size() << " final |x|=" << format_number(rec.states.back().norm());
      if (report.contains("entropy"))
        out << " zeros=" << report["entropy"]["zero_count"].get<std::size_t>() << '/'
            << report["entropy"]["total_values"].get<std::size_t>();
      out << " ultimate_bound=" << report["ultimate_bound"]["status"].get<std::string>() << "\nwrote " << dir.string() << '\n';
    }
    return kOk;
  });
}

int cmd_table1(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, kCertificateError, [&] {
    const Design d = build_design(cfg);
    const VectorXd x0 = cfg.x0 ? *cfg.x0 : VectorXd::Ones(cfg.A.rows());
    const auto t = compute_table1(d, cfg.solver, x0);
    const std::string text = format_table1(t);
    const fs::path dir = out_dir(cfg, opts);
    write_text_file(dir / "table1.txt", text);
    json j = to_json(t);
    j["metadata"] = metadata(cfg, "table1");
    write_json_file(dir / "table1.json", j);
    if (!opts.quiet) out << text;
    return int(kOk);
  });
}

int cmd_sweep_mu(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, kRuntimeError, [&] {
    std::vector<double> grid = opts.mu_grid;
    if (grid.empty()) grid = cfg.mu_grid;
    if (grid.empty()) grid = kDefaultMuGrid;
    for (double m : grid)
      if (!(m >= 0)) throw ConfigError("mu grid values must be >= 0");
    const auto rows = sweep_mu(cfg, grid);
    std::ostringstream csv;
    csv << "mu,avg_sparsity,traj_norm,status\n";
    for (const auto& r : rows)
      csv << format_number(r.mu) << ',' << format_number(r.avg_sparsity) << ',' << format_number(r.traj_norm) << ",\""
          << r.status << "\"\n";
    const fs::path dir = out_dir(cfg, opts);
    write_text_file(dir / "sweep_mu.csv", csv.str());
    json meta = metadata(cfg, "sweep-mu");
    meta["in_loop_quantizer"] = false;
    meta["mu_floor"] = kSweepMuFloor;
    write_json_file(dir / "sweep_mu.meta.json", meta);
    if (!opts.quiet) out << csv.str();
    return int(kOk);
  });
}

int cmd_entropy_study(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, kRuntimeError, [&] {
    const Design d = build_design(cfg);
    const auto st = entropy_study(cfg, d, cfg.trials, cfg.master_seed, opts.workers);
    json j = metadata(cfg, "entropy-study");
    j["trials"] = st.trials;
    j["compared_trials"] = st.compared;
    j["l1l2"] = to_json(st.sparse);
    j["l2"] = to_json(st.ridge);
    j["orderings"] = {
        {"mean_entropy_per_packet_l1l2_below_l2", st.sparse.mean_entropy_per_packet < st.ridge.mean_entropy_per_packet},
        {"mean_zero_count_l1l2_above_l2", st.sparse.mean_zero_count > st.ridge.mean_zero_count},
        {"fraction_trials_more_zeros", st.frac_more_zeros},
        {"fraction_trials_lower_entropy", st.frac_lower_entropy}};
    const fs::path dir = out_dir(cfg, opts);
    write_json_file(dir / "entropy_study.json", j);
    if (wants(cfg, "csv")) {
      std::ostringstream csv;
      csv << "trial,seed,controller,failed,zero_count,total_values,entropy_per_sample,entropy_per_packet,avg_sparsity,traj_norm\n";
      auto emit = [&csv](const std::vector<TrialSummary>& ts, const char* name) {
        for (const auto& t : ts)
          csv << t.trial << ',' << t.seed << ',' << name << ',' << int(t.failed) << ',' << t.zero_count << ','
              << t.total_values << ',' << format_number(t.entropy_per_sample) << ','
              << format_number(t.entropy_per_packet) << ',' << format_number(t.avg_sparsity) << ','
              << format_number(t.failed ? std::numeric_limits<double>::quiet_NaN() : t.traj_norm) << '\n';
      };
      emit(st.sparse_trials, "l1l2");
      emit(st.ridge_trials, "l2");
      write_text_file(dir / "entropy_trials.csv", csv.str());
    }
    if (!opts.quiet)
      out << "trials=" << st.trials << " failures(l1l2/l2)=" << st.sparse.failures << '/' << st.ridge.failures
          << "\nmean entropy per packet: l1l2=" << format_number(st.sparse.mean_entropy_per_packet)
          << " l2=" << format_number(st.ridge.mean_entropy_per_packet)
          << "\nmean entropy per sample: l1l2=" << format_number(st.sparse.mean_entropy_per_sample)
          << " l2=" << format_number(st.ridge.mean_entropy_per_sample)
          << "\nmean zero count: l1l2=" << format_number(st.sparse.mean_zero_count)
          << " l2=" << format_number(st.ridge.mean_zero_count) << '\n';
    return int(kOk);
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse packetized predictive control toolkit"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string convention;
  std::uint64_t seed = 0;
  std::size_t trials = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", opts.out, "Output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "Seed override for the channel and the trials");
    sub->add_option("--trials", trials, "Trial count override");
    sub->add_option("--convention", convention, "Threshold convention")
        ->check(CLI::IsMember({"paper-literal", "prox-standard", "intermediate"}));
    sub->add_option("--workers", opts.workers, "Worker threads for trials (0 = hardware)");
    sub->add_flag("--quiet", opts.quiet, "Suppress console summaries");
  };

  auto* certify = app.add_subcommand("certify", "Solve the Riccati equation and write a stability certificate");
  auto* run = app.add_subcommand("run", "Simulate one closed loop and write the trajectory and reports");
  auto* table1 = app.add_subcommand("table1", "Compare first packets against the reference packets");
  auto* sweep = app.add_subcommand("sweep-mu", "Sparsity and performance over a grid of mu");
  auto* study = app.add_subcommand("entropy-study", "Seeded trials comparing l1/l2 and l2 packet entropy");
  for (auto* sub : {certify, run, table1, sweep, study}) add_common(sub);
  sweep->add_option("--mu-grid", opts.mu_grid, "Comma-separated mu values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  CLI::App* active = app.get_subcommands().front();
  if (active->count("--seed")) opts.seed = seed;
  if (active->count("--trials")) opts.trials = trials;
  if (!convention.empty()) opts.convention = parse_convention(convention);

  ExperimentConfig cfg;
  const int loaded = guarded(err, kConfigError, [&] {
    cfg = load_config(opts.config);
    apply_overrides(cfg, opts);
    return int(kOk);
  });
  if (loaded != kOk) return loaded;

  const std::string name = active->get_name();
  if (name == "certify") return cmd_certify(cfg, opts, out, err);
  if (name == "run") return cmd_run(cfg, opts, out, err);
  if (name == "table1") return cmd_table1(cfg, opts, out, err);
  if (name == "sweep-mu") return cmd_sweep_mu(cfg, opts, out, err);
  return cmd_entropy_study(cfg, opts, out, err);
}

}  // namespace sppc::cli
