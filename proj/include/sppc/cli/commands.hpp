#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sppc/cli/config.hpp"
#include "sppc/sim.hpp"

namespace sppc::cli {

/// Stable process exit codes.
enum ExitCode : int { kOk = 0, kConfigError = 1, kCertificateError = 2, kRuntimeError = 3 };

struct CliOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<ThresholdConvention> convention;
  std::vector<double> mu_grid;
  unsigned workers = 0;
  bool quiet = false;
};

/// Applies command-line overrides (seed, trials, convention) to a config.
void apply_overrides(ExperimentConfig& cfg, const CliOptions& opts);

SimulationConfig make_sim_config(const ExperimentConfig& cfg);
/// Configured x0, or a standard-normal draw from the master seed.
VectorXd initial_state(const ExperimentConfig& cfg);

nlohmann::json metadata(const ExperimentConfig& cfg, std::string_view command);

// Reference packets at x(0) = [1, 1, 1, 1] for the bundled 4-state example.
const VectorXd& reference_sparse_packet();
const VectorXd& reference_ridge_packet();
inline constexpr double kTableTolerance = 5e-3;

struct Table1Row {
  ThresholdConvention convention = ThresholdConvention::ProxStandard;
  VectorXd packet;
  bool converged = false;
  double kkt_residual = 0.0;
  double max_deviation = 0.0;
  bool trailing_zeros = false;
  bool matches = false;
};

struct Table1Result {
  VectorXd x0;
  VectorXd ridge;
  double ridge_deviation = 0.0;
  std::vector<Table1Row> sparse;
  std::vector<ThresholdConvention> matching;
};

bool table1_applicable(const Design& design);
Table1Result compute_table1(const Design& design, const SolverConfig& solver, const VectorXd& x0);
nlohmann::json to_json(const Table1Result& t);
std::string format_table1(const Table1Result& t);

struct SweepRow {
  double mu = 0.0;
  double mu_used = 0.0;
  double avg_sparsity = std::numeric_limits<double>::quiet_NaN();
  double traj_norm = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

inline constexpr double kSweepMuFloor = 1e-6;
inline const std::vector<double> kDefaultMuGrid{0, 1, 2, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

/// One closed loop per mu on a single trace drawn from the configured channel.
std::vector<SweepRow> sweep_mu(const ExperimentConfig& cfg, const std::vector<double>& grid);

struct ControllerStats {
  double mean_entropy_per_sample = 0.0;
  double mean_entropy_per_packet = 0.0;
  double mean_zero_count = 0.0;
  double mean_avg_sparsity = 0.0;
  std::size_t failures = 0;
};

struct EntropyStudy {
  std::size_t trials = 0;
  std::size_t compared = 0;  // trials where both controllers succeeded
  ControllerStats sparse;
  ControllerStats ridge;
  double frac_more_zeros = 0.0;     // zeros(l1l2) > zeros(l2)
  double frac_lower_entropy = 0.0;  // H(l1l2) < H(l2)
  std::vector<TrialSummary> sparse_trials;
  std::vector<TrialSummary> ridge_trials;
};

/// Both controllers over identical per-trial seeds and initial states.
EntropyStudy entropy_study(const ExperimentConfig& cfg, const Design& design, std::size_t trials,
                           std::uint64_t master_seed, unsigned workers = 0);

int cmd_certify(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_table1(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep_mu(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err);
int cmd_entropy_study(const ExperimentConfig& cfg, const CliOptions& opts, std::ostream& out, std::ostream& err);

/// Full command-line entry point: parses arguments, loads the config and
/// dispatches. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sppc::cli
