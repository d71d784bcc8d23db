#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sppc/controller.hpp"
#include "sppc/horizon.hpp"
#include "sppc/metrics.hpp"
#include "sppc/network.hpp"
#include "sppc/plant.hpp"
#include "sppc/solver.hpp"

namespace sppc {

struct SimulationConfig {
  ControllerKind controller = ControllerKind::L1L2;
  SolverConfig solver;
  DropoutModel channel;
  std::size_t steps = 100;
  std::optional<QuantizerSpec> quantizer;  // applied to transmitted packets
};

struct TransmittedPacket {
  std::size_t k = 0;
  VectorXd packet;
};

struct SimulationRecord {
  std::vector<VectorXd> states;  // x(0..steps)
  std::vector<double> inputs;    // u(0..steps-1)
  std::vector<TransmittedPacket> packets;
  DropoutTrace received;
  std::vector<long> solver_iterations;

  // configuration snapshot
  ControllerKind controller = ControllerKind::L1L2;
  ThresholdConvention convention = ThresholdConvention::ProxStandard;
  double mu = 0.0;
  std::size_t horizon = 0;
  std::string channel;
  std::optional<QuantizerSpec> quantizer;

  bool assumption1 = true;
  std::optional<std::size_t> aborted_at;
  std::string abort_reason;

  bool ok() const { return !aborted_at.has_value(); }
  std::vector<VectorXd> packet_values() const;
};

/// Controller -> erasure channel -> buffer -> plant, one step at a time. The
/// controller always sees the exact state; quantization touches only the
/// transmitted packet. A solver failure stops the run and returns the partial
/// record with `aborted_at` set.
SimulationRecord run_closed_loop(const PlantModel<double>& model, const HorizonData<double>& hz,
                                 const SimulationConfig& cfg, const VectorXd& x0);

/// Ensures x(k+1) = A x(k) + B u(k) along the record; returns the worst
/// infinity-norm defect.
double replay_defect(const PlantModel<double>& model, const SimulationRecord& rec);

/// sqrt(sum_k |x(k)|^2) over the recorded states.
double trajectory_norm(const SimulationRecord& rec);

struct TrialSpec {
  SimulationConfig sim;
  std::optional<VectorXd> x0;  // fixed initial state; standard normal when empty
  QuantizerSpec stats_quantizer;
};

struct TrialSummary {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  VectorXd x0;
  bool failed = false;
  std::string error;
  std::size_t zero_count = 0;
  std::size_t total_values = 0;
  double entropy_per_sample = 0.0;
  double entropy_per_packet = 0.0;
  double avg_l0 = 0.0;
  double avg_sparsity = 0.0;
  double traj_norm = 0.0;
  double final_norm = 0.0;
  bool assumption1 = true;
};

inline constexpr std::string_view kSeedDerivation =
    "splitmix64(master_seed + 0x9E3779B97F4A7C15 * (trial + 1)); x0 stream seeded with splitmix64(seed ^ 0xD1B54A32D192ED03)";

std::uint64_t splitmix64(std::uint64_t z);
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial);
VectorXd sample_initial_state(std::uint64_t seed, Eigen::Index n);

/// Summary statistics of one finished record (entropy over quantized values
/// of every transmitted packet).
TrialSummary summarize(const SimulationRecord& rec, const QuantizerSpec& q);

/// Independent seeded trials. Trial t uses trial_seed(master_seed, t) for its
/// channel and its own x0 stream, so results do not depend on `workers`.
std::vector<TrialSummary> run_trials(const PlantModel<double>& model, const HorizonData<double>& hz,
                                     const TrialSpec& spec, std::size_t trials,
                                     std::uint64_t master_seed, unsigned workers = 0);

}  // namespace sppc
