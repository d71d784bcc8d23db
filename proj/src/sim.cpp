#include "sppc/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace sppc {

std::vector<VectorXd> SimulationRecord::packet_values() const {
  std::vector<VectorXd> out;
  out.reserve(packets.size());
  for (const auto& p : packets) out.push_back(p.packet);
  return out;
}

SimulationRecord run_closed_loop(const PlantModel<double>& model, const HorizonData<double>& hz,
                                 const SimulationConfig& cfg, const VectorXd& x0) {
  SPPC_EXPECT(cfg.steps >= 1, "run_closed_loop: steps must be >= 1");
  SPPC_EXPECT(x0.size() == model.n(), "run_closed_loop: x0 dimension mismatch");
  cfg.solver.validate();
  if (cfg.quantizer) cfg.quantizer->validate();

  SimulationRecord rec;
  rec.controller = cfg.controller;
  rec.convention = cfg.solver.convention;
  rec.mu = hz.mu;
  rec.horizon = static_cast<std::size_t>(hz.N);
  rec.channel = cfg.channel.describe();
  rec.quantizer = cfg.quantizer;
  rec.received = generate_trace(cfg.channel, cfg.steps);
  rec.assumption1 = check_assumption1(rec.received, rec.horizon);
  rec.states.reserve(cfg.steps + 1);
  rec.inputs.reserve(cfg.steps);
  rec.states.push_back(x0);

  BufferState<double> buffer(hz.N);
  std::optional<VectorXd> warm;
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const VectorXd& x = rec.states.back();
    VectorXd packet;
    if (cfg.controller == ControllerKind::L1L2) {
      auto rep = solve_packet(hz, cfg.solver, x, warm);
      rec.solver_iterations.push_back(rep.iterations);
      if (!rep.converged) {
        rec.aborted_at = k;
        rec.abort_reason = "solver did not converge (kkt residual " + std::to_string(rep.kkt_residual) + ")";
        return rec;
      }
      packet = std::move(rep.packet);
      warm = shifted(packet);
    } else {
      packet = l2_packet(hz, hz.mu, x);
      rec.solver_iterations.push_back(0);
    }
    if (cfg.quantizer) packet = quantize(*cfg.quantizer, packet);
    rec.packets.push_back({k, packet});

    const bool dropped = rec.received.dropped(k);
    auto update = buffer_step(buffer, dropped, dropped ? std::nullopt : std::optional<VectorXd>(packet));
    buffer = std::move(update.buffer);
    rec.inputs.push_back(update.applied_input);
    rec.states.push_back(plant_step(model, x, update.applied_input));
  }
  return rec;
}

double replay_defect(const PlantModel<double>& model, const SimulationRecord& rec) {
  double worst = 0.0;
  for (std::size_t k = 0; k < rec.inputs.size(); ++k) {
    const VectorXd next = plant_step(model, rec.states[k], rec.inputs[k]);
    worst = std::max(worst, (next - rec.states[k + 1]).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double trajectory_norm(const SimulationRecord& rec) {
  double sum = 0.0;
  for (const auto& x : rec.states) sum += x.squaredNorm();
  return std::sqrt(sum);
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial) {
  return splitmix64(master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial) + 1));
}

VectorXd sample_initial_state(std::uint64_t seed, Eigen::Index n) {
  std::mt19937_64 rng(splitmix64(seed ^ 0xD1B54A32D192ED03ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = normal(rng);
  return x;
}

TrialSummary summarize(const SimulationRecord& rec, const QuantizerSpec& q) {
  TrialSummary s;
  s.assumption1 = rec.assumption1;
  s.x0 = rec.states.front();
  if (!rec.ok()) {
    s.failed = true;
    s.error = rec.abort_reason;
  }
  if (rec.packets.empty()) return s;
  std::vector<VectorXd> quantized;
  quantized.reserve(rec.packets.size());
  for (const auto& p : rec.packets) quantized.push_back(quantize(q, p.packet));
  const auto values = flatten(quantized);
  const auto ent = entropy(values, rec.horizon);
  s.zero_count = ent.zero_count;
  s.total_values = ent.total_values;
  s.entropy_per_sample = ent.per_sample_entropy;
  s.entropy_per_packet = ent.per_packet_entropy;
  const auto sp = sparsity_stats(rec.packet_values());
  s.avg_l0 = sp.avg_l0;
  s.avg_sparsity = sp.avg_sparsity;
  s.traj_norm = trajectory_norm(rec);
  s.final_norm = rec.states.back().norm();
  return s;
}

std::vector<TrialSummary> run_trials(const PlantModel<double>& model, const HorizonData<double>& hz,
                                     const TrialSpec& spec, std::size_t trials,
                                     std::uint64_t master_seed, unsigned workers) {
  SPPC_EXPECT(trials >= 1, "run_trials: trials must be >= 1");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, trials));

  std::vector<TrialSummary> out(trials);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < trials; t = next++) {
      const std::uint64_t seed = trial_seed(master_seed, t);
      TrialSummary s;
      VectorXd x0 = spec.x0 ? *spec.x0 : sample_initial_state(seed, model.n());
      try {
        SimulationConfig cfg = spec.sim;
        cfg.channel.seed = seed;
        s = summarize(run_closed_loop(model, hz, cfg, x0), spec.stats_quantizer);
      } catch (const std::exception& e) {
        s.failed = true;
        s.error = e.what();
        s.x0 = x0;
      }
      s.trial = t;
      s.seed = seed;
      out[t] = std::move(s);
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  return out;
}

}  // namespace sppc
