#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sppc/controller.hpp"
#include "sppc/horizon.hpp"
#include "sppc/metrics.hpp"
#include "sppc/network.hpp"
#include "sppc/plant.hpp"
#include "sppc/riccati.hpp"
#include "sppc/solver.hpp"

namespace sppc::cli {

/// How the terminal weight P is obtained. Exactly one per config.
enum class TerminalWeight { FromR, FromEpsilon, Explicit };

struct ExperimentConfig {
  MatrixXd A;
  VectorXd B;
  Eigen::Index N = 5;
  MatrixXd Q;
  double mu = 1.0;
  TerminalWeight terminal = TerminalWeight::FromR;
  double r = 0.0;        // set for FromR and FromEpsilon
  double epsilon = 0.0;  // set for FromR and FromEpsilon
  MatrixXd P;            // Explicit only
  double c_margin = 0.01;

  SolverConfig solver;
  ControllerKind controller = ControllerKind::L1L2;

  DropoutModel network;
  std::string trace_file;

  std::size_t steps = 100;
  std::optional<VectorXd> x0;  // empty means standard normal sampling
  std::size_t trials = 1;
  std::uint64_t master_seed = 0;

  bool quantizer_enabled = false;
  QuantizerSpec quantizer;

  std::string output_directory = "out";
  std::vector<std::string> formats{"csv", "json"};

  std::vector<double> mu_grid;
  bool sweep_r_equals_mu = true;

  nlohmann::json source;  // normalized input, hashed into output metadata
};

/// Validates and normalizes a JSON config. Relative trace paths resolve
/// against `base_dir`. Throws ConfigError with a path-qualified message.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Plant, weights and prediction data derived from a config.
struct Design {
  PlantModel<double> model;
  CostConfig<double> cost;
  std::optional<RiccatiSolution<double>> riccati;
  HorizonData<double> horizon;
};

/// Builds the design at the config's mu, or at `mu_override` (in which case
/// r follows mu when `r_equals_mu`, else keeps the configured r/epsilon path).
Design build_design(const ExperimentConfig& cfg, std::optional<double> mu_override = std::nullopt,
                    bool r_equals_mu = false);

std::string config_hash(const ExperimentConfig& cfg);

}  // namespace sppc::cli
