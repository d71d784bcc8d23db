#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <json.hpp>

#include "sppc/linalg.hpp"
#include "sppc/metrics.hpp"
#include "sppc/sim.hpp"
#include "sppc/stability.hpp"

namespace sppc::cli {

inline constexpr std::string_view kVersion = "0.1.0";

nlohmann::json to_json(const VectorXd& v);
nlohmann::json to_json(const MatrixXd& m);
nlohmann::json to_json(const StabilityCertificate<double>& cert);
nlohmann::json to_json(const EntropyReport& rep);
nlohmann::json to_json(const UltimateBoundReport& rep);
nlohmann::json to_json(const SimulationRecord& rec);
nlohmann::json to_json(const TrialSummary& s);

/// Non-finite numbers become null in JSON.
nlohmann::json number_or_null(double v);

/// k, d, u, x1..xn, norm_x for k = 0..steps-1.
void write_trajectory_csv(std::ostream& os, const SimulationRecord& rec);
/// level, count
void write_histogram_csv(std::ostream& os, const EntropyReport& rep);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Fixed 17-significant-digit formatting for CSV cells; NaN prints as "nan".
std::string format_number(double v);

}  // namespace sppc::cli
