#include "sppc/cli/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sppc/errors.hpp"

namespace sppc::cli {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(VectorXd(m.row(i).transpose())));
  return rows;
}

json to_json(const StabilityCertificate<double>& c) {
  return json{{"P", to_json(c.P)},
              {"K", to_json(VectorXd(c.K.transpose()))},
              {"r", c.r},
              {"epsilon", c.epsilon},
              {"mu", c.mu},
              {"n", c.n},
              {"N", c.N},
              {"lambda_min_Q", c.lambda_min_q},
              {"lambda_max_Q", c.lambda_max_q},
              {"sigma_max_Gplus_H", c.sigma_ls},
              {"sigma_max_residual_H", c.sigma_residual},
              {"a1", c.a1},
              {"a2", c.a2},
              {"rho", c.rho},
              {"Delta", c.Delta},
              {"phi", {{"linear", c.a1}, {"quadratic", c.a2 + c.lambda_max_q}}}};
}

json to_json(const EntropyReport& rep) {
  json hist = json::array();
  for (const auto& [level, count] : rep.histogram) hist.push_back({level, count});
  return json{{"per_sample_entropy_bits", rep.per_sample_entropy},
              {"per_packet_entropy_bits", rep.per_packet_entropy},
              {"zero_count", rep.zero_count},
              {"total_values", rep.total_values},
              {"histogram", hist}};
}

json to_json(const UltimateBoundReport& rep) {
  json j{{"status", std::string(to_string(rep.status))},
         {"checked_steps", rep.checked},
         {"min_slack", number_or_null(rep.min_slack)},
         {"mean_slack", number_or_null(rep.mean_slack)},
         {"first_violation", rep.first_violation ? json(*rep.first_violation) : json(nullptr)}};
  if (!rep.note.empty()) j["note"] = rep.note;
  return j;
}

json to_json(const SimulationRecord& rec) {
  json states = json::array();
  for (const auto& x : rec.states) states.push_back(to_json(x));
  json packets = json::array();
  for (const auto& p : rec.packets) packets.push_back({{"k", p.k}, {"packet", to_json(p.packet)}});
  json inputs = json::array();
  for (double u : rec.inputs) inputs.push_back(number_or_null(u));
  json j{{"controller", std::string(to_string(rec.controller))},
         {"convention", std::string(to_string(rec.convention))},
         {"mu", rec.mu},
         {"N", rec.horizon},
         {"channel", rec.channel},
         {"quantizer", rec.quantizer ? json{{"bits", rec.quantizer->bits}, {"step", rec.quantizer->step}} : json(nullptr)},
         {"received", rec.received.str()},
         {"assumption1", rec.assumption1},
         {"states", states},
         {"inputs", inputs},
         {"packets", packets},
         {"solver_iterations", rec.solver_iterations}};
  j["aborted_at"] = rec.aborted_at ? json(*rec.aborted_at) : json(nullptr);
  if (!rec.ok()) j["abort_reason"] = rec.abort_reason;
  return j;
}

json to_json(const TrialSummary& s) {
  return json{{"trial", s.trial},
              {"seed", s.seed},
              {"x0", to_json(s.x0)},
              {"failed", s.failed},
              {"error", s.error},
              {"zero_count", s.zero_count},
              {"total_values", s.total_values},
              {"entropy_per_sample", s.entropy_per_sample},
              {"entropy_per_packet", s.entropy_per_packet},
              {"avg_l0", s.avg_l0},
              {"avg_sparsity", s.avg_sparsity},
              {"traj_norm", number_or_null(s.traj_norm)},
              {"final_norm", number_or_null(s.final_norm)},
              {"assumption1", s.assumption1}};
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

void write_trajectory_csv(std::ostream& os, const SimulationRecord& rec) {
  const Eigen::Index n = rec.states.empty() ? 0 : rec.states.front().size();
  os << "k,d,u";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
  os << ",norm_x\n";
  for (std::size_t k = 0; k < rec.inputs.size(); ++k) {
    const auto& x = rec.states[k];
    os << k << ',' << int(rec.received.dropped(k)) << ',' << format_number(rec.inputs[k]);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_number(x(i));
    os << ',' << format_number(x.norm()) << '\n';
  }
}

void write_histogram_csv(std::ostream& os, const EntropyReport& rep) {
  os << "level,count\n";
  for (const auto& [level, count] : rep.histogram) os << format_number(level) << ',' << count << '\n';
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace sppc::cli
