#include "sppc/stability.hpp"

#include "sppc/sim.hpp"

namespace sppc {

std::string_view to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::Pass: return "pass";
    case BoundStatus::Fail: return "fail";
    case BoundStatus::Inapplicable: return "inapplicable";
  }
  return "?";
}

UltimateBoundReport check_ultimate_bound(const SimulationRecord& rec, const StabilityCertificate<double>& cert, double tol) {
  UltimateBoundReport rep;
  const std::size_t N = static_cast<std::size_t>(cert.N);
  if (rec.horizon != N) {
    rep.note = "record horizon differs from certificate horizon";
    return rep;
  }
  const auto& trace = rec.received;
  if (!check_assumption1(trace, N)) {
    rep.note = "consecutive dropouts exceed N - 1";
    return rep;
  }
  const auto receptions = reception_instants(trace);
  if (receptions.empty()) {
    rep.note = "no packet was received";
    return rep;
  }

  const std::size_t k0 = receptions.front();
  const double head = std::sqrt(phi(cert, rec.states.at(k0).norm()) / cert.lambda_min_q);
  const double sqrt_rho = std::sqrt(cert.rho);

  double slack_sum = 0.0;
  std::size_t i = 0;  // receptions[i] is the last reception strictly before k
  for (std::size_t k = k0 + 1; k < rec.states.size(); ++k) {
    while (i + 1 < receptions.size() && receptions[i + 1] < k) ++i;
    const double bound = std::pow(sqrt_rho, double(i + 1)) * head + cert.Delta;
    const double slack = bound - rec.states[k].norm();
    rep.min_slack = std::min(rep.min_slack, slack);
    slack_sum += slack;
    ++rep.checked;
    if (slack < -tol && !rep.first_violation) rep.first_violation = k;
  }
  rep.mean_slack = rep.checked ? slack_sum / double(rep.checked) : 0.0;
  rep.status = rep.first_violation ? BoundStatus::Fail : BoundStatus::Pass;
  return rep;
}

}  // namespace sppc
