#pragma once

#include <type_traits>
#include <cmath>
#include <algorithm>
#include <limits>
#include <optional>
#include <string>

#include "sppc/errors.hpp"
#include "sppc/horizon.hpp"
#include "sppc/linalg.hpp"
#include "sppc/plant.hpp"
#include "sppc/riccati.hpp"
#include "sppc/solver.hpp"

namespace sppc {

struct SimulationRecord;

/// Constants of the practical-stability bound. phi(s) = a1 s + (a2 + lambda_max(Q)) s^2
/// brackets V from above; rho is the contraction factor during dropout bursts
/// and Delta the radius of the ultimate bound.
template <typename Scalar>
struct StabilityCertificate {
  Mat<Scalar> P;
  RowVec<Scalar> K;
  Scalar r = Scalar(0);
  Scalar epsilon = Scalar(0);
  Scalar mu = Scalar(0);
  Eigen::Index n = 0;
  Eigen::Index N = 0;
  Scalar lambda_min_q = Scalar(0);
  Scalar lambda_max_q = Scalar(0);
  Scalar sigma_ls = Scalar(0);        // sigma_max(G^+ H)
  Scalar sigma_residual = Scalar(0);  // sigma_max((G G^+ - I) H)
  Scalar a1 = Scalar(0);
  Scalar a2 = Scalar(0);
  Scalar rho = Scalar(0);
  Scalar Delta = Scalar(0);
};

namespace detail {

/// Largest singular value, cross-checked against the Gram eigenvalue.
template <typename Scalar>
Scalar checked_sigma_max(const Mat<Scalar>& M, const char* what) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(M);
  const Scalar by_svd = svd.singularValues().size() ? svd.singularValues()(0) : Scalar(0);
  const Scalar by_gram = std::sqrt(std::max(Scalar(0), lambda_max(Mat<Scalar>(M.transpose() * M))));
  const Scalar scale = std::max({by_svd, by_gram, Scalar(1e-300)});
  // the Gram route loses precision below sqrt(eps) * |M|
  const Scalar floor = Scalar(1e-7) * M.norm();
  if (std::abs(by_svd - by_gram) > std::max(Scalar(1e-8) * scale, floor))
    throw CertificateError(std::string("stability_constants: singular value routes disagree for ") + what);
  return by_svd;
}

}  // namespace detail

template <typename Scalar>
Scalar delta_radius(Scalar rho, Scalar epsilon, Scalar lambda_min_q, Eigen::Index N) {
  return std::sqrt(rho / (Scalar(1) - rho) * (epsilon / lambda_min_q + Scalar(N) / Scalar(4)));
}

/// a1 = mu sqrt(n) sigma_max(G^+ H), a2 = sigma_max^2((G G^+ - I) H),
/// rho = 1 - lambda_min(Q) / (a1 + a2 + lambda_max(Q)),
/// Delta = sqrt(rho/(1-rho) (eps/lambda_min(Q) + N/4)), eps = mu^2 / (4 r).
template <typename Scalar>
StabilityCertificate<Scalar> stability_constants(const HorizonData<Scalar>& hz,
                                                 const std::type_identity_t<Mat<Scalar>>& Q,
                                                 std::type_identity_t<Scalar> mu, const RiccatiSolution<Scalar>& ricc,
                                                 Eigen::Index N) {
  SPPC_EXPECT(N == hz.N, "stability_constants: horizon mismatch");
  SPPC_EXPECT(Q.rows() == hz.n && Q.cols() == hz.n, "stability_constants: Q must be n x n");
  StabilityCertificate<Scalar> cert;
  cert.P = ricc.P;
  cert.K = ricc.K;
  cert.r = ricc.r;
  cert.mu = mu;
  cert.epsilon = epsilon_from_r(mu, ricc.r);
  cert.n = hz.n;
  cert.N = N;
  cert.lambda_min_q = lambda_min(Q);
  cert.lambda_max_q = lambda_max(Q);

  const Mat<Scalar> ls_map = hz.Gplus * hz.H;
  const Mat<Scalar> residual_map =
      (hz.G * hz.Gplus - Mat<Scalar>::Identity(hz.G.rows(), hz.G.rows())) * hz.H;
  cert.sigma_ls = detail::checked_sigma_max(ls_map, "G^+ H");
  cert.sigma_residual = detail::checked_sigma_max(residual_map, "(G G^+ - I) H");
  cert.a1 = mu * std::sqrt(Scalar(hz.n)) * cert.sigma_ls;
  cert.a2 = cert.sigma_residual * cert.sigma_residual;
  cert.rho = Scalar(1) - cert.lambda_min_q / (cert.a1 + cert.a2 + cert.lambda_max_q);
  if (!(cert.rho > Scalar(0) && cert.rho < Scalar(1)))
    throw CertificateError("stability_constants: rho = " + std::to_string(double(cert.rho)) + " outside (0, 1)");
  cert.Delta = delta_radius(cert.rho, cert.epsilon, cert.lambda_min_q, N);
  if (!(cert.Delta > Scalar(0)) || !std::isfinite(double(cert.Delta)))
    throw CertificateError("stability_constants: Delta is not a positive finite number");
  return cert;
}

template <typename Scalar>
Scalar phi(const StabilityCertificate<Scalar>& cert, Scalar s) {
  SPPC_EXPECT(s >= Scalar(0), "phi: argument must be >= 0");
  return cert.a1 * s + (cert.a2 + cert.lambda_max_q) * s * s;
}

template <typename Scalar>
struct ContractionReport {
  bool open_loop_ok = true;    // V(f^i x) - V(x) <= -lambda_min(Q)|x|^2 + eps
  bool contraction_ok = true;  // V(f^i x) <= rho V(x) + eps + N lambda_min(Q)/4
  Scalar worst_open_loop_margin = std::numeric_limits<Scalar>::infinity();
  Scalar worst_contraction_margin = std::numeric_limits<Scalar>::infinity();
  Scalar value = Scalar(0);  // V(x)

  bool ok() const { return open_loop_ok && contraction_ok; }
};

/// Evaluates both open-loop inequalities for f^i(x), i = 1..N, where f^i
/// applies the first i entries of the optimal packet at x. Margins are
/// RHS - LHS; a margin below -tol * max(1, |RHS|) counts as a violation.
template <typename Scalar>
ContractionReport<Scalar> check_contraction(const PlantModel<Scalar>& model, const HorizonData<Scalar>& hz,
                                            const SolverConfig& solver, const StabilityCertificate<Scalar>& cert,
                                            const std::type_identity_t<Vec<Scalar>>& x, Scalar tol = Scalar(1e-9)) {
  const auto base = solve_packet(hz, solver, x);
  if (!base.converged) throw ConvergenceError("check_contraction: solver did not converge", double(base.kkt_residual));
  ContractionReport<Scalar> rep;
  rep.value = base.objective;
  const Scalar xnorm2 = x.squaredNorm();
  const Scalar open_rhs = base.objective - cert.lambda_min_q * xnorm2 + cert.epsilon;
  const Scalar contr_rhs = cert.rho * base.objective + cert.epsilon + Scalar(hz.N) * cert.lambda_min_q / Scalar(4);
  for (Eigen::Index i = 1; i <= hz.N; ++i) {
    const Vec<Scalar> xi = rollout(model, x, base.packet, i);
    const Scalar Vi = value_function(hz, solver, xi);
    const Scalar m_open = open_rhs - Vi;
    const Scalar m_contr = contr_rhs - Vi;
    rep.worst_open_loop_margin = std::min(rep.worst_open_loop_margin, m_open);
    rep.worst_contraction_margin = std::min(rep.worst_contraction_margin, m_contr);
    if (m_open < -tol * std::max(Scalar(1), std::abs(open_rhs))) rep.open_loop_ok = false;
    if (m_contr < -tol * std::max(Scalar(1), std::abs(contr_rhs))) rep.contraction_ok = false;
  }
  return rep;
}

enum class BoundStatus { Pass, Fail, Inapplicable };

std::string_view to_string(BoundStatus s);

struct UltimateBoundReport {
  BoundStatus status = BoundStatus::Inapplicable;
  double min_slack = std::numeric_limits<double>::infinity();
  double mean_slack = 0.0;
  std::size_t checked = 0;
  std::optional<std::size_t> first_violation;
  std::string note;
};

/// Checks |x(k)| <= sqrt(rho)^(i+1) sqrt(phi(|x(k0)|)/lambda_min(Q)) + Delta for
/// every k > k0, where i is the index of the last reception strictly before k.
/// Inapplicable when the trace has consecutive losses beyond N - 1 or no reception.
UltimateBoundReport check_ultimate_bound(const SimulationRecord& rec, const StabilityCertificate<double>& cert,
                              double tol = 1e-9);

}  // namespace sppc
