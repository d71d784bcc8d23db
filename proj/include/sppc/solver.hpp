#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <type_traits>
#include <vector>

#include "sppc/errors.hpp"
#include "sppc/horizon.hpp"
#include "sppc/linalg.hpp"

namespace sppc {

/// Soft-threshold level used inside the proximal-gradient iteration. With the
/// gradient step 1/c on |GU - Hx|^2, a level tau minimizes the l1/l2 cost with
/// l1 weight 2 c tau:
///   ProxStandard  tau = mu/(2c)  weight mu
///   Intermediate  tau = mu/c     weight 2 mu
///   PaperLiteral  tau = 2 mu/c   weight 4 mu
enum class ThresholdConvention { ProxStandard, Intermediate, PaperLiteral };
enum class Acceleration { None, Momentum };
enum class WarmStart { Zero, LeastSquares, PreviousPacket };

inline std::string_view to_string(ThresholdConvention c) {
  switch (c) {
    case ThresholdConvention::ProxStandard: return "prox-standard";
    case ThresholdConvention::Intermediate: return "intermediate";
    case ThresholdConvention::PaperLiteral: return "paper-literal";
  }
  return "?";
}

inline ThresholdConvention parse_convention(std::string_view s) {
  if (s == "prox-standard") return ThresholdConvention::ProxStandard;
  if (s == "intermediate") return ThresholdConvention::Intermediate;
  if (s == "paper-literal") return ThresholdConvention::PaperLiteral;
  throw ConfigError("unknown threshold convention '" + std::string(s) + "'");
}

/// Multiplier k such that the effective l1 weight is k * mu.
inline double convention_weight_factor(ThresholdConvention c) {
  switch (c) {
    case ThresholdConvention::ProxStandard: return 1.0;
    case ThresholdConvention::Intermediate: return 2.0;
    case ThresholdConvention::PaperLiteral: return 4.0;
  }
  return 1.0;
}

template <typename Scalar>
Scalar effective_weight(ThresholdConvention c, Scalar mu) {
  return Scalar(convention_weight_factor(c)) * mu;
}

template <typename Scalar>
Scalar threshold_level(ThresholdConvention c, Scalar mu, Scalar lipschitz) {
  return effective_weight(c, mu) / (Scalar(2) * lipschitz);
}

struct SolverConfig {
  ThresholdConvention convention = ThresholdConvention::ProxStandard;
  long max_iters = 100000;
  double tol = 1e-10;
  double kkt_tol = 1e-6;
  Acceleration acceleration = Acceleration::None;
  WarmStart warm_start = WarmStart::Zero;
  bool polish = true;  // exact solve on the support once the iteration has converged

  void validate() const {
    if (max_iters < 1) throw ConfigError("solver: max_iters must be >= 1");
    if (!(tol > 0)) throw ConfigError("solver: tol must be > 0");
    if (!(kkt_tol > 0)) throw ConfigError("solver: kkt_tol must be > 0");
  }
};

template <typename Scalar>
struct SolveReport {
  Vec<Scalar> packet;
  long iterations = 0;
  Scalar objective = Scalar(0);  // J(U, x) with the configured mu
  Scalar kkt_residual = Scalar(0);
  bool converged = false;
};

/// Called with (j, U_j) after each iteration, U_0 included.
template <typename Scalar>
using IterationObserver = std::function<void(long, const Vec<Scalar>&)>;

/// sgn(v) max(0, |v| - tau), componentwise. Thresholded entries are +0.0.
template <typename Derived>
Vec<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& v,
                                             typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  SPPC_EXPECT(tau >= Scalar(0), "soft_threshold: tau must be >= 0");
  Vec<Scalar> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Scalar a = std::abs(v(i));
    out(i) = a <= tau ? Scalar(0) : (v(i) > Scalar(0) ? a - tau : tau - a);
  }
  return out;
}

/// Subgradient optimality residual of U for |GU - Hx|^2 + weight |U|_1.
/// With g = G'(Hx - GU): |g_i - (w/2) sgn u_i| on the support, and
/// max(0, |g_i| - w/2) off it. Zero iff U is the global minimizer.
template <typename Scalar>
Scalar certify_optimal(const HorizonData<Scalar>& hz, const std::type_identity_t<Vec<Scalar>>& x, const std::type_identity_t<Vec<Scalar>>& U,
                       Scalar effective_mu) {
  SPPC_EXPECT(effective_mu > Scalar(0), "certify_optimal: effective weight must be > 0");
  SPPC_EXPECT(U.size() == hz.N && x.size() == hz.n, "certify_optimal: dimension mismatch");
  const Vec<Scalar> g = hz.GtH * x - hz.GtG * U;
  const Scalar half = effective_mu / Scalar(2);
  Scalar worst = Scalar(0);
  for (Eigen::Index i = 0; i < U.size(); ++i) {
    Scalar r;
    if (U(i) != Scalar(0))
      r = std::abs(g(i) - (U(i) > Scalar(0) ? half : -half));
    else
      r = std::max(Scalar(0), std::abs(g(i)) - half);
    worst = std::max(worst, r);
  }
  return worst;
}

/// Zero packet is optimal iff |G'Hx|_inf <= (effective weight)/2.
template <typename Scalar>
bool in_dead_zone(const HorizonData<Scalar>& hz, Scalar mu, const std::type_identity_t<Vec<Scalar>>& x,
                  ThresholdConvention convention) {
  SPPC_EXPECT(x.size() == hz.n, "in_dead_zone: state dimension mismatch");
  const Scalar level = effective_weight(convention, mu) / Scalar(2);
  return (hz.GtH * x).template lpNorm<Eigen::Infinity>() <= level;
}

/// Solves the stationarity system G_S'G_S u_S = (G'Hx)_S - (w/2) sgn(u_S) on
/// the support S of U. Empty when the support is empty or the solution changes
/// any sign, i.e. when U's support is not the optimal one.
template <typename Scalar>
std::optional<Vec<Scalar>> polish_on_support(const HorizonData<Scalar>& hz, const std::type_identity_t<Vec<Scalar>>& x,
                                             const std::type_identity_t<Vec<Scalar>>& U, Scalar weight) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < U.size(); ++i)
    if (U(i) != Scalar(0)) support.push_back(i);
  if (support.empty()) return std::nullopt;
  const auto s = static_cast<Eigen::Index>(support.size());
  const Vec<Scalar> b = hz.GtH * x;
  Mat<Scalar> M(s, s);
  Vec<Scalar> rhs(s);
  for (Eigen::Index a = 0; a < s; ++a) {
    const Scalar sgn = U(support[a]) > Scalar(0) ? Scalar(1) : Scalar(-1);
    rhs(a) = b(support[a]) - weight / Scalar(2) * sgn;
    for (Eigen::Index c = 0; c < s; ++c) M(a, c) = hz.GtG(support[a], support[c]);
  }
  const Vec<Scalar> z = M.ldlt().solve(rhs);
  Vec<Scalar> out = Vec<Scalar>::Zero(U.size());
  for (Eigen::Index a = 0; a < s; ++a) {
    if (!(z(a) * U(support[a]) > Scalar(0))) return std::nullopt;
    out(support[a]) = z(a);
  }
  return out;
}

/// Proximal-gradient solve started from an explicit U0.
template <typename Scalar>
SolveReport<Scalar> solve_packet_from(const HorizonData<Scalar>& hz, const SolverConfig& cfg,
                                      const std::type_identity_t<Vec<Scalar>>& x,
                                      std::type_identity_t<Vec<Scalar>> U0,
                                      const std::type_identity_t<IterationObserver<Scalar>>& observer = {}) {
  cfg.validate();
  SPPC_EXPECT(x.size() == hz.n, "solve_packet: state dimension mismatch");
  SPPC_EXPECT(U0.size() == hz.N, "solve_packet: warm start length mismatch");
  SPPC_EXPECT(hz.c > hz.lambda_max_gtg, "solve_packet: c must exceed lambda_max(G'G)");

  const Scalar tau = threshold_level(cfg.convention, hz.mu, hz.c);
  const Scalar weight = effective_weight(cfg.convention, hz.mu);
  const Vec<Scalar> b = hz.GtH * x;
  const Scalar step = Scalar(1) / hz.c;
  const bool momentum = cfg.acceleration == Acceleration::Momentum;

  SolveReport<Scalar> rep;
  Vec<Scalar> U = std::move(U0);
  Vec<Scalar> y = U;
  Scalar t = Scalar(1);
  if (observer) observer(0, U);

  long j = 0;
  while (j < cfg.max_iters) {
    Vec<Scalar> next = soft_threshold(y + step * (b - hz.GtG * y), tau);
    ++j;
    const Scalar change = (next - U).template lpNorm<Eigen::Infinity>();
    if (momentum) {
      const Scalar t_next = (Scalar(1) + std::sqrt(Scalar(1) + Scalar(4) * t * t)) / Scalar(2);
      y = next + ((t - Scalar(1)) / t_next) * (next - U);
      t = t_next;
    } else {
      y = next;
    }
    U = std::move(next);
    if (observer) observer(j, U);
    if (change <= Scalar(cfg.tol) && certify_optimal(hz, x, U, weight) <= Scalar(cfg.kkt_tol)) {
      rep.converged = true;
      break;
    }
  }

  rep.kkt_residual = certify_optimal(hz, x, U, weight);
  if (rep.converged && cfg.polish) {
    if (auto refined = polish_on_support(hz, x, U, weight)) {
      const Scalar r = certify_optimal(hz, x, *refined, weight);
      if (r <= rep.kkt_residual) {
        U = std::move(*refined);
        rep.kkt_residual = r;
      }
    }
  }
  rep.iterations = j;
  rep.objective = vector_cost(hz, U, x);
  rep.packet = std::move(U);
  return rep;
}

/// Drops the head of a packet and zero-fills the tail.
template <typename Scalar>
Vec<Scalar> shifted(const Vec<Scalar>& packet) {
  Vec<Scalar> out = Vec<Scalar>::Zero(packet.size());
  if (packet.size() > 1) out.head(packet.size() - 1) = packet.tail(packet.size() - 1);
  return out;
}

/// Minimizes |GU - Hx|^2 + w|U|_1 by ISTA (or FISTA with momentum). The
/// warm start only affects the iteration count: the fixed point is unique.
/// `previous` is used as-is for WarmStart::PreviousPacket; callers pass the
/// shifted last packet.
template <typename Scalar>
SolveReport<Scalar> solve_packet(const HorizonData<Scalar>& hz, const SolverConfig& cfg,
                                 const std::type_identity_t<Vec<Scalar>>& x,
                                 const std::optional<std::type_identity_t<Vec<Scalar>>>& previous = std::nullopt,
                                 const std::type_identity_t<IterationObserver<Scalar>>& observer = {}) {
  Vec<Scalar> U0 = Vec<Scalar>::Zero(hz.N);
  switch (cfg.warm_start) {
    case WarmStart::Zero: break;
    case WarmStart::LeastSquares: U0 = least_squares_packet(hz, x); break;
    case WarmStart::PreviousPacket:
      if (previous && previous->size() == hz.N) U0 = *previous;
      break;
  }
  return solve_packet_from(hz, cfg, x, std::move(U0), observer);
}

/// V(x) = min_U J(U, x), including |x|_Q^2. Only a true minimum under the
/// prox-standard convention; other conventions optimize a rescaled weight.
template <typename Scalar>
Scalar value_function(const HorizonData<Scalar>& hz, const SolverConfig& cfg, const std::type_identity_t<Vec<Scalar>>& x) {
  const auto rep = solve_packet(hz, cfg, x);
  if (!rep.converged)
    throw ConvergenceError("value_function: solver did not converge", double(rep.kkt_residual));
  return rep.objective;
}

}  // namespace sppc
