#pragma once

#include <type_traits>
#include <optional>
#include <string_view>

#include "sppc/errors.hpp"
#include "sppc/horizon.hpp"
#include "sppc/solver.hpp"

namespace sppc {

template <typename Scalar>
using ControlPacket = Vec<Scalar>;

enum class ControllerKind { L1L2, L2 };

inline std::string_view to_string(ControllerKind k) { return k == ControllerKind::L1L2 ? "l1l2" : "l2"; }

inline ControllerKind parse_controller(std::string_view s) {
  if (s == "l1l2") return ControllerKind::L1L2;
  if (s == "l2") return ControllerKind::L2;
  throw ConfigError("unknown controller '" + std::string(s) + "'");
}

/// Sparse packet from the l1/l2 cost. Throws ConvergenceError if the solver
/// cannot certify its answer.
template <typename Scalar>
ControlPacket<Scalar> l1l2_packet(const HorizonData<Scalar>& hz, const SolverConfig& cfg,
                                  const std::type_identity_t<Vec<Scalar>>& x,
                                  const std::optional<std::type_identity_t<Vec<Scalar>>>& previous = std::nullopt) {
  auto rep = solve_packet(hz, cfg, x, previous);
  if (!rep.converged)
    throw ConvergenceError("l1l2_packet: solver did not converge", double(rep.kkt_residual));
  return std::move(rep.packet);
}

/// Ridge packet minimizing |GU - Hx|^2 + mu |U|_2^2:
/// U = (G'G + mu I)^{-1} G'Hx, via an LDL' solve.
template <typename Scalar>
ControlPacket<Scalar> l2_packet(const HorizonData<Scalar>& hz, Scalar mu, const std::type_identity_t<Vec<Scalar>>& x) {
  SPPC_EXPECT(mu > Scalar(0), "l2_packet: mu must be > 0");
  SPPC_EXPECT(x.size() == hz.n, "l2_packet: state dimension mismatch");
  const Mat<Scalar> normal = hz.GtG + mu * Mat<Scalar>::Identity(hz.N, hz.N);
  return normal.ldlt().solve(hz.GtH * x);
}

/// Quadratic baseline cost |GU - Hx|^2 + mu |U|^2 + |x|_Q^2.
template <typename Scalar>
Scalar l2_cost(const HorizonData<Scalar>& hz, Scalar mu, const std::type_identity_t<Vec<Scalar>>& U, const std::type_identity_t<Vec<Scalar>>& x) {
  return (hz.G * U - hz.H * x).squaredNorm() + mu * U.squaredNorm() + x.dot(hz.Q * x);
}

}  // namespace sppc
