#pragma once

#include <string>
#include <type_traits>

#include "sppc/errors.hpp"
#include "sppc/linalg.hpp"
#include "sppc/plant.hpp"

namespace sppc {

/// Solution of P = A'PA - A'PB (B'PB + r)^{-1} B'PA + Q with the associated
/// gain K = -(B'PB + r)^{-1} B'PA.
template <typename Scalar>
struct RiccatiSolution {
  Mat<Scalar> P;
  RowVec<Scalar> K;
  Scalar r = Scalar(0);
  Scalar residual = Scalar(0);  // max |RHS(P) - P|
  long iterations = 0;
};

struct DareOptions {
  double step_tol = 1e-12;
  long max_iters = 100000;
  double accept_defect = 1e-8;
};

namespace detail {

template <typename Scalar>
Mat<Scalar> riccati_rhs(const PlantModel<Scalar>& model, const Mat<Scalar>& Q, Scalar r,
                        const Mat<Scalar>& P) {
  const Mat<Scalar>& A = model.A();
  const Vec<Scalar>& B = model.B();
  const Vec<Scalar> PB = P * B;
  const RowVec<Scalar> BtPA = PB.transpose() * A;
  const Scalar denom = B.dot(PB) + r;
  return A.transpose() * P * A - BtPA.transpose() * BtPA / denom + Q;
}

template <typename Scalar>
RowVec<Scalar> riccati_gain(const PlantModel<Scalar>& model, Scalar r, const Mat<Scalar>& P) {
  const Vec<Scalar> PB = P * model.B();
  return -(PB.transpose() * model.A()) / (model.B().dot(PB) + r);
}

}  // namespace detail

/// Fixed-point value iteration from P0 = Q, symmetrized every step.
template <typename Scalar>
RiccatiSolution<Scalar> solve_dare(const PlantModel<Scalar>& model, const std::type_identity_t<Mat<Scalar>>& Q,
                                   std::type_identity_t<Scalar> r,
                                   const DareOptions& opts = {}) {
  SPPC_EXPECT(Q.rows() == model.n() && Q.cols() == model.n(), "solve_dare: Q must be n x n");
  if (!is_positive_definite(Q)) throw ConstructionError("solve_dare: Q is not symmetric positive definite");
  SPPC_EXPECT(r > Scalar(0), "solve_dare: r must be > 0");

  Mat<Scalar> P = Q;
  long it = 0;
  for (; it < opts.max_iters; ++it) {
    Mat<Scalar> next = detail::riccati_rhs(model, Q, r, P);
    next = (next + next.transpose()) / Scalar(2);
    const Scalar change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change <= Scalar(opts.step_tol)) {
      ++it;
      break;
    }
  }

  RiccatiSolution<Scalar> sol;
  sol.P = P;
  sol.K = detail::riccati_gain(model, r, P);
  sol.r = r;
  sol.residual = (detail::riccati_rhs(model, Q, r, P) - P).cwiseAbs().maxCoeff();
  sol.iterations = it;
  if (it >= opts.max_iters && sol.residual > Scalar(opts.accept_defect))
    throw ConvergenceError("solve_dare: iteration cap reached, defect " + std::to_string(double(sol.residual)),
                           double(sol.residual));
  return sol;
}

/// Infinity norm of (A+BK)'P(A+BK) - P + Q + r K'K.
template <typename Scalar>
Scalar lyapunov_identity_residual(const PlantModel<Scalar>& model, const std::type_identity_t<Mat<Scalar>>& Q,
                                  const RiccatiSolution<Scalar>& sol) {
  const Mat<Scalar> Acl = model.A() + model.B() * sol.K;
  const Mat<Scalar> defect =
      Acl.transpose() * sol.P * Acl - sol.P + Q + sol.r * sol.K.transpose() * sol.K;
  return inf_norm(defect);
}

template <typename Scalar>
Scalar closed_loop_spectral_radius(const PlantModel<Scalar>& model, const RiccatiSolution<Scalar>& sol) {
  return spectral_radius(Mat<Scalar>(model.A() + model.B() * sol.K));
}

/// epsilon = mu^2 / (4 r)
template <typename Scalar>
Scalar epsilon_from_r(Scalar mu, Scalar r) {
  SPPC_EXPECT(mu > Scalar(0) && r > Scalar(0), "epsilon_from_r: arguments must be > 0");
  return mu * mu / (Scalar(4) * r);
}

/// r = mu^2 / (4 epsilon)
template <typename Scalar>
Scalar r_from_epsilon(Scalar mu, Scalar eps) {
  SPPC_EXPECT(mu > Scalar(0) && eps > Scalar(0), "r_from_epsilon: arguments must be > 0");
  return mu * mu / (Scalar(4) * eps);
}

}  // namespace sppc
