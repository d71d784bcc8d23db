#pragma once

#include <type_traits>
#include <string>
#include <vector>

#include "sppc/errors.hpp"
#include "sppc/linalg.hpp"
#include "sppc/plant.hpp"

namespace sppc {

/// Weights of the finite-horizon cost: N-1 stage weights Q, terminal weight P
/// and the l1 weight mu on the packet.
template <typename Scalar>
struct CostConfig {
  Eigen::Index N = 1;
  Mat<Scalar> Q;
  Mat<Scalar> P;
  Scalar mu = Scalar(1);

  void validate(Eigen::Index n) const {
    if (N < 1) throw ConstructionError("cost: horizon N must be >= 1");
    if (Q.rows() != n || Q.cols() != n) throw ConstructionError("cost: Q must be n x n");
    if (P.rows() != n || P.cols() != n) throw ConstructionError("cost: P must be n x n");
    if (!is_positive_definite(Q)) throw ConstructionError("cost: Q is not symmetric positive definite");
    if (!is_positive_definite(P)) throw ConstructionError("cost: P is not symmetric positive definite");
    if (!(mu > Scalar(0))) throw ConstructionError("cost: mu must be > 0");
  }
};

/// Stacked prediction data for the vectorized cost
///   J(U, x) = |G U - H x|^2 + mu |U|_1 + |x|_Q^2.
/// Gram quantities are cached because every solver iteration uses them.
template <typename Scalar>
struct HorizonData {
  Eigen::Index n = 0;
  Eigen::Index N = 0;
  Scalar mu = Scalar(0);
  Mat<Scalar> Q;
  Mat<Scalar> Phi;       // nN x N
  Mat<Scalar> Upsilon;   // nN x n
  Mat<Scalar> Qbar;      // nN x nN
  Mat<Scalar> QbarSqrt;  // nN x nN
  Mat<Scalar> G;         // nN x N
  Mat<Scalar> H;         // nN x n
  Mat<Scalar> Gplus;     // N x nN
  Mat<Scalar> GtG;       // N x N
  Mat<Scalar> GtH;       // N x n
  Scalar lambda_max_gtg = Scalar(0);
  Scalar c = Scalar(0);
};

/// lambda_max(G^T G) by power iteration from the all-ones vector. Falls back
/// to a dense symmetric eigensolver when the iteration stagnates.
template <typename Scalar>
Scalar lipschitz_bound(const Mat<Scalar>& G, Scalar rel_tol = Scalar(1e-10), int max_iters = 10000) {
  SPPC_EXPECT(G.size() > 0, "lipschitz_bound: empty matrix");
  const Mat<Scalar> gram = G.transpose() * G;
  Vec<Scalar> v = Vec<Scalar>::Ones(gram.cols());
  v.normalize();
  Scalar estimate = Scalar(0);
  for (int it = 0; it < max_iters; ++it) {
    Vec<Scalar> w = gram * v;
    const Scalar norm = w.norm();
    if (norm == Scalar(0)) break;  // start vector in the null space
    const Scalar next = v.dot(w);
    v = w / norm;
    if (it > 0 && std::abs(next - estimate) <= rel_tol * std::abs(next)) {
      // Rayleigh quotient converges twice as fast as the vector; confirm the
      // residual so a slow, still-creeping sequence is not taken as converged.
      const Scalar residual = (gram * v - next * v).norm();
      if (residual <= std::sqrt(rel_tol) * std::abs(next)) return next;
    }
    estimate = next;
  }
  return lambda_max(gram);
}

template <typename Scalar>
HorizonData<Scalar> build_horizon(const PlantModel<Scalar>& model, const CostConfig<Scalar>& cfg,
                                  Scalar c_margin = Scalar(0.01)) {
  const Eigen::Index n = model.n();
  cfg.validate(n);
  SPPC_EXPECT(c_margin > Scalar(0), "build_horizon: Lipschitz margin must be > 0");
  const Eigen::Index N = cfg.N;

  HorizonData<Scalar> hz;
  hz.n = n;
  hz.N = N;
  hz.mu = cfg.mu;
  hz.Q = cfg.Q;

  // impulse[k] = A^k B, k = 0..N-1
  std::vector<Vec<Scalar>> impulse(static_cast<size_t>(N));
  impulse[0] = model.B();
  for (Eigen::Index k = 1; k < N; ++k) impulse[k] = model.A() * impulse[k - 1];

  hz.Phi = Mat<Scalar>::Zero(n * N, N);
  hz.Upsilon = Mat<Scalar>::Zero(n * N, n);
  Mat<Scalar> Apow = model.A();
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index l = 0; l <= i; ++l) hz.Phi.block(i * n, l, n, 1) = impulse[i - l];
    hz.Upsilon.block(i * n, 0, n, n) = Apow;
    Apow = model.A() * Apow;
  }

  hz.Qbar = Mat<Scalar>::Zero(n * N, n * N);
  hz.QbarSqrt = Mat<Scalar>::Zero(n * N, n * N);
  const Mat<Scalar> Qroot = symmetric_sqrt(cfg.Q);
  const Mat<Scalar> Proot = symmetric_sqrt(cfg.P);
  for (Eigen::Index i = 0; i < N; ++i) {
    const bool terminal = (i == N - 1);
    hz.Qbar.block(i * n, i * n, n, n) = terminal ? cfg.P : cfg.Q;
    hz.QbarSqrt.block(i * n, i * n, n, n) = terminal ? Proot : Qroot;
  }

  hz.G = hz.QbarSqrt * hz.Phi;
  hz.H = -(hz.QbarSqrt * hz.Upsilon);
  hz.GtG = hz.G.transpose() * hz.G;
  hz.GtH = hz.G.transpose() * hz.H;

  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(hz.G);
  if (qr.rank() != N) throw ConstructionError("horizon: G does not have full column rank");
  hz.Gplus = qr.solve(Mat<Scalar>::Identity(n * N, n * N));

  hz.lambda_max_gtg = lipschitz_bound<Scalar>(hz.G);
  hz.c = (Scalar(1) + c_margin) * hz.lambda_max_gtg;
  return hz;
}

/// Unconstrained least-squares packet G^+ H x.
template <typename Scalar>
Vec<Scalar> least_squares_packet(const HorizonData<Scalar>& hz, const std::type_identity_t<Vec<Scalar>>& x) {
  SPPC_EXPECT(x.size() == hz.n, "least_squares_packet: state dimension mismatch");
  return hz.Gplus * (hz.H * x);
}

/// Vectorized cost |G U - H x|^2 + weight |U|_1 + |x|_Q^2.
template <typename Scalar>
Scalar vector_cost(const HorizonData<Scalar>& hz, const std::type_identity_t<Vec<Scalar>>& U, const std::type_identity_t<Vec<Scalar>>& x,
                   Scalar l1_weight) {
  SPPC_EXPECT(U.size() == hz.N && x.size() == hz.n, "vector_cost: dimension mismatch");
  return (hz.G * U - hz.H * x).squaredNorm() + l1_weight * U.template lpNorm<1>() +
         x.dot(hz.Q * x);
}

template <typename Scalar>
Scalar vector_cost(const HorizonData<Scalar>& hz, const std::type_identity_t<Vec<Scalar>>& U, const std::type_identity_t<Vec<Scalar>>& x) {
  return vector_cost(hz, U, x, hz.mu);
}

/// The same cost evaluated by simulating the predicted states one step at a
/// time: |x(N)|_P^2 + sum_{i<N} |x(i)|_Q^2 + mu sum |u_i|.
template <typename Scalar>
Scalar predicted_cost(const PlantModel<Scalar>& model, const CostConfig<Scalar>& cfg,
                      const std::type_identity_t<Vec<Scalar>>& U, const std::type_identity_t<Vec<Scalar>>& x) {
  SPPC_EXPECT(U.size() == cfg.N && x.size() == model.n(), "predicted_cost: dimension mismatch");
  Scalar total = Scalar(0);
  Vec<Scalar> state = x;
  for (Eigen::Index i = 0; i < cfg.N; ++i) {
    total += state.dot(cfg.Q * state) + cfg.mu * std::abs(U(i));
    state = plant_step(model, state, U(i));
  }
  return total + state.dot(cfg.P * state);
}

}  // namespace sppc
