#pragma once

#include <random>

#include "sppc/horizon.hpp"
#include "sppc/plant.hpp"
#include "sppc/riccati.hpp"

namespace sppc::testing {

inline MatrixXd example_A() {
  MatrixXd A(4, 4);
  A << 1.2597574, -0.265722, -0.6776537, 1.1712147,  //
      -0.0066489, -0.846387, -0.4174316, 1.1930255,   //
      -0.4610984, -0.1307435, -0.1483141, 0.2842062,  //
      -0.4855527, 0.2480541, 1.8002141, 0.7398921;
  return A;
}

inline VectorXd example_B() {
  VectorXd B(4);
  B << 1.3372142, -2.9903216, 0.9703207, -0.4056704;
  return B;
}

inline PlantModel<double> example_plant() { return {example_A(), example_B()}; }

struct ExampleSetup {
  PlantModel<double> model = example_plant();
  MatrixXd Q = MatrixXd::Identity(4, 4);
  double mu = 100.0;
  double r = 100.0;
  RiccatiSolution<double> ricc = solve_dare(model, Q, r);
  CostConfig<double> cost{5, Q, ricc.P, mu};
  HorizonData<double> hz = build_horizon(model, cost);
};

inline const ExampleSetup& example() {
  static const ExampleSetup setup;
  return setup;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) { return random_matrix(rng, n, 1); }

/// Random SPD matrix with eigenvalues in [0.5, 2.5].
inline MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::HouseholderQR<MatrixXd> qr(random_matrix(rng, n, n));
  const MatrixXd O = qr.householderQ();
  std::uniform_real_distribution<double> eig(0.5, 2.5);
  VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = eig(rng);
  return O * d.asDiagonal() * O.transpose();
}

/// Random reachable plant, rescaled so the spectral radius is below `max_radius`.
inline PlantModel<double> random_plant(std::mt19937_64& rng, Eigen::Index n, double max_radius = 1.6) {
  for (;;) {
    MatrixXd A = random_matrix(rng, n, n);
    const double rad = spectral_radius(A);
    if (rad > max_radius) A *= max_radius / rad;
    VectorXd B = random_vector(rng, n);
    try {
      PlantModel<double> model(A, B);
      Eigen::JacobiSVD<MatrixXd> svd(model.reachability_matrix());
      const auto& s = svd.singularValues();
      if (s(s.size() - 1) / s(0) > 1e-4) return model;
    } catch (const ConstructionError&) {
    }
  }
}

}  // namespace sppc::testing
