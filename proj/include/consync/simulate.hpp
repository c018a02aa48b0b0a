#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "consync/riccati.hpp"

namespace consync {

// I_N ⊗ A + L ⊗ (BK).
Eigen::MatrixXd closed_loop_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& K, const Eigen::MatrixXd& L);

// Orthonormal T with first column 𝟙/√N and remaining columns eigenvectors of
// L for λ₂…λ_N (each signed so its largest-magnitude entry is positive).
Eigen::MatrixXd modal_basis(const Eigen::MatrixXd& L);

struct ModalSplit {
  Eigen::VectorXd xbar;   // consensus component x̃₁
  Eigen::VectorXd xhat0;  // x̃₂ … x̃_N stacked
};

// (Tᵀ ⊗ I_n) X₀ split into the consensus block and the disagreement modes.
ModalSplit transform_initial(const Eigen::VectorXd& X0, const Eigen::MatrixXd& L, int n);

// Inverse: X₀ = (T ⊗ I_n)[x̃₁; x̂₀].
Eigen::VectorXd initial_from_modes(const Eigen::VectorXd& xhat0, const Eigen::MatrixXd& L, int n,
                                   const Eigen::VectorXd& xbar = {});

// max_{i,j} ‖x_i − x_j‖ over agents of dimension n.
double disagreement(const Eigen::VectorXd& X, int n);

struct SimulationResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> disagreement;
  std::vector<double> u_norm_sq;  // filled by measure_energy
  double J_numeric = 0.0;
  double J_analytic = 0.0;
};

struct IntegrateOptions {
  // Propagate the consensus component 𝟙⊗x̄ and the disagreement component
  // separately, re-projecting both after every step.  Needed when A is
  // unstable: otherwise roundoff seeded into the growing consensus mode
  // swamps a slowly decaying disagreement.  Requires Acl to leave the
  // consensus subspace invariant (true for I⊗A + L⊗BK).
  bool split_consensus = false;
  // Stop at the first grid point where disagreement ≤ stop_decay·initial
  // (0 disables early stopping).
  double stop_decay = 0.0;
};

// Classical RK4 on a fixed grid t_k = k·dt, k = 0…⌈T_f/dt⌉.  For the linear
// system Ẋ = Acl X one RK4 step is the matrix polynomial
// I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24, which is applied directly.
// Throws NumericalError if ‖X‖ exceeds 1e12.
SimulationResult integrate(const Eigen::MatrixXd& Acl, const Eigen::VectorXd& X0, double horizon,
                           double dt, int n, const IntegrateOptions& opts = {});

// Trapezoidal ∫UᵀU dt with U = (L ⊗ K)X.  Requires the final disagreement to
// be below decay_tol times the initial one.
double measure_energy(SimulationResult& traj, const Eigen::MatrixXd& L, const Eigen::MatrixXd& K,
                      double decay_tol = 1e-6);

struct SimulateOptions {
  double dt = 1e-3;
  double max_horizon = 200.0;
  double decay_tol = 1e-6;
};

// Integrates the closed loop with gain K = −(1/λ₂)BᵀP, extending the horizon
// until the disagreement has decayed by decay_tol (or max_horizon), and fills
// J_numeric and J_analytic.
SimulationResult simulate_closed_loop(const SystemModel& sys, const Eigen::MatrixXd& L,
                                      const Eigen::MatrixXd& P, const Eigen::VectorXd& X0,
                                      const SimulateOptions& opts = {});

// Analytic J for Q = εI at each ε, in input order.
std::vector<std::pair<double, double>> epsilon_sweep(const Eigen::MatrixXd& A,
                                                     const Eigen::MatrixXd& B,
                                                     const Eigen::VectorXd& xhat0,
                                                     const Eigen::MatrixXd& L,
                                                     const std::vector<double>& epsilons);

void write_trajectory_csv(std::ostream& out, const SimulationResult& r, int n, int stride = 1);

}  // namespace consync
