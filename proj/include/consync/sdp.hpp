#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "consync/graph.hpp"
#include "consync/newton.hpp"

namespace consync {

// Edge-weight design problem
//   minimise t  s.t.  I − y₀𝟙𝟙ᵀ ⪯ Σ y_k E_k ⪯ t I
// and its standard-form dual over Φ = diag(Φ₁, Φ₂).
struct SdpProblem {
  WeightedGraph graph;
  int n_nodes = 0;
  std::vector<Eigen::MatrixXd> basis;  // E_k
  Eigen::MatrixXd I_hat;               // diag(I, 0)
  Eigen::MatrixXd I_tilde;             // diag(0, I)
  Eigen::MatrixXd ones_hat;            // diag(𝟙𝟙ᵀ, 0)
  std::vector<Eigen::MatrixXd> E_hat;  // diag(−E_k, E_k)

  int num_edges() const { return static_cast<int>(basis.size()); }
};

SdpProblem assemble_problem(const WeightedGraph& g);

struct SolverParams {
  double rho0 = 1e4;
  double theta = 0.1;
  double eps = 1e-13;
  double tau = 0.98;
  int max_iters = 200;
  double gap_tol = 1e-10;   // tr(ΦS)
  double feas_tol = 1e-10;  // dual residual; primal uses feas_tol·10·(1+|t|)

  void validate() const;
};

SolverParams read_solver_params(std::istream& in);
SolverParams read_solver_params_file(const std::string& path);

struct IterateRecord {
  int iteration = 0;
  double rho = 0.0;
  double alpha = 0.0;
  double t = 0.0;
  double dual_objective = 0.0;
  double mu = 0.0;
  double dual_residual = 0.0;
  double primal_residual = 0.0;
};

struct SolveOptions {
  // Per-edge sign restriction; empty means all free.
  std::vector<SignConstraint> signs;
  // Start from a random strictly interior point instead of the default one.
  std::optional<std::uint64_t> random_start_seed;
  bool keep_iterates = false;
};

struct SdpSolution {
  double t_star = 0.0;
  Eigen::VectorXd y;
  double y0 = 0.0;
  Eigen::MatrixXd Phi1;
  Eigen::MatrixXd Phi2;
  double gap = 0.0;  // t* − tr(Φ₁)
  int iterations = 0;
  double dual_residual = 0.0;
  double primal_residual = 0.0;
  double complementarity = 0.0;  // tr(ΦS)
  std::vector<SignConstraint> signs;
  std::vector<IterateRecord> trace;
  std::vector<NodeState> iterates;  // filled when keep_iterates is set
};

// Centralised primal-dual interior-point solve (AHO direction).  This is the
// one-participant case of the distributed Newton round.
SdpSolution solve_sdp(const SdpProblem& p, const SolverParams& params = {},
                      const SolveOptions& opts = {});

// Convenience: every edge restricted to y_k ≥ 0.
SdpSolution solve_sdp_nonnegative(const SdpProblem& p, const SolverParams& params = {});

struct KktReport {
  double primal_lower = 0.0;     // −λ_min(Σy_kE_k − I + y₀𝟙𝟙ᵀ)⁺
  double primal_upper = 0.0;     // −λ_min(tI − Σy_kE_k)⁺
  double dual_trace = 0.0;       // |tr Φ₂ − 1|
  double dual_ones = 0.0;        // |𝟙ᵀΦ₁𝟙|
  double dual_edges = 0.0;       // max_k |tr(E_kΦ₂) − tr(E_kΦ₁)| (sign-aware)
  double dual_psd = 0.0;         // −λ_min(Φ₁), −λ_min(Φ₂) clipped at 0
  double slackness_lower = 0.0;  // |tr[(I − y₀𝟙𝟙ᵀ − Σy_kE_k)Φ₁]|
  double slackness_upper = 0.0;  // |tr[(Σy_kE_k − tI)Φ₂]|
  double stationarity_phi1 = 0.0;  // |tr Φ₁ − Σy_k tr(E_kΦ₁)|
  double stationarity_phi2 = 0.0;  // |t − Σy_k tr(E_kΦ₂)|
  double duality_gap = 0.0;        // |t − tr Φ₁|
  double sign = 0.0;               // sign-restriction violations

  double max() const;
};

KktReport kkt_residuals(const SdpSolution& sol, const SdpProblem& p);

// Closed-form optimum of the complete graph K_n: y_k = 1/n, t = 1 and
// Φ₁ = Φ₂ with diagonal 1/n, off-diagonal −1/(n(n−1)).
SdpSolution complete_graph_certificate(int n);

struct WeightRealization {
  Eigen::VectorXd w;  // y/‖y‖₂
  double lambda2 = 0.0;
  double lambdaN = 0.0;
  double spectral_ratio = 0.0;  // λ_N/λ₂ of the Laplacian built from w
};

WeightRealization recover_weights(const SdpSolution& sol, const SdpProblem& p);

void write_solution_csv(std::ostream& out, const SdpProblem& p, const SdpSolution& sol);
void write_kkt_report(std::ostream& out, const KktReport& r);

}  // namespace consync
