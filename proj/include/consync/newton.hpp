#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "consync/graph.hpp"

namespace consync {

// How the first (Laplacian-lower-bound) block of the dual variable is stored.
//
// kFull keeps Φ = diag(Φ₁, Φ₂) of order 2N together with the constraint
// tr(𝟙𝟙ᵀΦ₁) = 0.  That constraint forces Φ₁𝟙 = 0, so the dual has no strictly
// feasible point and interior-point iterates drift to a singular Φ₁.
// kReduced writes Φ₁ = VΨ₁Vᵀ with V an orthonormal basis of 𝟙⊥ and drops the
// constraint, giving a problem of order 2N−1 that does have interior points.
enum class Layout { kFull, kReduced };

enum class SignConstraint { kFree, kNonNegative, kNonPositive };

// Orthonormal basis of the complement of 𝟙 in ℝᴺ (Helmert contrasts), N×(N−1).
Eigen::MatrixXd helmert_basis(int n);

// Equality constraints tr(A_j Φ) = b_j plus objective tr(CΦ) held by one
// interior-point participant (the whole problem, or one node's share of it).
struct ConstraintSet {
  int n_nodes = 0;
  Layout layout = Layout::kReduced;
  int order = 0;            // order of Φ and S
  int block1 = 0;           // order of the first diagonal block (N or N−1)
  Eigen::MatrixXd basis;    // N×block1 lifting of block 1 (identity for kFull)
  std::vector<Eigen::MatrixXd> A;
  Eigen::MatrixXd A_svec;   // m × svec_dim(order); row j is svec(A_j)ᵀ
  Eigen::VectorXd b;
  Eigen::MatrixXd C;
  int y0_index = -1;        // constraint row of 𝟙̂ (kFull only)
  int t_index = 0;          // constraint row of Ĩ
  int first_edge = 1;       // constraint row of the first Ê_k
  std::vector<int> edge_ids;        // global edge index per Ê row
  std::vector<SignConstraint> signs;  // per Ê row
  double objective_scale = 1.0;     // C = objective_scale · Î

  int num_constraints() const { return static_cast<int>(A.size()); }
  int num_edges() const { return static_cast<int>(edge_ids.size()); }
};

// Builds the constraints for the listed edges of g.  Row order follows the
// standard-form dual: [𝟙̂ (kFull only), Ĩ, Ê_k …].  Sign-constrained edges get
// an extra 1×1 diagonal slot whose entry is the slack δ_k (y_k ≥ 0) or −δ_k
// (y_k ≤ 0).
ConstraintSet build_constraints(const WeightedGraph& g, const std::vector<int>& edge_ids,
                                Layout layout, double objective_scale = 1.0,
                                const std::vector<SignConstraint>& signs = {});

// Places (B1, B2) on the diagonal of an order-`cs.order` matrix, projecting
// B1 through the basis.
Eigen::MatrixXd embed_blocks(const ConstraintSet& cs, const Eigen::MatrixXd& B1,
                             const Eigen::MatrixXd& B2);

struct DualBlocks {
  Eigen::MatrixXd Phi1;  // N×N, lifted back to node coordinates
  Eigen::MatrixXd Phi2;  // N×N
};
DualBlocks split_dual(const ConstraintSet& cs, const Eigen::MatrixXd& Phi);

// One participant's interior-point iterate.  xi holds the multipliers in
// constraint-row order; edge weights are y_k = −xi(edge row).
struct NodeState {
  int node_id = 1;
  Eigen::MatrixXd Phi;
  Eigen::MatrixXd S;
  Eigen::VectorXd xi;
  double rho = 0.0;
  double M = 0.0;
};

// Φ₁ = centering/N, Φ₂ = I/N (Ψ₁ = I/N in the reduced layout), slots 1/N,
// S = I, multipliers zero.
NodeState initial_state(const ConstraintSet& cs, int node_id, double rho, double M);

double t_mult(const NodeState& s, const ConstraintSet& cs);
double y0_mult(const NodeState& s, const ConstraintSet& cs);
double y_mult(const NodeState& s, const ConstraintSet& cs, int q);

struct NewtonBlocks {
  int m = 0;  // multipliers
  int d = 0;  // svec dimension
  Eigen::MatrixXd Q;         // (m+2d)² local block, unknowns [Δξ; svecΔΦ; svecΔS]
  Eigen::MatrixXd coupling;  // (m+2d)², 2M·I at the (ΔΦ rows, ΔΦ cols) position
  Eigen::VectorXd r;         // [r_dual; r_primal; r_comp]
  Eigen::MatrixXd phi_kron_inv;  // (Φ ⊗ₛ I)⁻¹
  Eigen::MatrixXd s_kron;        // S ⊗ₛ I
  double coupling_weight = 0.0;  // 2M
  double phi_condition = 1.0;

  Eigen::VectorXd r_dual() const { return r.head(m); }
  Eigen::VectorXd r_primal() const { return r.segment(m, d); }
  Eigen::VectorXd r_comp() const { return r.tail(d); }
};

// Linearisation of
//   𝒜 svecΦ = b,
//   𝒜ᵀξ − svecS + 2M Σ_{j∈N(i)} svec(Φ − Φ_j) = svecC,
//   ½(ΦS + SΦ) = ρI
// at `state`.  The global matrix row of node i is Q + κ·coupling on the
// diagonal and −coupling for each neighbour.
NewtonBlocks assemble_node_newton(const NodeState& state, const ConstraintSet& cs,
                                  const std::vector<Eigen::MatrixXd>& neighbor_phis,
                                  double rho);

// Node i's rows of the slack-eliminated global system (unknowns [Δξ; svecΔΦ]
// for every node, in node order).
struct NewtonRowBlock {
  int node_index = 0;
  Eigen::MatrixXd Q_hat_rows;
  Eigen::VectorXd r_hat;
  bool ill_conditioned = false;  // cond(Φ ⊗ₛ I) > 1e14

  Eigen::Index rows() const { return Q_hat_rows.rows(); }
};

NewtonRowBlock eliminate_slack(const NewtonBlocks& blocks, int node_index,
                               const std::vector<int>& neighbor_indices, int n_agents);

struct NewtonDirection {
  Eigen::VectorXd dxi;
  Eigen::MatrixXd dPhi;
  Eigen::MatrixXd dS;
};

// Recovers ΔS = (Φ⊗ₛI)⁻¹(r_comp − (S⊗ₛI)ΔΦ) from a solution [Δξ; svecΔΦ].
NewtonDirection back_substitute(const NewtonBlocks& blocks, const Eigen::VectorXd& z);

bool is_positive_definite(const Eigen::MatrixXd& X);

// Largest α ∈ [0,1] with X + αD positive definite, by Cholesky bisection
// (resolution 1e-12).  X must be positive definite.
double max_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D);

// Synchronous min-flooding: each round every node takes the minimum over its
// closed neighbourhood, until a round changes nothing.  Returns per-node
// values (all equal to the global minimum on a connected topology) and the
// number of rounds that changed something.
std::vector<double> flood_min(std::vector<double> values,
                              const std::vector<std::vector<int>>& neighbors,
                              int* rounds = nullptr);

// τ · min(max_step(Φ, ΔΦ), max_step(S, ΔS)).
double local_step_length(const NodeState& state, const NewtonDirection& dir, double tau = 0.98);

// Barrier target for a step: follow the schedule, but never ask for more
// than a factor 1/θ reduction of the current complementarity μ = tr(ΦS)/n.
// Without this floor the AHO direction loses centrality and stalls.
double barrier_target(const NodeState& state, double rho_schedule, double theta);

double complementarity(const NodeState& state);  // tr(ΦS)/order

// Solves the stacked row blocks; returns one estimate of the full solution per
// node (identical for exact methods).
using LinearSolver =
    std::function<std::vector<Eigen::VectorXd>(const std::vector<NewtonRowBlock>&)>;

// Every node floods its row block to all others (diameter rounds), after which
// each node holds the full system and solves it with the same dense LU.  The
// solve is therefore computed once and shared.
std::vector<Eigen::VectorXd> gather_and_solve(const std::vector<NewtonRowBlock>& rows);

struct RoundOptions {
  double theta = 0.1;
  double tau = 0.98;
  bool parallel = false;
  LinearSolver solver = gather_and_solve;
};

struct RoundRecord {
  double rho_schedule = 0.0;
  double alpha = 0.0;
  double max_mu = 0.0;           // max tr(ΦS)/n over nodes after the step
  double max_dual_residual = 0.0;
  double max_primal_residual = 0.0;
  double max_consensus = 0.0;    // max ‖Φ_i − Φ_j‖_F over neighbours after the step
  bool ill_conditioned = false;
};

// One synchronous Newton round over all participants: assemble, eliminate,
// solve, back-substitute, agree on the smallest step length, update.
// Throws NumericalError if no positive step keeps every iterate definite.
RoundRecord newton_round(std::vector<NodeState>& states, const std::vector<ConstraintSet>& cs,
                         const std::vector<std::vector<int>>& neighbors, double rho_schedule,
                         const RoundOptions& opts);

// Residual norms of a participant without forming the Newton system.
struct NodeResiduals {
  double dual = 0.0;
  double primal = 0.0;
  double mu = 0.0;
};
NodeResiduals node_residuals(const NodeState& state, const ConstraintSet& cs,
                             const std::vector<Eigen::MatrixXd>& neighbor_phis);

}  // namespace consync
