#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "consync/graph.hpp"
#include "consync/newton.hpp"

namespace consync {

// Node i's share of the dual: Ĩ, 𝟙̂ (full layout only) and Ê_k for the edges
// incident to i, with objective Î/N.
ConstraintSet local_feasible_projectables(const WeightedGraph& g, int node,
                                          Layout layout = Layout::kFull);

// 0-based neighbour indices for every node.
std::vector<std::vector<int>> neighbor_lists(const WeightedGraph& g);

// Min-flooding of step lengths; every node ends with min_i α_i.
std::vector<double> min_consensus_alpha(const std::vector<double>& alphas, const WeightedGraph& g,
                                        int* rounds = nullptr);

// Projection-consensus iteration for a linear system whose rows are split
// across nodes: node i starts from the minimum-norm solution of its own rows
// and repeatedly replaces its estimate by the projection of its closed
// neighbourhood average onto its own solution set.
class ProjectionConsensus {
 public:
  ProjectionConsensus(const std::vector<NewtonRowBlock>& rows,
                      std::vector<std::vector<int>> neighbors);

  void step();
  const std::vector<Eigen::VectorXd>& estimates() const { return x_; }
  // max_i ‖Q x_i − r‖ / ‖r‖
  double max_relative_residual() const;
  double max_disagreement() const;
  int rounds() const { return rounds_; }

 private:
  Eigen::VectorXd project(int i, const Eigen::VectorXd& v) const;

  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::VectorXd> b_;
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> gram_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<Eigen::VectorXd> x_;
  Eigen::MatrixXd Q_;
  Eigen::VectorXd r_;
  int rounds_ = 0;
};

struct LinearSolveResult {
  std::vector<Eigen::VectorXd> estimates;
  int rounds = 0;
  double relative_residual = 0.0;
  double disagreement = 0.0;
};

// Runs ProjectionConsensus until every estimate has relative residual ≤ tol
// and neighbours disagree by ≤ tol; ConvergenceError after max_iters rounds.
LinearSolveResult distributed_linear_solve(const std::vector<NewtonRowBlock>& rows,
                                           const std::vector<std::vector<int>>& neighbors,
                                           double tol = 1e-10, int max_iters = -1);

enum class LinearSolveMethod { kGather, kProjectionConsensus };

struct DistributedParams {
  double M0 = 500.0;
  double xi = 2.0;  // penalty growth factor per outer iteration
  double tol = 2e-4;
  double rho0 = 1e4;
  double theta = 0.1;
  double eps = 1e-13;
  double tau = 0.98;
  // Warm starts move this fraction of the way back toward the initial point;
  // restarting exactly on the previous (nearly complementary) iterate stalls.
  double warm_start_blend = 0.1;
  int max_outer = 30;
  bool parallel = false;
  LinearSolveMethod method = LinearSolveMethod::kGather;
  double linear_tol = 1e-10;

  void validate() const;
};

DistributedParams read_distributed_params(std::istream& in);
DistributedParams read_distributed_params_file(const std::string& path);

struct RunLogRow {
  int outer_iter = 0;
  int inner_iter = 0;
  double rho = 0.0;
  double M = 0.0;
  double alpha = 0.0;
  double max_consensus_residual = 0.0;
  double max_kkt_residual = 0.0;
};

struct DistributedRunReport {
  // node → global edge index → that node's multiplier for the edge
  std::map<int, std::map<int, double>> per_node_y;
  std::vector<double> summed_y;    // y_k⁽ⁱ⁾ + y_k⁽ʲ⁾: the edge weight
  std::vector<double> averaged_y;  // ½(y_k⁽ⁱ⁾ + y_k⁽ʲ⁾)
  std::vector<double> t_per_node;
  double t_estimate = 0.0;         // Σ_i t⁽ⁱ⁾
  double consensus_residual = 0.0;
  std::vector<double> consensus_history;  // one entry per outer iteration
  int outer_iterations = 0;
  int inner_iterations = 0;
  std::vector<RunLogRow> log;
};

struct Network {
  std::vector<ConstraintSet> sets;
  std::vector<std::vector<int>> neighbors;
};

Network build_network(const WeightedGraph& g, Layout layout = Layout::kReduced);

using RoundObserver = std::function<void(const std::vector<NodeState>&, const RoundRecord&)>;

// Penalty (SUMT) loop over an arbitrary network of participants.
DistributedRunReport run_network(const Network& net, const DistributedParams& params,
                                 const RoundObserver& observer = {},
                                 std::vector<NodeState>* final_states = nullptr);

// Requires a connected κ-regular graph.
DistributedRunReport run_distributed(const WeightedGraph& g, const DistributedParams& params = {},
                                     const RoundObserver& observer = {});

void write_run_log_csv(std::ostream& out, const DistributedRunReport& r);
void write_distributed_report_csv(std::ostream& out, const WeightedGraph& g,
                                  const DistributedRunReport& r);

}  // namespace consync
