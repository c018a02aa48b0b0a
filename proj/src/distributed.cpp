#include "consync/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "consync/errors.hpp"
#include "consync/text_io.hpp"

namespace consync {

ConstraintSet local_feasible_projectables(const WeightedGraph& g, int node, Layout layout) {
  if (node < 1 || node > g.num_nodes()) throw InputError("node out of range");
  return build_constraints(g, g.incident_edges(node), layout, 1.0 / g.num_nodes());
}

std::vector<std::vector<int>> neighbor_lists(const WeightedGraph& g) {
  std::vector<std::vector<int>> out(g.num_nodes());
  for (int v = 1; v <= g.num_nodes(); ++v) {
    for (int u : g.neighbors(v)) out[v - 1].push_back(u - 1);
  }
  return out;
}

std::vector<double> min_consensus_alpha(const std::vector<double>& alphas, const WeightedGraph& g,
                                        int* rounds) {
  if (static_cast<int>(alphas.size()) != g.num_nodes()) throw InputError("one α per node expected");
  if (!is_connected_bfs(g)) throw InputError("min_consensus_alpha: graph is not connected");
  return flood_min(alphas, neighbor_lists(g), rounds);
}

ProjectionConsensus::ProjectionConsensus(const std::vector<NewtonRowBlock>& rows,
                                         std::vector<std::vector<int>> neighbors)
    : neighbors_(std::move(neighbors)) {
  if (rows.empty() || rows.size() != neighbors_.size()) {
    throw InputError("projection consensus: one row block and neighbour list per node");
  }
  Eigen::Index total = 0;
  for (const auto& r : rows) total += r.rows();
  Q_.resize(total, total);
  r_.resize(total);
  Eigen::Index off = 0;
  for (const auto& r : rows) {
    if (r.Q_hat_rows.cols() != total) throw InputError("row blocks do not form a square system");
    Q_.middleRows(off, r.rows()) = r.Q_hat_rows;
    r_.segment(off, r.rows()) = r.r_hat;
    off += r.rows();
    A_.push_back(r.Q_hat_rows);
    b_.push_back(r.r_hat);
    gram_.emplace_back(r.Q_hat_rows * r.Q_hat_rows.transpose());
    if (gram_.back().info() != Eigen::Success) throw NumericalError("row block is rank deficient");
    // Minimum-norm solution of the node's own rows.
    x_.push_back(r.Q_hat_rows.transpose() * gram_.back().solve(r.r_hat));
  }
}

Eigen::VectorXd ProjectionConsensus::project(int i, const Eigen::VectorXd& v) const {
  // Orthogonal projection of v onto {x : A_i x = b_i}.
  return v - A_[i].transpose() * gram_[i].solve(A_[i] * v - b_[i]);
}

void ProjectionConsensus::step() {
  std::vector<Eigen::VectorXd> next(x_.size());
  for (std::size_t i = 0; i < x_.size(); ++i) {
    Eigen::VectorXd avg = x_[i];
    for (int j : neighbors_[i]) avg += x_[j];
    avg /= static_cast<double>(neighbors_[i].size() + 1);
    next[i] = project(static_cast<int>(i), avg);
  }
  x_.swap(next);
  ++rounds_;
}

double ProjectionConsensus::max_relative_residual() const {
  const double scale = std::max(r_.norm(), 1e-300);
  double worst = 0.0;
  for (const auto& x : x_) worst = std::max(worst, (Q_ * x - r_).norm() / scale);
  return worst;
}

double ProjectionConsensus::max_disagreement() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    for (int j : neighbors_[i]) worst = std::max(worst, (x_[i] - x_[j]).norm());
  }
  return worst;
}

LinearSolveResult distributed_linear_solve(const std::vector<NewtonRowBlock>& rows,
                                           const std::vector<std::vector<int>>& neighbors,
                                           double tol, int max_iters) {
  if (max_iters < 0) max_iters = 5000 * static_cast<int>(rows.size());
  ProjectionConsensus pc(rows, neighbors);
  LinearSolveResult res;
  for (;;) {
    res.relative_residual = pc.max_relative_residual();
    res.disagreement = pc.max_disagreement();
    if (res.relative_residual <= tol && res.disagreement <= tol) break;
    if (pc.rounds() >= max_iters) {
      throw ConvergenceError("distributed linear solve stopped after " +
                                 std::to_string(pc.rounds()) + " rounds (relative residual " +
                                 format_double(res.relative_residual, 3) + ")",
                             res.relative_residual);
    }
    pc.step();
  }
  res.estimates = pc.estimates();
  res.rounds = pc.rounds();
  return res;
}

void DistributedParams::validate() const {
  if (!(M0 > 0.0)) throw InputError("M0 must be positive");
  if (!(xi > 1.0)) throw InputError("xi must exceed 1");
  if (!(tol > 0.0)) throw InputError("tol must be positive");
  if (!(rho0 > 0.0)) throw InputError("rho0 must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("theta must lie in (0,1)");
  if (!(eps > 0.0)) throw InputError("eps must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("tau must lie in (0,1)");
  if (!(warm_start_blend >= 0.0 && warm_start_blend < 1.0)) {
    throw InputError("warm_start_blend must lie in [0,1)");
  }
  if (max_outer < 1) throw InputError("max_outer must be at least 1");
}

DistributedParams read_distributed_params(std::istream& in) {
  DistributedParams p;
  for (const auto& [key, value] : read_key_values(in)) {
    const std::string where = "parameter '" + key + "'";
    if (key == "M0" || key == "M") {
      p.M0 = parse_double(value, where);
    } else if (key == "xi") {
      p.xi = parse_double(value, where);
    } else if (key == "tol") {
      p.tol = parse_double(value, where);
    } else if (key == "rho0") {
      p.rho0 = parse_double(value, where);
    } else if (key == "theta") {
      p.theta = parse_double(value, where);
    } else if (key == "eps") {
      p.eps = parse_double(value, where);
    } else if (key == "tau") {
      p.tau = parse_double(value, where);
    } else if (key == "warm_start_blend") {
      p.warm_start_blend = parse_double(value, where);
    } else if (key == "max_outer") {
      p.max_outer = parse_int(value, where);
    } else if (key == "parallel") {
      if (value == "true" || value == "1") {
        p.parallel = true;
      } else if (value == "false" || value == "0") {
        p.parallel = false;
      } else {
        throw InputError(where + ": expected true or false, got '" + value + "'");
      }
    } else if (key == "linear_solver") {
      if (value == "gather") {
        p.method = LinearSolveMethod::kGather;
      } else if (value == "projection") {
        p.method = LinearSolveMethod::kProjectionConsensus;
      } else {
        throw InputError(where + ": expected 'gather' or 'projection'");
      }
    } else if (key == "linear_tol") {
      p.linear_tol = parse_double(value, where);
    }
  }
  p.validate();
  return p;
}

DistributedParams read_distributed_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open parameter file '" + path + "'");
  return read_distributed_params(in);
}

Network build_network(const WeightedGraph& g, Layout layout) {
  Network net;
  for (int v = 1; v <= g.num_nodes(); ++v) {
    net.sets.push_back(local_feasible_projectables(g, v, layout));
  }
  net.neighbors = neighbor_lists(g);
  return net;
}

DistributedRunReport run_network(const Network& net, const DistributedParams& params,
                                 const RoundObserver& observer,
                                 std::vector<NodeState>* final_states) {
  params.validate();
  const int n = static_cast<int>(net.sets.size());
  if (n == 0 || static_cast<int>(net.neighbors.size()) != n) {
    throw InputError("network needs one neighbour list per participant");
  }
  std::vector<NodeState> states, initial;
  for (int i = 0; i < n; ++i) states.push_back(initial_state(net.sets[i], i + 1, params.rho0, params.M0));
  initial = states;

  RoundOptions ro;
  ro.theta = params.theta;
  ro.tau = params.tau;
  ro.parallel = params.parallel;
  if (params.method == LinearSolveMethod::kProjectionConsensus) {
    const auto nbrs = net.neighbors;
    const double tol = params.linear_tol;
    ro.solver = [nbrs, tol](const std::vector<NewtonRowBlock>& rows) {
      return distributed_linear_solve(rows, nbrs, tol).estimates;
    };
  }

  DistributedRunReport rep;
  double M = params.M0;
  for (int outer = 1;; ++outer) {
    for (auto& s : states) {
      s.M = M;
    }
    double rho = params.rho0;
    ro.theta = params.theta;
    int inner = 0;
    double consensus = 0.0;
    while (rho > params.eps) {
      RoundRecord rec;
      try {
        rec = newton_round(states, net.sets, net.neighbors, rho, ro);
      } catch (const NumericalError& e) {
        throw ConvergenceError("distributed inner loop diverged at outer " + std::to_string(outer) +
                                   ", inner " + std::to_string(inner + 1) + ", M=" +
                                   format_double(M, 6) + ": " + e.what(),
                               consensus);
      }
      ++inner;
      ++rep.inner_iterations;
      consensus = rec.max_consensus;
      rep.log.push_back({outer, inner, rho, M, rec.alpha, rec.max_consensus,
                         std::max(rec.max_dual_residual, rec.max_primal_residual)});
      if (observer) observer(states, rec);
      rho *= params.theta;
      // Same centering rule as the centralized solver.
      ro.theta = std::max(params.theta, (1.0 - rec.alpha) * (1.0 - rec.alpha));
    }
    rep.outer_iterations = outer;
    rep.consensus_residual = consensus;
    rep.consensus_history.push_back(consensus);
    if (consensus <= params.tol) break;
    if (outer >= params.max_outer) {
      throw ConvergenceError("penalty loop did not reach consensus in " +
                                 std::to_string(params.max_outer) + " outer iterations",
                             consensus);
    }
    M *= params.xi;
    const double beta = params.warm_start_blend;
    for (int i = 0; i < n; ++i) {
      states[i].Phi = (1.0 - beta) * states[i].Phi + beta * initial[i].Phi;
      states[i].S = (1.0 - beta) * states[i].S + beta * initial[i].S;
    }
  }

  int n_edges = 0;
  for (const auto& cs : net.sets) {
    for (int k : cs.edge_ids) n_edges = std::max(n_edges, k + 1);
  }
  rep.summed_y.assign(n_edges, 0.0);
  std::vector<int> holders(n_edges, 0);
  for (int i = 0; i < n; ++i) {
    const ConstraintSet& cs = net.sets[i];
    for (int q = 0; q < cs.num_edges(); ++q) {
      const double y = y_mult(states[i], cs, q);
      rep.per_node_y[states[i].node_id][cs.edge_ids[q]] = y;
      rep.summed_y[cs.edge_ids[q]] += y;
      ++holders[cs.edge_ids[q]];
    }
    rep.t_per_node.push_back(t_mult(states[i], cs));
    rep.t_estimate += rep.t_per_node.back();
  }
  rep.averaged_y.resize(n_edges);
  for (int k = 0; k < n_edges; ++k) {
    rep.averaged_y[k] = holders[k] ? rep.summed_y[k] / holders[k] : 0.0;
  }
  if (final_states) *final_states = states;
  return rep;
}

DistributedRunReport run_distributed(const WeightedGraph& g, const DistributedParams& params,
                                     const RoundObserver& observer) {
  if (!regular_degree(g)) throw InputError("distributed solve requires a κ-regular graph");
  if (!is_connected(g)) throw InputError("distributed solve requires a connected graph");
  return run_network(build_network(g), params, observer);
}

void write_run_log_csv(std::ostream& out, const DistributedRunReport& r) {
  out << "outer_iter,inner_iter,rho,M,alpha,max_consensus_residual,max_kkt_residual\n";
  for (const auto& row : r.log) {
    out << row.outer_iter << "," << row.inner_iter << "," << format_double(row.rho) << ","
        << format_double(row.M) << "," << format_double(row.alpha) << ","
        << format_double(row.max_consensus_residual) << "," << format_double(row.max_kkt_residual)
        << "\n";
  }
}

void write_distributed_report_csv(std::ostream& out, const WeightedGraph& g,
                                  const DistributedRunReport& r) {
  Eigen::VectorXd y(g.num_edges());
  for (int k = 0; k < g.num_edges(); ++k) y(k) = r.summed_y.at(k);
  const double norm = y.norm();
  out << "i,j,y,w,y_node_i,y_node_j\n";
  for (int k = 0; k < g.num_edges(); ++k) {
    const Edge& e = g.edge(k);
    out << e.i << "," << e.j << "," << format_double(y(k)) << ","
        << format_double(norm > 0 ? y(k) / norm : 0.0) << ","
        << format_double(r.per_node_y.at(e.i).at(k)) << ","
        << format_double(r.per_node_y.at(e.j).at(k)) << "\n";
  }
  double l2 = 0.0, lN = 0.0;
  if (norm > 0) {
    const SpectralSummary s = spectrum(laplacian(g, y / norm));
    l2 = s.lambda2;
    lN = s.lambdaN;
  }
  out << "\nt_star,lambda2,lambdaN,consensus_residual,outer_iterations,inner_iterations\n";
  out << format_double(r.t_estimate) << "," << format_double(l2) << "," << format_double(lN) << ","
      << format_double(r.consensus_residual) << "," << r.outer_iterations << ","
      << r.inner_iterations << "\n";
}

}  // namespace consync
