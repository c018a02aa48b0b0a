#include "consync/newton.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "consync/errors.hpp"
#include "consync/svec.hpp"

namespace consync {

namespace {

template <typename Fn>
void for_each_node(int n, bool parallel, Fn&& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (!parallel || n < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  // Each node writes only to its own output slot, so the result does not
  // depend on scheduling.
  std::vector<std::thread> workers;
  const int n_workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(n)));
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&, w] {
      for (int i = w; i < n; i += n_workers) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

Eigen::MatrixXd coupling_sum(const Eigen::MatrixXd& Phi,
                             const std::vector<Eigen::MatrixXd>& neighbor_phis) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(Phi.rows(), Phi.cols());
  for (const auto& Pj : neighbor_phis) sum += Phi - Pj;
  return sum;
}

}  // namespace

Eigen::MatrixXd helmert_basis(int n) {
  if (n < 2) throw InputError("helmert_basis: need n >= 2");
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, n - 1);
  for (int k = 1; k < n; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    V.col(k - 1).head(k).setConstant(s);
    V(k, k - 1) = -k * s;
  }
  return V;
}

Eigen::MatrixXd embed_blocks(const ConstraintSet& cs, const Eigen::MatrixXd& B1,
                             const Eigen::MatrixXd& B2) {
  const int N = cs.n_nodes;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(cs.order, cs.order);
  if (cs.layout == Layout::kFull) {
    M.topLeftCorner(N, N) = B1;
  } else {
    M.topLeftCorner(cs.block1, cs.block1) = cs.basis.transpose() * B1 * cs.basis;
  }
  M.block(cs.block1, cs.block1, N, N) = B2;
  return M;
}

ConstraintSet build_constraints(const WeightedGraph& g, const std::vector<int>& edge_ids,
                                Layout layout, double objective_scale,
                                const std::vector<SignConstraint>& signs) {
  const int N = g.num_nodes();
  if (N < 2) throw InputError("constraint set needs at least two nodes");
  if (!signs.empty() && signs.size() != edge_ids.size()) {
    throw InputError("sign list does not match edge list");
  }
  ConstraintSet cs;
  cs.n_nodes = N;
  cs.layout = layout;
  cs.block1 = layout == Layout::kFull ? N : N - 1;
  cs.basis = layout == Layout::kFull ? Eigen::MatrixXd::Identity(N, N) : helmert_basis(N);
  cs.edge_ids = edge_ids;
  cs.signs = signs.empty() ? std::vector<SignConstraint>(edge_ids.size(), SignConstraint::kFree)
                           : signs;
  cs.objective_scale = objective_scale;
  const int n_slots = static_cast<int>(std::count_if(cs.signs.begin(), cs.signs.end(), [](auto s) {
    return s != SignConstraint::kFree;
  }));
  cs.order = cs.block1 + N + n_slots;

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(N, N);
  std::vector<double> b;
  if (layout == Layout::kFull) {
    cs.y0_index = 0;
    cs.A.push_back(embed_blocks(cs, Eigen::MatrixXd::Ones(N, N), Z));
    b.push_back(0.0);
  }
  cs.t_index = static_cast<int>(cs.A.size());
  cs.A.push_back(embed_blocks(cs, Z, I));
  b.push_back(1.0);
  cs.first_edge = static_cast<int>(cs.A.size());
  int slot = cs.block1 + N;
  for (std::size_t q = 0; q < edge_ids.size(); ++q) {
    const int k = edge_ids[q];
    if (k < 0 || k >= g.num_edges()) throw InputError("edge id out of range");
    const Eigen::MatrixXd E = edge_basis(g.edge(k), N);
    Eigen::MatrixXd Ak = embed_blocks(cs, -E, E);
    if (cs.signs[q] != SignConstraint::kFree) {
      Ak(slot, slot) = cs.signs[q] == SignConstraint::kNonNegative ? -1.0 : 1.0;
      ++slot;
    }
    cs.A.push_back(std::move(Ak));
    b.push_back(0.0);
  }
  cs.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  cs.C = objective_scale * embed_blocks(cs, I, Z);
  cs.A_svec.resize(cs.num_constraints(), svec_dim(cs.order));
  for (int j = 0; j < cs.num_constraints(); ++j) cs.A_svec.row(j) = svec(cs.A[j]).transpose();
  return cs;
}

DualBlocks split_dual(const ConstraintSet& cs, const Eigen::MatrixXd& Phi) {
  const int N = cs.n_nodes;
  DualBlocks out;
  const Eigen::MatrixXd B1 = Phi.topLeftCorner(cs.block1, cs.block1);
  out.Phi1 = cs.layout == Layout::kFull ? B1 : Eigen::MatrixXd(cs.basis * B1 * cs.basis.transpose());
  out.Phi2 = Phi.block(cs.block1, cs.block1, N, N);
  return out;
}

NodeState initial_state(const ConstraintSet& cs, int node_id, double rho, double M) {
  const int N = cs.n_nodes;
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(N, N) - Eigen::MatrixXd::Constant(N, N, 1.0 / N);
  NodeState s;
  s.node_id = node_id;
  s.Phi = embed_blocks(cs, centering / N, Eigen::MatrixXd::Identity(N, N) / N);
  for (int k = cs.block1 + N; k < cs.order; ++k) s.Phi(k, k) = 1.0 / N;
  if (cs.layout == Layout::kFull) {
    // Φ₁ = centering/N is singular; the full layout starts just inside the cone.
    s.Phi.topLeftCorner(N, N) += Eigen::MatrixXd::Identity(N, N) / (N * N);
  }
  s.S = Eigen::MatrixXd::Identity(cs.order, cs.order);
  s.xi = Eigen::VectorXd::Zero(cs.num_constraints());
  s.rho = rho;
  s.M = M;
  return s;
}

double t_mult(const NodeState& s, const ConstraintSet& cs) { return s.xi(cs.t_index); }

double y0_mult(const NodeState& s, const ConstraintSet& cs) {
  // In the reduced layout 𝟙 is outside the model; the smallest admissible
  // value is reported.
  if (cs.y0_index >= 0) return s.xi(cs.y0_index);
  return cs.objective_scale / cs.n_nodes;
}

double y_mult(const NodeState& s, const ConstraintSet& cs, int q) {
  return -s.xi(cs.first_edge + q);
}

NewtonBlocks assemble_node_newton(const NodeState& state, const ConstraintSet& cs,
                                  const std::vector<Eigen::MatrixXd>& neighbor_phis,
                                  double rho) {
  const int n = cs.order;
  if (state.Phi.rows() != n || state.S.rows() != n || state.xi.size() != cs.num_constraints()) {
    throw InputError("node state does not match its constraint set");
  }
  if (!is_positive_definite(state.Phi) || !is_positive_definite(state.S)) {
    throw NumericalError("node " + std::to_string(state.node_id) +
                         ": iterate is not positive definite");
  }
  NewtonBlocks nb;
  nb.m = cs.num_constraints();
  nb.d = static_cast<int>(svec_dim(n));
  const int m = nb.m, d = nb.d;
  const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(d, d);

  nb.coupling_weight = 2.0 * state.M;
  const Eigen::MatrixXd coup = coupling_sum(state.Phi, neighbor_phis);
  nb.r.resize(m + 2 * d);
  nb.r.head(m) = cs.b - cs.A_svec * svec(state.Phi);
  nb.r.segment(m, d) = svec(cs.C) - cs.A_svec.transpose() * state.xi + svec(state.S) -
                       nb.coupling_weight * svec(coup);
  const Eigen::MatrixXd sym = 0.5 * (state.Phi * state.S + state.S * state.Phi);
  nb.r.tail(d) = svec(rho * In - sym);

  nb.s_kron = sym_kron(state.S, In);
  const Eigen::MatrixXd phi_kron = sym_kron(state.Phi, In);
  nb.phi_kron_inv = sym_kron_identity_inverse(state.Phi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.Phi, Eigen::EigenvaluesOnly);
  nb.phi_condition = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();

  nb.Q = Eigen::MatrixXd::Zero(m + 2 * d, m + 2 * d);
  nb.Q.block(0, m, m, d) = cs.A_svec;
  nb.Q.block(m, 0, d, m) = cs.A_svec.transpose();
  nb.Q.block(m, m + d, d, d) = -Id;
  nb.Q.block(m + d, m, d, d) = nb.s_kron;
  nb.Q.block(m + d, m + d, d, d) = phi_kron;

  nb.coupling = Eigen::MatrixXd::Zero(m + 2 * d, m + 2 * d);
  nb.coupling.block(m, m, d, d) = nb.coupling_weight * Id;
  return nb;
}

NewtonRowBlock eliminate_slack(const NewtonBlocks& blocks, int node_index,
                               const std::vector<int>& neighbor_indices, int n_agents) {
  const int m = blocks.m, d = blocks.d, bs = m + d;
  if (node_index < 0 || node_index >= n_agents) throw InputError("node index out of range");
  NewtonRowBlock rb;
  rb.node_index = node_index;
  rb.ill_conditioned = blocks.phi_condition > 1e14;
  rb.Q_hat_rows = Eigen::MatrixXd::Zero(bs, static_cast<Eigen::Index>(n_agents) * bs);
  auto local = rb.Q_hat_rows.block(0, static_cast<Eigen::Index>(node_index) * bs, bs, bs);
  local.block(0, m, m, d) = blocks.Q.block(0, m, m, d);
  local.block(m, 0, d, m) = blocks.Q.block(m, 0, d, m);
  local.block(m, m, d, d) = blocks.phi_kron_inv * blocks.s_kron;
  const double kappa = static_cast<double>(neighbor_indices.size());
  local.block(m, m, d, d).diagonal().array() += kappa * blocks.coupling_weight;
  for (int j : neighbor_indices) {
    if (j < 0 || j >= n_agents || j == node_index) throw InputError("bad neighbour index");
    rb.Q_hat_rows.block(m, static_cast<Eigen::Index>(j) * bs + m, d, d).diagonal().array() -=
        blocks.coupling_weight;
  }
  rb.r_hat.resize(bs);
  rb.r_hat.head(m) = blocks.r_dual();
  rb.r_hat.tail(d) = blocks.r_primal() + blocks.phi_kron_inv * blocks.r_comp();
  return rb;
}

NewtonDirection back_substitute(const NewtonBlocks& blocks, const Eigen::VectorXd& z) {
  const int m = blocks.m, d = blocks.d;
  if (z.size() != m + d) throw InputError("back_substitute: wrong solution length");
  NewtonDirection dir;
  dir.dxi = z.head(m);
  const Eigen::VectorXd dphi = z.tail(d);
  const Eigen::VectorXd ds = blocks.phi_kron_inv * (blocks.r_comp() - blocks.s_kron * dphi);
  dir.dPhi = smat(dphi);
  dir.dS = smat(ds);
  return dir;
}

bool is_positive_definite(const Eigen::MatrixXd& X) {
  if (!X.allFinite()) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(X);
  return llt.info() == Eigen::Success;
}

double max_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D) {
  if (is_positive_definite(X + D)) return 1.0;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (is_positive_definite(X + mid * D)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double local_step_length(const NodeState& state, const NewtonDirection& dir, double tau) {
  return tau * std::min(max_step(state.Phi, dir.dPhi), max_step(state.S, dir.dS));
}

double complementarity(const NodeState& state) {
  return (state.Phi.cwiseProduct(state.S)).sum() / static_cast<double>(state.Phi.rows());
}

double barrier_target(const NodeState& state, double rho_schedule, double theta) {
  const double mu = complementarity(state);
  return std::max(theta * mu, std::min(rho_schedule, mu));
}

std::vector<double> flood_min(std::vector<double> values,
                              const std::vector<std::vector<int>>& neighbors, int* rounds) {
  int changed_rounds = 0;
  for (;;) {
    std::vector<double> next = values;
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (int j : neighbors[i]) next[i] = std::min(next[i], values[j]);
      changed |= next[i] != values[i];
    }
    if (!changed) break;
    values.swap(next);
    ++changed_rounds;
  }
  if (rounds) *rounds = changed_rounds;
  return values;
}

std::vector<Eigen::VectorXd> gather_and_solve(const std::vector<NewtonRowBlock>& rows) {
  Eigen::Index total = 0;
  for (const auto& r : rows) total += r.rows();
  Eigen::MatrixXd Q(total, total);
  Eigen::VectorXd rhs(total);
  Eigen::Index off = 0;
  for (const auto& r : rows) {
    if (r.Q_hat_rows.cols() != total) throw InputError("row blocks do not form a square system");
    Q.middleRows(off, r.rows()) = r.Q_hat_rows;
    rhs.segment(off, r.rows()) = r.r_hat;
    off += r.rows();
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Q);
  Eigen::VectorXd z = lu.solve(rhs);
  const double res = (Q * z - rhs).norm();
  if (!z.allFinite() || res > 1e-6 * (1.0 + rhs.norm())) {
    throw NumericalError("Newton system is singular (residual " + std::to_string(res) + ")");
  }
  return std::vector<Eigen::VectorXd>(rows.size(), z);
}

NodeResiduals node_residuals(const NodeState& state, const ConstraintSet& cs,
                             const std::vector<Eigen::MatrixXd>& neighbor_phis) {
  NodeResiduals r;
  r.dual = (cs.b - cs.A_svec * svec(state.Phi)).norm();
  const Eigen::MatrixXd coup = coupling_sum(state.Phi, neighbor_phis);
  r.primal = (svec(cs.C) - cs.A_svec.transpose() * state.xi + svec(state.S) -
              2.0 * state.M * svec(coup))
                 .norm();
  r.mu = complementarity(state);
  return r;
}

RoundRecord newton_round(std::vector<NodeState>& states, const std::vector<ConstraintSet>& cs,
                         const std::vector<std::vector<int>>& neighbors, double rho_schedule,
                         const RoundOptions& opts) {
  const int n = static_cast<int>(states.size());
  if (cs.size() != states.size() || neighbors.size() != states.size()) {
    throw InputError("newton_round: inconsistent participant lists");
  }
  auto phis_of = [&](int i) {
    std::vector<Eigen::MatrixXd> out;
    for (int j : neighbors[i]) out.push_back(states[j].Phi);
    return out;
  };

  std::vector<NewtonBlocks> blocks(n);
  std::vector<NewtonRowBlock> rows(n);
  std::vector<double> targets(n);
  for_each_node(n, opts.parallel, [&](int i) {
    targets[i] = barrier_target(states[i], rho_schedule, opts.theta);
    blocks[i] = assemble_node_newton(states[i], cs[i], phis_of(i), targets[i]);
    rows[i] = eliminate_slack(blocks[i], i, neighbors[i], n);
  });
  for (const auto& r : rows) {
    if (r.rows() != rows[0].rows()) throw InputError("participants have unequal block sizes");
  }

  const std::vector<Eigen::VectorXd> z = opts.solver(rows);
  const Eigen::Index bs = rows[0].rows();
  std::vector<NewtonDirection> dirs(n);
  std::vector<double> alphas(n);
  for_each_node(n, opts.parallel, [&](int i) {
    dirs[i] = back_substitute(blocks[i], z[i].segment(static_cast<Eigen::Index>(i) * bs, bs));
    alphas[i] = local_step_length(states[i], dirs[i], opts.tau);
  });
  double alpha = flood_min(alphas, neighbors)[0];

  // Guard against a damped step that still lands on the boundary.
  for (;;) {
    std::vector<double> ok(n);
    for_each_node(n, opts.parallel, [&](int i) {
      ok[i] = is_positive_definite(states[i].Phi + alpha * dirs[i].dPhi) &&
                      is_positive_definite(states[i].S + alpha * dirs[i].dS)
                  ? 1.0
                  : 0.0;
    });
    if (flood_min(ok, neighbors)[0] > 0.0) break;
    alpha *= 0.5;
    if (alpha < 1e-14) throw NumericalError("lost positive definiteness: no admissible step");
  }

  for (int i = 0; i < n; ++i) {
    states[i].Phi += alpha * dirs[i].dPhi;
    states[i].S += alpha * dirs[i].dS;
    states[i].Phi = 0.5 * (states[i].Phi + states[i].Phi.transpose()).eval();
    states[i].S = 0.5 * (states[i].S + states[i].S.transpose()).eval();
    states[i].xi += alpha * dirs[i].dxi;
    states[i].rho = targets[i];
  }

  RoundRecord rec;
  rec.rho_schedule = rho_schedule;
  rec.alpha = alpha;
  for (int i = 0; i < n; ++i) {
    const NodeResiduals r = node_residuals(states[i], cs[i], phis_of(i));
    rec.max_mu = std::max(rec.max_mu, r.mu);
    rec.max_dual_residual = std::max(rec.max_dual_residual, r.dual);
    rec.max_primal_residual = std::max(rec.max_primal_residual, r.primal);
    rec.ill_conditioned |= rows[i].ill_conditioned;
    for (int j : neighbors[i]) {
      rec.max_consensus = std::max(rec.max_consensus, (states[i].Phi - states[j].Phi).norm());
    }
  }
  return rec;
}

}  // namespace consync
