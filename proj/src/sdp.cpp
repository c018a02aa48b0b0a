#include "consync/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "consync/errors.hpp"
#include "consync/text_io.hpp"

namespace consync {

namespace {

double min_eig(const Eigen::MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.rows() + B.rows(), A.cols() + B.cols());
  M.topLeftCorner(A.rows(), A.cols()) = A;
  M.bottomRightCorner(B.rows(), B.cols()) = B;
  return M;
}

std::vector<int> all_edges(const WeightedGraph& g) {
  std::vector<int> ids(g.num_edges());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

void randomize_start(NodeState& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto n = s.Phi.rows();
  const double scale = s.Phi.trace() / static_cast<double>(n);
  Eigen::MatrixXd G(n, n), H(n, n);
  for (Eigen::Index i = 0; i < n * n; ++i) G.data()[i] = nd(rng);
  for (Eigen::Index i = 0; i < n * n; ++i) H.data()[i] = nd(rng);
  s.Phi += scale * G * G.transpose() / static_cast<double>(n);
  s.S += H * H.transpose() / static_cast<double>(n);
  for (Eigen::Index i = 0; i < s.xi.size(); ++i) s.xi(i) = 0.1 * nd(rng);
}

}  // namespace

SdpProblem assemble_problem(const WeightedGraph& g) {
  if (!is_connected(g)) throw InputError("graph is not connected; no λ₂ > 0 realization exists");
  const int N = g.num_nodes();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  SdpProblem p{g.without_weights(), N, {}, {}, {}, {}, {}};
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(N, N);
  p.I_hat = block_diag(I, Z);
  p.I_tilde = block_diag(Z, I);
  p.ones_hat = block_diag(Eigen::MatrixXd::Ones(N, N), Z);
  for (const Edge& e : g.edges()) {
    p.basis.push_back(edge_basis(e, N));
    p.E_hat.push_back(block_diag(-p.basis.back(), p.basis.back()));
  }
  return p;
}

void SolverParams::validate() const {
  if (!(rho0 > 0.0)) throw InputError("rho0 must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("theta must lie in (0,1)");
  if (!(eps > 0.0)) throw InputError("eps must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw InputError("tau must lie in (0,1)");
  if (max_iters < 1) throw InputError("max_iters must be at least 1");
  if (!(gap_tol > 0.0) || !(feas_tol > 0.0)) throw InputError("tolerances must be positive");
}

SolverParams read_solver_params(std::istream& in) {
  SolverParams p;
  for (const auto& [key, value] : read_key_values(in)) {
    const std::string where = "parameter '" + key + "'";
    if (key == "rho0") {
      p.rho0 = parse_double(value, where);
    } else if (key == "theta") {
      p.theta = parse_double(value, where);
    } else if (key == "eps") {
      p.eps = parse_double(value, where);
    } else if (key == "tau") {
      p.tau = parse_double(value, where);
    } else if (key == "max_iters") {
      p.max_iters = parse_int(value, where);
    } else if (key == "gap_tol") {
      p.gap_tol = parse_double(value, where);
    } else if (key == "feas_tol") {
      p.feas_tol = parse_double(value, where);
    }
    // Keys belonging to other components (e.g. the distributed run) are ignored.
  }
  p.validate();
  return p;
}

SolverParams read_solver_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open parameter file '" + path + "'");
  return read_solver_params(in);
}

SdpSolution solve_sdp(const SdpProblem& p, const SolverParams& params, const SolveOptions& opts) {
  params.validate();
  const ConstraintSet cs =
      build_constraints(p.graph, all_edges(p.graph), Layout::kReduced, 1.0, opts.signs);
  std::vector<ConstraintSet> sets{cs};
  std::vector<NodeState> states{initial_state(cs, 1, params.rho0, 0.0)};
  if (opts.random_start_seed) randomize_start(states[0], *opts.random_start_seed);
  const std::vector<std::vector<int>> no_neighbors(1);
  RoundOptions ro;
  ro.theta = params.theta;
  ro.tau = params.tau;

  SdpSolution sol;
  sol.signs = cs.signs;
  if (opts.keep_iterates) sol.iterates.push_back(states[0]);
  double rho = params.rho0;
  bool converged = false;
  RoundRecord rec;
  for (int it = 1; it <= params.max_iters; ++it) {
    rec = newton_round(states, sets, no_neighbors, rho, ro);
    // After a short step the iterate is far from the central path; aim less
    // far next time.  Degenerate optima (weights at zero, repeated extreme
    // eigenvalues) otherwise crawl at a linear rate of about 0.75.
    ro.theta = std::max(params.theta, (1.0 - rec.alpha) * (1.0 - rec.alpha));
    const NodeState& s = states[0];
    IterateRecord ir;
    ir.iteration = it;
    ir.rho = s.rho;
    ir.alpha = rec.alpha;
    ir.t = t_mult(s, cs);
    ir.dual_objective = (cs.C.cwiseProduct(s.Phi)).sum();
    ir.mu = rec.max_mu;
    ir.dual_residual = rec.max_dual_residual;
    ir.primal_residual = rec.max_primal_residual;
    sol.trace.push_back(ir);
    if (opts.keep_iterates) sol.iterates.push_back(s);
    sol.iterations = it;
    rho *= params.theta;
    const double gap = rec.max_mu * cs.order;
    if (rho <= params.eps && gap <= params.gap_tol && rec.max_dual_residual <= params.feas_tol &&
        rec.max_primal_residual <= 10.0 * params.feas_tol * (1.0 + std::abs(ir.t))) {
      converged = true;
      break;
    }
  }
  const NodeState& s = states[0];
  sol.dual_residual = rec.max_dual_residual;
  sol.primal_residual = rec.max_primal_residual;
  sol.complementarity = rec.max_mu * cs.order;
  if (!converged) {
    const double worst = std::max({sol.dual_residual, sol.primal_residual, sol.complementarity});
    throw ConvergenceError("interior-point solve did not converge in " +
                               std::to_string(params.max_iters) + " iterations (residual " +
                               format_double(worst, 3) + ")",
                           worst);
  }
  sol.t_star = t_mult(s, cs);
  sol.y.resize(cs.num_edges());
  for (int q = 0; q < cs.num_edges(); ++q) sol.y(q) = y_mult(s, cs, q);
  sol.y0 = y0_mult(s, cs);
  const DualBlocks db = split_dual(cs, s.Phi);
  sol.Phi1 = db.Phi1;
  sol.Phi2 = db.Phi2;
  sol.gap = sol.t_star - sol.Phi1.trace();
  return sol;
}

SdpSolution solve_sdp_nonnegative(const SdpProblem& p, const SolverParams& params) {
  SolveOptions opts;
  opts.signs.assign(p.num_edges(), SignConstraint::kNonNegative);
  return solve_sdp(p, params, opts);
}

double KktReport::max() const {
  return std::max({primal_lower, primal_upper, dual_trace, dual_ones, dual_edges, dual_psd,
                   slackness_lower, slackness_upper, stationarity_phi1, stationarity_phi2,
                   duality_gap, sign});
}

KktReport kkt_residuals(const SdpSolution& sol, const SdpProblem& p) {
  const int N = p.n_nodes;
  KktReport r;
  if (sol.y.size() != p.num_edges() || sol.Phi1.rows() != N || sol.Phi2.rows() != N) {
    throw InputError("solution does not match problem dimensions");
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd J = Eigen::MatrixXd::Ones(N, N);
  Eigen::MatrixXd Ly = Eigen::MatrixXd::Zero(N, N);
  for (int k = 0; k < p.num_edges(); ++k) Ly += sol.y(k) * p.basis[k];

  r.primal_lower = std::max(0.0, -min_eig(Ly - I + sol.y0 * J));
  r.primal_upper = std::max(0.0, -min_eig(sol.t_star * I - Ly));
  r.dual_trace = std::abs(sol.Phi2.trace() - 1.0);
  r.dual_ones = std::abs(sol.Phi1.sum());
  r.dual_psd = std::max({0.0, -min_eig(sol.Phi1), -min_eig(sol.Phi2)});
  double sum1 = 0.0, sum2 = 0.0;
  for (int k = 0; k < p.num_edges(); ++k) {
    const double tr1 = (p.basis[k].cwiseProduct(sol.Phi1)).sum();
    const double tr2 = (p.basis[k].cwiseProduct(sol.Phi2)).sum();
    const double delta = tr2 - tr1;
    const SignConstraint sc =
        sol.signs.empty() ? SignConstraint::kFree : sol.signs[static_cast<std::size_t>(k)];
    switch (sc) {
      case SignConstraint::kFree:
        r.dual_edges = std::max(r.dual_edges, std::abs(delta));
        break;
      case SignConstraint::kNonNegative:
        // y_k ≥ 0 relaxes the equality to δ_k ≥ 0 with y_k δ_k = 0.
        r.dual_edges = std::max(r.dual_edges, std::max(0.0, -delta));
        r.sign = std::max({r.sign, std::max(0.0, -sol.y(k)), std::abs(sol.y(k) * delta)});
        break;
      case SignConstraint::kNonPositive:
        r.dual_edges = std::max(r.dual_edges, std::max(0.0, delta));
        r.sign = std::max({r.sign, std::max(0.0, sol.y(k)), std::abs(sol.y(k) * delta)});
        break;
    }
    sum1 += sol.y(k) * tr1;
    sum2 += sol.y(k) * tr2;
  }
  r.slackness_lower = std::abs(((I - sol.y0 * J - Ly).cwiseProduct(sol.Phi1)).sum());
  r.slackness_upper = std::abs(((Ly - sol.t_star * I).cwiseProduct(sol.Phi2)).sum());
  r.stationarity_phi1 = std::abs(sol.Phi1.trace() - sum1);
  r.stationarity_phi2 = std::abs(sol.t_star - sum2);
  r.duality_gap = std::abs(sol.t_star - sol.Phi1.trace());
  return r;
}

SdpSolution complete_graph_certificate(int n) {
  if (n < 2) throw InputError("complete_graph_certificate: n must be at least 2");
  SdpSolution c;
  const int n_edges = n * (n - 1) / 2;
  c.y = Eigen::VectorXd::Constant(n_edges, 1.0 / n);
  c.t_star = 1.0;
  c.y0 = 1.0 / n;
  c.Phi1 = Eigen::MatrixXd::Constant(n, n, -1.0 / (static_cast<double>(n) * (n - 1)));
  c.Phi1.diagonal().setConstant(1.0 / n);
  c.Phi2 = c.Phi1;
  c.signs.assign(static_cast<std::size_t>(n_edges), SignConstraint::kFree);
  return c;
}

WeightRealization recover_weights(const SdpSolution& sol, const SdpProblem& p) {
  const double norm = sol.y.norm();
  if (!(norm > 0.0)) throw InputError("recover_weights: zero weight vector");
  WeightRealization wr;
  wr.w = sol.y / norm;
  wr.lambda2 = 1.0 / norm;
  wr.lambdaN = sol.t_star / norm;
  const SpectralSummary s = spectrum(laplacian(p.graph, wr.w));
  wr.spectral_ratio = s.synchronizability.value_or(std::numeric_limits<double>::infinity());
  return wr;
}

void write_solution_csv(std::ostream& out, const SdpProblem& p, const SdpSolution& sol) {
  const WeightRealization wr = recover_weights(sol, p);
  out << "i,j,y,w\n";
  for (int k = 0; k < p.num_edges(); ++k) {
    const Edge& e = p.graph.edge(k);
    out << e.i << "," << e.j << "," << format_double(sol.y(k)) << "," << format_double(wr.w(k))
        << "\n";
  }
  out << "\nt_star,lambda2,lambdaN,gap,iterations\n";
  out << format_double(sol.t_star) << "," << format_double(wr.lambda2) << ","
      << format_double(wr.lambdaN) << "," << format_double(sol.gap) << "," << sol.iterations
      << "\n";
}

void write_kkt_report(std::ostream& out, const KktReport& r) {
  out << "residual,value\n";
  auto line = [&](const char* name, double v) { out << name << "," << format_double(v) << "\n"; };
  line("primal_lower", r.primal_lower);
  line("primal_upper", r.primal_upper);
  line("dual_trace", r.dual_trace);
  line("dual_ones", r.dual_ones);
  line("dual_edges", r.dual_edges);
  line("dual_psd", r.dual_psd);
  line("slackness_lower", r.slackness_lower);
  line("slackness_upper", r.slackness_upper);
  line("stationarity_phi1", r.stationarity_phi1);
  line("stationarity_phi2", r.stationarity_phi2);
  line("duality_gap", r.duality_gap);
  line("sign", r.sign);
}

}  // namespace consync
