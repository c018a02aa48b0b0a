#include <doctest.h>

#include <random>
#include <sstream>

#include "consync/distributed.hpp"
#include "consync/errors.hpp"
#include "consync/sdp.hpp"
#include "oracles.hpp"

using namespace consync;

namespace {

const std::string kFixtures = CONSYNC_FIXTURES;

WeightedGraph from_list(int n, const oracle::EdgeList& list) {
  std::vector<Edge> edges;
  for (const auto& [a, b] : list) edges.emplace_back(a, b);
  return WeightedGraph(n, edges);
}

// A consistent random system split into equal row blocks.
std::vector<NewtonRowBlock> random_rows(std::mt19937_64& rng, int nodes, int block,
                                        Eigen::VectorXd* solution) {
  std::normal_distribution<double> g;
  const int total = nodes * block;
  Eigen::MatrixXd Q(total, total);
  for (auto& x : Q.reshaped()) x = g(rng);
  Q += 3.0 * Eigen::MatrixXd::Identity(total, total);
  Eigen::VectorXd x(total);
  for (auto& v : x) v = g(rng);
  const Eigen::VectorXd r = Q * x;
  std::vector<NewtonRowBlock> rows(nodes);
  for (int i = 0; i < nodes; ++i) {
    rows[i].node_index = i;
    rows[i].Q_hat_rows = Q.middleRows(i * block, block);
    rows[i].r_hat = r.segment(i * block, block);
  }
  if (solution) *solution = x;
  return rows;
}

std::vector<std::vector<int>> ring_neighbors(int n) {
  std::vector<std::vector<int>> nb(n);
  for (int i = 0; i < n; ++i) nb[i] = {(i + 1) % n, (i + n - 1) % n};
  return nb;
}

}  // namespace

TEST_CASE("local constraint sets split the objective evenly") {
  const WeightedGraph c4(4, {{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  const ConstraintSet cs = local_feasible_projectables(c4, 2);
  CHECK(cs.layout == Layout::kFull);
  CHECK(cs.edge_ids == std::vector<int>{0, 1});
  CHECK(cs.objective_scale == doctest::Approx(0.25));
  const Network net = build_network(c4);
  Eigen::MatrixXd C_total = Eigen::MatrixXd::Zero(7, 7);
  for (const auto& s : net.sets) C_total += s.C;
  const ConstraintSet central = build_constraints(c4, {0, 1, 2, 3}, Layout::kReduced);
  CHECK((C_total - central.C).norm() < 1e-14);
  CHECK(net.neighbors[0] == std::vector<int>{1, 3});
}

TEST_CASE("projection consensus solves a consistent split system") {
  std::mt19937_64 rng(3);
  Eigen::VectorXd x;
  const auto rows = random_rows(rng, 3, 2, &x);
  const LinearSolveResult res = distributed_linear_solve(rows, ring_neighbors(3), 1e-10);
  for (const auto& est : res.estimates) CHECK((est - x).norm() < 1e-8 * (1.0 + x.norm()));
  CHECK(res.relative_residual <= 1e-10);
}

TEST_CASE("single participant: projection consensus equals the direct solve") {
  std::mt19937_64 rng(4);
  Eigen::VectorXd x;
  const auto rows = random_rows(rng, 1, 6, &x);
  const LinearSolveResult res = distributed_linear_solve(rows, {{}}, 1e-12);
  CHECK((res.estimates[0] - x).norm() < 1e-10 * (1.0 + x.norm()));
  CHECK((gather_and_solve(rows)[0] - x).norm() < 1e-10 * (1.0 + x.norm()));
}

TEST_CASE("projection consensus: residual never increases") {
  std::mt19937_64 rng(20);
  for (int instance = 0; instance < 20; ++instance) {
    const int nodes = 2 + instance % 4;
    const auto rows = random_rows(rng, nodes, 1 + instance % 3, nullptr);
    ProjectionConsensus pc(rows, ring_neighbors(nodes));
    double prev = pc.max_relative_residual();
    bool monotone = true;
    for (int k = 0; k < 300; ++k) {
      pc.step();
      const double cur = pc.max_relative_residual();
      if (cur > prev * (1.0 + 1e-9) + 1e-15) monotone = false;
      prev = cur;
    }
    CHECK(monotone);
  }
}

TEST_CASE("distributed linear solve gives up after its round cap") {
  std::mt19937_64 rng(6);
  const auto rows = random_rows(rng, 4, 3, nullptr);
  CHECK_THROWS_AS(distributed_linear_solve(rows, ring_neighbors(4), 1e-14, 5), ConvergenceError);
}

TEST_CASE("min-consensus of step lengths") {
  const WeightedGraph c6 = from_list(6, oracle::ring(6));
  int rounds = 0;
  const auto out = min_consensus_alpha({0.9, 0.8, 0.7, 0.3, 0.95, 0.99}, c6, &rounds);
  for (double a : out) CHECK(a == 0.3);
  CHECK(rounds <= diameter(c6));
}

TEST_CASE("ring of four with reference parameters") {
  const WeightedGraph c4 = read_graph_file(kFixtures + "/c4.graph");
  const DistributedParams params = read_distributed_params_file(kFixtures + "/c4_params.txt");
  CHECK(params.M0 == 500.0);
  const DistributedRunReport r = run_distributed(c4, params);
  for (int k = 0; k < 4; ++k) {
    CHECK(r.summed_y[k] == doctest::Approx(0.5).epsilon(1e-2));
    const Edge& e = c4.edge(k);
    CHECK(r.per_node_y.at(e.i).at(k) == doctest::Approx(r.per_node_y.at(e.j).at(k)));
    CHECK(r.averaged_y[k] == doctest::Approx(0.5 * r.summed_y[k]));
  }
  CHECK(r.consensus_residual <= 2e-4);
  CHECK(r.t_estimate == doctest::Approx(2.0).epsilon(1e-2));
  for (std::size_t k = 1; k < r.consensus_history.size(); ++k) {
    CHECK(r.consensus_history[k] <= r.consensus_history[k - 1] + 1e-9);
  }
  CHECK(r.log.size() == static_cast<std::size_t>(r.inner_iterations));
}

TEST_CASE("triangle: edge weights near 1/3 and t near 1") {
  const DistributedRunReport r = run_distributed(from_list(3, oracle::complete(3)));
  for (double y : r.summed_y) CHECK(y == doctest::Approx(1.0 / 3.0).epsilon(1e-2));
  CHECK(r.t_estimate == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("threaded rounds give the same result as sequential ones") {
  const WeightedGraph c4 = from_list(4, oracle::ring(4));
  DistributedParams p;
  const DistributedRunReport seq = run_distributed(c4, p);
  p.parallel = true;
  const DistributedRunReport par = run_distributed(c4, p);
  for (int k = 0; k < 4; ++k) CHECK(par.summed_y[k] == seq.summed_y[k]);
  CHECK(par.consensus_residual == seq.consensus_residual);
}

TEST_CASE("one participant holding every constraint follows the centralized iterates") {
  const WeightedGraph g(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 5}, {2, 4}});
  const ConstraintSet cs = build_constraints(g, {0, 1, 2, 3, 4, 5}, Layout::kReduced);
  const Network net{{cs}, {{}}};
  std::vector<NodeState> rounds;
  run_network(net, DistributedParams{},
              [&](const std::vector<NodeState>& s, const RoundRecord&) { rounds.push_back(s[0]); });
  SolveOptions opts;
  opts.keep_iterates = true;
  const SdpSolution sol = solve_sdp(assemble_problem(g), {}, opts);
  REQUIRE(rounds.size() >= 10);
  REQUIRE(sol.iterates.size() > rounds.size());
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    const NodeState& c = sol.iterates[k + 1];  // iterates[0] is the start
    CHECK((rounds[k].Phi - c.Phi).norm() <= 1e-9 * (1.0 + c.Phi.norm()));
    CHECK((rounds[k].xi - c.xi).norm() <= 1e-9 * (1.0 + c.xi.norm()));
  }
}

TEST_CASE("distributed runs need a connected regular graph") {
  CHECK_THROWS_AS(run_distributed(WeightedGraph(4, {{1, 2}, {2, 3}, {3, 4}})), InputError);
  CHECK_THROWS_AS(
      run_distributed(WeightedGraph(6, {{1, 2}, {2, 3}, {1, 3}, {4, 5}, {5, 6}, {4, 6}})),
      InputError);
}

TEST_CASE("distributed parameters") {
  std::istringstream in("M = 50\nxi = 3\nlinear_solver = projection\nparallel = true\n");
  const DistributedParams p = read_distributed_params(in);
  CHECK(p.M0 == 50.0);
  CHECK(p.xi == 3.0);
  CHECK(p.method == LinearSolveMethod::kProjectionConsensus);
  std::istringstream bad("xi = 0.5\n");
  CHECK_THROWS_AS(read_distributed_params(bad), InputError);
  std::istringstream unknown_solver("linear_solver = magic\n");
  CHECK_THROWS_AS(read_distributed_params(unknown_solver), InputError);
}

TEST_CASE("run log and report files") {
  const WeightedGraph c4 = from_list(4, oracle::ring(4));
  const DistributedRunReport r = run_distributed(c4);
  std::ostringstream log, rep;
  write_run_log_csv(log, r);
  write_distributed_report_csv(rep, c4, r);
  CHECK(log.str().rfind("outer_iter,inner_iter,rho,M,alpha,max_consensus_residual,max_kkt_residual\n",
                        0) == 0);
  CHECK(rep.str().find("1,2,") != std::string::npos);
}
