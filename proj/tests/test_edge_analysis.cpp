#include <doctest.h>

#include <sstream>

#include "consync/edge_analysis.hpp"
#include "consync/errors.hpp"

using namespace consync;

namespace {

const std::string kFixtures = CONSYNC_FIXTURES;

struct Solved {
  WeightedGraph g;
  SdpSolution sol;
};

Solved solve_fixture(const std::string& name) {
  const WeightedGraph g = read_graph_file(kFixtures + "/" + name).without_weights();
  return {g, solve_sdp(assemble_problem(g))};
}

}  // namespace

TEST_CASE("indicator is tr(EΦ₂) − tr(EΦ₁)") {
  const Solved s = solve_fixture("example2.graph");
  const Edge e(3, 7);
  const Eigen::MatrixXd E = edge_basis(e, 8);
  const double direct = (E * s.sol.Phi2).trace() - (E * s.sol.Phi1).trace();
  CHECK(edge_indicator(s.sol, s.g, e) == doctest::Approx(direct).epsilon(1e-12));
  CHECK_THROWS_AS(edge_indicator(s.sol, s.g, Edge(1, 3)), InputError);
  CHECK_THROWS_AS(edge_indicator(s.sol.Phi1, s.sol.Phi2, Edge(1, 9), 8), InputError);
}

TEST_CASE("classification thresholds") {
  CHECK(classify_edge(0.5, 1e-6).verdict == EdgeVerdict::kNegativeRequired);
  CHECK(classify_edge(-0.5, 1e-6).verdict == EdgeVerdict::kPositiveRequired);
  CHECK(classify_edge(5e-7, 1e-6).verdict == EdgeVerdict::kNegativeExists);
  CHECK(classify_edge(-1e-6, 1e-6).verdict == EdgeVerdict::kNegativeExists);
  CHECK_THROWS_AS(classify_edge(0.1, 0.0), InputError);
  CHECK(to_string(EdgeVerdict::kNegativeRequired) == "NEGATIVE_REQUIRED");
}

TEST_CASE("positive indicator: the new edge must carry a negative weight") {
  const Solved s = solve_fixture("example2.graph");
  const EdgeClassification cls = analyze_edge(s.sol, s.g, Edge(3, 7));
  CHECK(cls.verdict == EdgeVerdict::kNegativeRequired);
  CHECK(cls.indicator > 0.0);
  CHECK(cls.certificate_trace_phi2 == doctest::Approx(1.0));
  const VerificationReport v = verify_prediction(s.g, Edge(3, 7), cls, s.sol.t_star);
  CHECK(v.passed);
  CHECK(v.y_new < 0.0);
  CHECK(v.t_new < v.t_old);
}

TEST_CASE("negative indicator: the new edge must carry a positive weight") {
  // Closing a path into a ring improves the eigenratio with a positive weight.
  const WeightedGraph path(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}});
  const SdpSolution sol = solve_sdp(assemble_problem(path));
  const EdgeClassification cls = analyze_edge(sol, path, Edge(1, 5));
  CHECK(cls.verdict == EdgeVerdict::kPositiveRequired);
  const VerificationReport v = verify_prediction(path, Edge(1, 5), cls, sol.t_star);
  CHECK(v.passed);
  CHECK(v.y_new > 0.0);
}

TEST_CASE("zero indicator: the optimum is unchanged by the new edge") {
  const Solved s = solve_fixture("example1.graph");
  const EdgeClassification cls = analyze_edge(s.sol, s.g, Edge(7, 8));
  CHECK(cls.verdict == EdgeVerdict::kNegativeExists);
  const VerificationReport v = verify_prediction(s.g, Edge(7, 8), cls, s.sol.t_star);
  CHECK(v.passed);
  CHECK(v.t_new == doctest::Approx(v.t_old).epsilon(1e-6));
}

TEST_CASE("complete graphs have no edge left to add") {
  const WeightedGraph k4(4, {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}});
  CHECK(is_complete(k4));
  const VerificationReport v =
      verify_prediction(k4, Edge(1, 2), classify_edge(0.0, 1e-6), 1.0);
  CHECK(v.edge_set_full);
  CHECK_FALSE(v.passed);
}

TEST_CASE("edge report") {
  const Solved s = solve_fixture("example2.graph");
  const EdgeClassification cls = analyze_edge(s.sol, s.g, Edge(3, 7));
  std::ostringstream out;
  write_edge_report(out, Edge(3, 7), cls, nullptr);
  CHECK(out.str().find("verdict NEGATIVE_REQUIRED\n") != std::string::npos);
  CHECK(out.str().rfind("edge 3,7\ndelta ", 0) == 0);
}
