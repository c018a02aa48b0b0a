#include "consync/edge_analysis.hpp"

#include <cmath>
#include <ostream>

#include "consync/errors.hpp"
#include "consync/text_io.hpp"

namespace consync {

std::string to_string(EdgeVerdict v) {
  switch (v) {
    case EdgeVerdict::kNegativeExists:
      return "NEGATIVE_EXISTS";
    case EdgeVerdict::kNegativeRequired:
      return "NEGATIVE_REQUIRED";
    case EdgeVerdict::kPositiveRequired:
      return "POSITIVE_REQUIRED";
  }
  return "UNKNOWN";
}

double edge_indicator(const Eigen::MatrixXd& Phi1, const Eigen::MatrixXd& Phi2, const Edge& edge,
                      int n) {
  if (edge.i < 1 || edge.j > n || edge.i == edge.j) {
    throw InputError("edge " + to_string(edge) + " invalid for " + std::to_string(n) + " nodes");
  }
  if (Phi1.rows() != n || Phi2.rows() != n) throw InputError("certificate size mismatch");
  const int a = edge.i - 1, b = edge.j - 1;
  auto quad = [&](const Eigen::MatrixXd& P) { return P(a, a) + P(b, b) - P(a, b) - P(b, a); };
  return quad(Phi2) - quad(Phi1);
}

double edge_indicator(const SdpSolution& sol, const WeightedGraph& g, const Edge& edge) {
  if (g.has_edge(edge)) throw InputError("edge " + to_string(edge) + " is already in the graph");
  return edge_indicator(sol.Phi1, sol.Phi2, edge, g.num_nodes());
}

EdgeClassification classify_edge(double delta, double zero_tol) {
  if (!(zero_tol > 0.0)) throw InputError("zero_tol must be positive");
  EdgeClassification c;
  c.indicator = delta;
  c.zero_tol = zero_tol;
  if (std::abs(delta) <= zero_tol) {
    c.verdict = EdgeVerdict::kNegativeExists;
  } else if (delta > 0.0) {
    c.verdict = EdgeVerdict::kNegativeRequired;
  } else {
    c.verdict = EdgeVerdict::kPositiveRequired;
  }
  return c;
}

double default_zero_tol(const SdpSolution& sol) {
  return 1e-6 * (sol.Phi1.trace() + sol.Phi2.trace());
}

EdgeClassification analyze_edge(const SdpSolution& sol, const WeightedGraph& g, const Edge& edge) {
  EdgeClassification c = classify_edge(edge_indicator(sol, g, edge), default_zero_tol(sol));
  c.certificate_trace_phi1 = sol.Phi1.trace();
  c.certificate_trace_phi2 = sol.Phi2.trace();
  return c;
}

bool is_complete(const WeightedGraph& g) {
  const int n = g.num_nodes();
  return g.num_edges() == n * (n - 1) / 2;
}

VerificationReport verify_prediction(const WeightedGraph& g, const Edge& edge,
                                     const EdgeClassification& cls, double t_old,
                                     const SolverParams& params) {
  VerificationReport r;
  r.t_old = t_old;
  if (is_complete(g)) {
    r.edge_set_full = true;
    r.message = "edge set is full; no edge can be added";
    return r;
  }
  if (g.has_edge(edge)) throw InputError("edge " + to_string(edge) + " is already in the graph");
  const WeightedGraph augmented = g.without_weights().with_edge(edge);
  const SdpProblem p = assemble_problem(augmented);
  const SdpSolution sol = solve_sdp(p, params);
  r.t_new = sol.t_star;
  r.y_new = sol.y(p.num_edges() - 1);
  switch (cls.verdict) {
    case EdgeVerdict::kNegativeExists:
      r.sign_ok = true;
      r.relation_ok = std::abs(r.t_new - t_old) <= 1e-5;
      r.message = "expected t̂* = t*";
      break;
    case EdgeVerdict::kNegativeRequired:
      r.sign_ok = r.y_new < 0.0;
      r.relation_ok = r.t_new < t_old - 1e-7;
      r.message = "expected y_new < 0 and t̂* < t*";
      break;
    case EdgeVerdict::kPositiveRequired:
      r.sign_ok = r.y_new > 0.0;
      r.relation_ok = r.t_new < t_old - 1e-7;
      r.message = "expected y_new > 0 and t̂* < t*";
      break;
  }
  r.passed = r.sign_ok && r.relation_ok;
  return r;
}

void write_edge_report(std::ostream& out, const Edge& edge, const EdgeClassification& cls,
                       const VerificationReport* v) {
  out << "edge " << edge.i << "," << edge.j << "\n";
  out << "delta " << format_double(cls.indicator) << "\n";
  out << "zero_tol " << format_double(cls.zero_tol) << "\n";
  out << "verdict " << to_string(cls.verdict) << "\n";
  out << "certificate_trace_phi1 " << format_double(cls.certificate_trace_phi1) << "\n";
  out << "certificate_trace_phi2 " << format_double(cls.certificate_trace_phi2) << "\n";
  if (v) {
    if (v->edge_set_full) {
      out << "verification " << v->message << "\n";
      return;
    }
    out << "t_old " << format_double(v->t_old) << "\n";
    out << "t_new " << format_double(v->t_new) << "\n";
    out << "y_new " << format_double(v->y_new) << "\n";
    out << "verification " << (v->passed ? "PASS" : "FAIL") << " (" << v->message << ")\n";
  }
}

}  // namespace consync
