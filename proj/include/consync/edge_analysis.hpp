#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "consync/graph.hpp"
#include "consync/sdp.hpp"

namespace consync {

enum class EdgeVerdict {
  kNegativeExists,    // δ = 0: some optimum with the edge has y_new < 0 and t̂* = t*
  kNegativeRequired,  // δ > 0: every optimum has y_new < 0 and t̂* < t*
  kPositiveRequired,  // δ < 0: y_new > 0 and t̂* < t*
};

std::string to_string(EdgeVerdict v);

struct EdgeClassification {
  double indicator = 0.0;  // δ = tr(E Φ₂) − tr(E Φ₁)
  EdgeVerdict verdict = EdgeVerdict::kNegativeExists;
  double zero_tol = 0.0;
  // Which dual pair produced δ (dual certificates are not unique).
  double certificate_trace_phi1 = 0.0;
  double certificate_trace_phi2 = 0.0;
};

double edge_indicator(const Eigen::MatrixXd& Phi1, const Eigen::MatrixXd& Phi2, const Edge& edge,
                      int n);
// Same, rejecting edges that already belong to g.
double edge_indicator(const SdpSolution& sol, const WeightedGraph& g, const Edge& edge);

EdgeClassification classify_edge(double delta, double zero_tol);

// Default tolerance 1e-6·(tr Φ₁ + tr Φ₂).
double default_zero_tol(const SdpSolution& sol);

// Indicator and verdict for `edge` using the certificate in `sol`.
EdgeClassification analyze_edge(const SdpSolution& sol, const WeightedGraph& g, const Edge& edge);

struct VerificationReport {
  bool edge_set_full = false;  // nothing could be added
  double t_old = 0.0;
  double t_new = 0.0;
  double y_new = 0.0;
  bool sign_ok = false;      // y_new has the predicted sign (not checked for kNegativeExists)
  bool relation_ok = false;  // t̂* relation matches the verdict
  bool passed = false;
  std::string message;
};

// Re-solves with the edge added and checks the conclusion attached to the
// verdict.  Under kNegativeExists only t̂* = t* (within 1e-5) is asserted:
// the conclusion is existence of a negative-weight optimum, not that the
// solver returns one.
VerificationReport verify_prediction(const WeightedGraph& g, const Edge& edge,
                                     const EdgeClassification& cls, double t_old,
                                     const SolverParams& params = {});

bool is_complete(const WeightedGraph& g);

void write_edge_report(std::ostream& out, const Edge& edge, const EdgeClassification& cls,
                       const VerificationReport* verification);

}  // namespace consync
