#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace consync {

// Undirected edge between two 1-based node labels, stored with i < j.
struct Edge {
  int i = 0;
  int j = 0;

  Edge() = default;
  Edge(int a, int b) : i(a < b ? a : b), j(a < b ? b : a) {}
  friend bool operator==(const Edge&, const Edge&) = default;
};

std::string to_string(const Edge& e);

// Node set {1..N}, an ordered edge list and optional per-edge weights.
// Edge order is significant: it is the index order of every per-edge vector
// (weights, SDP variables, reports).
class WeightedGraph {
 public:
  WeightedGraph(int n_nodes, std::vector<Edge> edges,
                std::optional<std::vector<double>> weights = std::nullopt);

  int num_nodes() const { return n_nodes_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int k) const { return edges_[k]; }

  bool has_weights() const { return weights_.has_value(); }
  // Weights if present, otherwise all ones.
  std::vector<double> weights_or_ones() const;
  const std::optional<std::vector<double>>& weights() const { return weights_; }

  std::optional<int> edge_index(const Edge& e) const;
  bool has_edge(const Edge& e) const { return edge_index(e).has_value(); }

  // 0-based edge indices touching `node`, in edge-list order.
  std::vector<int> incident_edges(int node) const;
  // 1-based neighbour labels of `node`, ascending.
  std::vector<int> neighbors(int node) const;
  int degree(int node) const;

  WeightedGraph with_weights(std::vector<double> w) const;
  WeightedGraph without_weights() const;
  // Appends `e` (weight 0 if the graph is weighted).
  WeightedGraph with_edge(const Edge& e) const;

 private:
  int n_nodes_;
  std::vector<Edge> edges_;
  std::optional<std::vector<double>> weights_;
};

struct SpectralSummary {
  Eigen::VectorXd eigenvalues;  // ascending
  double lambda2 = 0.0;
  double lambdaN = 0.0;
  // lambda_N / lambda_2; empty when lambda_2 is numerically zero.
  std::optional<double> synchronizability;
};

// Rank-one basis matrix of edge e in an n-node graph.
Eigen::MatrixXd edge_basis(const Edge& e, int n);

// Sum of weight-scaled edge basis matrices (unit weights when unweighted).
Eigen::MatrixXd laplacian(const WeightedGraph& g);
Eigen::MatrixXd laplacian(const WeightedGraph& g, const Eigen::VectorXd& w);
Eigen::MatrixXd unweighted_laplacian(const WeightedGraph& g);

SpectralSummary spectrum(const Eigen::MatrixXd& L);

// Connectivity of the unweighted topology, decided spectrally.
bool is_connected(const WeightedGraph& g);
// Same question answered by breadth-first search.
bool is_connected_bfs(const WeightedGraph& g);

std::optional<int> regular_degree(const WeightedGraph& g);

// Longest shortest path (hop count); -1 if disconnected.
int diameter(const WeightedGraph& g);

WeightedGraph read_graph(std::istream& in);
WeightedGraph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const WeightedGraph& g);

}  // namespace consync
