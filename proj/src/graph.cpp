#include "consync/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "consync/errors.hpp"
#include "consync/text_io.hpp"

namespace consync {

std::string to_string(const Edge& e) {
  return "(" + std::to_string(e.i) + "," + std::to_string(e.j) + ")";
}

WeightedGraph::WeightedGraph(int n_nodes, std::vector<Edge> edges,
                             std::optional<std::vector<double>> weights)
    : n_nodes_(n_nodes), edges_(std::move(edges)), weights_(std::move(weights)) {
  if (n_nodes_ < 1) throw InputError("graph needs at least one node");
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (e.i == e.j) throw InputError("self-loop at node " + std::to_string(e.i));
    if (e.i < 1 || e.j > n_nodes_) {
      throw InputError("edge " + to_string(e) + " outside node range [1," +
                       std::to_string(n_nodes_) + "]");
    }
    for (std::size_t l = 0; l < k; ++l) {
      if (edges_[l] == e) throw InputError("duplicate edge " + to_string(e));
    }
  }
  if (weights_ && weights_->size() != edges_.size()) {
    throw InputError("weight count does not match edge count");
  }
}

std::vector<double> WeightedGraph::weights_or_ones() const {
  if (weights_) return *weights_;
  return std::vector<double>(edges_.size(), 1.0);
}

std::optional<int> WeightedGraph::edge_index(const Edge& e) const {
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (edges_[k] == e) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::vector<int> WeightedGraph::incident_edges(int node) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (edges_[k].i == node || edges_[k].j == node) out.push_back(static_cast<int>(k));
  }
  return out;
}

std::vector<int> WeightedGraph::neighbors(int node) const {
  std::vector<int> out;
  for (const Edge& e : edges_) {
    if (e.i == node) out.push_back(e.j);
    if (e.j == node) out.push_back(e.i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int WeightedGraph::degree(int node) const {
  return static_cast<int>(incident_edges(node).size());
}

WeightedGraph WeightedGraph::with_weights(std::vector<double> w) const {
  return WeightedGraph(n_nodes_, edges_, std::move(w));
}

WeightedGraph WeightedGraph::without_weights() const {
  return WeightedGraph(n_nodes_, edges_);
}

WeightedGraph WeightedGraph::with_edge(const Edge& e) const {
  auto edges = edges_;
  edges.push_back(e);
  std::optional<std::vector<double>> w = weights_;
  if (w) w->push_back(0.0);
  return WeightedGraph(n_nodes_, std::move(edges), std::move(w));
}

Eigen::MatrixXd edge_basis(const Edge& e, int n) {
  if (e.i < 1 || e.j > n || e.i == e.j) {
    throw InputError("edge " + to_string(e) + " invalid for " + std::to_string(n) + " nodes");
  }
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
  const int a = e.i - 1, b = e.j - 1;
  E(a, a) = 1.0;
  E(b, b) = 1.0;
  E(a, b) = -1.0;
  E(b, a) = -1.0;
  return E;
}

Eigen::MatrixXd laplacian(const WeightedGraph& g, const Eigen::VectorXd& w) {
  if (w.size() != g.num_edges()) throw InputError("weight vector has wrong length");
  const int n = g.num_nodes();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < g.num_edges(); ++k) {
    const int a = g.edge(k).i - 1, b = g.edge(k).j - 1;
    L(a, a) += w(k);
    L(b, b) += w(k);
    L(a, b) -= w(k);
    L(b, a) -= w(k);
  }
  return L;
}

Eigen::MatrixXd laplacian(const WeightedGraph& g) {
  const auto w = g.weights_or_ones();
  return laplacian(g, Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
}

Eigen::MatrixXd unweighted_laplacian(const WeightedGraph& g) {
  return laplacian(g, Eigen::VectorXd::Ones(g.num_edges()));
}

SpectralSummary spectrum(const Eigen::MatrixXd& L) {
  if (L.rows() != L.cols() || L.rows() == 0) throw InputError("spectrum: matrix must be square");
  const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
  if ((L - L.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("spectrum: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L, Eigen::EigenvaluesOnly);
  SpectralSummary s;
  s.eigenvalues = es.eigenvalues();
  const auto n = s.eigenvalues.size();
  s.lambda2 = n > 1 ? s.eigenvalues(1) : s.eigenvalues(0);
  s.lambdaN = s.eigenvalues(n - 1);
  const double zero_tol = 1e-9 * std::max(1.0, L.norm());
  if (n > 1 && s.lambda2 > zero_tol) s.synchronizability = s.lambdaN / s.lambda2;
  return s;
}

bool is_connected(const WeightedGraph& g) {
  if (g.num_nodes() == 1) return true;
  return spectrum(unweighted_laplacian(g)).lambda2 > 1e-9;
}

namespace {

std::vector<int> bfs_hops(const WeightedGraph& g, int source) {
  std::vector<int> dist(g.num_nodes() + 1, -1);
  std::queue<int> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : g.neighbors(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

}  // namespace

bool is_connected_bfs(const WeightedGraph& g) {
  const auto d = bfs_hops(g, 1);
  return std::all_of(d.begin() + 1, d.end(), [](int x) { return x >= 0; });
}

std::optional<int> regular_degree(const WeightedGraph& g) {
  const int k = g.degree(1);
  for (int v = 2; v <= g.num_nodes(); ++v) {
    if (g.degree(v) != k) return std::nullopt;
  }
  return k;
}

int diameter(const WeightedGraph& g) {
  int best = 0;
  for (int s = 1; s <= g.num_nodes(); ++s) {
    const auto d = bfs_hops(g, s);
    for (int v = 1; v <= g.num_nodes(); ++v) {
      if (d[v] < 0) return -1;
      best = std::max(best, d[v]);
    }
  }
  return best;
}

WeightedGraph read_graph(std::istream& in) {
  std::string line;
  int n = -1;
  std::vector<Edge> edges;
  std::vector<double> w;
  int weighted_lines = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = tokenize(strip_comment(line));
    if (toks.empty()) continue;
    const std::string where = "graph line " + std::to_string(line_no);
    if (toks[0] == "nodes") {
      if (toks.size() != 2 || n >= 0) throw InputError(where + ": expected a single 'nodes N'");
      n = parse_int(toks[1], where);
    } else if (toks[0] == "edge") {
      if (n < 0) throw InputError(where + ": 'edge' before 'nodes'");
      if (toks.size() != 3 && toks.size() != 4) throw InputError(where + ": expected 'edge i j [w]'");
      edges.emplace_back(parse_int(toks[1], where), parse_int(toks[2], where));
      if (toks.size() == 4) {
        w.push_back(parse_double(toks[3], where));
        ++weighted_lines;
      }
    } else {
      throw InputError(where + ": unknown keyword '" + toks[0] + "'");
    }
  }
  if (n < 0) throw InputError("graph file has no 'nodes' line");
  if (weighted_lines != 0 && weighted_lines != static_cast<int>(edges.size())) {
    throw InputError("graph file mixes weighted and unweighted edges");
  }
  if (weighted_lines == 0) return WeightedGraph(n, std::move(edges));
  return WeightedGraph(n, std::move(edges), std::move(w));
}

WeightedGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open graph file '" + path + "'");
  return read_graph(in);
}

void write_graph(std::ostream& out, const WeightedGraph& g) {
  out << "nodes " << g.num_nodes() << "\n";
  for (int k = 0; k < g.num_edges(); ++k) {
    out << "edge " << g.edge(k).i << " " << g.edge(k).j;
    if (g.has_weights()) out << " " << format_double((*g.weights())[k], 17);
    out << "\n";
  }
}

}  // namespace consync
