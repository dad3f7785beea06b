#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace robggm {

using Edge = std::pair<int, int>;

// Undirected graph on vertices 0..p-1 with optional vertex labels.
// Edges are stored sorted with i < j in each pair, so iteration order and
// everything derived from it is deterministic.
class Graph {
 public:
  Graph(int p, std::vector<Edge> edges, std::vector<std::string> labels = {})
      : p_(p), labels_(std::move(labels)) {
    if (p < 1) throw DimensionMismatch("graph needs at least one vertex");
    if (labels_.empty()) {
      labels_.reserve(p);
      for (int i = 0; i < p; ++i) labels_.push_back("V" + std::to_string(i + 1));
    }
    if (static_cast<int>(labels_.size()) != p)
      throw DimensionMismatch("graph: " + std::to_string(labels_.size()) +
                              " labels for " + std::to_string(p) + " vertices");
    edges_.reserve(edges.size());
    for (auto [i, j] : edges) {
      if (i == j) continue;
      if (i < 0 || j < 0 || i >= p || j >= p)
        throw DimensionMismatch("graph: edge endpoint out of range");
      edges_.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  static Graph full(int p, std::vector<std::string> labels = {}) {
    std::vector<Edge> e;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) e.emplace_back(i, j);
    return Graph(p, std::move(e), std::move(labels));
  }

  static Graph with_no_edges(int p, std::vector<std::string> labels = {}) {
    return Graph(p, {}, std::move(labels));
  }

  int vertex_count() const { return p_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::string>& labels() const { return labels_; }

  bool has_edge(int i, int j) const {
    if (i == j) return false;
    Edge e{std::min(i, j), std::max(i, j)};
    return std::binary_search(edges_.begin(), edges_.end(), e);
  }

  std::vector<Edge> missing_edges() const {
    std::vector<Edge> out;
    for (int i = 0; i < p_; ++i)
      for (int j = i + 1; j < p_; ++j)
        if (!has_edge(i, j)) out.emplace_back(i, j);
    return out;
  }

  int edge_count() const { return static_cast<int>(edges_.size()); }

  // Number of absent edges q, the degrees of freedom of the deviance test.
  int missing_edge_count() const {
    return p_ * (p_ - 1) / 2 - static_cast<int>(edges_.size());
  }

  Graph without_edge(int i, int j) const {
    Edge target{std::min(i, j), std::max(i, j)};
    std::vector<Edge> e;
    e.reserve(edges_.size());
    for (const auto& ed : edges_)
      if (ed != target) e.push_back(ed);
    return Graph(p_, std::move(e), labels_);
  }

  Eigen::MatrixXi adjacency() const {
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(p_, p_);
    for (auto [i, j] : edges_) {
      m(i, j) = 1;
      m(j, i) = 1;
    }
    return m;
  }

 private:
  int p_;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
};

// Build a graph from a 0/1 adjacency matrix. The matrix must be square and
// symmetric; diagonal entries are ignored (a vertex is never its own
// neighbour) but still have to be 0 or 1.
inline Graph parse_adjacency(const Eigen::MatrixXi& m,
                             std::vector<std::string> labels = {}) {
  if (m.rows() != m.cols())
    throw DimensionMismatch("adjacency matrix must be square, got " +
                            std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  const int p = static_cast<int>(m.rows());
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (m(i, j) != 0 && m(i, j) != 1)
        throw NonBinaryEntry("adjacency entry (" + std::to_string(i + 1) +
                             "," + std::to_string(j + 1) + ") is " +
                             std::to_string(m(i, j)));
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (m(i, j) != m(j, i))
        throw NotSymmetric("adjacency entries (" + std::to_string(i + 1) +
                           "," + std::to_string(j + 1) + ") and transpose differ");
  std::vector<Edge> e;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (m(i, j) == 1) e.emplace_back(i, j);
  return Graph(p, std::move(e), std::move(labels));
}

// Graphviz rendering. Vertex labels become quoted node identifiers; when an
// edge weight matrix is supplied each edge gets a two-decimal label, which
// is how fitted partial correlations are usually displayed.
inline std::string to_dot(const Graph& g,
                          const SymMatrix* edge_weights = nullptr) {
  if (edge_weights && edge_weights->dim() != g.vertex_count())
    throw DimensionMismatch("to_dot: weight matrix dimension " +
                            std::to_string(edge_weights->dim()) +
                            " vs graph order " +
                            std::to_string(g.vertex_count()));
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += '"';
    return out;
  };
  std::string dot = "graph G {\n";
  for (const auto& lab : g.labels()) dot += "  " + quote(lab) + ";\n";
  for (auto [i, j] : g.edges()) {
    dot += "  " + quote(g.labels()[i]) + " -- " + quote(g.labels()[j]);
    if (edge_weights) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", (*edge_weights)(i, j));
      dot += " [label=\"";
      dot += buf;
      dot += "\"]";
    }
    dot += ";\n";
  }
  dot += "}\n";
  return dot;
}

}  // namespace robggm
