#pragma once

#include <Eigen/Eigenvalues>

#include <fstream>
#include <sstream>
#include <tuple>
#include <utility>

#include "exgraph/common.hpp"

namespace exgraph {

/// Weighted adjacency over a fixed node set. Immutable after construction:
/// generators and loaders build it once, everything downstream reads it.
class Graph {
 public:
  Graph(Index n, bool directed,
        const std::vector<Eigen::Triplet<double>>& edges)
      : n_(n), directed_(directed), adjacency_(n, n) {
    if (n <= 0) throw std::invalid_argument("graph needs at least one node");
    std::vector<Eigen::Triplet<double>> all;
    all.reserve(directed ? edges.size() : 2 * edges.size());
    for (const auto& e : edges) {
      if (e.row() < 0 || e.row() >= n || e.col() < 0 || e.col() >= n)
        throw std::invalid_argument("edge endpoint out of range");
      if (e.row() == e.col())
        throw std::invalid_argument("self-loops are not allowed");
      if (!std::isfinite(e.value()))
        throw std::invalid_argument("edge weight must be finite");
      all.push_back(e);
      if (!directed) all.emplace_back(e.col(), e.row(), e.value());
    }
    adjacency_.setFromTriplets(all.begin(), all.end());
    adjacency_.makeCompressed();
  }

  Index size() const { return n_; }
  bool directed() const { return directed_; }
  const SparseMatrix& adjacency() const { return adjacency_; }

  /// Number of stored edges; an undirected edge counts once.
  Index edge_count() const {
    return directed_ ? adjacency_.nonZeros() : adjacency_.nonZeros() / 2;
  }

  Matrix dense_adjacency() const { return Matrix(adjacency_); }

 private:
  Index n_;
  bool directed_;
  SparseMatrix adjacency_;
};

/// Out-weight sums d_i = sum_j A_ij (plain degrees on unweighted graphs).
inline Vector degree_vector(const Graph& g) {
  return g.adjacency() * Vector::Ones(g.size());
}

// ---------------------------------------------------------------------------
// Single-node expansion: the (N+1)-node graph whose extra row is the
// attachment vector and whose extra column is zero (edges land at the
// incoming node only).
// ---------------------------------------------------------------------------

class ExpandedGraph {
 public:
  ExpandedGraph(Graph base, Vector attachment)
      : base_(std::move(base)), attachment_(std::move(attachment)) {
    if (attachment_.size() != base_.size())
      throw std::invalid_argument("attachment length must match node count");
    if (!attachment_.allFinite())
      throw std::invalid_argument("attachment entries must be finite");
  }

  const Graph& base() const { return base_; }
  const Vector& attachment() const { return attachment_; }
  Index size() const { return base_.size() + 1; }

  /// One shift by the expanded adjacency: [A z_head ; a^T z_head].
  Vector shift(const Vector& z) const {
    if (z.size() != size())
      throw std::invalid_argument("signal length must be N+1");
    Vector out(size());
    out.head(base_.size()) = base_.adjacency() * z.head(base_.size());
    out[base_.size()] = attachment_.dot(z.head(base_.size()));
    return out;
  }

  Matrix dense_adjacency() const {
    Index n = base_.size();
    Matrix a = Matrix::Zero(n + 1, n + 1);
    a.topLeftCorner(n, n) = base_.dense_adjacency();
    a.row(n).head(n) = attachment_.transpose();
    return a;
  }

 private:
  Graph base_;
  Vector attachment_;
};

inline ExpandedGraph expand(const Graph& g, const Vector& a_plus) {
  return ExpandedGraph(g, a_plus);
}

// ---------------------------------------------------------------------------
// Random graph generators (deterministic per seed)
// ---------------------------------------------------------------------------

inline Graph erdos_renyi(Index n, double p_edge, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("erdos_renyi: n must be positive");
  if (!(p_edge >= 0.0 && p_edge <= 1.0))
    throw std::invalid_argument("erdos_renyi: p_edge must be in [0,1]");
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (rng.uniform() < p_edge) edges.emplace_back(i, j, 1.0);
  return Graph(n, /*directed=*/false, edges);
}

/// Degree-proportional growth from an m-node seed clique; every arriving
/// node adds m distinct edges. Ties are broken by the RNG.
inline Graph barabasi_albert(Index n, Index m, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("barabasi_albert: n must be positive");
  if (m < 1 || m >= n)
    throw std::invalid_argument("barabasi_albert: need 1 <= m < n");
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> edges;
  // repeats holds each node id once per unit of degree
  std::vector<Index> repeats;
  repeats.reserve(static_cast<std::size_t>(2 * m * n));
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) {
      edges.emplace_back(i, j, 1.0);
      repeats.push_back(i);
      repeats.push_back(j);
    }
  std::vector<char> picked(static_cast<std::size_t>(n), 0);
  for (Index v = m; v < n; ++v) {
    std::vector<Index> targets;
    targets.reserve(static_cast<std::size_t>(m));
    while (static_cast<Index>(targets.size()) < m) {
      Index candidate;
      if (repeats.empty()) {
        // all existing nodes still have degree zero (m = 1 seed)
        candidate = static_cast<Index>(rng.uniform_int(v));
      } else {
        candidate = repeats[rng.uniform_int(repeats.size())];
      }
      if (picked[candidate]) continue;
      picked[candidate] = 1;
      targets.push_back(candidate);
    }
    for (Index t : targets) {
      picked[t] = 0;
      edges.emplace_back(v, t, 1.0);
      repeats.push_back(t);
      repeats.push_back(v);
    }
  }
  return Graph(n, /*directed=*/false, edges);
}

// ---------------------------------------------------------------------------
// Smooth signal synthesis: random combination of the low-frequency Laplacian
// eigenvectors, shifted to zero mean.
// ---------------------------------------------------------------------------

inline GraphSignal smooth_signal(const Graph& g, Index k, std::uint64_t seed) {
  if (g.directed())
    throw std::invalid_argument(
        "smooth_signal: Laplacian eigenbasis needs an undirected graph");
  if (k < 1 || k > g.size())
    throw std::invalid_argument("smooth_signal: need 1 <= k <= N");
  Matrix a = g.dense_adjacency();
  Matrix lap = Matrix(degree_vector(g).asDiagonal()) - a;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(lap);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("smooth_signal: eigendecomposition failed");
  // eigenvalues come out ascending; fix each eigenvector's sign so the
  // largest-magnitude entry is positive
  Rng rng(seed);
  Vector x = Vector::Zero(g.size());
  for (Index i = 0; i < k; ++i) {
    Vector u = solver.eigenvectors().col(i);
    Index arg_max = 0;
    u.cwiseAbs().maxCoeff(&arg_max);
    if (u[arg_max] < 0.0) u = -u;
    x += rng.normal() * u;
  }
  x.array() -= x.mean();
  return x;
}

// ---------------------------------------------------------------------------
// Edge-list serialization: `src<TAB>dst<TAB>weight`, 0-indexed, one edge per
// line; undirected graphs store each edge once (src < dst).
// ---------------------------------------------------------------------------

inline void save_edge_list(const Graph& g, std::ostream& out) {
  const SparseMatrix& a = g.adjacency();
  for (Index i = 0; i < a.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (!g.directed() && it.col() < it.row()) continue;
      out << it.row() << '\t' << it.col() << '\t' << fmt_full(it.value())
          << '\n';
    }
}

inline void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_edge_list(g, out);
}

/// Pass n < 0 to infer the node count as max(id) + 1.
inline Graph load_edge_list(std::istream& in, Index n, bool directed) {
  std::vector<Eigen::Triplet<double>> edges;
  std::string line;
  std::size_t line_no = 0;
  Index max_id = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long long src, dst;
    double weight;
    if (!(fields >> src >> dst >> weight))
      throw ParseError("bad edge line", line_no);
    max_id = std::max(max_id, static_cast<Index>(std::max(src, dst)));
    edges.emplace_back(static_cast<Index>(src), static_cast<Index>(dst),
                       weight);
  }
  return Graph(n < 0 ? max_id + 1 : n, directed, edges);
}

inline Graph load_edge_list(const std::string& path, Index n, bool directed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_edge_list(in, n, directed);
}

// Signal files: one value per line.
inline void save_signal(const GraphSignal& x, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (Index i = 0; i < x.size(); ++i) out << fmt_full(x[i]) << '\n';
}

inline GraphSignal load_signal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  GraphSignal x(static_cast<Index>(values.size()));
  for (Index i = 0; i < x.size(); ++i) x[i] = values[static_cast<std::size_t>(i)];
  return x;
}

}  // namespace exgraph
