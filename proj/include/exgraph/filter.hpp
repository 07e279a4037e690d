#pragma once

#include <fstream>
#include <sstream>

#include "exgraph/common.hpp"
#include "exgraph/graph.hpp"

namespace exgraph {

/// Polynomial graph filter coefficients h_1..h_L. There is no l = 0 term:
/// the zeroth shift never reaches the incoming node.
struct FilterSpec {
  Vector h;

  Index order() const { return h.size(); }

  void validate() const {
    if (h.size() < 1)
      throw std::invalid_argument("filter: order must be at least 1");
    if (!h.allFinite())
      throw std::invalid_argument("filter: coefficients must be finite");
  }
};

inline FilterSpec geometric_coefficients(double alpha, Index order) {
  if (order < 1)
    throw std::invalid_argument("geometric_coefficients: order must be >= 1");
  Vector h(order);
  double v = 1.0;
  for (Index l = 0; l < order; ++l) {
    v *= alpha;
    h[l] = v;
  }
  return FilterSpec{h};
}

/// Columns [x, A x, ..., A^{L-1} x], built by repeated sparse shifts.
struct ShiftedSignalMatrix {
  Matrix columns;  // N x L

  Index nodes() const { return columns.rows(); }
  Index order() const { return columns.cols(); }
};

inline ShiftedSignalMatrix build_shifted_matrix(const Graph& g,
                                                const GraphSignal& x,
                                                Index order) {
  if (order < 1)
    throw std::invalid_argument("build_shifted_matrix: order must be >= 1");
  if (x.size() != g.size())
    throw std::invalid_argument(
        "build_shifted_matrix: signal length must match node count");
  Matrix cols(g.size(), order);
  cols.col(0) = x;
  for (Index l = 1; l < order; ++l)
    cols.col(l) = g.adjacency() * cols.col(l - 1);
  return ShiftedSignalMatrix{std::move(cols)};
}

/// Filtered-signal vector A_x h; the incoming-node output is a_+^T (A_x h).
inline Vector filtered_signal(const ShiftedSignalMatrix& ax,
                              const FilterSpec& f) {
  f.validate();
  if (ax.order() != f.order())
    throw std::invalid_argument(
        "filtered_signal: filter order must match shifted-matrix width");
  return ax.columns * f.h;
}

inline double interpolate_incoming(const Vector& a_plus,
                                   const ShiftedSignalMatrix& ax,
                                   const FilterSpec& f) {
  if (a_plus.size() != ax.nodes())
    throw std::invalid_argument(
        "interpolate_incoming: attachment length must match node count");
  return a_plus.dot(filtered_signal(ax, f));
}

/// Full filter run on the expanded graph: y = sum_l h_l A_+^l [x; 0].
inline Vector filter_expanded(const ExpandedGraph& eg, const GraphSignal& x,
                              const FilterSpec& f) {
  f.validate();
  if (x.size() != eg.base().size())
    throw std::invalid_argument(
        "filter_expanded: signal length must match base node count");
  Vector z(eg.size());
  z.head(eg.base().size()) = x;
  z[eg.base().size()] = 0.0;
  Vector y = Vector::Zero(eg.size());
  for (Index l = 0; l < f.order(); ++l) {
    z = eg.shift(z);
    y += f.h[l] * z;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Coefficient fitting for observed node values: least squares over
// [sum_l h_l A^l x]_i against targets, with a small ridge.
// ---------------------------------------------------------------------------

struct FilterObservation {
  GraphSignal x;                 // signal the filter runs on
  std::vector<Index> observed;   // node indices with known targets
  Vector targets;                // one target per observed index
};

inline FilterSpec fit_coefficients(const Graph& g,
                                   const std::vector<FilterObservation>& obs,
                                   Index order, double ridge) {
  if (order < 1)
    throw std::invalid_argument("fit_coefficients: order must be >= 1");
  if (ridge < 0.0)
    throw std::invalid_argument("fit_coefficients: ridge must be >= 0");
  std::size_t rows = 0;
  for (const auto& o : obs) {
    if (o.x.size() != g.size())
      throw std::invalid_argument("fit_coefficients: signal length mismatch");
    if (o.targets.size() != static_cast<Index>(o.observed.size()))
      throw std::invalid_argument("fit_coefficients: target count mismatch");
    rows += o.observed.size();
  }
  if (rows == 0)
    throw std::invalid_argument("fit_coefficients: no observed entries");

  Matrix design(static_cast<Index>(rows), order);
  Vector rhs(static_cast<Index>(rows));
  Index row = 0;
  for (const auto& o : obs) {
    // column l-1 holds A^l x restricted to the observed nodes
    Vector shifted = o.x;
    Matrix local(g.size(), order);
    for (Index l = 0; l < order; ++l) {
      shifted = g.adjacency() * shifted;
      local.col(l) = shifted;
    }
    for (std::size_t k = 0; k < o.observed.size(); ++k) {
      design.row(row) = local.row(o.observed[k]);
      rhs[row] = o.targets[static_cast<Index>(k)];
      ++row;
    }
  }

  Matrix gram = design.transpose() * design;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || (ridge == 0.0 && ldlt.rcond() < 1e-12))
    throw IllConditionedError(
        "fit_coefficients: singular normal equations; increase ridge");
  Vector h = ldlt.solve(design.transpose() * rhs);
  return FilterSpec{h};
}

// ---------------------------------------------------------------------------
// Serialization: one line of L space-separated decimals.
// ---------------------------------------------------------------------------

inline void save_filter(const FilterSpec& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (Index i = 0; i < f.order(); ++i)
    out << (i ? " " : "") << fmt_full(f.h[i]);
  out << '\n';
}

inline FilterSpec load_filter(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  Vector h(static_cast<Index>(values.size()));
  for (Index i = 0; i < h.size(); ++i) h[i] = values[static_cast<std::size_t>(i)];
  FilterSpec f{h};
  f.validate();
  return f;
}

}  // namespace exgraph
