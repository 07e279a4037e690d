#pragma once

#include <fstream>
#include <sstream>

#include "exgraph/common.hpp"
#include "exgraph/graph.hpp"

namespace exgraph {

/// Stochastic attachment parameters for an incoming node: per existing node,
/// an independent edge-formation probability and the weight the edge carries
/// if it forms. Weights live in the box [0, w_max].
struct AttachmentModel {
  Vector p;
  Vector w;
  double w_max = 1.0;

  Index size() const { return p.size(); }

  void validate() const {
    if (p.size() != w.size())
      throw std::invalid_argument("attachment model: p and w lengths differ");
    if (!(w_max > 0.0) || !std::isfinite(w_max))
      throw std::invalid_argument("attachment model: w_max must be positive");
    for (Index i = 0; i < p.size(); ++i) {
      if (!(p[i] >= 0.0 && p[i] <= 1.0))
        throw std::invalid_argument("attachment model: p outside [0,1]");
      if (!(w[i] >= 0.0 && w[i] <= w_max))
        throw std::invalid_argument("attachment model: w outside [0,w_max]");
    }
  }
};

/// One realized attachment: the weighted vector and its binary pattern.
struct AttachmentSample {
  Vector a_plus;
  Vector b_plus;
};

inline AttachmentSample sample(const AttachmentModel& model,
                               std::uint64_t seed) {
  model.validate();
  Rng rng(seed);
  Index n = model.size();
  AttachmentSample out{Vector::Zero(n), Vector::Zero(n)};
  for (Index i = 0; i < n; ++i) {
    if (rng.uniform() < model.p[i]) {
      out.b_plus[i] = 1.0;
      out.a_plus[i] = model.w[i];
    }
  }
  return out;
}

/// E[a_+] = p ∘ w.
inline Vector mean(const AttachmentModel& model) {
  return model.p.cwiseProduct(model.w);
}

/// Diagonal of the attachment covariance: w^2 ∘ p ∘ (1-p). Off-diagonals
/// vanish by independence, so the diagonal is the whole matrix.
inline Vector covariance_diag(const AttachmentModel& model) {
  return model.w.cwiseAbs2()
      .cwiseProduct(model.p)
      .cwiseProduct(Vector::Ones(model.size()) - model.p);
}

/// Expected adjacency of the expanded graph: base block unchanged, bottom
/// row (p ∘ w)^T, zero last column.
inline Matrix expected_expanded_adjacency(const Graph& g,
                                          const AttachmentModel& model) {
  if (model.size() != g.size())
    throw std::invalid_argument(
        "expected_expanded_adjacency: model length must match node count");
  Index n = g.size();
  Matrix a = Matrix::Zero(n + 1, n + 1);
  a.topLeftCorner(n, n) = g.dense_adjacency();
  a.row(n).head(n) = mean(model).transpose();
  return a;
}

// ---------------------------------------------------------------------------
// Text serialization: header `w_max=<value>`, then p and w as two lines of
// space-separated decimals.
// ---------------------------------------------------------------------------

inline void save_model(const AttachmentModel& model, std::ostream& out) {
  out << "w_max=" << fmt_full(model.w_max) << '\n';
  for (Index i = 0; i < model.size(); ++i)
    out << (i ? " " : "") << fmt_full(model.p[i]);
  out << '\n';
  for (Index i = 0; i < model.size(); ++i)
    out << (i ? " " : "") << fmt_full(model.w[i]);
  out << '\n';
}

inline void save_model(const AttachmentModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_model(model, out);
}

inline AttachmentModel load_model(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("w_max=", 0) != 0)
    throw ParseError("expected `w_max=<value>` header", 1);
  AttachmentModel model;
  model.w_max = std::stod(header.substr(6));
  auto read_line = [&](std::size_t line_no) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing vector line", line_no);
    std::istringstream fields(line);
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    Vector vec(static_cast<Index>(values.size()));
    for (Index i = 0; i < vec.size(); ++i) vec[i] = values[static_cast<std::size_t>(i)];
    return vec;
  };
  model.p = read_line(2);
  model.w = read_line(3);
  model.validate();
  return model;
}

inline AttachmentModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_model(in);
}

}  // namespace exgraph
