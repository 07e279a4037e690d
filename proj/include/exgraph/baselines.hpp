#pragma once

#include "exgraph/common.hpp"
#include "exgraph/graph.hpp"
#include "exgraph/optimizer.hpp"

namespace exgraph {

/// p = (1/n) 1: the incoming node attaches uniformly.
inline Vector uniform_attachment(Index n) {
  if (n < 1) throw std::invalid_argument("uniform_attachment: n must be >= 1");
  return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

/// p = d / (1^T d): attachment proportional to degree.
inline Vector preferential_attachment(const Graph& g) {
  Vector d = degree_vector(g);
  double total = d.sum();
  if (total <= 0.0)
    throw std::invalid_argument(
        "preferential_attachment: graph has no edges");
  return d / total;
}

/// Data-only rule: p are the averaged binary patterns, w the averaged
/// attachment weights; the interpolation cost plays no role.
inline std::pair<Vector, Vector> training_mean(
    const std::vector<TrainingSample>& training) {
  if (training.empty())
    throw std::invalid_argument("training_mean: empty training set");
  Index n = training.front().a_plus.size();
  Vector p = Vector::Zero(n);
  Vector w = Vector::Zero(n);
  for (const auto& s : training) {
    s.validate(n);
    p += s.b_plus;
    w += s.a_plus;
  }
  double count = static_cast<double>(training.size());
  return {p / count, w / count};
}

/// Arithmetic mean of a user's known ratings.
inline double user_mean_prediction(const std::vector<double>& ratings) {
  if (ratings.empty())
    throw std::invalid_argument("user_mean_prediction: no ratings");
  double sum = 0.0;
  for (double r : ratings) sum += r;
  return sum / static_cast<double>(ratings.size());
}

}  // namespace exgraph
