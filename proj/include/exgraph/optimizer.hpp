#pragma once

#include <fstream>
#include <optional>

#include "exgraph/attachment.hpp"
#include "exgraph/common.hpp"
#include "exgraph/filter.hpp"

namespace exgraph {

/// One historical incoming node: its true signal value, the weighted
/// attachment it formed, and the binary pattern of that attachment.
struct TrainingSample {
  double x_plus = 0.0;
  Vector a_plus;
  Vector b_plus;

  void validate(Index n) const {
    if (a_plus.size() != n || b_plus.size() != n)
      throw std::invalid_argument("training sample: length mismatch");
    for (Index i = 0; i < n; ++i) {
      if (b_plus[i] != 0.0 && b_plus[i] != 1.0)
        throw std::invalid_argument("training sample: pattern must be 0/1");
      if (b_plus[i] == 0.0 && a_plus[i] != 0.0)
        throw std::invalid_argument(
            "training sample: attachment must vanish off the pattern");
    }
  }
};

struct OptimizerConfig {
  double mu_p = 1.0;
  double mu_w = 1.0;
  int q_p = 1;  // norm exponent for the p regularizer, 1 or 2
  int q_w = 2;  // norm exponent for the w regularizer, 1 or 2
  double lambda_p = 1e-5;
  double lambda_w = 1e-5;
  int iterations = 1000;
  double w_max = 1.0;
  std::uint64_t seed = 0;

  // freeze one block to train the other marginally
  bool update_p = true;
  bool update_w = true;
  std::optional<Vector> init_p;
  std::optional<Vector> init_w;

  // optional plateau stop; off by default so traces match fixed-K runs
  bool stop_on_plateau = false;
  int plateau_window = 100;
  double plateau_rel_tol = 1e-6;

  void validate() const {
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!finite_nonneg(mu_p) || !finite_nonneg(mu_w))
      throw std::invalid_argument("optimizer: regularizer weights must be >= 0");
    if (!finite_nonneg(lambda_p) || !finite_nonneg(lambda_w))
      throw std::invalid_argument("optimizer: learning rates must be >= 0");
    if ((q_p != 1 && q_p != 2) || (q_w != 1 && q_w != 2))
      throw std::invalid_argument("optimizer: q must be 1 or 2");
    if (iterations < 1)
      throw std::invalid_argument("optimizer: iterations must be positive");
    if (!(w_max > 0.0) || !std::isfinite(w_max))
      throw std::invalid_argument("optimizer: w_max must be positive");
  }
};

struct FitResult {
  Vector p;
  Vector w;
  std::vector<double> cost_trace;  // initial cost plus one entry per iteration
};

/// Euclidean projection onto the box [lo, hi]^N (an elementwise clamp).
inline Vector project_box(const Vector& v, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("project_box: lo > hi");
  return v.cwiseMax(lo).cwiseMin(hi);
}

// ---------------------------------------------------------------------------
// Closed-form MSE at the incoming node: squared bias of the expected
// prediction plus the variance of the random attachment pushed through the
// filtered signal.
// ---------------------------------------------------------------------------

inline double closed_form_mse(const Vector& p, const Vector& w,
                              const ShiftedSignalMatrix& ax,
                              const FilterSpec& f, double x_star) {
  if (p.size() != ax.nodes() || w.size() != ax.nodes())
    throw std::invalid_argument("closed_form_mse: length mismatch");
  Vector r = filtered_signal(ax, f);
  double bias = w.cwiseProduct(p).dot(r) - x_star;
  double variance = r.cwiseAbs2()
                        .cwiseProduct(w.cwiseAbs2())
                        .cwiseProduct(p)
                        .dot(Vector::Ones(p.size()) - p);
  return bias * bias + variance;
}

inline double closed_form_mse(const AttachmentModel& model,
                              const ShiftedSignalMatrix& ax,
                              const FilterSpec& f, double x_star) {
  return closed_form_mse(model.p, model.w, ax, f, x_star);
}

// ---------------------------------------------------------------------------
// CostEvaluator precomputes everything that does not change while (p, w)
// move: the filtered signal and per-entry training aggregates. Cost and
// gradient evaluations are then O(N) per call (O(TN) only for a q = 1
// weight regularizer, whose subgradient needs each a_t).
//
// The cost is
//   sum_t (s - x_t)^2 + |T| * sum_i r_i^2 w_i^2 p_i (1 - p_i)
//     + mu_p * sum_t ||p - b_t||_qp^qp + mu_w * sum_t ||w - a_t||_qw^qw
// with s = (w o p)^T r and r = A_x h. The variance term is identical across
// samples, hence the |T| factor, and the gradients below differentiate
// exactly this expression.
// ---------------------------------------------------------------------------

class CostEvaluator {
 public:
  CostEvaluator(const std::vector<TrainingSample>& training,
                const ShiftedSignalMatrix& ax, const FilterSpec& f,
                const OptimizerConfig& cfg)
      : training_(training),
        mu_p_(cfg.mu_p),
        mu_w_(cfg.mu_w),
        q_p_(cfg.q_p),
        q_w_(cfg.q_w) {
    cfg.validate();
    if (training.empty())
      throw std::invalid_argument("cost: training set must be nonempty");
    n_ = ax.nodes();
    r_ = filtered_signal(ax, f);
    t_count_ = static_cast<double>(training.size());
    sum_x_ = 0.0;
    sum_x2_ = 0.0;
    ones_count_ = Vector::Zero(n_);
    sum_a_ = Vector::Zero(n_);
    sum_a2_ = Vector::Zero(n_);
    for (const auto& s : training) {
      s.validate(n_);
      sum_x_ += s.x_plus;
      sum_x2_ += s.x_plus * s.x_plus;
      ones_count_ += s.b_plus;
      sum_a_ += s.a_plus;
      sum_a2_ += s.a_plus.cwiseAbs2();
    }
  }

  Index size() const { return n_; }
  const Vector& filtered() const { return r_; }

  double cost(const Vector& p, const Vector& w) const {
    check(p, w);
    double s = w.cwiseProduct(p).dot(r_);
    double bias = t_count_ * s * s - 2.0 * s * sum_x_ + sum_x2_;
    double variance =
        t_count_ * r_.cwiseAbs2()
                       .cwiseProduct(w.cwiseAbs2())
                       .cwiseProduct(p)
                       .dot(Vector::Ones(n_) - p);
    double reg_p = 0.0;
    if (mu_p_ > 0.0) {
      if (q_p_ == 2) {
        // sum_t (p_i - b_ti)^2 = T p_i^2 - 2 p_i c_i + c_i with b in {0,1}
        reg_p = mu_p_ * (t_count_ * p.squaredNorm() -
                         2.0 * p.dot(ones_count_) + ones_count_.sum());
      } else {
        for (Index i = 0; i < n_; ++i)
          reg_p += mu_p_ * ((t_count_ - ones_count_[i]) * std::abs(p[i]) +
                            ones_count_[i] * std::abs(p[i] - 1.0));
      }
    }
    double reg_w = 0.0;
    if (mu_w_ > 0.0) {
      if (q_w_ == 2) {
        reg_w = mu_w_ * (t_count_ * w.squaredNorm() - 2.0 * w.dot(sum_a_) +
                         sum_a2_.sum());
      } else {
        for (const auto& s_t : training_)
          reg_w += mu_w_ * (w - s_t.a_plus).cwiseAbs().sum();
      }
    }
    return bias + variance + reg_p + reg_w;
  }

  Vector grad_p(const Vector& p, const Vector& w) const {
    check(p, w);
    double s = w.cwiseProduct(p).dot(r_);
    Vector g = 2.0 * (t_count_ * s - sum_x_) * w.cwiseProduct(r_);
    g += t_count_ * r_.cwiseAbs2()
                        .cwiseProduct(w.cwiseAbs2())
                        .cwiseProduct(Vector::Ones(n_) - 2.0 * p);
    if (mu_p_ > 0.0) {
      if (q_p_ == 2) {
        g += 2.0 * mu_p_ * (t_count_ * p - ones_count_);
      } else {
        for (Index i = 0; i < n_; ++i)
          g[i] += mu_p_ * ((t_count_ - ones_count_[i]) * sgn(p[i]) +
                           ones_count_[i] * sgn(p[i] - 1.0));
      }
    }
    return g;
  }

  Vector grad_w(const Vector& p, const Vector& w) const {
    check(p, w);
    double s = w.cwiseProduct(p).dot(r_);
    Vector g = 2.0 * (t_count_ * s - sum_x_) * p.cwiseProduct(r_);
    g += 2.0 * t_count_ *
         r_.cwiseAbs2().cwiseProduct(w).cwiseProduct(p).cwiseProduct(
             Vector::Ones(n_) - p);
    if (mu_w_ > 0.0) {
      if (q_w_ == 2) {
        g += 2.0 * mu_w_ * (t_count_ * w - sum_a_);
      } else {
        for (const auto& s_t : training_)
          for (Index i = 0; i < n_; ++i)
            g[i] += mu_w_ * sgn(w[i] - s_t.a_plus[i]);
      }
    }
    return g;
  }

 private:
  void check(const Vector& p, const Vector& w) const {
    if (p.size() != n_ || w.size() != n_)
      throw std::invalid_argument("cost: p/w length mismatch");
  }

  const std::vector<TrainingSample>& training_;
  Index n_ = 0;
  Vector r_;
  double t_count_ = 0.0;
  double sum_x_ = 0.0, sum_x2_ = 0.0;
  Vector ones_count_, sum_a_, sum_a2_;
  double mu_p_, mu_w_;
  int q_p_, q_w_;
};

inline double empirical_cost(const Vector& p, const Vector& w,
                             const std::vector<TrainingSample>& training,
                             const ShiftedSignalMatrix& ax,
                             const FilterSpec& f, const OptimizerConfig& cfg) {
  return CostEvaluator(training, ax, f, cfg).cost(p, w);
}

inline Vector grad_p(const Vector& p, const Vector& w,
                     const std::vector<TrainingSample>& training,
                     const ShiftedSignalMatrix& ax, const FilterSpec& f,
                     const OptimizerConfig& cfg) {
  return CostEvaluator(training, ax, f, cfg).grad_p(p, w);
}

inline Vector grad_w(const Vector& p, const Vector& w,
                     const std::vector<TrainingSample>& training,
                     const ShiftedSignalMatrix& ax, const FilterSpec& f,
                     const OptimizerConfig& cfg) {
  return CostEvaluator(training, ax, f, cfg).grad_w(p, w);
}

// ---------------------------------------------------------------------------
// Alternating projected gradient descent: a p step clamped to [0,1]^N, then
// a w step at the updated p clamped to [0, w_max]^N, for exactly K
// iterations. The trace records the cost at initialization and after every
// iteration.
// ---------------------------------------------------------------------------

inline FitResult fit(const std::vector<TrainingSample>& training,
                     const ShiftedSignalMatrix& ax, const FilterSpec& f,
                     const OptimizerConfig& cfg) {
  cfg.validate();
  CostEvaluator cost(training, ax, f, cfg);
  Index n = cost.size();
  Rng rng(cfg.seed);
  Vector p = cfg.init_p ? project_box(*cfg.init_p, 0.0, 1.0)
                        : rng.uniform_vector(n, 0.0, 1.0);
  Vector w = cfg.init_w ? project_box(*cfg.init_w, 0.0, cfg.w_max)
                        : rng.uniform_vector(n, 0.0, cfg.w_max);
  if (p.size() != n || w.size() != n)
    throw std::invalid_argument("fit: init vector length mismatch");

  FitResult result;
  result.cost_trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  double c = cost.cost(p, w);
  if (!std::isfinite(c)) throw DivergedError(0);
  result.cost_trace.push_back(c);
  double initial_cost = c;

  for (int k = 1; k <= cfg.iterations; ++k) {
    if (cfg.update_p)
      p = project_box(p - cfg.lambda_p * cost.grad_p(p, w), 0.0, 1.0);
    if (cfg.update_w)
      w = project_box(w - cfg.lambda_w * cost.grad_w(p, w), 0.0, cfg.w_max);
    c = cost.cost(p, w);
    if (!std::isfinite(c)) throw DivergedError(static_cast<std::size_t>(k));
    result.cost_trace.push_back(c);
    if (cfg.stop_on_plateau &&
        static_cast<int>(result.cost_trace.size()) > cfg.plateau_window) {
      auto tail = result.cost_trace.end() - cfg.plateau_window;
      double lo = *std::min_element(tail, result.cost_trace.end());
      double hi = *std::max_element(tail, result.cost_trace.end());
      if (hi - lo < cfg.plateau_rel_tol * std::abs(initial_cost)) break;
    }
  }
  result.p = std::move(p);
  result.w = std::move(w);
  return result;
}

// ---------------------------------------------------------------------------
// Marginal convexity in p: sufficient lower bound on mu_p, and the Hessian
// used to verify it.
// ---------------------------------------------------------------------------

/// w_max^2 max_i (A_x h)_i^2 - ||w o A_x h||^2. May be negative; callers
/// using it as a mu_p floor clamp at zero.
inline double convexity_threshold(const Vector& w,
                                  const ShiftedSignalMatrix& ax,
                                  const FilterSpec& f, double w_max) {
  if (w.size() != ax.nodes())
    throw std::invalid_argument("convexity_threshold: length mismatch");
  Vector r = filtered_signal(ax, f);
  return w_max * w_max * r.cwiseAbs2().maxCoeff() -
         w.cwiseProduct(r).squaredNorm();
}

inline double convexity_mu_floor(const Vector& w, const ShiftedSignalMatrix& ax,
                                 const FilterSpec& f, double w_max) {
  return std::max(0.0, convexity_threshold(w, ax, f, w_max));
}

/// Hessian of the single-sample q = 2 cost in p:
/// 2 (w∘r)(w∘r)^T - 2 diag((w∘r)^2) + 2 mu_p I.
inline Matrix hessian_p(const Vector& p, const Vector& w,
                        const ShiftedSignalMatrix& ax, const FilterSpec& f,
                        double mu_p) {
  if (p.size() != ax.nodes() || w.size() != ax.nodes())
    throw std::invalid_argument("hessian_p: length mismatch");
  Vector v = w.cwiseProduct(filtered_signal(ax, f));
  Matrix h = 2.0 * v * v.transpose();
  h.diagonal() -= 2.0 * v.cwiseAbs2();
  h.diagonal().array() += 2.0 * mu_p;
  return h;
}

/// Hessian of the |T|-sample cost (every term scales by the sample count,
/// so definiteness matches hessian_p exactly).
inline Matrix hessian_p_scaled(const Vector& p, const Vector& w,
                               const ShiftedSignalMatrix& ax,
                               const FilterSpec& f, double mu_p,
                               std::size_t sample_count) {
  return static_cast<double>(sample_count) * hessian_p(p, w, ax, f, mu_p);
}

// ---------------------------------------------------------------------------
// FitResult serialization: model text format plus a CSV cost trace.
// ---------------------------------------------------------------------------

inline void save_cost_trace(const std::vector<double>& trace,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "iteration,cost\n";
  for (std::size_t k = 0; k < trace.size(); ++k)
    out << k << ',' << fmt_csv(trace[k]) << '\n';
}

inline void save_fit_result(const FitResult& result, double w_max,
                            const std::string& model_path,
                            const std::string& trace_path) {
  save_model(AttachmentModel{result.p, result.w, w_max}, model_path);
  save_cost_trace(result.cost_trace, trace_path);
}

}  // namespace exgraph
