#pragma once

#include <filesystem>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "exgraph/baselines.hpp"
#include "exgraph/config.hpp"
#include "exgraph/data.hpp"
#include "exgraph/optimizer.hpp"

namespace exgraph {

inline const char* version_string() { return "exgraph 0.1.0"; }

// ===========================================================================
// Synthetic experiment: random substrate graph, smooth signal, incoming
// nodes drawn from a known attachment rule, and a comparison of the learned
// model against the uniform / preferential / data-mean rules plus the two
// marginally trained variants.
// ===========================================================================

enum class GraphFamily { ErdosRenyi, BarabasiAlbert };

inline std::string family_name(GraphFamily f) {
  return f == GraphFamily::ErdosRenyi ? "er" : "ba";
}

inline GraphFamily family_from_name(const std::string& name) {
  if (name == "er" || name == "erdos-renyi") return GraphFamily::ErdosRenyi;
  if (name == "ba" || name == "barabasi-albert")
    return GraphFamily::BarabasiAlbert;
  throw std::invalid_argument("unknown graph family `" + name + "`");
}

struct SyntheticConfig {
  GraphFamily family = GraphFamily::ErdosRenyi;
  int n = 100;
  double er_edge_prob = 0.1;
  int ba_m = 2;

  int eigenvector_count = 30;
  bool normalize_signal = true;  // rescale to unit energy after centering

  double alpha = 0.3;
  int filter_order = 3;

  int dataset_size = 1000;
  int train_size = 800;
  double noise_std = 0.0;

  // regularizer selection: ten-fold cross-validation over a log grid, or
  // fixed values
  bool use_cross_validation = false;
  int cv_folds = 10;
  int cv_grid_points = 6;
  double cv_grid_lo = 1e-5;
  double cv_grid_hi = 1.0;
  double mu_p = 1.0;
  double mu_w = 1.0;

  int q_p = 2;
  int q_w = 2;
  double lambda_p = 1e-5;
  double lambda_w = 1e-5;
  int iterations = 1000;
  double w_max = 1.0;

  int splits = 10;
  int realizations = 10;     // attachment draws per test node in MC mode
  bool monte_carlo_eval = false;

  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const {
    if (n < 2) throw std::invalid_argument("synthetic: n must be >= 2");
    if (train_size < 1 || train_size >= dataset_size)
      throw std::invalid_argument("synthetic: need 1 <= train < dataset size");
    if (splits < 1) throw std::invalid_argument("synthetic: splits >= 1");
    if (realizations < 1)
      throw std::invalid_argument("synthetic: realizations >= 1");
    if (eigenvector_count < 1 || eigenvector_count > n)
      throw std::invalid_argument("synthetic: eigenvectors in 1..n");
  }

  static SyntheticConfig from_config(const ConfigFile& c) {
    SyntheticConfig s;
    s.family = family_from_name(c.get_string("graph", "family", "er"));
    s.n = static_cast<int>(c.get_int("graph", "n", s.n));
    s.er_edge_prob = c.get_double("graph", "p_edge", s.er_edge_prob);
    s.ba_m = static_cast<int>(c.get_int("graph", "m", s.ba_m));
    s.eigenvector_count = static_cast<int>(
        c.get_int("signal", "eigenvectors", s.eigenvector_count));
    s.normalize_signal = c.get_bool("signal", "normalize", s.normalize_signal);
    s.alpha = c.get_double("filter", "alpha", s.alpha);
    s.filter_order = static_cast<int>(c.get_int("filter", "order", s.filter_order));
    s.dataset_size = static_cast<int>(c.get_int("data", "size", s.dataset_size));
    s.train_size = static_cast<int>(c.get_int("data", "train", s.train_size));
    s.noise_std = c.get_double("data", "noise_std", s.noise_std);
    std::string mode = c.get_string("regularization", "mode",
                                    s.use_cross_validation ? "cv" : "fixed");
    if (mode != "cv" && mode != "fixed")
      throw std::invalid_argument("regularization mode must be cv or fixed");
    s.use_cross_validation = (mode == "cv");
    s.cv_folds = static_cast<int>(c.get_int("regularization", "folds", s.cv_folds));
    s.cv_grid_points =
        static_cast<int>(c.get_int("regularization", "grid_points", s.cv_grid_points));
    s.cv_grid_lo = c.get_double("regularization", "grid_lo", s.cv_grid_lo);
    s.cv_grid_hi = c.get_double("regularization", "grid_hi", s.cv_grid_hi);
    s.mu_p = c.get_double("regularization", "mu_p", s.mu_p);
    s.mu_w = c.get_double("regularization", "mu_w", s.mu_w);
    s.q_p = static_cast<int>(c.get_int("optimizer", "q_p", s.q_p));
    s.q_w = static_cast<int>(c.get_int("optimizer", "q_w", s.q_w));
    s.lambda_p = c.get_double("optimizer", "lambda_p", s.lambda_p);
    s.lambda_w = c.get_double("optimizer", "lambda_w", s.lambda_w);
    s.iterations = static_cast<int>(c.get_int("optimizer", "iterations", s.iterations));
    s.w_max = c.get_double("optimizer", "w_max", s.w_max);
    s.splits = static_cast<int>(c.get_int("evaluation", "splits", s.splits));
    s.realizations =
        static_cast<int>(c.get_int("evaluation", "realizations", s.realizations));
    s.monte_carlo_eval =
        c.get_bool("evaluation", "monte_carlo", s.monte_carlo_eval);
    s.seed = c.get_u64("run", "seed", s.seed);
    s.workers = static_cast<int>(c.get_int("run", "workers", s.workers));
    return s;
  }

  ConfigFile echo() const {
    ConfigFile c;
    c.set("graph", "family", family_name(family));
    c.set("graph", "n", static_cast<long long>(n));
    c.set("graph", "p_edge", er_edge_prob);
    c.set("graph", "m", static_cast<long long>(ba_m));
    c.set("signal", "eigenvectors", static_cast<long long>(eigenvector_count));
    c.set("signal", "normalize", normalize_signal);
    c.set("filter", "alpha", alpha);
    c.set("filter", "order", static_cast<long long>(filter_order));
    c.set("data", "size", static_cast<long long>(dataset_size));
    c.set("data", "train", static_cast<long long>(train_size));
    c.set("data", "noise_std", noise_std);
    c.set("regularization", "mode",
          std::string(use_cross_validation ? "cv" : "fixed"));
    c.set("regularization", "folds", static_cast<long long>(cv_folds));
    c.set("regularization", "grid_points", static_cast<long long>(cv_grid_points));
    c.set("regularization", "grid_lo", cv_grid_lo);
    c.set("regularization", "grid_hi", cv_grid_hi);
    c.set("regularization", "mu_p", mu_p);
    c.set("regularization", "mu_w", mu_w);
    c.set("optimizer", "q_p", static_cast<long long>(q_p));
    c.set("optimizer", "q_w", static_cast<long long>(q_w));
    c.set("optimizer", "lambda_p", lambda_p);
    c.set("optimizer", "lambda_w", lambda_w);
    c.set("optimizer", "iterations", static_cast<long long>(iterations));
    c.set("optimizer", "w_max", w_max);
    c.set("evaluation", "splits", static_cast<long long>(splits));
    c.set("evaluation", "realizations", static_cast<long long>(realizations));
    c.set("evaluation", "monte_carlo", monte_carlo_eval);
    c.set("run", "seed", std::to_string(seed));
    c.set("run", "workers", static_cast<long long>(workers));
    return c;
  }
};

/// Incoming-node training data: binary attachments drawn from the true rule
/// (unit weights) and noiseless signal values diffused through the filter.
inline std::vector<TrainingSample> generate_synthetic_training(
    const Graph& g, const GraphSignal& x, const Vector& true_p,
    const FilterSpec& f, int count, std::uint64_t seed,
    double noise_std = 0.0) {
  AttachmentModel truth{true_p, Vector::Ones(g.size()), 1.0};
  truth.validate();
  ShiftedSignalMatrix ax = build_shifted_matrix(g, x, f.order());
  Vector r = filtered_signal(ax, f);
  std::vector<TrainingSample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    AttachmentSample draw = sample(truth, mix_seed(seed, static_cast<std::uint64_t>(t)));
    double x_plus = draw.a_plus.dot(r);
    if (noise_std > 0.0) {
      Rng noise(mix_seed(seed, 0x100000ULL + static_cast<std::uint64_t>(t)));
      x_plus += noise_std * noise.normal();
    }
    samples.push_back({x_plus, draw.a_plus, draw.b_plus});
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Cross-validation of the regularizer weights
// ---------------------------------------------------------------------------

inline std::vector<std::pair<double, double>> log_mu_grid(double lo, double hi,
                                                          int per_axis) {
  if (per_axis < 1 || lo <= 0.0 || hi < lo)
    throw std::invalid_argument("log_mu_grid: bad grid bounds");
  std::vector<double> axis;
  for (int i = 0; i < per_axis; ++i) {
    double t = per_axis == 1 ? 0.0
                             : static_cast<double>(i) / (per_axis - 1);
    axis.push_back(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
  }
  std::vector<std::pair<double, double>> grid;
  for (double mp : axis)
    for (double mw : axis) grid.emplace_back(mp, mw);
  return grid;
}

/// Grid search minimizing mean held-fold closed-form MSE; exact ties go to
/// the stronger regularization.
inline std::pair<double, double> cross_validate(
    const std::vector<TrainingSample>& training,
    const std::vector<std::pair<double, double>>& grid, int folds,
    std::uint64_t seed, const ShiftedSignalMatrix& ax, const FilterSpec& f,
    const OptimizerConfig& base) {
  if (folds < 2) throw std::invalid_argument("cross_validate: folds >= 2");
  if (static_cast<std::size_t>(folds) > training.size())
    throw std::invalid_argument("cross_validate: more folds than samples");
  if (grid.empty()) throw std::invalid_argument("cross_validate: empty grid");

  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  double best_mse = std::numeric_limits<double>::infinity();
  std::pair<double, double> best = grid.front();
  for (std::size_t g_idx = 0; g_idx < grid.size(); ++g_idx) {
    auto [mu_p, mu_w] = grid[g_idx];
    double total = 0.0;
    std::size_t held_total = 0;
    for (int fold = 0; fold < folds; ++fold) {
      std::size_t begin = training.size() * static_cast<std::size_t>(fold) /
                          static_cast<std::size_t>(folds);
      std::size_t end = training.size() *
                        (static_cast<std::size_t>(fold) + 1) /
                        static_cast<std::size_t>(folds);
      std::vector<TrainingSample> fit_set;
      fit_set.reserve(training.size() - (end - begin));
      for (std::size_t i = 0; i < training.size(); ++i)
        if (i < begin || i >= end) fit_set.push_back(training[order[i]]);
      OptimizerConfig cfg = base;
      cfg.mu_p = mu_p;
      cfg.mu_w = mu_w;
      cfg.seed = mix_seed(seed, 1 + g_idx * static_cast<std::size_t>(folds) +
                                    static_cast<std::size_t>(fold));
      FitResult res = fit(fit_set, ax, f, cfg);
      for (std::size_t i = begin; i < end; ++i) {
        total += closed_form_mse(res.p, res.w, ax, f,
                                 training[order[i]].x_plus);
        ++held_total;
      }
    }
    double mean_mse = total / static_cast<double>(held_total);
    bool better = mean_mse < best_mse;
    bool tie_stronger =
        mean_mse == best_mse &&
        (mu_p > best.first || (mu_p == best.first && mu_w > best.second));
    if (better || tie_stronger) {
      best_mse = mean_mse;
      best = {mu_p, mu_w};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// run_synthetic
// ---------------------------------------------------------------------------

struct SyntheticInstance {
  Graph graph;
  GraphSignal signal;
  FilterSpec filter;
  ShiftedSignalMatrix ax;
  Vector true_p;
  std::vector<TrainingSample> samples;
};

inline SyntheticInstance build_synthetic_instance(const SyntheticConfig& cfg) {
  cfg.validate();
  Graph g = cfg.family == GraphFamily::ErdosRenyi
                ? erdos_renyi(cfg.n, cfg.er_edge_prob, mix_seed(cfg.seed, 1))
                : barabasi_albert(cfg.n, cfg.ba_m, mix_seed(cfg.seed, 1));
  GraphSignal x = smooth_signal(g, cfg.eigenvector_count, mix_seed(cfg.seed, 2));
  if (cfg.normalize_signal) {
    double norm = x.norm();
    if (norm > 0.0) x /= norm;
  }
  FilterSpec f = geometric_coefficients(cfg.alpha, cfg.filter_order);
  ShiftedSignalMatrix ax = build_shifted_matrix(g, x, cfg.filter_order);
  Vector true_p = cfg.family == GraphFamily::ErdosRenyi
                      ? uniform_attachment(cfg.n)
                      : preferential_attachment(g);
  std::vector<TrainingSample> samples = generate_synthetic_training(
      g, x, true_p, f, cfg.dataset_size, mix_seed(cfg.seed, 3), cfg.noise_std);
  return SyntheticInstance{std::move(g), std::move(x), std::move(f),
                           std::move(ax), std::move(true_p),
                           std::move(samples)};
}

inline const std::vector<std::string>& synthetic_methods() {
  static const std::vector<std::string> methods = {
      "proposed", "preferential", "uniform",
      "training_mean", "only_p", "only_w"};
  return methods;
}

struct MethodStats {
  std::string method;
  double mean = 0.0;
  double stddev = 0.0;
  int samples = 0;
};

struct SyntheticReport {
  ConfigFile config_echo;
  // trials[s][m] = test MSE of method m on split s
  std::vector<std::vector<double>> trials;
  std::vector<MethodStats> summary;
  std::vector<std::pair<double, double>> selected_mu;  // per split
};

namespace detail {

inline double evaluate_model_mse(const Vector& p, const Vector& w,
                                 const ShiftedSignalMatrix& ax,
                                 const FilterSpec& f,
                                 const std::vector<const TrainingSample*>& test,
                                 const SyntheticConfig& cfg,
                                 std::uint64_t eval_seed) {
  double total = 0.0;
  if (cfg.monte_carlo_eval) {
    AttachmentModel model{p, w, cfg.w_max};
    Vector r = filtered_signal(ax, f);
    for (std::size_t t = 0; t < test.size(); ++t) {
      double err = 0.0;
      for (int d = 0; d < cfg.realizations; ++d) {
        AttachmentSample draw = sample(
            model, mix_seed(eval_seed,
                            static_cast<std::uint64_t>(t) * 1000003ULL +
                                static_cast<std::uint64_t>(d)));
        double diff = draw.a_plus.dot(r) - test[t]->x_plus;
        err += diff * diff;
      }
      total += err / cfg.realizations;
    }
  } else {
    for (const TrainingSample* s : test)
      total += closed_form_mse(p, w, ax, f, s->x_plus);
  }
  return total / static_cast<double>(test.size());
}

inline MethodStats aggregate(const std::string& name,
                             const std::vector<double>& values) {
  MethodStats stats;
  stats.method = name;
  stats.samples = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return stats;
}

}  // namespace detail

inline SyntheticReport run_synthetic(const SyntheticConfig& cfg) {
  SyntheticInstance inst = build_synthetic_instance(cfg);
  Index n = inst.graph.size();
  Vector pref = preferential_attachment(inst.graph);
  Vector unif = uniform_attachment(n);
  Vector ones = Vector::Ones(n);

  const auto& methods = synthetic_methods();
  SyntheticReport report;
  report.trials.assign(static_cast<std::size_t>(cfg.splits),
                       std::vector<double>(methods.size(), 0.0));
  report.selected_mu.assign(static_cast<std::size_t>(cfg.splits), {0.0, 0.0});

  parallel_for(static_cast<std::size_t>(cfg.splits), cfg.workers,
               [&](std::size_t s) {
    std::vector<std::size_t> order(inst.samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(cfg.seed, 10 + s));
    rng.shuffle(order);
    std::vector<TrainingSample> train;
    std::vector<const TrainingSample*> test;
    train.reserve(static_cast<std::size_t>(cfg.train_size));
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i < static_cast<std::size_t>(cfg.train_size))
        train.push_back(inst.samples[order[i]]);
      else
        test.push_back(&inst.samples[order[i]]);
    }

    OptimizerConfig base;
    base.mu_p = cfg.mu_p;
    base.mu_w = cfg.mu_w;
    base.q_p = cfg.q_p;
    base.q_w = cfg.q_w;
    base.lambda_p = cfg.lambda_p;
    base.lambda_w = cfg.lambda_w;
    base.iterations = cfg.iterations;
    base.w_max = cfg.w_max;
    if (cfg.use_cross_validation) {
      auto grid = log_mu_grid(cfg.cv_grid_lo, cfg.cv_grid_hi, cfg.cv_grid_points);
      auto [mu_p, mu_w] = cross_validate(train, grid, cfg.cv_folds,
                                         mix_seed(cfg.seed, 100 + s),
                                         inst.ax, inst.filter, base);
      base.mu_p = mu_p;
      base.mu_w = mu_w;
    }
    report.selected_mu[s] = {base.mu_p, base.mu_w};

    base.seed = mix_seed(cfg.seed, 200 + 8 * s);
    FitResult joint = fit(train, inst.ax, inst.filter, base);

    auto [p_g, w_g] = training_mean(train);

    OptimizerConfig only_p_cfg = base;
    only_p_cfg.update_w = false;
    only_p_cfg.init_w = ones * cfg.w_max;
    only_p_cfg.seed = mix_seed(cfg.seed, 200 + 8 * s + 1);
    FitResult only_p = fit(train, inst.ax, inst.filter, only_p_cfg);

    OptimizerConfig only_w_cfg = base;
    only_w_cfg.update_p = false;
    only_w_cfg.init_p = p_g;
    only_w_cfg.seed = mix_seed(cfg.seed, 200 + 8 * s + 2);
    FitResult only_w = fit(train, inst.ax, inst.filter, only_w_cfg);

    std::uint64_t eval_seed = mix_seed(cfg.seed, 300 + s);
    auto score = [&](const Vector& p, const Vector& w) {
      return detail::evaluate_model_mse(p, w, inst.ax, inst.filter, test, cfg,
                                        eval_seed);
    };
    report.trials[s][0] = score(joint.p, joint.w);
    report.trials[s][1] = score(pref, ones);
    report.trials[s][2] = score(unif, ones);
    report.trials[s][3] = score(p_g, w_g);
    report.trials[s][4] = score(only_p.p, only_p.w);
    report.trials[s][5] = score(only_w.p, only_w.w);
  });

  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<double> values;
    values.reserve(report.trials.size());
    for (const auto& row : report.trials) values.push_back(row[m]);
    report.summary.push_back(detail::aggregate(methods[m], values));
  }
  report.config_echo = cfg.echo();
  return report;
}

inline void write_synthetic_report(const SyntheticReport& report,
                                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "mse_summary.csv");
    out << "method,mse_mean,mse_std,splits\n";
    for (const auto& s : report.summary)
      out << s.method << ',' << fmt_csv(s.mean) << ',' << fmt_csv(s.stddev)
          << ',' << s.samples << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "mse_trials.csv");
    out << "split,method,mse,mu_p,mu_w\n";
    const auto& methods = synthetic_methods();
    for (std::size_t s = 0; s < report.trials.size(); ++s)
      for (std::size_t m = 0; m < methods.size(); ++m)
        out << s << ',' << methods[m] << ',' << fmt_csv(report.trials[s][m])
            << ',' << fmt_csv(report.selected_mu[s].first) << ','
            << fmt_csv(report.selected_mu[s].second) << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "manifest.txt");
    out << "version = " << version_string() << "\n\n"
        << report.config_echo.serialize();
  }
}

// ---------------------------------------------------------------------------
// Convergence study: descent traces for the plain and the convexified
// regularization weight, from shared random initializations.
// ---------------------------------------------------------------------------

struct ConvergenceStudy {
  std::vector<std::vector<double>> nonconvex;  // one trace per restart
  std::vector<std::vector<double>> convex;
  double mu_p_nonconvex = 0.0;
  double mu_p_convex = 0.0;
  double threshold = 0.0;  // strict (w = 0) convexity threshold
  ConfigFile config_echo;
};

inline ConvergenceStudy run_convergence_study(const SyntheticConfig& cfg,
                                              int restarts,
                                              double mu_p_convex) {
  if (restarts < 1)
    throw std::invalid_argument("convergence study: restarts >= 1");
  SyntheticInstance inst = build_synthetic_instance(cfg);
  std::vector<TrainingSample> train(
      inst.samples.begin(), inst.samples.begin() + cfg.train_size);

  // evaluate the threshold at w = 0: the strictest form of the bound
  double threshold = convexity_threshold(Vector::Zero(inst.graph.size()),
                                         inst.ax, inst.filter, cfg.w_max);
  if (mu_p_convex < threshold)
    throw std::invalid_argument(
        "convergence study: mu_p_convex below the convexity threshold " +
        fmt_csv(threshold));

  ConvergenceStudy study;
  study.nonconvex.resize(static_cast<std::size_t>(restarts));
  study.convex.resize(static_cast<std::size_t>(restarts));
  study.mu_p_nonconvex = cfg.mu_p;
  study.mu_p_convex = mu_p_convex;
  study.threshold = threshold;

  parallel_for(static_cast<std::size_t>(restarts), cfg.workers,
               [&](std::size_t j) {
    OptimizerConfig ocfg;
    ocfg.mu_w = cfg.mu_w;
    ocfg.q_p = 2;
    ocfg.q_w = 2;
    ocfg.lambda_p = cfg.lambda_p;
    ocfg.lambda_w = cfg.lambda_w;
    ocfg.iterations = cfg.iterations;
    ocfg.w_max = cfg.w_max;
    ocfg.seed = mix_seed(cfg.seed, 2000 + j);  // same init in both regimes
    ocfg.mu_p = cfg.mu_p;
    study.nonconvex[j] = fit(train, inst.ax, inst.filter, ocfg).cost_trace;
    ocfg.mu_p = mu_p_convex;
    study.convex[j] = fit(train, inst.ax, inst.filter, ocfg).cost_trace;
  });

  study.config_echo = cfg.echo();
  study.config_echo.set("convergence", "restarts",
                        static_cast<long long>(restarts));
  study.config_echo.set("convergence", "mu_p_convex", mu_p_convex);
  study.config_echo.set("convergence", "threshold_w0", threshold);
  return study;
}

inline void write_convergence_study(const ConvergenceStudy& study,
                                    const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto write_traces = [&](const char* regime,
                          const std::vector<std::vector<double>>& traces) {
    for (std::size_t j = 0; j < traces.size(); ++j) {
      char name[64];
      std::snprintf(name, sizeof(name), "trace_%s_%03zu.csv", regime, j);
      save_cost_trace(traces[j], (fs::path(out_dir) / name).string());
    }
  };
  write_traces("nonconvex", study.nonconvex);
  write_traces("convex", study.convex);
  std::ofstream out(fs::path(out_dir) / "manifest.txt");
  out << "version = " << version_string() << "\n\n"
      << study.config_echo.serialize();
}

// ===========================================================================
// Cold-start collaborative filtering on a ratings file
// ===========================================================================

struct ColdStartConfig {
  int min_ratings = 10;
  int core_size = 50;
  int train_size = 700;
  int knn = 35;

  int filter_order = 5;
  double ridge = 1e-6;

  double mu_p = 1.0;
  double mu_w = 1.0;
  int q_p = 1;  // sparsity on p
  int q_w = 2;  // squared norm on w
  double lambda_p = 1e-4;
  double lambda_w = 1e-4;
  int iterations = 2000;
  double w_max = 1.0;

  int prediction_draws = 100;
  int users_per_bucket = 0;  // 0 = all users
  int low_threshold = 100;   // interactions < low -> low bucket
  int high_threshold = 200;  // interactions > high -> high bucket

  std::uint64_t seed = 1;
  int workers = 1;

  static ColdStartConfig from_config(const ConfigFile& c) {
    ColdStartConfig s;
    s.min_ratings = static_cast<int>(c.get_int("data", "min_ratings", s.min_ratings));
    s.core_size = static_cast<int>(c.get_int("split", "core", s.core_size));
    s.train_size = static_cast<int>(c.get_int("split", "train", s.train_size));
    s.knn = static_cast<int>(c.get_int("graph", "k", s.knn));
    s.filter_order = static_cast<int>(c.get_int("filter", "order", s.filter_order));
    s.ridge = c.get_double("filter", "ridge", s.ridge);
    s.mu_p = c.get_double("optimizer", "mu_p", s.mu_p);
    s.mu_w = c.get_double("optimizer", "mu_w", s.mu_w);
    s.q_p = static_cast<int>(c.get_int("optimizer", "q_p", s.q_p));
    s.q_w = static_cast<int>(c.get_int("optimizer", "q_w", s.q_w));
    s.lambda_p = c.get_double("optimizer", "lambda_p", s.lambda_p);
    s.lambda_w = c.get_double("optimizer", "lambda_w", s.lambda_w);
    s.iterations = static_cast<int>(c.get_int("optimizer", "iterations", s.iterations));
    s.w_max = c.get_double("optimizer", "w_max", s.w_max);
    s.prediction_draws =
        static_cast<int>(c.get_int("prediction", "draws", s.prediction_draws));
    s.users_per_bucket =
        static_cast<int>(c.get_int("buckets", "users_per_bucket", s.users_per_bucket));
    s.low_threshold =
        static_cast<int>(c.get_int("buckets", "low_threshold", s.low_threshold));
    s.high_threshold =
        static_cast<int>(c.get_int("buckets", "high_threshold", s.high_threshold));
    s.seed = c.get_u64("run", "seed", s.seed);
    s.workers = static_cast<int>(c.get_int("run", "workers", s.workers));
    return s;
  }

  ConfigFile echo() const {
    ConfigFile c;
    c.set("data", "min_ratings", static_cast<long long>(min_ratings));
    c.set("split", "core", static_cast<long long>(core_size));
    c.set("split", "train", static_cast<long long>(train_size));
    c.set("graph", "k", static_cast<long long>(knn));
    c.set("filter", "order", static_cast<long long>(filter_order));
    c.set("filter", "ridge", ridge);
    c.set("optimizer", "mu_p", mu_p);
    c.set("optimizer", "mu_w", mu_w);
    c.set("optimizer", "q_p", static_cast<long long>(q_p));
    c.set("optimizer", "q_w", static_cast<long long>(q_w));
    c.set("optimizer", "lambda_p", lambda_p);
    c.set("optimizer", "lambda_w", lambda_w);
    c.set("optimizer", "iterations", static_cast<long long>(iterations));
    c.set("optimizer", "w_max", w_max);
    c.set("prediction", "draws", static_cast<long long>(prediction_draws));
    c.set("buckets", "users_per_bucket", static_cast<long long>(users_per_bucket));
    c.set("buckets", "low_threshold", static_cast<long long>(low_threshold));
    c.set("buckets", "high_threshold", static_cast<long long>(high_threshold));
    c.set("run", "seed", std::to_string(seed));
    c.set("run", "workers", static_cast<long long>(workers));
    return c;
  }
};

inline const std::vector<std::string>& cold_start_methods() {
  static const std::vector<std::string> methods = {
      "proposed", "preferential", "uniform", "training_mean", "user_mean"};
  return methods;
}

struct ColdStartRow {
  long user_raw_id = 0;
  int interactions = 0;
  std::string bucket;
  std::string method;
  double mae = 0.0;
};

struct ColdStartBucketStats {
  std::string bucket;
  std::string method;
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  int users = 0;
};

struct ColdStartReport {
  ConfigFile config_echo;
  std::vector<ColdStartRow> rows;
  std::vector<ColdStartBucketStats> summary;
  int evaluated_users = 0;
  int skipped_no_core = 0;   // no core ratings: signal is empty
  int skipped_no_train = 0;  // nothing to fit on
  int skipped_no_test = 0;   // nothing to score
};

namespace detail {

inline double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n == 0) return 0.0;
  return n % 2 ? values[n / 2]
               : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace detail

inline ColdStartReport run_cold_start(const std::string& ratings_path,
                                      const ColdStartConfig& cfg) {
  RatingsDataset raw = load_movielens(ratings_path);
  RatingsDataset d = filter_min_ratings(raw, cfg.min_ratings);
  if (d.num_items < cfg.core_size + cfg.train_size)
    throw std::invalid_argument(
        "cold start: filtered dataset has too few items for the split");

  ColdStartSplit split =
      make_cold_start_split(d, cfg.core_size, cfg.train_size,
                            mix_seed(cfg.seed, 1));
  Graph g = build_knn_item_graph(d, split.core_items, cfg.knn);
  ItemVectors vectors(d);

  Index n_core = static_cast<Index>(split.core_items.size());
  std::unordered_map<int, Index> core_pos;
  for (std::size_t i = 0; i < split.core_items.size(); ++i)
    core_pos[split.core_items[i]] = static_cast<Index>(i);
  std::unordered_map<int, int> train_pos;
  for (std::size_t i = 0; i < split.train_items.size(); ++i)
    train_pos[split.train_items[i]] = static_cast<int>(i);
  std::unordered_map<int, int> test_pos;
  for (std::size_t i = 0; i < split.test_items.size(); ++i)
    test_pos[split.test_items[i]] = static_cast<int>(i);

  // ground-truth attachments of the training items towards the core
  std::vector<AttachmentSample> train_attachments(split.train_items.size());
  parallel_for(split.train_items.size(), cfg.workers, [&](std::size_t i) {
    train_attachments[i] = attachment_from_ratings(
        vectors, split.train_items[i], split.core_items, cfg.knn);
  });

  // per-user rating lists, split by section
  struct UserData {
    std::vector<std::pair<Index, double>> core;  // core position -> rating
    std::vector<std::pair<int, double>> train;   // train index -> rating
    std::vector<std::pair<int, double>> test;    // test index -> rating
    int interactions = 0;
  };
  std::vector<UserData> users(static_cast<std::size_t>(d.num_users));
  for (const auto& t : d.triples) {
    UserData& u = users[static_cast<std::size_t>(t.user)];
    ++u.interactions;
    if (auto it = core_pos.find(t.item); it != core_pos.end())
      u.core.emplace_back(it->second, t.value);
    else if (auto tr = train_pos.find(t.item); tr != train_pos.end())
      u.train.emplace_back(tr->second, t.value);
    else if (auto te = test_pos.find(t.item); te != test_pos.end())
      u.test.emplace_back(te->second, t.value);
  }
  for (auto& u : users) {
    std::sort(u.core.begin(), u.core.end());
    std::sort(u.train.begin(), u.train.end());
    std::sort(u.test.begin(), u.test.end());
  }

  // global filter coefficients, fit to reproduce the observed core ratings
  std::vector<FilterObservation> observations;
  for (const auto& u : users) {
    if (u.core.empty()) continue;
    FilterObservation obs;
    obs.x = Vector::Zero(n_core);
    for (const auto& [pos, value] : u.core) obs.x[pos] = value;
    obs.observed.reserve(u.core.size());
    std::vector<double> targets;
    for (const auto& [pos, value] : u.core) {
      obs.observed.push_back(pos);
      targets.push_back(value);
    }
    obs.targets = Eigen::Map<Vector>(targets.data(),
                                     static_cast<Index>(targets.size()));
    observations.push_back(std::move(obs));
  }
  if (observations.empty())
    throw std::invalid_argument("cold start: no user rated any core item");
  FilterSpec f = fit_coefficients(g, observations, cfg.filter_order, cfg.ridge);

  auto bucket_name = [&](int interactions) {
    if (interactions < cfg.low_threshold) return std::string("low");
    if (interactions > cfg.high_threshold) return std::string("high");
    return std::string("medium");
  };

  // choose the users to evaluate
  std::vector<int> selected;
  if (cfg.users_per_bucket <= 0) {
    selected.resize(static_cast<std::size_t>(d.num_users));
    std::iota(selected.begin(), selected.end(), 0);
  } else {
    std::vector<std::vector<int>> by_bucket(3);
    for (int u = 0; u < d.num_users; ++u) {
      const std::string b = bucket_name(users[static_cast<std::size_t>(u)].interactions);
      by_bucket[b == "low" ? 0 : (b == "medium" ? 1 : 2)].push_back(u);
    }
    for (std::size_t b = 0; b < by_bucket.size(); ++b) {
      Rng rng(mix_seed(cfg.seed, 3000 + b));
      rng.shuffle(by_bucket[b]);
      std::size_t keep = std::min<std::size_t>(
          static_cast<std::size_t>(cfg.users_per_bucket), by_bucket[b].size());
      selected.insert(selected.end(), by_bucket[b].begin(),
                      by_bucket[b].begin() + static_cast<long>(keep));
    }
    std::sort(selected.begin(), selected.end());
  }

  Vector pref = g.edge_count() > 0 ? preferential_attachment(g)
                                   : uniform_attachment(n_core);
  Vector unif = uniform_attachment(n_core);
  Vector ones = Vector::Ones(n_core);
  const auto& methods = cold_start_methods();

  struct UserOutcome {
    bool evaluated = false;
    int skip_reason = 0;  // 1 no core, 2 no train, 3 no test
    std::vector<double> mae;
  };
  std::vector<UserOutcome> outcomes(selected.size());

  parallel_for(selected.size(), cfg.workers, [&](std::size_t slot) {
    int u = selected[slot];
    const UserData& data = users[static_cast<std::size_t>(u)];
    UserOutcome& out = outcomes[slot];
    if (data.core.empty()) {
      out.skip_reason = 1;
      return;
    }
    if (data.train.empty()) {
      out.skip_reason = 2;
      return;
    }
    if (data.test.empty()) {
      out.skip_reason = 3;
      return;
    }

    Vector x = Vector::Zero(n_core);
    for (const auto& [pos, value] : data.core) x[pos] = value;
    ShiftedSignalMatrix ax = build_shifted_matrix(g, x, cfg.filter_order);
    Vector r = filtered_signal(ax, f);

    std::vector<TrainingSample> training;
    training.reserve(data.train.size());
    for (const auto& [train_idx, value] : data.train) {
      const AttachmentSample& att =
          train_attachments[static_cast<std::size_t>(train_idx)];
      training.push_back({value, att.a_plus, att.b_plus});
    }

    OptimizerConfig ocfg;
    ocfg.mu_p = cfg.mu_p;
    ocfg.mu_w = cfg.mu_w;
    ocfg.q_p = cfg.q_p;
    ocfg.q_w = cfg.q_w;
    ocfg.lambda_p = cfg.lambda_p;
    ocfg.lambda_w = cfg.lambda_w;
    ocfg.iterations = cfg.iterations;
    ocfg.w_max = cfg.w_max;
    ocfg.seed = mix_seed(cfg.seed, 4000 + static_cast<std::uint64_t>(u));
    FitResult fit_res = fit(training, ax, f, ocfg);

    auto [p_g, w_g] = training_mean(training);

    std::vector<double> user_ratings;
    for (const auto& [pos, value] : data.core) user_ratings.push_back(value);
    for (const auto& [idx, value] : data.train) user_ratings.push_back(value);
    double mean_prediction = user_mean_prediction(user_ratings);

    std::vector<AttachmentModel> stochastic = {
        {fit_res.p, fit_res.w, cfg.w_max},
        {pref, ones, std::max(cfg.w_max, 1.0)},
        {unif, ones, std::max(cfg.w_max, 1.0)},
        {project_box(p_g, 0.0, 1.0), project_box(w_g, 0.0, cfg.w_max),
         cfg.w_max}};

    out.mae.assign(methods.size(), 0.0);
    for (const auto& [test_idx, value] : data.test) {
      std::uint64_t item_seed =
          mix_seed(mix_seed(cfg.seed, 50000 + static_cast<std::uint64_t>(u)),
                   static_cast<std::uint64_t>(test_idx));
      for (std::size_t m = 0; m < stochastic.size(); ++m) {
        double sum = 0.0;
        for (int dr = 0; dr < cfg.prediction_draws; ++dr) {
          // draw seeds shared across methods: paired comparisons
          AttachmentSample a = sample(
              stochastic[m], mix_seed(item_seed, static_cast<std::uint64_t>(dr)));
          sum += a.a_plus.dot(r);
        }
        double prediction =
            std::clamp(sum / cfg.prediction_draws, 1.0, 5.0);
        out.mae[m] += std::abs(prediction - value);
      }
      double mean_pred = std::clamp(mean_prediction, 1.0, 5.0);
      out.mae.back() += std::abs(mean_pred - value);
    }
    for (double& v : out.mae) v /= static_cast<double>(data.test.size());
    out.evaluated = true;
  });

  ColdStartReport report;
  for (std::size_t slot = 0; slot < selected.size(); ++slot) {
    const UserOutcome& out = outcomes[slot];
    int u = selected[slot];
    const UserData& data = users[static_cast<std::size_t>(u)];
    if (!out.evaluated) {
      if (out.skip_reason == 1) ++report.skipped_no_core;
      if (out.skip_reason == 2) ++report.skipped_no_train;
      if (out.skip_reason == 3) ++report.skipped_no_test;
      continue;
    }
    ++report.evaluated_users;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      ColdStartRow row;
      row.user_raw_id = d.user_raw_ids[static_cast<std::size_t>(u)];
      row.interactions = data.interactions;
      row.bucket = bucket_name(data.interactions);
      row.method = methods[m];
      row.mae = out.mae[m];
      report.rows.push_back(std::move(row));
    }
  }

  for (const std::string bucket : {"low", "medium", "high"}) {
    for (const auto& method : methods) {
      std::vector<double> values;
      for (const auto& row : report.rows)
        if (row.bucket == bucket && row.method == method)
          values.push_back(row.mae);
      if (values.empty()) continue;
      ColdStartBucketStats stats;
      stats.bucket = bucket;
      stats.method = method;
      stats.users = static_cast<int>(values.size());
      stats.median = detail::median_of(values);
      double sum = 0.0;
      for (double v : values) sum += v;
      stats.mean = sum / static_cast<double>(values.size());
      if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - stats.mean) * (v - stats.mean);
        stats.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
      }
      report.summary.push_back(std::move(stats));
    }
  }

  report.config_echo = cfg.echo();
  report.config_echo.set("result", "evaluated_users",
                         static_cast<long long>(report.evaluated_users));
  report.config_echo.set("result", "skipped_no_core",
                         static_cast<long long>(report.skipped_no_core));
  report.config_echo.set("result", "skipped_no_train",
                         static_cast<long long>(report.skipped_no_train));
  report.config_echo.set("result", "skipped_no_test",
                         static_cast<long long>(report.skipped_no_test));
  return report;
}

inline void write_cold_start_report(const ColdStartReport& report,
                                    const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "mae_users.csv");
    out << "user,interactions,bucket,method,mae\n";
    for (const auto& row : report.rows)
      out << row.user_raw_id << ',' << row.interactions << ',' << row.bucket
          << ',' << row.method << ',' << fmt_csv(row.mae) << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "mae_summary.csv");
    out << "bucket,method,median_mae,mean_mae,std_mae,users\n";
    for (const auto& s : report.summary)
      out << s.bucket << ',' << s.method << ',' << fmt_csv(s.median) << ','
          << fmt_csv(s.mean) << ',' << fmt_csv(s.stddev) << ',' << s.users
          << '\n';
  }
  {
    std::ofstream out(fs::path(out_dir) / "manifest.txt");
    out << "version = " << version_string() << "\n\n"
        << report.config_echo.serialize();
  }
}

}  // namespace exgraph
