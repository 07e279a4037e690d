// Command-line entry point: reproducible experiment runs plus file-level
// fit/predict/graph-build utilities. Flags override config-file values,
// which override built-in defaults.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "exgraph/experiments.hpp"
#include "exgraph/training_io.hpp"

namespace fs = std::filesystem;
using namespace exgraph;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

SyntheticConfig resolve_synthetic(const CommonArgs& args) {
  SyntheticConfig cfg;
  if (!args.config_path.empty())
    cfg = SyntheticConfig::from_config(ConfigFile::load(args.config_path));
  if (args.seed_set) cfg.seed = args.seed;
  if (args.workers > 0) cfg.workers = args.workers;
  return cfg;
}

void print_synthetic_summary(const SyntheticReport& report) {
  std::cout << "method,mse_mean,mse_std,splits\n";
  for (const auto& s : report.summary)
    std::cout << s.method << ',' << fmt_csv(s.mean) << ',' << fmt_csv(s.stddev)
              << ',' << s.samples << '\n';
}

int run_synthetic_cmd(const CommonArgs& args, int splits, int iterations,
                      const std::string& family) {
  SyntheticConfig cfg = resolve_synthetic(args);
  if (splits > 0) cfg.splits = splits;
  if (iterations > 0) cfg.iterations = iterations;
  if (!family.empty()) cfg.family = family_from_name(family);
  SyntheticReport report = run_synthetic(cfg);
  write_synthetic_report(report, args.out_dir);
  print_synthetic_summary(report);
  std::cout << "wrote " << (fs::path(args.out_dir) / "mse_summary.csv").string()
            << '\n';
  return 0;
}

int run_convergence_cmd(const CommonArgs& args, int restarts,
                        double mu_p_convex, int iterations) {
  SyntheticConfig cfg = resolve_synthetic(args);
  if (iterations > 0) cfg.iterations = iterations;
  ConvergenceStudy study = run_convergence_study(cfg, restarts, mu_p_convex);
  write_convergence_study(study, args.out_dir);
  std::cout << "wrote " << 2 * restarts << " trace files to " << args.out_dir
            << " (threshold at w=0: " << fmt_csv(study.threshold) << ")\n";
  return 0;
}

int run_coldstart_cmd(const CommonArgs& args, const std::string& data_path) {
  ColdStartConfig cfg;
  if (!args.config_path.empty())
    cfg = ColdStartConfig::from_config(ConfigFile::load(args.config_path));
  if (args.seed_set) cfg.seed = args.seed;
  if (args.workers > 0) cfg.workers = args.workers;
  ColdStartReport report = run_cold_start(data_path, cfg);
  write_cold_start_report(report, args.out_dir);
  std::cout << "bucket,method,median_mae,mean_mae,std_mae,users\n";
  for (const auto& s : report.summary)
    std::cout << s.bucket << ',' << s.method << ',' << fmt_csv(s.median) << ','
              << fmt_csv(s.mean) << ',' << fmt_csv(s.stddev) << ',' << s.users
              << '\n';
  std::cout << "evaluated " << report.evaluated_users << " users; skipped "
            << report.skipped_no_core << " without core ratings, "
            << report.skipped_no_train << " without training ratings, "
            << report.skipped_no_test << " without test ratings\n";
  return 0;
}

FilterSpec resolve_filter(const std::string& filter_path, double alpha,
                          int order) {
  if (!filter_path.empty()) return load_filter(filter_path);
  return geometric_coefficients(alpha, order);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exgraph: learned stochastic attachment for signal "
               "interpolation on expanding graphs"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--threads", args.workers, "worker threads (default 1)");

  // --- synthetic -----------------------------------------------------------
  auto* synthetic = app.add_subcommand(
      "synthetic", "synthetic interpolation benchmark; writes "
                   "mse_summary.csv, mse_trials.csv, manifest.txt");
  int syn_splits = 0, syn_iters = 0;
  std::string syn_family;
  synthetic->add_option("--config", args.config_path,
                        "config file (flags override its values)");
  synthetic->add_option("--out", args.out_dir, "output directory")->required();
  synthetic->add_option("--seed", args.seed, "seed override")
      ->each([&](const std::string&) { args.seed_set = true; });
  synthetic->add_option("--splits", syn_splits, "train/test split count");
  synthetic->add_option("--iterations", syn_iters, "descent iterations");
  synthetic->add_option("--family", syn_family, "graph family: er or ba");

  // --- convergence ---------------------------------------------------------
  auto* convergence = app.add_subcommand(
      "convergence", "descent traces for plain vs convexified regularizer "
                     "weight; one CSV per restart and regime");
  int conv_restarts = 50, conv_iters = 0;
  double conv_mu_convex = 30.0;
  convergence->add_option("--config", args.config_path, "config file");
  convergence->add_option("--out", args.out_dir, "output directory")->required();
  convergence->add_option("--seed", args.seed, "seed override")
      ->each([&](const std::string&) { args.seed_set = true; });
  convergence->add_option("--restarts", conv_restarts, "random restarts");
  convergence->add_option("--mu-p-convex", conv_mu_convex,
                          "regularizer weight for the convexified regime");
  convergence->add_option("--iterations", conv_iters, "descent iterations");

  // --- coldstart -----------------------------------------------------------
  auto* coldstart = app.add_subcommand(
      "coldstart", "cold-start rating prediction on a ratings file; writes "
                   "mae_users.csv, mae_summary.csv, manifest.txt");
  std::string cs_data;
  coldstart->add_option("--config", args.config_path, "config file");
  coldstart->add_option("--data", cs_data, "ratings file (user TAB item TAB "
                        "rating TAB timestamp)")->required();
  coldstart->add_option("--out", args.out_dir, "output directory")->required();
  coldstart->add_option("--seed", args.seed, "seed override")
      ->each([&](const std::string&) { args.seed_set = true; });

  // --- fit -----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand(
      "fit", "fit attachment probabilities and weights from files");
  std::string fit_graph, fit_signal, fit_train, fit_out, fit_filter;
  double fit_alpha = 0.3, fit_mu_p = 1.0, fit_mu_w = 1.0;
  double fit_lambda_p = 1e-5, fit_lambda_w = 1e-5, fit_w_max = 1.0;
  int fit_order = 3, fit_q_p = 1, fit_q_w = 2, fit_iters = 1000;
  bool fit_directed = false;
  std::uint64_t fit_seed = 0;
  fit_cmd->add_option("--graph", fit_graph, "edge list file")->required();
  fit_cmd->add_option("--signal", fit_signal, "signal file")->required();
  fit_cmd->add_option("--train", fit_train, "training sample CSV")->required();
  fit_cmd->add_option("--out", fit_out, "output model file")->required();
  fit_cmd->add_option("--filter", fit_filter, "filter coefficient file");
  fit_cmd->add_option("--alpha", fit_alpha, "geometric coefficient base");
  fit_cmd->add_option("--order", fit_order, "filter order");
  fit_cmd->add_flag("--directed", fit_directed, "treat edge list as directed");
  fit_cmd->add_option("--mu-p", fit_mu_p, "p regularizer weight");
  fit_cmd->add_option("--mu-w", fit_mu_w, "w regularizer weight");
  fit_cmd->add_option("--q-p", fit_q_p, "p regularizer exponent (1 or 2)");
  fit_cmd->add_option("--q-w", fit_q_w, "w regularizer exponent (1 or 2)");
  fit_cmd->add_option("--lambda-p", fit_lambda_p, "p learning rate");
  fit_cmd->add_option("--lambda-w", fit_lambda_w, "w learning rate");
  fit_cmd->add_option("--iterations", fit_iters, "descent iterations");
  fit_cmd->add_option("--w-max", fit_w_max, "weight upper bound");
  fit_cmd->add_option("--seed", fit_seed, "initialization seed");

  // --- predict -------------------------------------------------------------
  auto* predict = app.add_subcommand(
      "predict", "interpolate the incoming-node value under a fitted model");
  std::string pr_model, pr_graph, pr_signal, pr_filter, pr_out;
  double pr_alpha = 0.3;
  int pr_order = 3, pr_samples = 100;
  bool pr_directed = false;
  std::uint64_t pr_seed = 0;
  predict->add_option("--model", pr_model, "model file")->required();
  predict->add_option("--graph", pr_graph, "edge list file")->required();
  predict->add_option("--signal", pr_signal, "signal file")->required();
  predict->add_option("--out", pr_out, "output file")->required();
  predict->add_option("--filter", pr_filter, "filter coefficient file");
  predict->add_option("--alpha", pr_alpha, "geometric coefficient base");
  predict->add_option("--order", pr_order, "filter order");
  predict->add_flag("--directed", pr_directed, "treat edge list as directed");
  predict->add_option("--samples", pr_samples, "attachment draws to average");
  predict->add_option("--seed", pr_seed, "sampling seed");

  // --- graph-build ---------------------------------------------------------
  auto* graph_build = app.add_subcommand(
      "graph-build", "build the core item graph and cold-start split from a "
                     "ratings file");
  std::string gb_data, gb_out;
  int gb_min_ratings = 10, gb_core = 50, gb_train = 700, gb_k = 35;
  std::uint64_t gb_seed = 1;
  graph_build->add_option("--data", gb_data, "ratings file")->required();
  graph_build->add_option("--out", gb_out, "output directory")->required();
  graph_build->add_option("--min-ratings", gb_min_ratings,
                          "minimum ratings per user/item");
  graph_build->add_option("--core-size", gb_core, "core item count");
  graph_build->add_option("--train-size", gb_train, "training item count");
  graph_build->add_option("--k", gb_k, "neighbours per item");
  graph_build->add_option("--seed", gb_seed, "split seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synthetic->parsed())
      return run_synthetic_cmd(args, syn_splits, syn_iters, syn_family);
    if (convergence->parsed())
      return run_convergence_cmd(args, conv_restarts, conv_mu_convex,
                                 conv_iters);
    if (coldstart->parsed()) return run_coldstart_cmd(args, cs_data);

    if (fit_cmd->parsed()) {
      GraphSignal x = load_signal(fit_signal);
      Graph g = load_edge_list(fit_graph, x.size(), fit_directed);
      FilterSpec f = resolve_filter(fit_filter, fit_alpha, fit_order);
      auto training = load_training_csv(fit_train, g.size());
      ShiftedSignalMatrix ax = build_shifted_matrix(g, x, f.order());
      OptimizerConfig cfg;
      cfg.mu_p = fit_mu_p;
      cfg.mu_w = fit_mu_w;
      cfg.q_p = fit_q_p;
      cfg.q_w = fit_q_w;
      cfg.lambda_p = fit_lambda_p;
      cfg.lambda_w = fit_lambda_w;
      cfg.iterations = fit_iters;
      cfg.w_max = fit_w_max;
      cfg.seed = fit_seed;
      FitResult result = fit(training, ax, f, cfg);
      fs::path model_path(fit_out);
      fs::path trace_path = model_path;
      trace_path.replace_extension(".trace.csv");
      save_fit_result(result, cfg.w_max, model_path.string(),
                      trace_path.string());
      std::cout << "final cost " << fmt_csv(result.cost_trace.back())
                << " after " << result.cost_trace.size() - 1
                << " iterations; model written to " << model_path.string()
                << '\n';
      return 0;
    }

    if (predict->parsed()) {
      GraphSignal x = load_signal(pr_signal);
      Graph g = load_edge_list(pr_graph, x.size(), pr_directed);
      FilterSpec f = resolve_filter(pr_filter, pr_alpha, pr_order);
      AttachmentModel model = load_model(pr_model);
      ShiftedSignalMatrix ax = build_shifted_matrix(g, x, f.order());
      Vector r = filtered_signal(ax, f);
      double expected = mean(model).dot(r);
      double mc = 0.0;
      for (int d = 0; d < pr_samples; ++d)
        mc += sample(model, mix_seed(pr_seed, static_cast<std::uint64_t>(d)))
                  .a_plus.dot(r);
      mc /= pr_samples;
      std::ofstream out(pr_out);
      if (!out) throw std::runtime_error("cannot open " + pr_out);
      out << "expected = " << fmt_full(expected) << '\n'
          << "mc_mean = " << fmt_full(mc) << '\n'
          << "samples = " << pr_samples << '\n'
          << "seed = " << pr_seed << '\n';
      std::cout << "expected " << fmt_csv(expected) << ", mc_mean "
                << fmt_csv(mc) << " (" << pr_samples << " draws)\n";
      return 0;
    }

    if (graph_build->parsed()) {
      RatingsDataset d =
          filter_min_ratings(load_movielens(gb_data), gb_min_ratings);
      ColdStartSplit split =
          make_cold_start_split(d, gb_core, gb_train, mix_seed(gb_seed, 1));
      Graph g = build_knn_item_graph(d, split.core_items, gb_k);
      fs::create_directories(gb_out);
      save_edge_list(g, (fs::path(gb_out) / "graph.edges").string());
      save_split(split, d, (fs::path(gb_out) / "split.txt").string());
      ConfigFile manifest;
      manifest.set("data", "min_ratings", static_cast<long long>(gb_min_ratings));
      manifest.set("data", "users", static_cast<long long>(d.num_users));
      manifest.set("data", "items", static_cast<long long>(d.num_items));
      manifest.set("split", "core", static_cast<long long>(gb_core));
      manifest.set("split", "train", static_cast<long long>(gb_train));
      manifest.set("split", "test",
                   static_cast<long long>(split.test_items.size()));
      manifest.set("graph", "k", static_cast<long long>(gb_k));
      manifest.set("graph", "edges", static_cast<long long>(g.edge_count()));
      manifest.set("run", "seed", std::to_string(gb_seed));
      manifest.set("run", "version", std::string(version_string()));
      manifest.save((fs::path(gb_out) / "manifest.txt").string());
      std::cout << "filtered to " << d.num_users << " users, " << d.num_items
                << " items; core graph has " << g.edge_count() << " edges\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
