#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "exgraph/optimizer.hpp"
#include "oracles.hpp"

using namespace exgraph;

namespace {

struct Instance {
  Graph graph;
  ShiftedSignalMatrix ax;
  FilterSpec filter;
  std::vector<TrainingSample> training;
  Vector p, w;
};

Instance make_instance(Index n, Index order, int samples, std::uint64_t seed,
                       double w_max = 1.0) {
  Graph g = erdos_renyi(n, 0.4, mix_seed(seed, 1));
  Rng rng(mix_seed(seed, 2));
  GraphSignal x = rng.normal_vector(n);
  ShiftedSignalMatrix ax = build_shifted_matrix(g, x, order);
  FilterSpec f{rng.uniform_vector(order, -0.6, 0.6)};
  std::vector<TrainingSample> training;
  for (int t = 0; t < samples; ++t) {
    Vector b(n), a(n);
    for (Index i = 0; i < n; ++i) {
      b[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
      a[i] = b[i] * rng.uniform(0.0, w_max);
    }
    training.push_back({rng.normal(), a, b});
  }
  Vector p = rng.uniform_vector(n, 0.0, 1.0);
  Vector w = rng.uniform_vector(n, 0.0, w_max);
  return Instance{std::move(g), std::move(ax), std::move(f),
                  std::move(training), std::move(p), std::move(w)};
}

OptimizerConfig config_q2(double mu_p = 0.8, double mu_w = 0.6) {
  OptimizerConfig cfg;
  cfg.mu_p = mu_p;
  cfg.mu_w = mu_w;
  cfg.q_p = 2;
  cfg.q_w = 2;
  return cfg;
}

}  // namespace

TEST_CASE("project_box") {
  Vector v(3);
  v << -0.2, 0.5, 1.3;
  Vector clamped = project_box(v, 0.0, 1.0);
  CHECK(clamped[0] == 0.0);
  CHECK(clamped[1] == 0.5);
  CHECK(clamped[2] == 1.0);

  Vector inside(3);
  inside << 0.1, 0.2, 0.9;
  CHECK((project_box(inside, 0.0, 1.0) - inside).norm() == 0.0);
  CHECK_THROWS_AS(project_box(v, 1.0, 0.0), std::invalid_argument);

  // 2-D grid search: the clamp minimizes the euclidean distance to the box
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Vector point = rng.uniform_vector(2, -2.0, 3.0);
    Vector proj = project_box(point, 0.0, 1.0);
    double best = std::numeric_limits<double>::infinity();
    Vector best_u(2);
    for (int gi = 0; gi <= 100; ++gi)
      for (int gj = 0; gj <= 100; ++gj) {
        Vector u(2);
        u << gi / 100.0, gj / 100.0;
        double dist = (u - point).squaredNorm();
        if (dist < best) {
          best = dist;
          best_u = u;
        }
      }
    CHECK((proj - best_u).cwiseAbs().maxCoeff() < 0.011);
  }
}

TEST_CASE("closed_form_mse edge cases") {
  Instance inst = make_instance(8, 3, 1, 99);
  double x_star = 0.37;

  SECTION("p = 0 leaves only the target energy") {
    CHECK(closed_form_mse(Vector::Zero(8), inst.w, inst.ax, inst.filter,
                          x_star) == Catch::Approx(x_star * x_star));
  }
  SECTION("p = 1 is the deterministic bias") {
    Vector r = filtered_signal(inst.ax, inst.filter);
    double bias = inst.w.dot(r) - x_star;
    CHECK(closed_form_mse(Vector::Ones(8), inst.w, inst.ax, inst.filter,
                          x_star) == Catch::Approx(bias * bias));
  }
}

TEST_CASE("closed_form_mse matches the Monte-Carlo estimate") {
  // smaller-scale version of the acceptance criterion
  for (int trial = 0; trial < 4; ++trial) {
    Instance inst = make_instance(5, 2, 1, 300 + trial);
    Vector r = filtered_signal(inst.ax, inst.filter);
    AttachmentModel model{inst.p, inst.w, 1.0};
    double exact = closed_form_mse(inst.p, inst.w, inst.ax, inst.filter, 0.4);
    double mc = oracle::mc_mse(model, r, 0.4, 200000, 900 + trial);
    CHECK(std::abs(mc - exact) / exact < 0.02);
  }
}

TEST_CASE("empirical_cost matches the naive re-summation") {
  for (int q_p : {1, 2})
    for (int q_w : {1, 2}) {
      Instance inst = make_instance(10, 3, 6, 42 + q_p * 10 + q_w);
      OptimizerConfig cfg;
      cfg.mu_p = 0.7;
      cfg.mu_w = 0.4;
      cfg.q_p = q_p;
      cfg.q_w = q_w;
      double fast = empirical_cost(inst.p, inst.w, inst.training, inst.ax,
                                   inst.filter, cfg);
      double naive = oracle::naive_cost(inst.p, inst.w, inst.training, inst.ax,
                                        inst.filter, cfg);
      CHECK(std::abs(fast - naive) <= 1e-12 * std::max(1.0, std::abs(naive)));
    }
}

TEST_CASE("empirical_cost trivial identities") {
  Instance inst = make_instance(7, 2, 1, 55);
  const TrainingSample& s = inst.training.front();

  SECTION("no regularizers, p = 1, w = a gives the plain squared residual") {
    OptimizerConfig cfg = config_q2(0.0, 0.0);
    Vector r = filtered_signal(inst.ax, inst.filter);
    double expected = std::pow(s.a_plus.dot(r) - s.x_plus, 2);
    // p=1 makes the prediction deterministic except where a has zeros
    double cost = empirical_cost(Vector::Ones(7), s.a_plus, inst.training,
                                 inst.ax, inst.filter, cfg);
    // variance vanishes at p = 1 regardless of w
    CHECK(cost == Catch::Approx(expected).margin(1e-12));
  }
  SECTION("matching the sample zeroes the regularizers") {
    OptimizerConfig cfg = config_q2(5.0, 5.0);
    OptimizerConfig no_reg = config_q2(0.0, 0.0);
    double with_reg = empirical_cost(s.b_plus, s.a_plus, inst.training,
                                     inst.ax, inst.filter, cfg);
    double without = empirical_cost(s.b_plus, s.a_plus, inst.training, inst.ax,
                                    inst.filter, no_reg);
    CHECK(with_reg == Catch::Approx(without).margin(1e-12));
  }
  SECTION("empty training set is rejected") {
    OptimizerConfig cfg;
    CHECK_THROWS_AS(
        empirical_cost(inst.p, inst.w, {}, inst.ax, inst.filter, cfg),
        std::invalid_argument);
  }
}

TEST_CASE("gradients match central finite differences (q = 2)") {
  for (int trial = 0; trial < 25; ++trial) {
    Rng rng(700 + trial);
    Index n = 3 + static_cast<Index>(rng.uniform_int(12));
    Index order = 1 + static_cast<Index>(rng.uniform_int(4));
    int samples = 1 + static_cast<int>(rng.uniform_int(6));
    Instance inst = make_instance(n, order, samples, 7000 + trial);
    OptimizerConfig cfg = config_q2(rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
    CostEvaluator cost(inst.training, inst.ax, inst.filter, cfg);

    Vector gp = cost.grad_p(inst.p, inst.w);
    Vector gp_fd = oracle::fd_gradient(
        [&](const Vector& p) { return cost.cost(p, inst.w); }, inst.p, 1e-6);
    CHECK(oracle::relative_gap(gp, gp_fd) < 1e-4);

    Vector gw = cost.grad_w(inst.p, inst.w);
    Vector gw_fd = oracle::fd_gradient(
        [&](const Vector& w) { return cost.cost(inst.p, w); }, inst.w, 1e-6);
    CHECK(oracle::relative_gap(gw, gw_fd) < 1e-4);
  }
}

TEST_CASE("q = 1 subgradients match finite differences away from kinks") {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(800 + trial);
    Instance inst = make_instance(8, 3, 4, 8000 + trial);
    OptimizerConfig cfg;
    cfg.mu_p = 0.9;
    cfg.mu_w = 0.7;
    cfg.q_p = 1;
    cfg.q_w = 1;
    // keep p and w at least 1e-3 from every kink location
    Vector p = inst.p, w = inst.w;
    for (Index i = 0; i < p.size(); ++i)
      p[i] = 0.05 + 0.9 * p[i];  // away from 0 and 1
    for (Index i = 0; i < w.size(); ++i) {
      for (const auto& s : inst.training) {
        if (std::abs(w[i] - s.a_plus[i]) < 2e-3) w[i] += 5e-3;
      }
      if (w[i] < 2e-3) w[i] += 5e-3;
    }
    CostEvaluator cost(inst.training, inst.ax, inst.filter, cfg);
    Vector gp = cost.grad_p(p, w);
    Vector gp_fd = oracle::fd_gradient(
        [&](const Vector& q) { return cost.cost(q, w); }, p, 1e-6);
    CHECK(oracle::relative_gap(gp, gp_fd) < 1e-4);
    Vector gw = cost.grad_w(p, w);
    Vector gw_fd = oracle::fd_gradient(
        [&](const Vector& q) { return cost.cost(p, q); }, w, 1e-6);
    CHECK(oracle::relative_gap(gw, gw_fd) < 1e-4);
  }
}

TEST_CASE("gradient trivial zeroes") {
  Instance inst = make_instance(6, 2, 3, 66);

  SECTION("cost independent of p when w vanishes and mu_p = 0") {
    OptimizerConfig cfg = config_q2(0.0, 0.5);
    Vector g = grad_p(inst.p, Vector::Zero(6), inst.training, inst.ax,
                      inst.filter, cfg);
    CHECK(g.norm() == 0.0);
  }
  SECTION("cost independent of w when p vanishes and mu_w = 0") {
    OptimizerConfig cfg = config_q2(0.5, 0.0);
    Vector g = grad_w(Vector::Zero(6), inst.w, inst.training, inst.ax,
                      inst.filter, cfg);
    CHECK(g.norm() == 0.0);
  }
  SECTION("variance part of grad_w vanishes at binary p") {
    OptimizerConfig cfg = config_q2(0.0, 0.0);
    Vector p(6);
    p << 0, 1, 0, 1, 1, 0;
    // with the bias contribution removed, only the variance term remains
    Vector r = filtered_signal(inst.ax, inst.filter);
    Vector g = grad_w(p, inst.w, inst.training, inst.ax, inst.filter, cfg);
    double s = inst.w.cwiseProduct(p).dot(r);
    double t_count = static_cast<double>(inst.training.size());
    double sum_x = 0.0;
    for (const auto& smp : inst.training) sum_x += smp.x_plus;
    Vector bias_part = 2.0 * (t_count * s - sum_x) * p.cwiseProduct(r);
    CHECK((g - bias_part).norm() < 1e-14);
  }
}

TEST_CASE("fit with zero rates returns the projected initialization") {
  Instance inst = make_instance(9, 2, 4, 77);
  OptimizerConfig cfg = config_q2();
  cfg.lambda_p = 0.0;
  cfg.lambda_w = 0.0;
  cfg.iterations = 50;
  cfg.seed = 5;
  FitResult res = fit(inst.training, inst.ax, inst.filter, cfg);
  Rng rng(5);
  Vector p0 = rng.uniform_vector(9, 0.0, 1.0);
  Vector w0 = rng.uniform_vector(9, 0.0, 1.0);
  CHECK((res.p - p0).norm() == 0.0);
  CHECK((res.w - w0).norm() == 0.0);
  CHECK(res.cost_trace.size() == 51);
  double first = res.cost_trace.front();
  for (double c : res.cost_trace) CHECK(c == first);
}

TEST_CASE("fit keeps every final iterate inside the boxes") {
  Instance inst = make_instance(12, 3, 5, 78, 0.7);
  OptimizerConfig cfg = config_q2(0.2, 0.2);
  cfg.w_max = 0.7;
  cfg.lambda_p = 5e-3;
  cfg.lambda_w = 5e-3;
  cfg.iterations = 120;
  cfg.seed = 11;
  FitResult res = fit(inst.training, inst.ax, inst.filter, cfg);
  CHECK(res.p.minCoeff() >= 0.0);
  CHECK(res.p.maxCoeff() <= 1.0);
  CHECK(res.w.minCoeff() >= 0.0);
  CHECK(res.w.maxCoeff() <= 0.7);
  CHECK(res.cost_trace.size() == 121);
}

TEST_CASE("a dominant w regularizer pulls w to the sample attachment") {
  Instance inst = make_instance(10, 2, 1, 79);
  OptimizerConfig cfg = config_q2(0.0, 1e4);
  cfg.lambda_p = 0.0;
  cfg.lambda_w = 1e-5;
  cfg.iterations = 2000;
  cfg.seed = 21;
  cfg.update_p = false;
  FitResult res = fit(inst.training, inst.ax, inst.filter, cfg);
  CHECK((res.w - inst.training.front().a_plus).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("fit reports divergence with the iteration index") {
  Instance inst = make_instance(5, 2, 1, 80);
  inst.training.front().x_plus = std::numeric_limits<double>::infinity();
  OptimizerConfig cfg = config_q2();
  CHECK_THROWS_AS(fit(inst.training, inst.ax, inst.filter, cfg),
                  DivergedError);
  try {
    fit(inst.training, inst.ax, inst.filter, cfg);
  } catch (const DivergedError& e) {
    CHECK(e.iteration == 0);
  }
}

TEST_CASE("fit descends to a plateau and beats its start") {
  Instance inst = make_instance(20, 3, 40, 81);
  OptimizerConfig cfg = config_q2(1.0, 1.0);
  cfg.lambda_p = 2e-4;
  cfg.lambda_w = 2e-4;
  cfg.iterations = 600;
  for (std::uint64_t restart = 0; restart < 10; ++restart) {
    cfg.seed = 400 + restart;
    FitResult res = fit(inst.training, inst.ax, inst.filter, cfg);
    double initial = res.cost_trace.front();
    double final = res.cost_trace.back();
    CHECK(final < initial);
    auto tail = res.cost_trace.end() - 100;
    double lo = *std::min_element(tail, res.cost_trace.end());
    double hi = *std::max_element(tail, res.cost_trace.end());
    CHECK(hi - lo < 1e-6 * initial);
  }
}

TEST_CASE("plateau stop flag ends the loop early") {
  Instance inst = make_instance(10, 2, 10, 82);
  OptimizerConfig cfg = config_q2(1.0, 1.0);
  cfg.lambda_p = 1e-3;
  cfg.lambda_w = 1e-3;
  cfg.iterations = 5000;
  cfg.stop_on_plateau = true;
  FitResult res = fit(inst.training, inst.ax, inst.filter, cfg);
  CHECK(res.cost_trace.size() < 5001);
}

TEST_CASE("convexity_threshold formula") {
  Instance inst = make_instance(7, 3, 1, 83);
  Vector r = filtered_signal(inst.ax, inst.filter);

  SECTION("zero filtered signal gives a zero threshold") {
    FilterSpec zero{Vector::Zero(3)};
    CHECK(convexity_threshold(inst.w, inst.ax, zero, 1.0) == 0.0);
  }
  SECTION("zero weights leave only the max term") {
    CHECK(convexity_threshold(Vector::Zero(7), inst.ax, inst.filter, 1.0) ==
          Catch::Approx(r.cwiseAbs2().maxCoeff()));
  }
  SECTION("general value and the clamped floor") {
    double expected =
        4.0 * r.cwiseAbs2().maxCoeff() - inst.w.cwiseProduct(r).squaredNorm();
    CHECK(convexity_threshold(inst.w, inst.ax, inst.filter, 2.0) ==
          Catch::Approx(expected));
    CHECK(convexity_mu_floor(inst.w, inst.ax, inst.filter, 2.0) >= 0.0);
  }
}

TEST_CASE("hessian_p closed form") {
  Instance inst = make_instance(6, 2, 1, 84);

  SECTION("zero weights leave the scaled identity") {
    Matrix h = hessian_p(inst.p, Vector::Zero(6), inst.ax, inst.filter, 0.8);
    CHECK((h - 1.6 * Matrix::Identity(6, 6)).norm() < 1e-15);
  }
  SECTION("single node collapses to 2 mu_p") {
    Graph g(1, false, {});
    GraphSignal x(1);
    x << 0.9;
    ShiftedSignalMatrix ax = build_shifted_matrix(g, x, 1);
    FilterSpec f{Vector::Constant(1, 0.5)};
    Vector p1 = Vector::Constant(1, 0.4), w1 = Vector::Constant(1, 0.7);
    Matrix h = hessian_p(p1, w1, ax, f, 0.3);
    CHECK(h.rows() == 1);
    CHECK(h(0, 0) == Catch::Approx(0.6));
  }
  SECTION("matches the finite-difference Hessian of the one-sample cost") {
    OptimizerConfig cfg = config_q2(0.9, 0.0);
    std::vector<TrainingSample> single{inst.training.front()};
    CostEvaluator cost(single, inst.ax, inst.filter, cfg);
    Matrix analytic = hessian_p(inst.p, inst.w, inst.ax, inst.filter, 0.9);
    Matrix fd = oracle::fd_hessian(
        [&](const Vector& p) { return cost.cost(p, inst.w); }, inst.p, 1e-4);
    CHECK((analytic - fd).norm() / analytic.norm() < 1e-3);
    // the sample-count-aware variant only rescales
    Matrix scaled = hessian_p_scaled(inst.p, inst.w, inst.ax, inst.filter,
                                     0.9, 3);
    CHECK((scaled - 3.0 * analytic).norm() == 0.0);
  }
}

TEST_CASE("the unsubtracted bound always convexifies") {
  // mu_p = w_max^2 max_i r_i^2 dominates every diagonal deficit
  for (int trial = 0; trial < 40; ++trial) {
    Rng rng(860 + trial);
    Index n = 2 + static_cast<Index>(rng.uniform_int(29));
    Instance inst = make_instance(n, 3, 1, 8600 + trial);
    Vector r = filtered_signal(inst.ax, inst.filter);
    double mu_safe = r.cwiseAbs2().maxCoeff();  // w_max = 1
    Matrix h = hessian_p(inst.p, inst.w, inst.ax, inst.filter, mu_safe);
    Eigen::SelfAdjointEigenSolver<Matrix> eigen(h);
    CHECK(eigen.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("the w subproblem is convex") {
  for (int trial = 0; trial < 10; ++trial) {
    Instance inst = make_instance(6, 2, 3, 870 + trial);
    OptimizerConfig cfg = config_q2(0.0, 0.3);
    CostEvaluator cost(inst.training, inst.ax, inst.filter, cfg);
    Matrix fd = oracle::fd_hessian(
        [&](const Vector& w) { return cost.cost(inst.p, w); }, inst.w, 1e-4);
    Eigen::SelfAdjointEigenSolver<Matrix> eigen(fd);
    CHECK(eigen.eigenvalues().minCoeff() >= -1e-6);
  }
}

TEST_CASE("marginal variants leave the frozen block untouched") {
  Instance inst = make_instance(8, 2, 4, 88);
  OptimizerConfig cfg = config_q2(0.5, 0.5);
  cfg.lambda_p = 1e-3;
  cfg.lambda_w = 1e-3;
  cfg.iterations = 100;
  cfg.update_w = false;
  cfg.init_w = Vector::Ones(8);
  FitResult res = fit(inst.training, inst.ax, inst.filter, cfg);
  CHECK((res.w - Vector::Ones(8)).norm() == 0.0);

  OptimizerConfig cfg2 = config_q2(0.5, 0.5);
  cfg2.lambda_p = 1e-3;
  cfg2.lambda_w = 1e-3;
  cfg2.iterations = 100;
  cfg2.update_p = false;
  cfg2.init_p = Vector::Constant(8, 0.25);
  FitResult res2 = fit(inst.training, inst.ax, inst.filter, cfg2);
  CHECK((res2.p - Vector::Constant(8, 0.25)).norm() == 0.0);
}

TEST_CASE("cost trace serialization") {
  std::vector<double> trace{3.0, 2.0, 1.5};
  save_cost_trace(trace, "/tmp/exgraph_test_trace.csv");
  std::ifstream in("/tmp/exgraph_test_trace.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,cost");
  std::getline(in, line);
  CHECK(line == "0,3");
}
