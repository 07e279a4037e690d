#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "exgraph/graph.hpp"
#include "oracles.hpp"

using namespace exgraph;

TEST_CASE("erdos_renyi handles the degenerate probabilities") {
  CHECK(erdos_renyi(5, 0.0, 7).edge_count() == 0);
  CHECK(erdos_renyi(5, 1.0, 7).edge_count() == 10);
  CHECK_THROWS_AS(erdos_renyi(0, 0.5, 7), std::invalid_argument);
  CHECK_THROWS_AS(erdos_renyi(5, 1.5, 7), std::invalid_argument);
}

TEST_CASE("erdos_renyi edge count matches the binomial moments") {
  const int seeds = 50;
  const double pairs = 4950.0;
  double total = 0.0;
  for (int s = 0; s < seeds; ++s)
    total += static_cast<double>(erdos_renyi(100, 0.1, 1000 + s).edge_count());
  double mean = total / seeds;
  double sigma = std::sqrt(pairs * 0.1 * 0.9);
  CHECK(std::abs(mean - pairs * 0.1) < 3.0 * sigma / std::sqrt(seeds));
}

TEST_CASE("generators are deterministic per seed") {
  Graph a = erdos_renyi(60, 0.2, 42);
  Graph b = erdos_renyi(60, 0.2, 42);
  CHECK((a.dense_adjacency() - b.dense_adjacency()).norm() == 0.0);
  Graph c = barabasi_albert(60, 3, 42);
  Graph d = barabasi_albert(60, 3, 42);
  CHECK((c.dense_adjacency() - d.dense_adjacency()).norm() == 0.0);
}

TEST_CASE("barabasi_albert edge and degree counts") {
  CHECK(barabasi_albert(3, 1, 5).edge_count() == 2);  // a tree
  Graph g = barabasi_albert(100, 2, 5);
  // seed clique edges + m per arrival
  Index expected = 1 + 98 * 2;
  CHECK(g.edge_count() == expected);
  CHECK(degree_vector(g).sum() == Catch::Approx(2.0 * expected));
  CHECK_THROWS_AS(barabasi_albert(3, 3, 5), std::invalid_argument);
  CHECK_THROWS_AS(barabasi_albert(3, 0, 5), std::invalid_argument);
}

TEST_CASE("barabasi_albert grows heavier tails than same-density er") {
  const int seeds = 50;
  double ba_max = 0.0, er_max = 0.0;
  // BA(100, 2) has 197 edges; the matched ER probability keeps the density
  double p_match = 197.0 / 4950.0;
  for (int s = 0; s < seeds; ++s) {
    ba_max += degree_vector(barabasi_albert(100, 2, 100 + s)).maxCoeff();
    er_max += degree_vector(erdos_renyi(100, p_match, 100 + s)).maxCoeff();
  }
  CHECK(ba_max / seeds > er_max / seeds);
}

TEST_CASE("smooth_signal of a single eigenvector is the centered constant") {
  Graph g = erdos_renyi(40, 1.0, 3);  // complete graph, surely connected
  GraphSignal x = smooth_signal(g, 1, 11);
  CHECK(x.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("smooth_signal is centered and low-frequency") {
  Graph g = erdos_renyi(100, 0.1, 21);
  Matrix lap = Matrix(degree_vector(g).asDiagonal()) - g.dense_adjacency();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(lap);
  double median = solver.eigenvalues()[50];
  int below = 0;
  const int seeds = 30;
  for (int s = 0; s < seeds; ++s) {
    GraphSignal x = smooth_signal(g, 30, 500 + s);
    CHECK(std::abs(x.mean()) < 1e-12);
    double rayleigh = x.dot(lap * x) / x.squaredNorm();
    if (rayleigh < median) ++below;
  }
  CHECK(below >= 27);  // at least 90% of seeds
  CHECK_THROWS_AS(smooth_signal(g, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(smooth_signal(g, 101, 1), std::invalid_argument);
}

TEST_CASE("smooth_signal rejects directed graphs") {
  std::vector<Eigen::Triplet<double>> edges{{0, 1, 1.0}};
  Graph g(3, /*directed=*/true, edges);
  CHECK_THROWS_AS(smooth_signal(g, 1, 1), std::invalid_argument);
}

TEST_CASE("expand produces the block structure") {
  std::vector<Eigen::Triplet<double>> edges{{0, 1, 1.0}};
  Graph g(2, false, edges);

  SECTION("zero attachment is the isolated incoming node") {
    ExpandedGraph eg = expand(g, Vector::Zero(2));
    Matrix a = eg.dense_adjacency();
    CHECK(a.row(2).norm() == 0.0);
    CHECK(a.col(2).norm() == 0.0);
    CHECK((a.topLeftCorner(2, 2) - g.dense_adjacency()).norm() == 0.0);
  }

  SECTION("direct instantiation") {
    Vector a_plus(2);
    a_plus << 1.0, 0.0;
    Matrix a = expand(g, a_plus).dense_adjacency();
    CHECK(a(2, 0) == 1.0);
    CHECK(a(2, 1) == 0.0);
    CHECK(a(0, 2) == 0.0);
    CHECK(a(1, 2) == 0.0);
    CHECK(a(2, 2) == 0.0);
  }

  SECTION("length mismatch is rejected") {
    CHECK_THROWS_AS(expand(g, Vector::Zero(3)), std::invalid_argument);
  }
}

TEST_CASE("expanded adjacency powers have the shifted bottom-left block") {
  Graph g = erdos_renyi(12, 0.4, 9);
  Rng rng(77);
  Vector a_plus = rng.uniform_vector(12, 0.0, 1.0);
  ExpandedGraph eg = expand(g, a_plus);
  Matrix ap = eg.dense_adjacency();
  Matrix a = g.dense_adjacency();
  for (int l = 1; l <= 4; ++l) {
    Matrix power = oracle::dense_power(ap, l);
    Matrix base_power = oracle::dense_power(a, l);
    CHECK((power.topLeftCorner(12, 12) - base_power).norm() < 1e-12);
    Vector bottom = (a_plus.transpose() * oracle::dense_power(a, l - 1)).transpose();
    CHECK((power.row(12).head(12).transpose() - bottom).norm() < 1e-12);
    CHECK(power.col(12).norm() == 0.0);
  }
}

TEST_CASE("expand then truncate recovers the original graph") {
  Graph g = erdos_renyi(15, 0.3, 4);
  ExpandedGraph eg = expand(g, Vector::Ones(15));
  CHECK((eg.base().dense_adjacency() - g.dense_adjacency()).norm() == 0.0);
}

TEST_CASE("degree_vector matches a row-sum loop") {
  SECTION("empty graph") {
    Graph g(3, false, {});
    CHECK(degree_vector(g).isZero());
  }
  SECTION("path graph") {
    std::vector<Eigen::Triplet<double>> edges{{0, 1, 1.0}, {1, 2, 1.0}};
    Graph g(3, false, edges);
    Vector d = degree_vector(g);
    CHECK(d[0] == 1.0);
    CHECK(d[1] == 2.0);
    CHECK(d[2] == 1.0);
  }
  SECTION("random weighted graph") {
    Rng rng(5);
    std::vector<Eigen::Triplet<double>> edges;
    for (int i = 0; i < 20; ++i)
      for (int j = i + 1; j < 20; ++j)
        if (rng.uniform() < 0.3) edges.emplace_back(i, j, rng.uniform(0.1, 2.0));
    Graph g(20, false, edges);
    Matrix a = g.dense_adjacency();
    Vector d = degree_vector(g);
    for (int i = 0; i < 20; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < 20; ++j) row_sum += a(i, j);
      CHECK(d[i] == Catch::Approx(row_sum).margin(1e-12));
    }
  }
}

TEST_CASE("graph invariants are enforced") {
  CHECK_THROWS_AS(Graph(2, false, {{0, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(
      Graph(2, false, {Eigen::Triplet<double>(
                          0, 1, std::numeric_limits<double>::infinity())}),
      std::invalid_argument);
  CHECK_THROWS_AS(Graph(2, false, {{0, 5, 1.0}}), std::invalid_argument);
}

TEST_CASE("edge list round trip is bit exact") {
  Graph g = erdos_renyi(25, 0.25, 88);
  std::ostringstream out;
  save_edge_list(g, out);
  std::istringstream in(out.str());
  Graph loaded = load_edge_list(in, 25, false);
  CHECK((loaded.dense_adjacency() - g.dense_adjacency()).norm() == 0.0);

  // directed graphs store every edge
  std::vector<Eigen::Triplet<double>> edges{{0, 1, 0.5}, {1, 0, 0.25}};
  Graph dg(2, true, edges);
  std::ostringstream dout;
  save_edge_list(dg, dout);
  std::istringstream din(dout.str());
  Graph dloaded = load_edge_list(din, 2, true);
  CHECK((dloaded.dense_adjacency() - dg.dense_adjacency()).norm() == 0.0);
}
