#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "exgraph/attachment.hpp"
#include "exgraph/experiments.hpp"
#include "exgraph/training_io.hpp"

using namespace exgraph;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(EXGRAPH_CLI_PATH) + " " + args +
                    " > /tmp/exgraph_cli_out.txt 2>/tmp/exgraph_cli_err.txt";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli rejects unknown flags with a usage error") {
  CHECK(run_cli("synthetic --no-such-flag") == 1);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli fit and predict round trip through files") {
  fs::path dir = fresh_dir("exgraph_cli_fit");
  Graph g = erdos_renyi(20, 0.3, 3);
  Rng rng(4);
  GraphSignal x = rng.normal_vector(20);
  x /= x.norm();
  save_edge_list(g, (dir / "g.edges").string());
  save_signal(x, (dir / "x.txt").string());
  FilterSpec f = geometric_coefficients(0.3, 3);
  auto training =
      generate_synthetic_training(g, x, uniform_attachment(20), f, 40, 5);
  save_training_csv(training, (dir / "train.csv").string());

  std::string model_path = (dir / "model.txt").string();
  int code = run_cli("fit --graph " + (dir / "g.edges").string() +
                     " --signal " + (dir / "x.txt").string() + " --train " +
                     (dir / "train.csv").string() + " --out " + model_path +
                     " --alpha 0.3 --order 3 --iterations 80 --seed 9");
  REQUIRE(code == 0);

  // the written model parses through the attachment loader
  AttachmentModel model = load_model(model_path);
  CHECK(model.size() == 20);
  model.validate();
  CHECK(fs::exists(dir / "model.trace.csv"));

  int pcode = run_cli("predict --model " + model_path + " --graph " +
                      (dir / "g.edges").string() + " --signal " +
                      (dir / "x.txt").string() + " --out " +
                      (dir / "pred.txt").string() +
                      " --alpha 0.3 --order 3 --samples 50 --seed 2");
  REQUIRE(pcode == 0);
  std::ifstream pred(dir / "pred.txt");
  std::string line;
  std::getline(pred, line);
  CHECK(line.rfind("expected = ", 0) == 0);

  // runtime failures exit with 2
  CHECK(run_cli("predict --model /nonexistent --graph " +
                (dir / "g.edges").string() + " --signal " +
                (dir / "x.txt").string() + " --out " +
                (dir / "p2.txt").string()) == 2);
}

TEST_CASE("cli synthetic writes the six-method summary") {
  fs::path dir = fresh_dir("exgraph_cli_syn");
  fs::path cfg_path = dir / "tiny.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "[graph]\nfamily = er\nn = 24\n[signal]\neigenvectors = 8\n"
        << "[data]\nsize = 60\ntrain = 45\n"
        << "[optimizer]\niterations = 60\nlambda_p = 1e-4\nlambda_w = 1e-4\n"
        << "[evaluation]\nsplits = 2\n[run]\nseed = 3\nworkers = 2\n";
  }
  int code = run_cli("synthetic --config " + cfg_path.string() + " --out " +
                     (dir / "out").string());
  REQUIRE(code == 0);
  std::ifstream summary(dir / "out" / "mse_summary.csv");
  REQUIRE(summary.good());
  std::string line;
  std::getline(summary, line);
  CHECK(line == "method,mse_mean,mse_std,splits");
  int rows = 0;
  while (std::getline(summary, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
  CHECK(fs::exists(dir / "out" / "manifest.txt"));
}

TEST_CASE("cli convergence writes one trace per restart and regime") {
  fs::path dir = fresh_dir("exgraph_cli_conv");
  fs::path cfg_path = dir / "tiny.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "[graph]\nfamily = er\nn = 24\n[signal]\neigenvectors = 8\n"
        << "[data]\nsize = 60\ntrain = 45\n"
        << "[optimizer]\niterations = 50\nlambda_p = 1e-4\nlambda_w = 1e-4\n"
        << "[run]\nseed = 3\nworkers = 2\n";
  }
  int code = run_cli("convergence --config " + cfg_path.string() +
                     " --restarts 4 --mu-p-convex 30 --out " +
                     (dir / "out").string());
  REQUIRE(code == 0);
  int traces = 0;
  for (const auto& entry : fs::directory_iterator(dir / "out"))
    if (entry.path().filename().string().rfind("trace_", 0) == 0) ++traces;
  CHECK(traces == 8);
}

TEST_CASE("cli coldstart runs on a synthetic ratings file") {
  fs::path dir = fresh_dir("exgraph_cli_cold");
  Rng rng(6);
  fs::path ratings = dir / "ratings.tsv";
  {
    std::ofstream out(ratings);
    for (int u = 0; u < 50; ++u)
      for (int i = 0; i < 30; ++i)
        if (rng.uniform() < 0.5)
          out << (u + 1) << '\t' << (i + 1) << '\t' << 1 + rng.uniform_int(5)
              << "\t0\n";
  }
  fs::path cfg_path = dir / "cs.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "[data]\nmin_ratings = 3\n[split]\ncore = 10\ntrain = 12\n"
        << "[graph]\nk = 4\n[filter]\norder = 3\n"
        << "[optimizer]\niterations = 150\n[prediction]\ndraws = 8\n"
        << "[buckets]\nlow_threshold = 13\nhigh_threshold = 18\n"
        << "[run]\nseed = 11\nworkers = 2\n";
  }
  int code = run_cli("coldstart --config " + cfg_path.string() + " --data " +
                     ratings.string() + " --out " + (dir / "out").string());
  REQUIRE(code == 0);
  CHECK(fs::exists(dir / "out" / "mae_users.csv"));
  CHECK(fs::exists(dir / "out" / "mae_summary.csv"));

  // identical invocations are byte-identical (report files)
  int code2 = run_cli("coldstart --config " + cfg_path.string() + " --data " +
                      ratings.string() + " --out " + (dir / "out2").string());
  REQUIRE(code2 == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  CHECK(slurp(dir / "out" / "mae_users.csv") ==
        slurp(dir / "out2" / "mae_users.csv"));
}

TEST_CASE("cli graph-build emits the edge list and split manifest") {
  fs::path dir = fresh_dir("exgraph_cli_gb");
  Rng rng(8);
  fs::path ratings = dir / "ratings.tsv";
  {
    std::ofstream out(ratings);
    for (int u = 0; u < 40; ++u)
      for (int i = 0; i < 25; ++i)
        if (rng.uniform() < 0.5)
          out << (u + 1) << '\t' << (i + 1) << '\t' << 1 + rng.uniform_int(5)
              << "\t0\n";
  }
  int code = run_cli("graph-build --data " + ratings.string() +
                     " --min-ratings 2 --core-size 8 --train-size 10 --k 3 "
                     "--seed 4 --out " +
                     (dir / "out").string());
  REQUIRE(code == 0);
  CHECK(fs::exists(dir / "out" / "graph.edges"));
  CHECK(fs::exists(dir / "out" / "split.txt"));
  CHECK(fs::exists(dir / "out" / "manifest.txt"));
}
