// End-to-end checks of the command-line tool: exit codes, output schema,
// determinism, and the documented fixture behaviors.

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;

namespace {

const std::string kCli = PSPHERE_CLI_PATH;
const std::string kTmp = PSPHERE_TEST_TMPDIR;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > " + kTmp +
                          "/cli_stdout.txt 2> " + kTmp + "/cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const std::string& path) { return json::parse(slurp(path)); }

}  // namespace

TEST_CASE("invalid invocations exit 1") {
  CHECK(run("frobnicate") == 1);
  CHECK(run("nnpca") == 1);  // --out is required
  CHECK(run("nnpca --n 1 --out " + kTmp + "/x.json") == 1);
  CHECK(run("lasso --m 3 --n 5 --out " + kTmp + "/x.json") == 1);
  CHECK(run("lasso --m 20 --n 5 --C -1 --out " + kTmp + "/x.json") == 1);
  CHECK(run("boxqp --n 4 --p 0.5 --out " + kTmp + "/x.json") == 1);
}

TEST_CASE("help exits 0") { CHECK(run("--help") == 0); }

TEST_CASE("nnpca fixture reaches the dominant eigenvector") {
  const std::string out = kTmp + "/nnpca_fixture.json";
  CHECK(run("nnpca --n 2 --seed 7 --fixture-diag --out " + out) == 0);
  const json doc = load_json(out);
  CHECK(doc["schema"] == 1);
  CHECK(doc["spec"]["command"] == "nnpca");
  CHECK(doc["objective"].get<double>() == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(doc["solution"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(doc["diagnostics"]["kkt"]["passed"] == true);
}

TEST_CASE("nnpca output is deterministic and satisfies the lift invariants") {
  const std::string out1 = kTmp + "/nnpca_a.json";
  const std::string out2 = kTmp + "/nnpca_b.json";
  CHECK(run("nnpca --n 10 --seed 42 --out " + out1) == 0);
  CHECK(run("nnpca --n 10 --seed 42 --out " + out2) == 0);
  CHECK(slurp(out1) == slurp(out2));

  const json doc = load_json(out1);
  double norm2 = 0.0;
  for (const auto& vi : doc["solution"]) {
    const double v = vi.get<double>();
    CHECK(v >= -1e-9);
    norm2 += v * v;
  }
  CHECK(std::abs(std::sqrt(norm2) - 1.0) <= 1e-8);
  CHECK(doc["grad_norm"].get<double>() >= 0.0);
  CHECK(doc["iterations"].get<int>() >= 1);
}

TEST_CASE("lasso emits per-C runs and the unregularized baseline") {
  const std::string out = kTmp + "/lasso.json";
  CHECK(run("lasso --m 100 --n 13 --C 1 10 100 --eps 1e-6 --seed 3 --out " +
            out) == 0);
  const json doc = load_json(out);
  CHECK(doc["schema"] == 1);
  CHECK(doc["runs"].size() == 3);
  CHECK(doc["w_nonreg"].size() == 13);
  for (const auto& r : doc["runs"]) {
    CHECK(r["w"].size() == 13);
    CHECK(r["converged"].is_boolean());
  }
  // C = 100 run: dense, no sparsity expected; its objective should be the
  // largest since the sphere is far from the least-squares solution
  CHECK(doc["runs"][2]["C"].get<double>() == 100.0);
}

TEST_CASE("lasso zero-y fixture scales as C^2") {
  const std::string o1 = kTmp + "/lasso_y0_a.json";
  const std::string o2 = kTmp + "/lasso_y0_b.json";
  CHECK(run("lasso --m 20 --n 5 --C 0.001 --fixture-zero-y --seed 5 --out " +
            o1) == 0);
  CHECK(run("lasso --m 20 --n 5 --C 0.002 --fixture-zero-y --seed 5 --out " +
            o2) == 0);
  const double f1 = load_json(o1)["runs"][0]["objective"].get<double>();
  const double f2 = load_json(o2)["runs"][0]["objective"].get<double>();
  CHECK(f1 > 0.0);
  CHECK(f2 / f1 == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("boxqp distances to the reference shrink with p") {
  const std::string out = kTmp + "/boxqp.json";
  CHECK(run("boxqp --n 10 --p 5 50 500 5000 --seed 11 --out " + out) == 0);
  const json doc = load_json(out);
  CHECK(doc["schema"] == 1);
  REQUIRE(doc["runs"].size() == 4);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& r : doc["runs"]) {
    const double d = r["distance_to_reference"].get<double>();
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("boxqp feasible fixture with retries disabled exits 3") {
  const std::string out = kTmp + "/boxqp_feasible.json";
  CHECK(run("boxqp --n 4 --seed 1 --fixture-feasible --max-retries 0 --out " +
            out) == 3);
}

TEST_CASE("csv output format carries the solutions") {
  const std::string out = kTmp + "/boxqp.csv";
  CHECK(run("boxqp --n 4 --p 5 50 --seed 2 --format csv --out " + out) == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("# 2 4", 0) == 0);
}

TEST_CASE("geomcheck passes on a small grid and respects NO_COLOR") {
  CHECK(run("geomcheck --p 2 --n 3 --samples 5") == 0);
  std::string report = slurp(kTmp + "/cli_stdout.txt");
  CHECK(report.find("OK") != std::string::npos);

  const std::string cmd = "NO_COLOR=1 " + kCli +
                          " geomcheck --p 2 --n 3 --samples 5 > " + kTmp +
                          "/cli_plain.txt 2>&1";
  REQUIRE(std::system(cmd.c_str()) != -1);
  report = slurp(kTmp + "/cli_plain.txt");
  CHECK(report.find("\x1b[") == std::string::npos);
  CHECK(report.find("PASS") != std::string::npos);
}
