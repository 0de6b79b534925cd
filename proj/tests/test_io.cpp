#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "isingbound/cli.hpp"
#include "isingbound/exact.hpp"
#include "isingbound/io.hpp"
#include "isingbound/model.hpp"

namespace ib = isingbound;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = ib::cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

// Scratch directory, cleaned up per test case.
struct TempDir {
  fs::path dir;
  TempDir() : dir(fs::temp_directory_path() /
                  ("isingbound_test_" + std::to_string(::getpid()))) {
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("model json round-trips bit-exactly", "[io]") {
  const auto m = ib::generate(ib::DenseRandom{7, 0.8}, 1234);
  const auto j = ib::model_to_json(m);
  const auto back = ib::model_from_json(j);
  REQUIRE(back.n() == m.n());
  for (int a = 0; a < m.n(); ++a)
    for (int b = 0; b < m.n(); ++b)
      CHECK(back.coupling(a, b) == m.coupling(a, b));  // exact, not approximate

  TempDir tmp;
  ib::write_model(tmp.path("m.json"), m);
  const auto loaded = ib::read_model(tmp.path("m.json"));
  for (int a = 0; a < m.n(); ++a)
    for (int b = 0; b < m.n(); ++b)
      CHECK(loaded.coupling(a, b) == m.coupling(a, b));
}

TEST_CASE("model json rejects malformed input", "[io]") {
  using json = ib::ordered_json;
  CHECK_THROWS_AS(ib::model_from_json(json::parse("[]")), ib::IoError);
  CHECK_THROWS_AS(ib::model_from_json(json::parse(R"({"n": 2})")), ib::IoError);
  CHECK_THROWS_AS(
      ib::model_from_json(json::parse(R"({"n": 0, "couplings": []})")),
      ib::IoError);
  // i >= j, out of range, duplicates, bad value.
  CHECK_THROWS_AS(ib::model_from_json(json::parse(
                      R"({"n": 3, "couplings": [[1, 0, 0.5]]})")),
                  ib::IoError);
  CHECK_THROWS_AS(ib::model_from_json(json::parse(
                      R"({"n": 3, "couplings": [[0, 3, 0.5]]})")),
                  ib::IoError);
  CHECK_THROWS_AS(ib::model_from_json(json::parse(
                      R"({"n": 3, "couplings": [[0, 1, 0.5], [0, 1, 0.2]]})")),
                  ib::IoError);
  CHECK_THROWS_AS(ib::model_from_json(json::parse(
                      R"({"n": 3, "couplings": [[0, 1, "x"]]})")),
                  ib::IoError);
  CHECK_THROWS_AS(ib::read_model("/nonexistent/path/m.json"), ib::IoError);
}

TEST_CASE("certificate and report serialization shapes", "[io]") {
  ib::BoundCertificate cert;
  cert.upper_bound = 3.5;
  cert.converged = true;
  cert.iterations = 2;
  cert.trace = {{4.0, 3.0, 0b0}, {3.5, 3.4, 0b101}};
  const auto cj = ib::certificate_to_json(cert);
  CHECK(cj["upper_bound"] == 3.5);
  CHECK(cj["converged"] == true);
  CHECK(cj["iterations"] == 2);
  REQUIRE(cj["trace"].size() == 2);
  CHECK(cj["trace"][1]["seed"] == ib::ordered_json::array({0, 2}));

  ib::BoundReport rep;
  rep.lower = 1.0;
  rep.upper = 2.0;
  rep.gap = 1.0;
  rep.j_total = 4.0;
  rep.seed_set = 0b10;
  rep.solver = cert;
  const auto rj = ib::report_to_json(rep);
  CHECK(rj["guarantee"].is_null());
  CHECK(rj["delta"].is_null());
  CHECK(rj["seed_set"] == ib::ordered_json::array({1}));
  CHECK(rj["solver"]["upper_bound"] == 3.5);

  rep.guarantee = 7.0;
  rep.delta = 0.5;
  const auto rj2 = ib::report_to_json(rep);
  CHECK(rj2["guarantee"] == 7.0);
  CHECK(rj2["delta"] == 0.5);
}

TEST_CASE("cli generates, evaluates, and bounds end to end", "[io]") {
  TempDir tmp;
  const auto mpath = tmp.path("m.json");

  const auto gen = run({"gen", "--spec", "curie-weiss", "--n", "10", "--J",
                        "0.3", "--seed", "7", "--out", mpath});
  REQUIRE(gen.code == 0);
  REQUIRE(gen.err.empty());

  const auto m = ib::read_model(mpath);
  const double oracle = ib::exact_log_z(m);

  const auto ex = run({"exact", mpath});
  REQUIRE(ex.code == 0);
  const auto ej = ib::ordered_json::parse(ex.out);
  CHECK(ej["log_z"].get<double>() == Catch::Approx(oracle).margin(1e-12));

  const auto bd = run({"bound", mpath, "--seed-size", "1", "--tol", "1e-6"});
  REQUIRE(bd.code == 0);
  const auto bj = ib::ordered_json::parse(bd.out);
  CHECK(bj["lower"].get<double>() <= bj["upper"].get<double>());
  CHECK(bj["lower"].get<double>() <= oracle + 1e-7);
  CHECK(bj["upper"].get<double>() >= oracle - 1e-6);
  CHECK(bj["solver"]["trace"].is_array());
}

TEST_CASE("cli curie-weiss and rank subcommands", "[io]") {
  const auto cw = run({"cw", "--n", "2", "--J", "1", "--diagonal"});
  REQUIRE(cw.code == 0);
  const auto cj = ib::ordered_json::parse(cw.out);
  CHECK(cj["log_z"].get<double>() ==
        Catch::Approx(std::log(2.0 * std::exp(2.0) + 2.0)).margin(1e-12));

  TempDir tmp;
  const auto mpath = tmp.path("kn.json");
  REQUIRE(run({"gen", "--spec", "curie-weiss", "--n", "10", "--J", "1",
               "--out", mpath})
              .code == 0);
  const auto rk = run({"rank", mpath, "--tau", "0.5"});
  REQUIRE(rk.code == 0);
  CHECK(ib::ordered_json::parse(rk.out)["rank"] == 1);

  // Rank needs a regular model: a one-coupling 3-vertex model is not.
  const auto irregular = tmp.path("irr.json");
  ib::IsingModel irr(3);
  irr.set_coupling(0, 1, 1.0);
  ib::write_model(irregular, irr);
  CHECK(run({"rank", irregular}).code == 2);
}

TEST_CASE("cli exit codes and diagnostics", "[io]") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"gen", "--spec", "nope", "--n", "4"}).code == 1);
  CHECK(run({"gen", "--spec", "curie-weiss"}).code == 1);          // missing --n
  CHECK(run({"gen", "--spec", "curie-weiss", "--n", "4"}).code == 1);  // no --J
  CHECK(run({"gen", "--spec", "regular-pm", "--n", "4", "--J", "1"}).code == 1);
  CHECK(run({"exact", "/nonexistent/m.json"}).code == 3);
  CHECK(run({"--help"}).code == 0);

  // regular-pm with odd n*d cannot exist.
  const auto bad = run({"gen", "--spec", "regular-pm", "--n", "5", "--d", "3",
                        "--J", "0.5"});
  CHECK(bad.code == 1);
  CHECK(bad.err.rfind("error: ", 0) == 0);
  CHECK(bad.err.find('\n') == bad.err.size() - 1);  // single line

  TempDir tmp;
  const auto mpath = tmp.path("m.json");
  REQUIRE(run({"gen", "--spec", "dense-random", "--n", "6", "--scale", "0.4",
               "--seed", "3", "--out", mpath})
              .code == 0);
  // Strict mode with an absurdly small iteration cap cannot converge.
  const auto strict =
      run({"bound", mpath, "--seed-size", "1", "--max-iters", "1", "--strict"});
  CHECK(strict.code == 2);
  CHECK(strict.err.rfind("error: ", 0) == 0);

  CHECK(run({"bound", mpath, "--out", "/nonexistent/dir/out.json"}).code == 3);
}

TEST_CASE("cli determinism and bench format", "[io]") {
  const std::vector<std::string> gen_args = {"gen",  "--spec", "dense-random",
                                             "--n",  "8",      "--scale",
                                             "0.5",  "--seed", "99"};
  const auto a = run(gen_args);
  const auto b = run(gen_args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);  // byte-identical

  const auto bench =
      run({"bench", "--n", "8", "--seed", "5", "--format", "csv"});
  REQUIRE(bench.code == 0);
  std::istringstream lines(bench.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "regime,n,J_scale,delta,exact_log_z,lower,upper,gap,guarantee,wall_ms");
  int rows = 0;
  std::string line;
  std::vector<std::string> stripped;  // row minus the wall-ms column
  while (std::getline(lines, line)) {
    ++rows;
    CHECK((line.find("_temperature,8,") != std::string::npos ||
           line.find("near_threshold,8,") != std::string::npos));
    stripped.push_back(line.substr(0, line.rfind(',')));
  }
  CHECK(rows == 6);  // 3 regimes x 2 seed sizes

  // Re-running with the same seed reproduces everything but wall time.
  const auto again =
      run({"bench", "--n", "8", "--seed", "5", "--format", "csv"});
  std::istringstream lines2(again.out);
  std::getline(lines2, header);
  std::size_t i = 0;
  while (std::getline(lines2, line)) {
    REQUIRE(i < stripped.size());
    CHECK(line.substr(0, line.rfind(',')) == stripped[i++]);
  }

  const auto bj = run({"bench", "--n", "8", "--seed", "5", "--format", "json"});
  REQUIRE(bj.code == 0);
  const auto arr = ib::ordered_json::parse(bj.out);
  REQUIRE(arr.is_array());
  REQUIRE(arr.size() == 6);
  for (const auto& row : arr) {
    REQUIRE(row["exact_log_z"].is_number());  // n = 8 <= 12
    const double exact = row["exact_log_z"].get<double>();
    CHECK(row["lower"].get<double>() <= exact + 1e-7);
    CHECK(row["upper"].get<double>() >= exact - 1e-6);
  }
}
