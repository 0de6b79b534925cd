#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isingbound/curie_weiss.hpp"
#include "isingbound/exact.hpp"
#include "isingbound/io.hpp"
#include "isingbound/model.hpp"
#include "isingbound/rounding.hpp"
#include "isingbound/solver.hpp"

// Command-line front end.  Exit codes: 0 success, 1 usage error, 2 numerical
// failure (LP breakdown, or non-convergence under --strict), 3 I/O error.
// Errors print one "error: ..." line to the error stream.

namespace isingbound::cli {

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct BenchRow {
  std::string regime;
  int n = 0;
  double j_scale = 0.0;
  double delta = 0.0;
  std::optional<double> exact;      // only computed for n <= 12
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  std::optional<double> guarantee;  // absent for seedless runs
  double wall_ms = 0.0;
};

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string s =
      "regime,n,J_scale,delta,exact_log_z,lower,upper,gap,guarantee,wall_ms\n";
  for (const auto& r : rows) {
    s += r.regime + ',' + std::to_string(r.n) + ',' + fmt17(r.j_scale) + ',' +
         fmt17(r.delta) + ',' + (r.exact ? fmt17(*r.exact) : std::string()) +
         ',' + fmt17(r.lower) + ',' + fmt17(r.upper) + ',' + fmt17(r.gap) +
         ',' + (r.guarantee ? fmt17(*r.guarantee) : std::string()) + ',' +
         fmt17(r.wall_ms) + '\n';
  }
  return s;
}

inline ordered_json bench_json(const std::vector<BenchRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json j;
    j["regime"] = r.regime;
    j["n"] = r.n;
    j["J_scale"] = r.j_scale;
    j["delta"] = r.delta;
    if (r.exact)
      j["exact_log_z"] = *r.exact;
    else
      j["exact_log_z"] = nullptr;
    j["lower"] = r.lower;
    j["upper"] = r.upper;
    j["gap"] = r.gap;
    if (r.guarantee)
      j["guarantee"] = *r.guarantee;
    else
      j["guarantee"] = nullptr;
    j["wall_ms"] = r.wall_ms;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"certified upper/lower bounds on Ising log-partition functions"};
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds the flags it supports.
  std::string spec_name;
  int n = 0;
  double j_value = 0.0;
  double scale = 0.5;
  int degree = 0;
  std::uint64_t seed = 0;
  int seed_size = 1;
  double tol = 1e-6;
  int max_iters = 50;
  double tau = 0.5;
  bool diagonal = false;
  bool strict = false;
  std::string format = "csv";
  std::string out_path;
  std::string model_path;

  auto* gen = app.add_subcommand("gen", "generate a model and write its JSON");
  gen->add_option("--spec", spec_name, "generator family")
      ->required()
      ->check(CLI::IsMember({"curie-weiss", "dense-random", "regular-pm"}));
  gen->add_option("--n", n, "number of vertices")->required();
  gen->add_option("--J", j_value, "coupling strength (curie-weiss, regular-pm)");
  gen->add_option("--d", degree, "degree (regular-pm)");
  gen->add_option("--scale", scale, "coupling range (dense-random)");
  gen->add_option("--seed", seed, "PRNG seed");
  gen->add_option("--out", out_path, "output path (default stdout)");

  auto* exact = app.add_subcommand("exact", "brute-force log Z of a model file");
  exact->add_option("model", model_path, "model JSON path")->required();
  exact->add_option("--out", out_path, "output path (default stdout)");

  auto* bound = app.add_subcommand("bound", "certified bounds for a model file");
  bound->add_option("model", model_path, "model JSON path")->required();
  bound->add_option("--seed-size", seed_size, "conditioning budget t");
  bound->add_option("--tol", tol, "convergence tolerance")
      ->check(CLI::PositiveNumber);
  bound->add_option("--max-iters", max_iters, "cutting-plane iteration cap")
      ->check(CLI::PositiveNumber);
  bound->add_flag("--strict", strict, "exit 2 unless the solver converged");
  bound->add_option("--out", out_path, "output path (default stdout)");

  auto* cw = app.add_subcommand("cw", "Curie-Weiss reference values");
  cw->add_option("--n", n, "number of vertices")->required();
  cw->add_option("--J", j_value, "coupling strength")->required();
  cw->add_flag("--diagonal", diagonal, "include the diagonal constant");
  cw->add_option("--out", out_path, "output path (default stdout)");

  auto* rank = app.add_subcommand("rank", "threshold rank of a regular model");
  rank->add_option("model", model_path, "model JSON path")->required();
  rank->add_option("--tau", tau, "eigenvalue threshold");
  rank->add_option("--out", out_path, "output path (default stdout)");

  auto* bench = app.add_subcommand(
      "bench", "temperature-regime sweep over d-regular models");
  bench->add_option("--n", n, "restrict to one size (default 8, 12, 16)");
  bench->add_option("--seed", seed, "PRNG base seed");
  bench->add_option("--max-iters", max_iters,
                    "cutting-plane iteration cap per run (default 10)");
  bench->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  bench->add_option("--out", out_path, "output path (default stdout)");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const auto emit = [&](const std::string& text) {
    if (out_path.empty())
      out << text;
    else
      write_text_file(out_path, text);
  };

  try {
    if (gen->parsed()) {
      GeneratorSpec gs;
      if (spec_name == "curie-weiss") {
        if (!gen->count("--J"))
          throw CLI::RequiredError("--J (curie-weiss)");
        gs = CurieWeiss{n, j_value};
      } else if (spec_name == "dense-random") {
        gs = DenseRandom{n, scale};
      } else {
        if (!gen->count("--J") || !gen->count("--d"))
          throw CLI::RequiredError("--J and --d (regular-pm)");
        gs = RegularPm{n, degree, j_value};
      }
      emit(model_to_json(generate(gs, seed)).dump(2) + "\n");
      return 0;
    }

    if (exact->parsed()) {
      ordered_json j;
      j["log_z"] = exact_log_z(read_model(model_path));
      emit(j.dump(2) + "\n");
      return 0;
    }

    if (bound->parsed()) {
      const IsingModel m = read_model(model_path);
      RelaxationOptions opt;
      opt.seed_size = seed_size;
      opt.tol = tol;
      opt.max_iters = max_iters;
      const BoundReport rep = bound_report(m, opt);
      emit(report_to_json(rep).dump(2) + "\n");
      if (strict && !rep.solver.converged) {
        err << "error: solver did not converge within " << max_iters
            << " iterations\n";
        return 2;
      }
      return 0;
    }

    if (cw->parsed()) {
      const CwResult analytic = cw_analytic(n, j_value);
      ordered_json j;
      j["log_z"] = cw_levelsum(n, j_value, diagonal);
      j["analytic_log_z"] = analytic.log_z;
      j["m_star"] = analytic.m_star;
      emit(j.dump(2) + "\n");
      return 0;
    }

    if (rank->parsed()) {
      const IsingModel m = read_model(model_path);
      ordered_json j;
      j["tau"] = tau;
      j["rank"] = threshold_rank(m, tau);
      emit(j.dump(2) + "\n");
      return 0;
    }

    if (bench->parsed()) {
      if (!bench->count("--max-iters")) max_iters = 10;
      const std::vector<int> sizes =
          bench->count("--n") ? std::vector<int>{n} : std::vector<int>{8, 12, 16};
      constexpr int kDegree = 4;
      const std::pair<const char*, double> regimes[] = {
          {"high_temperature", 0.1 / kDegree},
          {"near_threshold", 2.0 / kDegree},
          {"low_temperature", 10.0 / kDegree},
      };
      std::vector<detail::BenchRow> rows;
      std::uint64_t instance = 0;
      for (const int size : sizes)
        for (const auto& [regime, j_scale] : regimes) {
          const IsingModel m =
              generate(RegularPm{size, kDegree, j_scale}, seed + instance++);
          const std::optional<double> ex =
              size <= 12 ? std::optional<double>(exact_log_z(m)) : std::nullopt;
          for (int t = 0; t <= 1; ++t) {
            RelaxationOptions opt;
            opt.seed_size = t;
            opt.max_iters = max_iters;
            const BoundReport rep = bound_report(m, opt);
            detail::BenchRow row;
            row.regime = regime;
            row.n = size;
            row.j_scale = j_scale;
            row.delta = rep.delta.value_or(0.0);
            row.exact = ex;
            row.lower = rep.lower;
            row.upper = rep.upper;
            row.gap = rep.gap;
            row.guarantee = rep.guarantee;
            row.wall_ms = rep.wall_ms;
            rows.push_back(std::move(row));
          }
        }
      emit(format == "csv" ? detail::bench_csv(rows)
                           : detail::bench_json(rows).dump(2) + "\n");
      return 0;
    }

    err << "error: no subcommand\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace isingbound::cli
