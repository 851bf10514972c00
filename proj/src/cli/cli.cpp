// Copyright 2026 The lrfact Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lrfact/cli.hpp"

#include <climits>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrfact/accounting.hpp"
#include "lrfact/error.hpp"
#include "lrfact/forward.hpp"
#include "lrfact/modelio.hpp"

namespace lrfact::cli {
namespace {

using json = nlohmann::ordered_json;

constexpr const char* kRandomSolverWarning =
    "warning: the random solver replaces weights with random factors and does not "
    "approximate them; a trained model loses what it has learnt. Use it to build "
    "factorized models before training.";

// Plain-text table: first `text_columns` columns left-aligned, the rest right.
class Table {
 public:
  Table(std::vector<std::string> header, std::size_t text_columns) : text_columns_(text_columns) {
    rows_.push_back(std::move(header));
  }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  void rule() { rules_.push_back(rows_.size()); }

  void print(std::ostream& os) const {
    std::vector<std::size_t> width(rows_.front().size(), 0);
    for (const auto& row : rows_)
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::size_t total = 0;
    for (std::size_t w : width) total += w + 2;
    auto print_rule = [&] { os << std::string(total > 2 ? total - 2 : 0, '-') << '\n'; };
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (std::find(rules_.begin(), rules_.end(), r) != rules_.end()) print_rule();
      for (std::size_t c = 0; c < rows_[r].size(); ++c) {
        if (c) os << "  ";
        if (c < text_columns_)
          os << std::left;
        else
          os << std::right;
        os << std::setw(static_cast<int>(width[c])) << rows_[r][c];
      }
      os << std::right << '\n';
      if (r == 0) print_rule();
    }
  }

 private:
  std::size_t text_columns_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> rules_;
};

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::setprecision(digits) << std::fixed << v;
  return ss.str();
}

std::string sci(double v) {
  std::ostringstream ss;
  ss << std::setprecision(3) << std::scientific << v;
  return ss.str();
}

// Maps library exceptions onto exit codes, printing the message.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const io::FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitLoad;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitLoad;
  } catch (const SolverError& e) {
    err << "error: solver failed: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ShapeError& e) {
    err << "error: shape mismatch: " << e.what() << '\n';
    return kExitShape;
  } catch (const ValueError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

Model load_or_throw(const std::string& path) { return io::load_model(path); }

// ---- inspect ----------------------------------------------------------------

int cmd_inspect(const std::string& path, bool as_json, std::ostream& out) {
  const Model model = load_or_throw(path);
  const std::vector<Shape> shapes = infer_shapes(model);
  const Counts params = count_params(model);
  const Counts flops = count_flops(model, 1);

  if (as_json) {
    json layers = json::array();
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
      layers.push_back(json{{"name", model.layers[i].name},
                            {"kind", model.layers[i].kind_name()},
                            {"input_shape", shapes[i]},
                            {"output_shape", shapes[i + 1]},
                            {"params", params.per_layer[i]},
                            {"flops", flops.per_layer[i]}});
    }
    json doc{{"model", model.name},
             {"input_shape", model.input_shape},
             {"output_shape", shapes.back()},
             {"flop_convention", kFlopConvention},
             {"layers", std::move(layers)},
             {"totals", json{{"params", params.total}, {"flops", flops.total}}}};
    out << doc.dump(2) << '\n';
    return kExitOk;
  }

  out << "model " << model.name << "  input " << shape_to_string(model.input_shape) << "  output "
      << shape_to_string(shapes.back()) << '\n';
  out << kFlopConvention << "; per sample\n";
  Table t({"layer", "kind", "input", "output", "params", "flops"}, 4);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    t.add({model.layers[i].name, model.layers[i].kind_name(), shape_to_string(shapes[i]),
           shape_to_string(shapes[i + 1]), std::to_string(params.per_layer[i]),
           std::to_string(flops.per_layer[i])});
  }
  t.rule();
  t.add({"total", "", "", "", std::to_string(params.total), std::to_string(flops.total)});
  t.print(out);
  return kExitOk;
}

// ---- factorize --------------------------------------------------------------

void print_report(const FactorizationReport& report, std::ostream& out) {
  out << kFlopConvention << "; per sample\n";
  Table t({"layer", "kind", "decision", "matrix", "rank", "params", "params'", "flops", "flops'",
           "rel_error"},
          4);
  for (const ReportEntry& e : report.entries) {
    t.add({e.layer_name, e.kind, e.decision(), std::to_string(e.m) + "x" + std::to_string(e.n),
           e.rank ? std::to_string(*e.rank) : "-", std::to_string(e.params_before),
           std::to_string(e.params_after), std::to_string(e.flops_before),
           std::to_string(e.flops_after), e.rel_error ? sci(*e.rel_error) : "-"});
  }
  const ReportTotals tot = report.totals();
  t.rule();
  t.add({"total", "", std::to_string(tot.factorized) + " factorized", "", "",
         std::to_string(tot.params_before), std::to_string(tot.params_after),
         std::to_string(tot.flops_before), std::to_string(tot.flops_after), ""});
  t.print(out);
  if (tot.flops_after > 0 && tot.params_after > 0) {
    out << "params ratio " << fixed(static_cast<double>(tot.params_before) / tot.params_after, 3)
        << "x, flops ratio " << fixed(static_cast<double>(tot.flops_before) / tot.flops_after, 3)
        << "x\n";
  }
}

struct FactorizeArgs {
  std::string in, out;
  std::string solver = "svd";
  std::size_t rank = 0;
  double ratio = 0.0;
  std::vector<std::string> include, exclude;
  std::uint64_t seed = 0;
  int snmf_iters = 200;
  double snmf_tol = 1e-5;
  std::string sigma = "balanced";
  unsigned threads = 1;
  bool as_json = false;
};

int cmd_factorize(const FactorizeArgs& a, const FactorizeConfig& config, std::ostream& out,
                  std::ostream& err) {
  if (config.solver == Solver::random) err << kRandomSolverWarning << '\n';
  const Model model = load_or_throw(a.in);
  const FactorizeResult result = auto_fact(model, config);
  io::save_model(result.model, a.out);
  if (a.as_json) {
    out << report_json(result.report, config);
  } else {
    print_report(result.report, out);
    const io::ModelFiles files = io::model_files(a.out);
    out << "wrote " << files.manifest.string() << " and " << files.blob.string() << '\n';
  }
  return kExitOk;
}

// ---- run / diff / bench ------------------------------------------------------

int cmd_run(const std::string& model_path, const std::string& in_path, const std::string& out_path,
            std::ostream& out) {
  const Model model = load_or_throw(model_path);
  const Tensor input = io::load_tensor(in_path);
  const Tensor output = forward(model, input);
  io::save_tensor(output, out_path);
  out << "output shape " << shape_to_string(output.shape()) << '\n';
  return kExitOk;
}

int cmd_diff(const std::string& pa, const std::string& pb, int trials, std::size_t batch,
             std::uint64_t seed, double tol, bool as_json, std::ostream& out) {
  const Model a = load_or_throw(pa);
  const Model b = load_or_throw(pb);
  const DiffResult d = compare_models(a, b, trials, batch, seed);
  const bool ok = d.max_abs <= tol;
  if (as_json) {
    out << json{{"trials", trials},       {"batch", batch},
                {"seed", seed},           {"tol", tol},
                {"max_abs", d.max_abs},   {"mean_abs", d.mean_abs},
                {"elements", d.elements}, {"within_tolerance", ok}}
               .dump(2)
        << '\n';
  } else {
    out << "trials " << trials << "  batch " << batch << "  elements " << d.elements << '\n'
        << "max_abs  " << sci(d.max_abs) << '\n'
        << "mean_abs " << sci(d.mean_abs) << '\n'
        << (ok ? "within" : "exceeds") << " tolerance " << sci(tol) << '\n';
  }
  return ok ? kExitOk : kExitDiffTolerance;
}

int cmd_bench(const std::string& path, std::size_t batch, int repeats, int warmup, bool as_json,
              std::ostream& out) {
  const Model model = load_or_throw(path);
  const BenchResult r = benchmark(model, batch, repeats, warmup);
  if (as_json) {
    out << json{{"model", model.name},
                {"batch", r.batch},
                {"warmup", r.warmup},
                {"repeats", r.samples_ms.size()},
                {"samples_ms", r.samples_ms},
                {"median_ms", r.median_ms},
                {"q1_ms", r.q1_ms},
                {"q3_ms", r.q3_ms},
                {"iqr_ms", r.q3_ms - r.q1_ms},
                {"flops", r.flops},
                {"flop_convention", kFlopConvention}}
               .dump(2)
        << '\n';
  } else {
    out << "model " << model.name << "  batch " << r.batch << "  warmup " << r.warmup
        << "  repeats " << r.samples_ms.size() << '\n'
        << "median " << fixed(r.median_ms, 3) << " ms  iqr " << fixed(r.q3_ms - r.q1_ms, 3)
        << " ms  [q1 " << fixed(r.q1_ms, 3) << ", q3 " << fixed(r.q3_ms, 3) << "]\n"
        << "flops " << r.flops << " per forward (" << kFlopConvention << ")\n";
  }
  return kExitOk;
}

}  // namespace

std::string report_json(const FactorizationReport& report, const FactorizeConfig& config) {
  json entries = json::array();
  for (const ReportEntry& e : report.entries) {
    entries.push_back(
        json{{"layer", e.layer_name},
             {"kind", e.kind},
             {"decision", e.factorized ? "factorized" : "skipped"},
             {"skip_reason", e.factorized ? json(nullptr) : json(to_string(e.skip_reason))},
             {"m", e.m},
             {"n", e.n},
             {"rank", e.rank ? json(*e.rank) : json(nullptr)},
             {"params_before", e.params_before},
             {"params_after", e.params_after},
             {"flops_before", e.flops_before},
             {"flops_after", e.flops_after},
             {"rel_error", e.rel_error ? json(*e.rel_error) : json(nullptr)}});
  }
  const ReportTotals t = report.totals();
  json policy = std::holds_alternative<AbsoluteRank>(config.rank_policy)
                    ? json{{"rank", std::get<AbsoluteRank>(config.rank_policy).rank}}
                    : json{{"ratio", std::get<RankRatio>(config.rank_policy).ratio}};
  json doc{{"flop_convention", kFlopConvention},
           {"solver", to_string(config.solver)},
           {"rank_policy", std::move(policy)},
           {"seed", config.seed},
           {"entries", std::move(entries)},
           {"totals", json{{"factorized", t.factorized},
                           {"skipped", t.skipped},
                           {"params_before", t.params_before},
                           {"params_after", t.params_after},
                           {"flops_before", t.flops_before},
                           {"flops_after", t.flops_after}}}};
  return doc.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank factorization of neural network models", "lrfact"};
  app.require_subcommand(1);

  std::string model_path;
  bool as_json = false;

  auto* inspect = app.add_subcommand("inspect", "Per-layer shapes, parameters and FLOPs");
  inspect->add_option("model", model_path, "Model base path")->required();
  inspect->add_flag("--json", as_json, "Emit JSON");

  FactorizeArgs fa;
  auto* factorize = app.add_subcommand("factorize", "Rewrite layers into encoder-decoder pairs");
  factorize->add_option("input", fa.in, "Input model base path")->required();
  factorize->add_option("output", fa.out, "Output model base path")->required();
  factorize->add_option("--solver", fa.solver, "random | svd | snmf")
      ->check(CLI::IsMember({"random", "svd", "snmf"}))
      ->capture_default_str();
  auto* rank_opt = factorize->add_option("--rank", fa.rank, "Absolute rank for every layer")
                       ->check(CLI::PositiveNumber);
  auto* ratio_opt =
      factorize->add_option("--rank-ratio", fa.ratio, "Rank as a fraction of each layer's r_max");
  rank_opt->excludes(ratio_opt);
  factorize->add_option("--include", fa.include, "Glob patterns of layers to consider");
  factorize->add_option("--exclude", fa.exclude, "Glob patterns of layers to leave alone");
  factorize->add_option("--seed", fa.seed, "Seed for the random and SNMF solvers")
      ->capture_default_str();
  factorize->add_option("--snmf-iters", fa.snmf_iters, "SNMF iteration cap")
      ->check(CLI::Range(1, INT_MAX))
      ->capture_default_str();
  factorize->add_option("--snmf-tol", fa.snmf_tol, "SNMF relative improvement tolerance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  factorize->add_option("--sigma", fa.sigma, "balanced | decoder-only")
      ->check(CLI::IsMember({"balanced", "decoder-only"}))
      ->capture_default_str();
  factorize->add_option("--threads", fa.threads, "Worker threads for the rewrite pass")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  factorize->add_flag("--json", fa.as_json, "Emit the report as JSON");

  std::string run_model, run_in, run_out;
  auto* run_cmd = app.add_subcommand("run", "Forward a tensor file through a model");
  run_cmd->add_option("model", run_model, "Model base path")->required();
  run_cmd->add_option("input", run_in, "Input tensor base path")->required();
  run_cmd->add_option("output", run_out, "Output tensor base path")->required();

  std::string diff_a, diff_b;
  int trials = 10;
  std::size_t diff_batch = 4;
  std::uint64_t diff_seed = 0;
  double tol = 1e-4;
  auto* diff = app.add_subcommand("diff", "Compare two models on random inputs");
  diff->add_option("model_a", diff_a)->required();
  diff->add_option("model_b", diff_b)->required();
  diff->add_option("--trials", trials, "Random batches")
      ->check(CLI::Range(1, INT_MAX))
      ->capture_default_str();
  diff->add_option("--batch", diff_batch, "Samples per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  diff->add_option("--seed", diff_seed)->capture_default_str();
  diff->add_option("--tol", tol, "Max-abs tolerance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  diff->add_flag("--json", as_json, "Emit JSON");

  std::string bench_model;
  std::size_t bench_batch = 1;
  int repeats = 10, warmup = 3;
  auto* bench = app.add_subcommand("bench", "Wall-clock forward latency");
  bench->add_option("model", bench_model)->required();
  bench->add_option("--batch", bench_batch)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--repeats", repeats, "Timed runs")
      ->check(CLI::Range(1, INT_MAX))
      ->capture_default_str();
  bench->add_option("--warmup", warmup, "Untimed runs first")
      ->check(CLI::Range(0, INT_MAX))
      ->capture_default_str();
  bench->add_flag("--json", as_json, "Emit JSON");

  std::vector<std::string> argv_storage{"lrfact"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  if (inspect->parsed()) return guarded(err, [&] { return cmd_inspect(model_path, as_json, out); });

  if (factorize->parsed()) {
    // Everything here is checked before any file is touched.
    FactorizeConfig config;
    try {
      if (rank_opt->count() + ratio_opt->count() != 1)
        throw ValueError("exactly one of --rank and --rank-ratio is required");
      config.solver = *parse_solver(fa.solver);
      config.sigma = *parse_sigma_split(fa.sigma);
      if (rank_opt->count())
        config.rank_policy = AbsoluteRank{fa.rank};
      else
        config.rank_policy = RankRatio{fa.ratio};
      validate_policy(config.rank_policy);
      for (const auto& p : fa.include) validate_glob(p);
      for (const auto& p : fa.exclude) validate_glob(p);
      config.filter = {fa.include, fa.exclude};
      config.seed = fa.seed;
      config.snmf_options.max_iterations = fa.snmf_iters;
      config.snmf_options.rel_tolerance = fa.snmf_tol;
      config.threads = fa.threads;
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    return guarded(err, [&] { return cmd_factorize(fa, config, out, err); });
  }

  if (run_cmd->parsed())
    return guarded(err, [&] { return cmd_run(run_model, run_in, run_out, out); });

  if (diff->parsed()) {
    return guarded(err, [&] {
      return cmd_diff(diff_a, diff_b, trials, diff_batch, diff_seed, tol, as_json, out);
    });
  }

  return guarded(
      err, [&] { return cmd_bench(bench_model, bench_batch, repeats, warmup, as_json, out); });
}

}  // namespace lrfact::cli
