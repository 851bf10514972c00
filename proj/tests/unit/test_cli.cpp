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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lrfact/cli.hpp"
#include "lrfact/forward.hpp"
#include "lrfact/modelio.hpp"
#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

using namespace lrfact;
namespace t = lrfact::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome lrfact_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string save(const Model& m, const t::TempDir& dir, const std::string& name) {
  const fs::path p = dir.path() / name;
  io::save_model(m, p);
  return p.string();
}

Model gated_model() {
  std::mt19937_64 gen(1);
  return {"small", {4}, {t::linear("a", 4, 4, gen), t::relu("r"), t::linear("b", 4, 4, gen)}};
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(lrfact_cli({}).code == cli::kExitUsage);
  CHECK(lrfact_cli({"explode"}).code == cli::kExitUsage);
  CHECK(lrfact_cli({"inspect"}).code == cli::kExitUsage);
  CHECK(lrfact_cli({"inspect", "m", "--frobnicate"}).code == cli::kExitUsage);
  CHECK(lrfact_cli({"--help"}).code == cli::kExitOk);
  CHECK(lrfact_cli({"bench", "--help"}).code == cli::kExitOk);
}

TEST_CASE("inspect") {
  t::TempDir dir;
  const std::string empty = save(Model{"empty", {3}, {}}, dir, "empty");
  Outcome r = lrfact_cli({"inspect", empty});
  CHECK(r.code == 0);
  CHECK(r.out.find("total") != std::string::npos);
  const json ej = json::parse(lrfact_cli({"inspect", empty, "--json"}).out);
  CHECK(ej["layers"].empty());
  CHECK(ej["totals"]["params"] == 0);
  CHECK(ej["totals"]["flops"] == 0);

  std::mt19937_64 gen(2);
  const Model two{"two", {6}, {t::linear("fc1", 5, 6, gen), t::linear("fc2", 3, 5, gen)}};
  const json j = json::parse(lrfact_cli({"inspect", save(two, dir, "two"), "--json"}).out);
  REQUIRE(j["layers"].size() == 2);
  std::uint64_t params = 0, flops = 0;
  for (const auto& l : j["layers"]) {
    params += l["params"].get<std::uint64_t>();
    flops += l["flops"].get<std::uint64_t>();
  }
  CHECK(j["totals"]["params"] == params);
  CHECK(j["totals"]["flops"] == flops);
  CHECK(params == 5 * 6 + 5 + 3 * 5 + 3);
  CHECK(j["output_shape"] == json::array({3}));

  r = lrfact_cli({"inspect", (dir.path() / "missing").string()});
  CHECK(r.code == cli::kExitLoad);
  CHECK(r.err.find("missing.json") != std::string::npos);

  io::write_file(dir.path() / "junk.json", std::vector<std::uint8_t>{'{'});
  io::write_file(dir.path() / "junk.bin", std::vector<std::uint8_t>{});
  CHECK(lrfact_cli({"inspect", (dir.path() / "junk").string()}).code == cli::kExitLoad);
}

TEST_CASE("factorize with a rank every layer fails the gate") {
  t::TempDir dir;
  const Model m = gated_model();
  const std::string in = save(m, dir, "in"), out = (dir.path() / "out").string();
  const Outcome r = lrfact_cli({"factorize", in, out, "--rank", "2", "--json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  for (const auto& e : j["entries"]) {
    CHECK(e["decision"] == "skipped");
    CHECK(e["skip_reason"] == "rank-gate");
  }
  CHECK(io::load_model(out).layers == m.layers);
  CHECK(io::read_file(out + ".bin") == io::read_file(in + ".bin"));
}

TEST_CASE("factorize the MLP fixture with a rank ratio") {
  t::TempDir dir;
  const std::string in = save(t::mlp_fixture(), dir, "mlp");
  const std::string out = (dir.path() / "mlp_fact").string();
  const Outcome r =
      lrfact_cli({"factorize", in, out, "--solver", "svd", "--rank-ratio", "0.25", "--json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["totals"]["flops_after"].get<std::uint64_t>() <
        j["totals"]["flops_before"].get<std::uint64_t>());
  REQUIRE(j["entries"].size() == 2);
  for (const auto& e : j["entries"]) {
    const std::uint64_t m = e["m"], n = e["n"];
    const std::uint64_t rank = std::max<std::uint64_t>(1, m * n / (4 * (m + n)));
    CHECK(e["rank"] == rank);
    CHECK((e["decision"] == "factorized") == (rank * (m + n) < m * n));
    CHECK(e["rel_error"].is_number());
  }
  CHECK(fs::exists(out + ".json"));

  const Outcome text = lrfact_cli({"factorize", in, out, "--rank-ratio", "0.25"});
  CHECK(text.code == 0);
  CHECK(text.out.find("rel_error") != std::string::npos);
  CHECK(text.out.find("factorized") != std::string::npos);
}

TEST_CASE("factorize flag validation happens before any file I/O") {
  t::TempDir dir;
  const std::string in = save(gated_model(), dir, "in");
  const std::string out = (dir.path() / "out").string();
  const std::vector<std::vector<std::string>> bad = {
      {"factorize", in, out, "--rank", "1", "--rank-ratio", "0.5"},
      {"factorize", in, out},
      {"factorize", in, out, "--rank", "0"},
      {"factorize", in, out, "--rank-ratio", "0"},
      {"factorize", in, out, "--rank-ratio", "1.5"},
      {"factorize", in, out, "--rank", "1", "--solver", "qr"},
      {"factorize", in, out, "--rank", "1", "--include", "fc[0-9]"},
      {"factorize", in, out, "--rank", "1", "--snmf-iters", "0"},
      {"factorize", in, out, "--rank", "1", "--sigma", "left"},
      {"factorize", (dir.path() / "missing").string(), out, "--rank", "1", "--rank-ratio", "1"},
  };
  for (const auto& args : bad) {
    CAPTURE(args.size());
    CHECK(lrfact_cli(args).code == cli::kExitUsage);
    CHECK_FALSE(fs::exists(out + ".json"));
    CHECK_FALSE(fs::exists(out + ".bin"));
  }
  CHECK(lrfact_cli({"factorize", (dir.path() / "missing").string(), out, "--rank", "1"}).code ==
        cli::kExitLoad);
}

TEST_CASE("factorize solver failure exits 3 naming the layer") {
  t::TempDir dir;
  Matrix huge(4, 4);
  for (float& v : huge.data()) v = 3e38f;
  const std::string in =
      save(Model{"huge", {4}, {{"boom", LinearLayer{huge, std::nullopt}}}}, dir, "huge");
  const Outcome r = lrfact_cli({"factorize", in, (dir.path() / "o").string(), "--rank", "1"});
  CHECK(r.code == cli::kExitSolver);
  CHECK(r.err.find("boom") != std::string::npos);
}

TEST_CASE("factorize is reproducible byte for byte") {
  t::TempDir dir;
  const std::string in = save(t::mlp_fixture(3), dir, "mlp");
  for (const char* solver : {"random", "svd", "snmf"}) {
    CAPTURE(solver);
    const std::string a = (dir.path() / "a").string(), b = (dir.path() / "b").string();
    std::vector<std::string> args = {
        "factorize", in,       a,   "--solver",     solver, "--rank-ratio",
        "0.1",       "--seed", "7", "--snmf-iters", "10"};
    const Outcome ra = lrfact_cli(args);
    args[2] = b;
    args.push_back("--threads");
    args.push_back("3");
    const Outcome rb = lrfact_cli(args);
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    CHECK(io::read_file(a + ".json") == io::read_file(b + ".json"));
    CHECK(io::read_file(a + ".bin") == io::read_file(b + ".bin"));
    CHECK((ra.err.find("warning") != std::string::npos) == (std::string(solver) == "random"));
  }
}

TEST_CASE("run") {
  t::TempDir dir;
  const std::string model = save(t::identity_model(4), dir, "id");
  const Tensor x({2, 4}, {1, -2, 3.5f, 0, 9, 8, 7, 6});
  io::save_tensor(x, dir.path() / "x");
  const std::string y = (dir.path() / "y").string();
  const Outcome r = lrfact_cli({"run", model, (dir.path() / "x").string(), y});
  CHECK(r.code == 0);
  CHECK(r.out.find("[2, 4]") != std::string::npos);
  CHECK(io::load_tensor(y) == x);

  io::save_tensor(Tensor({2, 5}), dir.path() / "wrong");
  const Outcome bad = lrfact_cli({"run", model, (dir.path() / "wrong").string(), y});
  CHECK(bad.code == cli::kExitShape);
  CHECK(bad.err.find("'id'") != std::string::npos);

  CHECK(lrfact_cli({"run", model, (dir.path() / "none").string(), y}).code == cli::kExitLoad);
}

TEST_CASE("diff") {
  t::TempDir dir;
  std::mt19937_64 gen(4);
  Model low{"low",
            {8},
            {t::low_rank_linear("fc1", 12, 8, 2, gen), t::relu("a"),
             t::low_rank_linear("fc2", 6, 12, 2, gen)}};
  const std::string dense = save(low, dir, "dense");

  const Outcome self = lrfact_cli({"diff", dense, dense, "--json"});
  CHECK(self.code == 0);
  CHECK(json::parse(self.out)["max_abs"] == 0.0);

  const std::string exact = (dir.path() / "exact").string();
  REQUIRE(lrfact_cli({"factorize", dense, exact, "--rank", "2"}).code == 0);
  CHECK(lrfact_cli({"diff", dense, exact, "--tol", "1e-4", "--trials", "10"}).code == 0);

  const std::string lossy = (dir.path() / "lossy").string();
  REQUIRE(lrfact_cli({"factorize", dense, lossy, "--rank", "1"}).code == 0);
  const Outcome d = lrfact_cli({"diff", dense, lossy, "--tol", "0", "--json"});
  CHECK(d.code == cli::kExitDiffTolerance);
  CHECK(json::parse(d.out)["max_abs"].get<double>() > 0.0);

  const std::string other = save(t::identity_model(8), dir, "other");
  CHECK(lrfact_cli({"diff", dense, other}).code == cli::kExitShape);
  CHECK(lrfact_cli({"diff", dense, dense, "--trials", "0"}).code == cli::kExitUsage);
}

TEST_CASE("bench") {
  t::TempDir dir;
  const std::string model = save(t::mlp_fixture(), dir, "mlp");
  const Outcome r =
      lrfact_cli({"bench", model, "--repeats", "5", "--warmup", "1", "--batch", "2", "--json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["samples_ms"].size() == 5);
  CHECK(j["repeats"] == 5);
  CHECK(j["q1_ms"].get<double>() <= j["median_ms"].get<double>());
  CHECK(j["median_ms"].get<double>() <= j["q3_ms"].get<double>());
  CHECK(j["flops"] == 2 * (2 * (784 * 512 + 512 * 10) + 512 + 10 + 512));

  CHECK(lrfact_cli({"bench", model, "--repeats", "0"}).code == cli::kExitUsage);
  CHECK(lrfact_cli({"bench", model, "--batch", "0"}).code == cli::kExitUsage);
  CHECK(lrfact_cli({"bench", model, "--repeats", "2", "--warmup", "0"}).code == 0);
}

TEST_CASE("quantile interpolates") {
  CHECK(cli::quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(cli::quantile({4, 1, 3, 2, 5}, 0.5) == doctest::Approx(3.0));
  CHECK(cli::quantile({1, 2, 3, 4, 5}, 0.25) == doctest::Approx(2.0));
  CHECK(cli::quantile({7}, 0.75) == doctest::Approx(7.0));
}
