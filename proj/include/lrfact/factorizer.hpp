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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "lrfact/linalg.hpp"
#include "lrfact/model.hpp"

namespace lrfact {

// ---------------------------------------------------------------------------
// Rank selection and the cost gate.
//
// A factorization W (m x n) ~= A (m x r) B (r x n) stores r (m + n) numbers
// instead of m n. It only pays off when r is strictly below
// r_max = m n / (m + n).
// ---------------------------------------------------------------------------

struct AbsoluteRank {
  std::size_t rank = 1;
};

// Rank as a fraction of each layer's r_max, in (0, 1].
struct RankRatio {
  double ratio = 1.0;
};

using RankPolicy = std::variant<AbsoluteRank, RankRatio>;

double max_rank(std::size_t m, std::size_t n);

/// r (m + n) < m n in exact integer arithmetic.
bool should_factorize(std::size_t rank, std::size_t m, std::size_t n);

/// Absolute(r) -> r; Ratio(rho) -> max(1, floor(rho * m n / (m + n))).
std::size_t resolve_rank(const RankPolicy& policy, std::size_t m, std::size_t n);

void validate_policy(const RankPolicy& policy);

// ---------------------------------------------------------------------------
// Module filtering. Patterns are globs over layer names: `*` matches any
// run of characters, `?` exactly one; everything else is literal.
// ---------------------------------------------------------------------------

bool glob_match(std::string_view pattern, std::string_view text);

/// Throws ValueError for patterns that use regex syntax
/// (one of `[](){}|+^$\`).
void validate_glob(std::string_view pattern);

struct ModuleFilter {
  std::vector<std::string> include;  // empty: everything
  std::vector<std::string> exclude;  // empty: nothing

  bool matches(std::string_view layer_name) const;
};

// ---------------------------------------------------------------------------
// Configuration and report.
// ---------------------------------------------------------------------------

enum class Solver { random, svd, snmf };

// Where the singular values go when an SVD is split into two factors.
enum class SigmaSplit {
  balanced,      // A = U sqrt(S), B = sqrt(S) V^T
  decoder_only,  // A = U, B = S V^T
};

std::string_view to_string(Solver s);
std::optional<Solver> parse_solver(std::string_view s);
std::string_view to_string(SigmaSplit s);
std::optional<SigmaSplit> parse_sigma_split(std::string_view s);

struct FactorizeConfig {
  Solver solver = Solver::svd;
  RankPolicy rank_policy = RankRatio{0.25};
  ModuleFilter filter;
  std::uint64_t seed = 0;
  linalg::SnmfOptions snmf_options;
  SigmaSplit sigma = SigmaSplit::balanced;
  unsigned threads = 1;  // auto_fact worker count; output is independent of it
};

enum class SkipReason { none, rank_gate, filtered };
std::string_view to_string(SkipReason r);

struct ReportEntry {
  std::string layer_name;
  std::string kind;  // kind of the original layer
  bool factorized = false;
  SkipReason skip_reason = SkipReason::none;
  std::size_t m = 0;  // rows of the matrix the gate sees
  std::size_t n = 0;
  // Resolved rank; absent for filtered layers.
  std::optional<std::size_t> rank;
  std::uint64_t params_before = 0;
  std::uint64_t params_after = 0;
  std::uint64_t flops_before = 0;  // per sample, model's declared input shape
  std::uint64_t flops_after = 0;
  // ||W' - A'B'||_F / ||W'||_F on the 2-D weight; absent for the random solver.
  std::optional<double> rel_error;

  std::string decision() const;  // "factorized" or "skipped(<reason>)"
};

struct ReportTotals {
  std::uint64_t params_before = 0;
  std::uint64_t params_after = 0;
  std::uint64_t flops_before = 0;
  std::uint64_t flops_after = 0;
  std::size_t factorized = 0;
  std::size_t skipped = 0;
};

struct FactorizationReport {
  std::vector<ReportEntry> entries;  // model layer order

  ReportTotals totals() const;
};

// ---------------------------------------------------------------------------
// Factor algebra and conv weight rearrangement.
// ---------------------------------------------------------------------------

linalg::FactorPair split_sigma(const linalg::SvdResult& svd,
                               SigmaSplit mode = SigmaSplit::balanced);

/// [C_in, C_out, K...] -> (C_in prod K) x C_out with
/// W'[c * S + flat(k), o] = w[c, o, k].
Matrix rearrange_conv_weight(const Tensor& weight);

struct ConvFactors {
  Tensor encoder;  // [C_in, r, K...]
  Tensor decoder;  // [r, C_out, 1...]
};

/// Inverse index map of rearrange_conv_weight applied to the factors of W'.
ConvFactors tensorize_conv_factors(const Matrix& a, const Matrix& b, std::size_t in_channels,
                                   const Shape& kernel);

/// Factors `w` at `rank` with the configured solver. `seed` drives the
/// random solver.
linalg::FactorPair solve_factors(const Matrix& w, std::size_t rank, const FactorizeConfig& config,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Rewrite pass.
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a of the layer name; combined with the config seed by xor.
std::uint64_t layer_seed(std::uint64_t seed, std::string_view layer_name);

/// Rewrites one Linear or Conv layer. `sample_in` is the layer's per-sample
/// input shape, used only for FLOP accounting. Non-factorizable layers are
/// rejected with ValueError. Solver failures surface as SolverError.
std::pair<Layer, ReportEntry> factorize_layer(const Layer& layer, const Shape& sample_in,
                                              const FactorizeConfig& config);

std::pair<Layer, ReportEntry> factorize_linear(const Layer& layer, const FactorizeConfig& config);
std::pair<Layer, ReportEntry> factorize_conv(const Layer& layer, const Shape& sample_in,
                                             const FactorizeConfig& config);

struct FactorizeResult {
  Model model;
  FactorizationReport report;
};

/// Rewrites every eligible Linear and Conv layer of `model`. The input is
/// not modified. Output is identical for any `config.threads`.
FactorizeResult auto_fact(const Model& model, const FactorizeConfig& config);

}  // namespace lrfact
