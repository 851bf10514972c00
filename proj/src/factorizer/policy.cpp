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

#include <algorithm>
#include <cmath>

#include "lrfact/error.hpp"
#include "lrfact/factorizer.hpp"
#include "overloaded.hpp"

namespace lrfact {

using detail::overloaded;

double max_rank(std::size_t m, std::size_t n) {
  return static_cast<double>(m) * static_cast<double>(n) /
         (static_cast<double>(m) + static_cast<double>(n));
}

bool should_factorize(std::size_t rank, std::size_t m, std::size_t n) {
  using u128 = unsigned __int128;
  return static_cast<u128>(rank) * (static_cast<u128>(m) + n) < static_cast<u128>(m) * n;
}

void validate_policy(const RankPolicy& policy) {
  std::visit(overloaded{
                 [](const AbsoluteRank& a) {
                   if (a.rank < 1) throw ValueError("absolute rank must be >= 1");
                 },
                 [](const RankRatio& r) {
                   if (!(r.ratio > 0.0 && r.ratio <= 1.0))
                     throw ValueError("rank ratio must lie in (0, 1]");
                 },
             },
             policy);
}

std::size_t resolve_rank(const RankPolicy& policy, std::size_t m, std::size_t n) {
  validate_policy(policy);
  return std::visit(overloaded{
                        [](const AbsoluteRank& a) { return a.rank; },
                        [&](const RankRatio& r) {
                          const double scaled = std::floor(r.ratio * max_rank(m, n));
                          return std::max<std::size_t>(1, static_cast<std::size_t>(scaled));
                        },
                    },
                    policy);
}

bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0;
  std::size_t star = std::string_view::npos, resume = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      resume = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++resume;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

void validate_glob(std::string_view pattern) {
  constexpr std::string_view kRegexSyntax = "[](){}|+^$\\";
  if (pattern.find_first_of(kRegexSyntax) != std::string_view::npos) {
    throw ValueError("pattern '" + std::string(pattern) +
                     "' uses regex syntax; only '*' and '?' are supported");
  }
}

bool ModuleFilter::matches(std::string_view layer_name) const {
  auto hit = [&](const std::string& p) { return glob_match(p, layer_name); };
  const bool included = include.empty() || std::any_of(include.begin(), include.end(), hit);
  return included && std::none_of(exclude.begin(), exclude.end(), hit);
}

std::string_view to_string(Solver s) {
  switch (s) {
    case Solver::random:
      return "random";
    case Solver::svd:
      return "svd";
    case Solver::snmf:
      return "snmf";
  }
  return "?";
}

std::optional<Solver> parse_solver(std::string_view s) {
  if (s == "random") return Solver::random;
  if (s == "svd") return Solver::svd;
  if (s == "snmf") return Solver::snmf;
  return std::nullopt;
}

std::string_view to_string(SigmaSplit s) {
  return s == SigmaSplit::balanced ? "balanced" : "decoder-only";
}

std::optional<SigmaSplit> parse_sigma_split(std::string_view s) {
  if (s == "balanced") return SigmaSplit::balanced;
  if (s == "decoder-only") return SigmaSplit::decoder_only;
  return std::nullopt;
}

std::string_view to_string(SkipReason r) {
  switch (r) {
    case SkipReason::none:
      return "none";
    case SkipReason::rank_gate:
      return "rank-gate";
    case SkipReason::filtered:
      return "filtered";
  }
  return "?";
}

}  // namespace lrfact
