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
#include <atomic>
#include <exception>
#include <thread>

#include "lrfact/accounting.hpp"
#include "lrfact/error.hpp"
#include "lrfact/factorizer.hpp"

namespace lrfact {
namespace {

ReportEntry base_entry(const Layer& layer, const Shape& sample_in, std::size_t m, std::size_t n) {
  ReportEntry e;
  e.layer_name = layer.name;
  e.kind = layer.kind_name();
  e.m = m;
  e.n = n;
  e.params_before = e.params_after = layer_params(layer);
  e.flops_before = e.flops_after = layer_flops(layer, sample_in);
  return e;
}

// Decides filtered / rank-gate. Returns the rank to use, or nullopt when the
// layer is skipped (the entry then records why).
std::optional<std::size_t> gate(const Layer& layer, const FactorizeConfig& config,
                                ReportEntry& entry) {
  if (!config.filter.matches(layer.name)) {
    entry.skip_reason = SkipReason::filtered;
    return std::nullopt;
  }
  const std::size_t r = resolve_rank(config.rank_policy, entry.m, entry.n);
  entry.rank = r;
  if (!should_factorize(r, entry.m, entry.n)) {
    entry.skip_reason = SkipReason::rank_gate;
    return std::nullopt;
  }
  return r;
}

linalg::FactorPair solve_for_layer(const Matrix& w, std::size_t r, const Layer& layer,
                                   const FactorizeConfig& config, ReportEntry& entry) {
  try {
    linalg::FactorPair f = solve_factors(w, r, config, layer_seed(config.seed, layer.name));
    if (!f.a.all_finite() || !f.b.all_finite()) throw ValueError("factors overflow 32-bit floats");
    if (config.solver != Solver::random) entry.rel_error = linalg::frobenius_error(w, f.a, f.b);
    return f;
  } catch (const SolverError&) {
    throw;
  } catch (const std::exception& e) {
    throw SolverError(layer.name, e.what());
  }
}

void finish(ReportEntry& entry, const Layer& rewritten, const Shape& sample_in) {
  entry.factorized = true;
  entry.params_after = layer_params(rewritten);
  entry.flops_after = layer_flops(rewritten, sample_in);
}

}  // namespace

std::string ReportEntry::decision() const {
  return factorized ? "factorized" : "skipped(" + std::string(to_string(skip_reason)) + ")";
}

ReportTotals FactorizationReport::totals() const {
  ReportTotals t;
  for (const ReportEntry& e : entries) {
    t.params_before += e.params_before;
    t.params_after += e.params_after;
    t.flops_before += e.flops_before;
    t.flops_after += e.flops_after;
    (e.factorized ? t.factorized : t.skipped) += 1;
  }
  return t;
}

std::uint64_t layer_seed(std::uint64_t seed, std::string_view layer_name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : layer_name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return seed ^ h;
}

std::pair<Layer, ReportEntry> factorize_linear(const Layer& layer, const FactorizeConfig& config) {
  const auto* linear = std::get_if<LinearLayer>(&layer.kind);
  if (!linear) throw ValueError("factorize_linear: layer '" + layer.name + "' is not linear");
  const Shape sample_in{linear->in_features()};
  ReportEntry entry = base_entry(layer, sample_in, linear->out_features(), linear->in_features());

  const std::optional<std::size_t> r = gate(layer, config, entry);
  if (!r) return {layer, std::move(entry)};

  linalg::FactorPair f = solve_for_layer(linear->weight, *r, layer, config, entry);
  Layer out{layer.name, LedLayer{std::move(f.b), std::move(f.a), linear->bias}};
  finish(entry, out, sample_in);
  return {std::move(out), std::move(entry)};
}

std::pair<Layer, ReportEntry> factorize_conv(const Layer& layer, const Shape& sample_in,
                                             const FactorizeConfig& config) {
  const auto* conv = std::get_if<ConvLayer>(&layer.kind);
  if (!conv) throw ValueError("factorize_conv: layer '" + layer.name + "' is not a convolution");
  const Matrix flat = rearrange_conv_weight(conv->weight);
  ReportEntry entry = base_entry(layer, sample_in, flat.rows(), flat.cols());

  const std::optional<std::size_t> r = gate(layer, config, entry);
  if (!r) return {layer, std::move(entry)};

  const linalg::FactorPair f = solve_for_layer(flat, *r, layer, config, entry);
  ConvFactors parts = tensorize_conv_factors(f.a, f.b, conv->in_channels(), conv->kernel());
  Layer out{layer.name, CedLayer{std::move(parts.encoder), std::move(parts.decoder), conv->bias,
                                 conv->geometry}};
  finish(entry, out, sample_in);
  return {std::move(out), std::move(entry)};
}

std::pair<Layer, ReportEntry> factorize_layer(const Layer& layer, const Shape& sample_in,
                                              const FactorizeConfig& config) {
  if (std::holds_alternative<LinearLayer>(layer.kind)) return factorize_linear(layer, config);
  if (std::holds_alternative<ConvLayer>(layer.kind))
    return factorize_conv(layer, sample_in, config);
  throw ValueError("layer '" + layer.name + "' (" + layer.kind_name() + ") is not factorizable");
}

FactorizeResult auto_fact(const Model& model, const FactorizeConfig& config) {
  validate_policy(config.rank_policy);
  for (const auto& p : config.filter.include) validate_glob(p);
  for (const auto& p : config.filter.exclude) validate_glob(p);
  const std::vector<Shape> shapes = infer_shapes(model);

  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < model.layers.size(); ++i)
    if (model.layers[i].is_factorizable()) targets.push_back(i);

  struct Slot {
    std::optional<std::pair<Layer, ReportEntry>> result;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(targets.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < targets.size();) {
      const std::size_t i = targets[t];
      try {
        slots[t].result = factorize_layer(model.layers[i], shapes[i], config);
      } catch (...) {
        slots[t].error = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, config.threads), targets.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  FactorizeResult out{model, {}};
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (slots[t].error) std::rethrow_exception(slots[t].error);
    out.model.layers[targets[t]] = std::move(slots[t].result->first);
    out.report.entries.push_back(std::move(slots[t].result->second));
  }
  return out;
}

}  // namespace lrfact
