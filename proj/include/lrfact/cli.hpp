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
#include <iosfwd>
#include <string>
#include <vector>

#include "lrfact/factorizer.hpp"
#include "lrfact/model.hpp"

namespace lrfact::cli {

// Process exit codes. These are a stable contract.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitLoad = 2,
  kExitSolver = 3,
  kExitShape = 4,
  kExitDiffTolerance = 5,
};

/// Runs the `lrfact` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Batch [batch, input_shape...] with entries uniform on [-1, 1].
Tensor random_batch(const Shape& input_shape, std::size_t batch, std::uint64_t seed);

struct BenchResult {
  std::size_t batch = 0;
  int warmup = 0;
  std::vector<double> samples_ms;
  double median_ms = 0.0;
  double q1_ms = 0.0;
  double q3_ms = 0.0;
  std::uint64_t flops = 0;  // per timed forward
};

/// Times `repeats` forwards after `warmup` untimed ones, single-threaded.
BenchResult benchmark(const Model& model, std::size_t batch, int repeats, int warmup,
                      std::uint64_t seed = 0);

/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct DiffResult {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  std::size_t elements = 0;
};

/// Feeds `trials` random batches to both models. Throws ShapeError when
/// the models disagree on input or output shape.
DiffResult compare_models(const Model& a, const Model& b, int trials, std::size_t batch,
                          std::uint64_t seed);

std::string report_json(const FactorizationReport& report, const FactorizeConfig& config);

}  // namespace lrfact::cli
