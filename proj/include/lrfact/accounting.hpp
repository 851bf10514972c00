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
#include <vector>

#include "lrfact/model.hpp"

// Parameter and FLOP accounting.
//
// FLOP convention: one multiply-add is 2 FLOPs; each bias add and each
// activation output element is 1 FLOP; flatten is free. Counts are per
// sample and scale linearly with the batch size.
namespace lrfact {

inline constexpr const char* kFlopConvention =
    "FLOPs: 2 per multiply-add, 1 per bias add, 1 per activation element";

struct Counts {
  std::vector<std::uint64_t> per_layer;
  std::uint64_t total = 0;
};

std::uint64_t layer_params(const Layer& layer);

/// FLOPs of one layer for one sample of shape `sample_in`.
std::uint64_t layer_flops(const Layer& layer, const Shape& sample_in);

Counts count_params(const Model& model);
Counts count_flops(const Model& model, std::uint64_t batch_size = 1);

}  // namespace lrfact
