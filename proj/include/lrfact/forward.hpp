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

#include "lrfact/model.hpp"
#include "lrfact/tensor.hpp"

namespace lrfact {

/// Runs a batch [N, input_shape...] through every layer in order.
///
/// Reductions accumulate in double in a fixed order, so the output is
/// bitwise reproducible. Throws ShapeError naming the first layer whose
/// input does not fit.
Tensor forward(const Model& model, const Tensor& batch);

/// One layer on a batch [N, ...].
Tensor forward_layer(const Layer& layer, const Tensor& batch);

}  // namespace lrfact
