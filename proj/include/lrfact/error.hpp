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

#include <stdexcept>
#include <string>

namespace lrfact {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not compose. `layer()` is empty for pure kernels.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what, std::string layer = {})
      : Error(layer.empty() ? what : "layer '" + layer + "': " + what), layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

// Requested rank outside [1, min(rows, cols)].
class RankError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise inadmissible numeric input.
class ValueError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// A solver failed while rewriting the named layer.
class SolverError : public Error {
 public:
  SolverError(std::string layer, const std::string& what)
      : Error("layer '" + layer + "': " + what), layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

}  // namespace lrfact
