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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrfact/error.hpp"
#include "lrfact/model.hpp"

// On-disk model format.
//
// A model at base path P is two files:
//   P.json  UTF-8 manifest (format_version, name, input_shape, blob_bytes,
//           layers[] with kind, hyperparameters and tensor entries)
//   P.bin   every tensor concatenated in manifest order, row-major,
//           little-endian IEEE-754 binary32, no padding
//
// A single tensor at base path T is T.tns.json, one line {"shape":[...]},
// and T.tns.bin with the same encoding as the model blob.
//
// Conv weights are stored [C_in, C_out, K...]; CED encoders [C_in, r, K...]
// and decoders [r, C_out, 1...].
namespace lrfact::io {

inline constexpr int kFormatVersion = 1;

enum class FormatErrc {
  malformed_manifest,
  version_mismatch,
  blob_length_mismatch,
  tensor_size_mismatch,
  tensor_out_of_bounds,
  tensor_overlap,
  tensor_gap,
  non_finite,
  invalid_layer,
  unsupported,
};

std::string_view to_string(FormatErrc code);

// A manifest, blob or tensor file failed validation.
class FormatError : public Error {
 public:
  FormatError(FormatErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}
  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

struct ModelFiles {
  std::filesystem::path manifest;
  std::filesystem::path blob;
};

/// Accepts "m", "m.json" or "m.bin" and returns {m.json, m.bin}.
ModelFiles model_files(const std::filesystem::path& path);
/// Accepts "t", "t.tns.json" or "t.tns.bin" and returns {t.tns.json, t.tns.bin}.
ModelFiles tensor_files(const std::filesystem::path& path);

std::string encode_manifest(const Model& model);
std::vector<std::uint8_t> encode_blob(const Model& model);
Model decode_model(std::string_view manifest, std::span<const std::uint8_t> blob);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::string encode_tensor_header(const Tensor& tensor);
std::vector<std::uint8_t> encode_tensor_data(const Tensor& tensor);
Tensor decode_tensor(std::string_view header, std::span<const std::uint8_t> payload);

void save_tensor(const Tensor& tensor, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace lrfact::io
