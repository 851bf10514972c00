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

#include "lrfact/modelio.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "json.hpp"
#include "overloaded.hpp"

namespace lrfact::io {
namespace {

using json = nlohmann::ordered_json;
using detail::overloaded;

static_assert(std::numeric_limits<float>::is_iec559 && sizeof(float) == 4);

[[noreturn]] void fail(FormatErrc code, const std::string& what) { throw FormatError(code, what); }

void append_f32(std::vector<std::uint8_t>& out, std::span<const float> values) {
  out.reserve(out.size() + 4 * values.size());
  for (float v : values) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    out.push_back(static_cast<std::uint8_t>(bits));
    out.push_back(static_cast<std::uint8_t>(bits >> 8));
    out.push_back(static_cast<std::uint8_t>(bits >> 16));
    out.push_back(static_cast<std::uint8_t>(bits >> 24));
  }
}

std::vector<float> read_f32(std::span<const std::uint8_t> bytes, const std::string& what) {
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                               static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24;
    out[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(out[i]))
      fail(FormatErrc::non_finite, what + " element " + std::to_string(i) + " is not finite");
  }
  return out;
}

// ---- encoding ---------------------------------------------------------------

struct TensorRef {
  const char* role;
  Shape shape;
  std::span<const float> data;
};

json shape_json(const Shape& s) { return json(s); }

// Hyperparameters plus the tensors of one layer, in serialization order.
std::pair<json, std::vector<TensorRef>> describe(const Layer& layer) {
  json hp = json::object();
  std::vector<TensorRef> tensors;
  auto add_bias = [&](const Bias& b) {
    hp["bias"] = b.has_value();
    if (b) tensors.push_back({"bias", {b->size()}, *b});
  };
  auto add_geometry = [&](const ConvGeometry& g) {
    hp["stride"] = g.stride;
    hp["padding"] = g.padding;
    hp["dilation"] = g.dilation;
  };
  std::visit(
      overloaded{
          [&](const LinearLayer& l) {
            hp["in_features"] = l.in_features();
            hp["out_features"] = l.out_features();
            tensors.push_back({"weight", {l.weight.rows(), l.weight.cols()}, l.weight.data()});
            add_bias(l.bias);
          },
          [&](const LedLayer& l) {
            hp["in_features"] = l.in_features();
            hp["out_features"] = l.out_features();
            hp["rank"] = l.rank();
            tensors.push_back({"encoder", {l.encoder.rows(), l.encoder.cols()}, l.encoder.data()});
            tensors.push_back({"decoder", {l.decoder.rows(), l.decoder.cols()}, l.decoder.data()});
            add_bias(l.bias);
          },
          [&](const ConvLayer& c) {
            hp["in_channels"] = c.in_channels();
            hp["out_channels"] = c.out_channels();
            hp["kernel"] = c.kernel();
            add_geometry(c.geometry);
            hp["groups"] = 1;
            tensors.push_back({"weight", c.weight.shape(), c.weight.data()});
            add_bias(c.bias);
          },
          [&](const CedLayer& c) {
            hp["in_channels"] = c.in_channels();
            hp["out_channels"] = c.out_channels();
            hp["rank"] = c.rank();
            hp["kernel"] = c.kernel();
            add_geometry(c.geometry);
            tensors.push_back({"encoder", c.encoder.shape(), c.encoder.data()});
            tensors.push_back({"decoder", c.decoder.shape(), c.decoder.data()});
            add_bias(c.bias);
          },
          [](const ReluLayer&) {},
          [](const FlattenLayer&) {},
      },
      layer.kind);
  return {std::move(hp), std::move(tensors)};
}

// ---- decoding ---------------------------------------------------------------

std::uint64_t as_u64(const json& j, const std::string& what) {
  if (!j.is_number_unsigned())
    fail(FormatErrc::malformed_manifest, what + " must be a non-negative integer");
  return j.get<std::uint64_t>();
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(FormatErrc::malformed_manifest, where + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(FormatErrc::malformed_manifest, where + " is missing '" + key + "'");
  return *it;
}

std::vector<std::size_t> as_dims(const json& j, const std::string& what, bool positive) {
  if (!j.is_array()) fail(FormatErrc::malformed_manifest, what + " must be an array");
  std::vector<std::size_t> out;
  for (const json& d : j) {
    const std::uint64_t v = as_u64(d, what);
    if (positive && v == 0) fail(FormatErrc::malformed_manifest, what + " entries must be >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

struct DecodedTensor {
  std::string role;
  Shape shape;
  std::vector<float> data;
};

class LayerBuilder {
 public:
  LayerBuilder(std::string name, std::vector<DecodedTensor> tensors, const json& hp)
      : name_(std::move(name)), tensors_(std::move(tensors)), hp_(hp) {}

  Layer build(const std::string& kind) {
    Layer layer{name_, ReluLayer{}};
    if (kind == "relu") {
      expect_no_tensors();
    } else if (kind == "flatten") {
      expect_no_tensors();
      layer.kind = FlattenLayer{};
    } else if (kind == "linear") {
      Matrix w = matrix("weight", size("out_features"), size("in_features"));
      layer.kind = LinearLayer{std::move(w), bias(size("out_features"))};
    } else if (kind == "led") {
      const std::size_t r = size("rank");
      Matrix enc = matrix("encoder", r, size("in_features"));
      Matrix dec = matrix("decoder", size("out_features"), r);
      layer.kind = LedLayer{std::move(enc), std::move(dec), bias(size("out_features"))};
    } else if (kind == "conv1d" || kind == "conv2d" || kind == "conv3d") {
      const std::size_t dims = static_cast<std::size_t>(kind[4] - '0');
      if (hp_.contains("groups") && as_u64(hp_["groups"], ctx("groups")) != 1)
        fail(FormatErrc::unsupported, ctx("grouped convolutions are not supported"));
      const Shape kernel = dims_of("kernel", dims, true);
      ConvGeometry g = geometry(dims);
      Tensor w = tensor("weight", conv_shape(size("in_channels"), size("out_channels"), kernel));
      layer.kind = ConvLayer{std::move(w), bias(size("out_channels")), std::move(g)};
    } else if (kind == "ced1d" || kind == "ced2d" || kind == "ced3d") {
      const std::size_t dims = static_cast<std::size_t>(kind[3] - '0');
      const Shape kernel = dims_of("kernel", dims, true);
      const std::size_t r = size("rank");
      ConvGeometry g = geometry(dims);
      Tensor enc = tensor("encoder", conv_shape(size("in_channels"), r, kernel));
      Tensor dec = tensor("decoder", conv_shape(r, size("out_channels"), Shape(dims, 1)));
      layer.kind =
          CedLayer{std::move(enc), std::move(dec), bias(size("out_channels")), std::move(g)};
    } else {
      fail(FormatErrc::unsupported, ctx("unknown layer kind '" + kind + "'"));
    }
    if (!tensors_.empty())
      fail(FormatErrc::invalid_layer,
           ctx("unexpected tensor role '" + tensors_.front().role + "'"));
    return layer;
  }

 private:
  std::string ctx(const std::string& what) const { return "layer '" + name_ + "': " + what; }

  std::size_t size(const char* key) {
    const std::uint64_t v = as_u64(field(hp_, key, ctx("hyperparameters")), ctx(key));
    if (v == 0) fail(FormatErrc::invalid_layer, ctx(std::string(key) + " must be >= 1"));
    return static_cast<std::size_t>(v);
  }

  Shape dims_of(const char* key, std::size_t dims, bool positive) {
    Shape s = as_dims(field(hp_, key, ctx("hyperparameters")), ctx(key), false);
    if (s.size() != dims)
      fail(FormatErrc::invalid_layer,
           ctx(std::string(key) + " needs " + std::to_string(dims) + " entries"));
    if (positive)
      for (std::size_t v : s)
        if (v == 0)
          fail(FormatErrc::invalid_layer, ctx(std::string(key) + " entries must be >= 1"));
    return s;
  }

  ConvGeometry geometry(std::size_t dims) {
    return {dims_of("stride", dims, true), dims_of("padding", dims, false),
            dims_of("dilation", dims, true)};
  }

  static Shape conv_shape(std::size_t a, std::size_t b, const Shape& kernel) {
    Shape s{a, b};
    s.insert(s.end(), kernel.begin(), kernel.end());
    return s;
  }

  std::optional<DecodedTensor> take(const char* role) {
    for (auto it = tensors_.begin(); it != tensors_.end(); ++it) {
      if (it->role == role) {
        DecodedTensor t = std::move(*it);
        tensors_.erase(it);
        return t;
      }
    }
    return std::nullopt;
  }

  Tensor tensor(const char* role, const Shape& expected) {
    std::optional<DecodedTensor> t = take(role);
    if (!t) fail(FormatErrc::invalid_layer, ctx(std::string("missing tensor '") + role + "'"));
    if (t->shape != expected)
      fail(FormatErrc::invalid_layer,
           ctx(std::string(role) + " shape " + shape_to_string(t->shape) +
               " does not match hyperparameters " + shape_to_string(expected)));
    return Tensor(std::move(t->shape), std::move(t->data));
  }

  Matrix matrix(const char* role, std::size_t rows, std::size_t cols) {
    Tensor t = tensor(role, {rows, cols});
    return Matrix(rows, cols, std::vector<float>(t.data().begin(), t.data().end()));
  }

  Bias bias(std::size_t len) {
    const json& flag = field(hp_, "bias", ctx("hyperparameters"));
    if (!flag.is_boolean()) fail(FormatErrc::malformed_manifest, ctx("bias must be a boolean"));
    if (!flag.get<bool>()) return std::nullopt;
    Tensor t = tensor("bias", {len});
    return std::vector<float>(t.data().begin(), t.data().end());
  }

  void expect_no_tensors() const {
    if (!tensors_.empty()) fail(FormatErrc::invalid_layer, ctx("takes no tensors"));
  }

  std::string name_;
  std::vector<DecodedTensor> tensors_;
  const json& hp_;
};

std::filesystem::path with_suffix(std::filesystem::path base, const char* suffix) {
  base += suffix;
  return base;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string_view to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::malformed_manifest:
      return "malformed manifest";
    case FormatErrc::version_mismatch:
      return "version mismatch";
    case FormatErrc::blob_length_mismatch:
      return "blob length mismatch";
    case FormatErrc::tensor_size_mismatch:
      return "tensor size mismatch";
    case FormatErrc::tensor_out_of_bounds:
      return "tensor out of bounds";
    case FormatErrc::tensor_overlap:
      return "tensor overlap";
    case FormatErrc::tensor_gap:
      return "tensor gap";
    case FormatErrc::non_finite:
      return "non-finite value";
    case FormatErrc::invalid_layer:
      return "invalid layer";
    case FormatErrc::unsupported:
      return "unsupported";
  }
  return "unknown";
}

ModelFiles model_files(const std::filesystem::path& path) {
  std::string base = path.string();
  if (ends_with(base, ".json"))
    base.resize(base.size() - 5);
  else if (ends_with(base, ".bin"))
    base.resize(base.size() - 4);
  return {with_suffix(base, ".json"), with_suffix(base, ".bin")};
}

ModelFiles tensor_files(const std::filesystem::path& path) {
  std::string base = path.string();
  if (ends_with(base, ".tns.json"))
    base.resize(base.size() - 9);
  else if (ends_with(base, ".tns.bin"))
    base.resize(base.size() - 8);
  return {with_suffix(base, ".tns.json"), with_suffix(base, ".tns.bin")};
}

std::string encode_manifest(const Model& model) {
  json layers = json::array();
  std::uint64_t offset = 0;
  for (const Layer& layer : model.layers) {
    auto [hp, tensors] = describe(layer);
    json entries = json::array();
    for (const TensorRef& t : tensors) {
      const std::uint64_t len = 4 * static_cast<std::uint64_t>(t.data.size());
      entries.push_back(json{{"role", t.role},
                             {"shape", shape_json(t.shape)},
                             {"byte_offset", offset},
                             {"byte_length", len}});
      offset += len;
    }
    layers.push_back(json{{"name", layer.name},
                          {"kind", layer.kind_name()},
                          {"hyperparameters", std::move(hp)},
                          {"tensors", std::move(entries)}});
  }
  json doc{{"format_version", kFormatVersion},
           {"name", model.name},
           {"input_shape", shape_json(model.input_shape)},
           {"blob_bytes", offset},
           {"layers", std::move(layers)}};
  return doc.dump(2) + "\n";
}

std::vector<std::uint8_t> encode_blob(const Model& model) {
  std::vector<std::uint8_t> out;
  for (const Layer& layer : model.layers)
    for (const TensorRef& t : describe(layer).second) append_f32(out, t.data);
  return out;
}

Model decode_model(std::string_view manifest, std::span<const std::uint8_t> blob) {
  json doc = json::parse(manifest.begin(), manifest.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail(FormatErrc::malformed_manifest, "manifest is not valid JSON");
  if (!doc.is_object()) fail(FormatErrc::malformed_manifest, "manifest must be a JSON object");

  const std::uint64_t version = as_u64(field(doc, "format_version", "manifest"), "format_version");
  if (version != kFormatVersion) {
    fail(FormatErrc::version_mismatch, "format_version " + std::to_string(version) +
                                           " is not supported (expected " +
                                           std::to_string(kFormatVersion) + ")");
  }

  const std::uint64_t blob_bytes = as_u64(field(doc, "blob_bytes", "manifest"), "blob_bytes");
  if (blob.size() != blob_bytes) {
    fail(FormatErrc::blob_length_mismatch, "blob has " + std::to_string(blob.size()) +
                                               " bytes, manifest declares " +
                                               std::to_string(blob_bytes));
  }

  Model model;
  const json& name = field(doc, "name", "manifest");
  if (!name.is_string()) fail(FormatErrc::malformed_manifest, "name must be a string");
  model.name = name.get<std::string>();
  model.input_shape = as_dims(field(doc, "input_shape", "manifest"), "input_shape", true);

  const json& layers = field(doc, "layers", "manifest");
  if (!layers.is_array()) fail(FormatErrc::malformed_manifest, "layers must be an array");

  std::uint64_t cursor = 0;
  for (const json& entry : layers) {
    const json& lname = field(entry, "name", "layer");
    const json& lkind = field(entry, "kind", "layer");
    if (!lname.is_string() || !lkind.is_string())
      fail(FormatErrc::malformed_manifest, "layer name and kind must be strings");
    const std::string layer_name = lname.get<std::string>();
    const std::string where = "layer '" + layer_name + "'";

    std::vector<DecodedTensor> tensors;
    const json& tlist = field(entry, "tensors", where);
    if (!tlist.is_array())
      fail(FormatErrc::malformed_manifest, where + ": tensors must be an array");
    for (const json& t : tlist) {
      const json& role = field(t, "role", where + " tensor");
      if (!role.is_string())
        fail(FormatErrc::malformed_manifest, where + ": role must be a string");
      const std::string what = where + " tensor '" + role.get<std::string>() + "'";
      Shape shape = as_dims(field(t, "shape", what), what + " shape", true);
      const std::uint64_t offset = as_u64(field(t, "byte_offset", what), what + " byte_offset");
      const std::uint64_t length = as_u64(field(t, "byte_length", what), what + " byte_length");

      if (length != 4 * static_cast<std::uint64_t>(shape_numel(shape)))
        fail(FormatErrc::tensor_size_mismatch, what + ": byte_length " + std::to_string(length) +
                                                   " != 4 * elements of " + shape_to_string(shape));
      if (offset > blob_bytes || length > blob_bytes - offset)
        fail(FormatErrc::tensor_out_of_bounds,
             what + ": bytes [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                 ") exceed blob of " + std::to_string(blob_bytes));
      if (offset < cursor)
        fail(FormatErrc::tensor_overlap, what + ": starts at " + std::to_string(offset) +
                                             " before the previous tensor ends at " +
                                             std::to_string(cursor));
      if (offset > cursor)
        fail(FormatErrc::tensor_gap, what + ": untiled bytes [" + std::to_string(cursor) + ", " +
                                         std::to_string(offset) + ")");
      cursor = offset + length;
      tensors.push_back({role.get<std::string>(), std::move(shape),
                         read_f32(blob.subspan(offset, length), what)});
    }

    const json& hp = field(entry, "hyperparameters", where);
    if (!hp.is_object())
      fail(FormatErrc::malformed_manifest, where + ": hyperparameters must be an object");
    model.layers.push_back(
        LayerBuilder(layer_name, std::move(tensors), hp).build(lkind.get<std::string>()));
  }
  if (cursor != blob_bytes)
    fail(FormatErrc::tensor_gap, "trailing untiled bytes [" + std::to_string(cursor) + ", " +
                                     std::to_string(blob_bytes) + ")");

  try {
    validate_model(model);
  } catch (const Error& e) {
    fail(FormatErrc::invalid_layer, e.what());
  }
  return model;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  validate_model(model);
  const ModelFiles files = model_files(path);
  const std::string manifest = encode_manifest(model);
  write_file(files.manifest,
             std::span(reinterpret_cast<const std::uint8_t*>(manifest.data()), manifest.size()));
  write_file(files.blob, encode_blob(model));
}

Model load_model(const std::filesystem::path& path) {
  const ModelFiles files = model_files(path);
  const std::vector<std::uint8_t> manifest = read_file(files.manifest);
  const std::vector<std::uint8_t> blob = read_file(files.blob);
  return decode_model(
      std::string_view(reinterpret_cast<const char*>(manifest.data()), manifest.size()), blob);
}

std::string encode_tensor_header(const Tensor& tensor) {
  return json{{"shape", shape_json(tensor.shape())}}.dump() + "\n";
}

std::vector<std::uint8_t> encode_tensor_data(const Tensor& tensor) {
  std::vector<std::uint8_t> out;
  append_f32(out, tensor.data());
  return out;
}

Tensor decode_tensor(std::string_view header, std::span<const std::uint8_t> payload) {
  json doc = json::parse(header.begin(), header.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    fail(FormatErrc::malformed_manifest, "tensor header is not a JSON object");
  Shape shape = as_dims(field(doc, "shape", "tensor header"), "shape", true);
  if (shape.empty()) fail(FormatErrc::malformed_manifest, "tensor shape must not be empty");
  const std::uint64_t expected = 4 * static_cast<std::uint64_t>(shape_numel(shape));
  if (payload.size() != expected) {
    fail(FormatErrc::blob_length_mismatch, "tensor payload has " + std::to_string(payload.size()) +
                                               " bytes, shape " + shape_to_string(shape) +
                                               " needs " + std::to_string(expected));
  }
  return Tensor(std::move(shape), read_f32(payload, "tensor"));
}

void save_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  const ModelFiles files = tensor_files(path);
  const std::string header = encode_tensor_header(tensor);
  write_file(files.manifest,
             std::span(reinterpret_cast<const std::uint8_t*>(header.data()), header.size()));
  write_file(files.blob, encode_tensor_data(tensor));
}

Tensor load_tensor(const std::filesystem::path& path) {
  const ModelFiles files = tensor_files(path);
  const std::vector<std::uint8_t> header = read_file(files.manifest);
  const std::vector<std::uint8_t> payload = read_file(files.blob);
  return decode_tensor(
      std::string_view(reinterpret_cast<const char*>(header.data()), header.size()), payload);
}

}  // namespace lrfact::io
