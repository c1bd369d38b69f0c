// Copyright 2026 The VeriFrame Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "veriframe/artifact.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "veriframe/error.hpp"

namespace veriframe {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "weights.bin is written in host order");

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> serialize_weights(const Model& model) {
  std::vector<std::uint8_t> blob;
  blob.reserve(model.network().parameter_count() * sizeof(double));
  for (const nn::Param* p : model.network().parameters()) {
    const auto* raw = reinterpret_cast<const std::uint8_t*>(p->value.data());
    blob.insert(blob.end(), raw, raw + p->value.size() * sizeof(double));
  }
  return blob;
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ArtifactError("cannot write " + path.string());
}

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ArtifactError("descriptor.json missing field '" + std::string(name) + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ArtifactError("descriptor.json field '" + std::string(name) + "' has the wrong type");
  }
}

}  // namespace

ModelArtifact export_model(const Model& model, const fs::path& path, double crop_margin) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path)) {
    throw ArtifactError("cannot create artifact directory " + path.string());
  }
  ModelArtifact artifact;
  artifact.path = path;
  artifact.descriptor.config = model.config();
  artifact.descriptor.crop_margin = crop_margin;
  artifact.descriptor.parameter_count = model.network().parameter_count();

  const auto blob = serialize_weights(model);
  artifact.checksum = sha256_hex(blob);

  const auto& d = artifact.descriptor;
  json j = {
      {"format_version", d.format_version},
      {"backbone", d.config.backbone.name},
      {"input_size", d.input_size()},
      {"head_output", std::string(to_string(d.config.head_output))},
      {"head_hidden_units", d.config.head_hidden_units},
      {"normalization", d.normalization},
      {"crop_margin", d.crop_margin},
      {"positive_class", d.positive_class},
      {"parameter_count", d.parameter_count},
  };
  {
    std::ofstream out(path / "weights.bin", std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!out) throw ArtifactError("cannot write " + (path / "weights.bin").string());
  }
  write_text(path / "descriptor.json", j.dump(2) + "\n");
  write_text(path / "checksum.txt", artifact.checksum + "\n");
  return artifact;
}

LoadedModel load_model(const fs::path& path) {
  if (!fs::is_directory(path)) throw ArtifactError("artifact directory not found: " + path.string());
  const fs::path descriptor_path = path / "descriptor.json";
  if (!fs::exists(descriptor_path)) throw ArtifactError("artifact missing descriptor.json");

  json j;
  try {
    const auto text = read_bytes(descriptor_path);
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("descriptor.json is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ArtifactError("descriptor.json must hold an object");

  ModelArtifact artifact;
  artifact.path = path;
  auto& d = artifact.descriptor;
  d.format_version = field<int>(j, "format_version");
  if (d.format_version != kArtifactFormatVersion) {
    throw ArtifactError("unsupported version " + std::to_string(d.format_version));
  }
  const auto backbone = field<std::string>(j, "backbone");
  const int input_size = field<int>(j, "input_size");
  const auto head = field<std::string>(j, "head_output");
  d.normalization = field<std::string>(j, "normalization");
  d.crop_margin = field<double>(j, "crop_margin");
  d.positive_class = field<std::string>(j, "positive_class");
  d.config.head_hidden_units = field<int>(j, "head_hidden_units");
  d.parameter_count = field<std::size_t>(j, "parameter_count");

  try {
    d.config.backbone = backbone_spec(backbone);
  } catch (const ModelError& e) {
    throw ArtifactError(e.what());
  }
  if (input_size != d.config.backbone.input_size) {
    throw ArtifactError("input_size " + std::to_string(input_size) + " does not match backbone '" +
                        backbone + "'");
  }
  const auto parsed_head = parse_head_output(head);
  if (!parsed_head) throw ArtifactError("unknown head_output '" + head + "'");
  d.config.head_output = *parsed_head;
  if (d.normalization != kUnitRangeNormalization) {
    throw ArtifactError("unsupported normalization '" + d.normalization + "'");
  }
  if (d.positive_class != "FAKE") {
    throw ArtifactError("unsupported positive_class '" + d.positive_class + "'");
  }

  if (!fs::exists(path / "checksum.txt")) throw ArtifactError("artifact missing checksum.txt");
  if (!fs::exists(path / "weights.bin")) throw ArtifactError("artifact missing weights.bin");
  const auto checksum_text = read_bytes(path / "checksum.txt");
  std::string expected(checksum_text.begin(), checksum_text.end());
  while (!expected.empty() && std::isspace(static_cast<unsigned char>(expected.back()))) {
    expected.pop_back();
  }
  const auto blob = read_bytes(path / "weights.bin");
  artifact.checksum = sha256_hex(blob);
  if (artifact.checksum != expected) {
    throw ArtifactError("checksum mismatch: weights.bin does not match checksum.txt");
  }

  auto model = std::make_shared<Model>(d.config);
  if (model->network().parameter_count() != d.parameter_count ||
      blob.size() != d.parameter_count * sizeof(double)) {
    throw ArtifactError("weights.bin size does not match parameter_count");
  }
  std::size_t pos = 0;
  for (nn::Param* p : model->network().parameters()) {
    const std::size_t bytes = p->value.size() * sizeof(double);
    std::memcpy(p->value.data(), blob.data() + pos, bytes);
    pos += bytes;
  }
  return {std::move(model), std::move(artifact)};
}

}  // namespace veriframe
