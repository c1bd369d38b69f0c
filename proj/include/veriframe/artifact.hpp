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

/**
 * @file
 * @brief Portable model artifact
 *
 * An artifact is a directory:
 *
 *   descriptor.json  model config plus preprocessing metadata
 *   weights.bin      every parameter in network order, little-endian float64
 *   checksum.txt     lowercase hex SHA-256 of weights.bin
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>

#include "veriframe/faces.hpp"
#include "veriframe/model.hpp"

namespace veriframe {

inline constexpr int kArtifactFormatVersion = 1;
inline constexpr const char* kUnitRangeNormalization = "unit_range";

struct ArtifactDescriptor {
  ModelConfig config;
  std::string normalization = kUnitRangeNormalization;
  double crop_margin = kDefaultCropMargin;
  std::string positive_class = "FAKE";
  int format_version = kArtifactFormatVersion;
  std::size_t parameter_count = 0;

  [[nodiscard]] int input_size() const { return config.backbone.input_size; }
};

struct ModelArtifact {
  std::filesystem::path path;
  ArtifactDescriptor descriptor;
  std::string checksum;  // hex SHA-256 of the weights blob

  /// Short identifier derived from the checksum.
  [[nodiscard]] std::string model_id() const { return checksum.substr(0, 12); }
};

struct LoadedModel {
  std::shared_ptr<const Model> model;
  ModelArtifact artifact;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Raw weights blob for `model` (the bytes written to weights.bin).
std::vector<std::uint8_t> serialize_weights(const Model& model);

/// Writes the artifact directory (created if needed). Throws ArtifactError
/// when the path is not writable.
ModelArtifact export_model(const Model& model, const std::filesystem::path& path,
                           double crop_margin = kDefaultCropMargin);

/// Rebuilds the model from an artifact directory. Throws ArtifactError on a
/// missing file or field, checksum mismatch or unsupported format version.
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace veriframe
