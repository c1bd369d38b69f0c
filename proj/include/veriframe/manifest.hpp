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
 * @brief Dataset metadata table: media file -> label, split, forgery source
 *
 * The on-disk format is a header-bearing CSV with the columns
 * `name,label,split,original`. `original` is empty or "None" for REAL rows.
 */

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace veriframe {

enum class Label { kReal = 0, kFake = 1 };
enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

inline constexpr std::array<Label, 2> kAllLabels{Label::kReal, Label::kFake};
inline constexpr std::array<Split, 3> kAllSplits{Split::kTrain, Split::kVal,
                                                 Split::kTest};

std::string_view to_string(Label label);
std::string_view to_string(Split split);
/// Case-insensitive; returns nullopt for unknown tokens.
std::optional<Label> parse_label(std::string_view token);
std::optional<Split> parse_split(std::string_view token);

struct ManifestEntry {
  std::string name;
  Label label = Label::kReal;
  Split split = Split::kTrain;
  std::optional<std::string> original;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string source_path;
};

/// Parses manifest text. `source` is only used in the returned value and in
/// error messages. Throws ManifestError carrying the 1-based line number.
Manifest parse_manifest(std::string_view text, std::string source = {});
Manifest load_manifest(const std::filesystem::path& path);

std::string to_csv(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Counts keyed by (label, split); every cell is present, zero-filled.
class ClassDistribution {
 public:
  void add(Label label, Split split) { ++cells_[index(label, split)]; }
  [[nodiscard]] std::size_t count(Label label, Split split) const {
    return cells_[index(label, split)];
  }
  [[nodiscard]] std::size_t total() const;

 private:
  static std::size_t index(Label label, Split split) {
    return static_cast<std::size_t>(label) * kAllSplits.size() +
           static_cast<std::size_t>(split);
  }
  std::array<std::size_t, kAllLabels.size() * kAllSplits.size()> cells_{};
};

ClassDistribution class_distribution(const Manifest& manifest);

}  // namespace veriframe
