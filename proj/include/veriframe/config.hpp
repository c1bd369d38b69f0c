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
 * @brief Layered configuration: flags > environment > file > defaults
 *
 * Keys are dotted `section.key` names. The file format is the TOML subset
 * needed for flat tables:
 *
 *   # comment
 *   seed = 7
 *   [service]
 *   port = 8080
 *   model_artifact = "artifacts/m1"
 *
 * `service.port` is overridden by the environment variable
 * VERIFRAME_SERVICE_PORT.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace veriframe {

enum class ConfigLayer { kDefault = 0, kFile = 1, kEnvironment = 2, kFlag = 3 };

/// Parses the TOML subset into dotted keys. Strings are unquoted, other
/// scalars are kept as written. Throws ConfigError with the line number.
std::map<std::string, std::string> parse_toml(std::string_view text);

/// VERIFRAME_ + upper-cased key with '.' replaced by '_'.
std::string env_name(std::string_view key);

class Config {
 public:
  /// Every recognised key with its default.
  static Config with_defaults();

  void set(const std::string& key, std::string value, ConfigLayer layer);
  /// Loads a file into the file layer. Unknown keys raise ConfigError.
  void load_file(const std::filesystem::path& path);
  /// Reads VERIFRAME_* for every known key through `getenv`.
  void load_environment(const std::function<const char*(const char*)>& getenv);

  [[nodiscard]] bool known(const std::string& key) const;
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
  [[nodiscard]] std::optional<ConfigLayer> source(const std::string& key) const;

  /// Typed accessors; throw ConfigError on a missing key or malformed value.
  [[nodiscard]] std::string str(const std::string& key) const;
  [[nodiscard]] std::int64_t integer(const std::string& key) const;
  [[nodiscard]] std::uint64_t unsigned_integer(const std::string& key) const;
  [[nodiscard]] double real(const std::string& key) const;
  [[nodiscard]] bool boolean(const std::string& key) const;

  [[nodiscard]] std::map<std::string, std::string> merged() const;

 private:
  struct Entry {
    std::string value;
    ConfigLayer layer;
  };
  std::map<std::string, Entry> values_;
};

}  // namespace veriframe
