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

#include "veriframe/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "veriframe/error.hpp"

namespace veriframe {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool bare_key(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

/// Drops a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(std::string_view v, std::size_t line) {
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) {
      const char e = v[++i];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default:
          throw ConfigError("line " + std::to_string(line) + ": unsupported escape \\" + e);
      }
    } else {
      out.push_back(v[i]);
    }
  }
  return out;
}

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> kDefaults = {
      {"seed", "0"},
      {"ingest.frames_per_video", "10"},
      {"ingest.sampling", "uniform"},
      {"ingest.crop_size", "256"},
      {"ingest.crop_margin", "0.2"},
      {"ingest.workers", "0"},
      {"faces.backend", "stub"},
      {"datapipe.cache", "true"},
      {"datapipe.prefetch_depth", "2"},
      {"datapipe.augment", "true"},
      {"model.backbone", "tiny_test"},
      {"model.head_hidden_units", "16"},
      {"model.head_output", "softmax_2"},
      {"trainer.batch_size", "32"},
      {"trainer.learning_rate", "0.0001"},
      {"trainer.epochs", "10"},
      {"trainer.checkpoint_dir", ""},
      {"evaluator.n", "128"},
      {"evaluator.threshold", "0.5"},
      {"service.model_artifact", ""},
      {"service.detector", "stub"},
      {"service.max_upload_mb", "50"},
      {"service.host", "127.0.0.1"},
      {"service.port", "8080"},
      {"service.frames", "10"},
      {"service.threshold", "0.5"},
  };
  return kDefaults;
}

}  // namespace

std::map<std::string, std::string> parse_toml(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated table header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!bare_key(name)) throw ConfigError(where + "unsupported table name '" + std::string(name) + "'");
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!bare_key(key)) throw ConfigError(where + "unsupported key '" + std::string(key) + "'");
    if (value.empty()) throw ConfigError(where + "missing value");
    std::string parsed;
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') throw ConfigError(where + "unterminated string");
      parsed = unquote(value, line_no);
    } else if (value.front() == '[' || value.front() == '{' || value.front() == '\'') {
      throw ConfigError(where + "arrays, inline tables and literal strings are not supported");
    } else {
      parsed = std::string(value);
    }
    const auto full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (!out.emplace(full, parsed).second) throw ConfigError(where + "duplicate key '" + full + "'");
  }
  return out;
}

std::string env_name(std::string_view key) {
  std::string out = "VERIFRAME_";
  for (char c : key) {
    out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

Config Config::with_defaults() {
  Config c;
  for (const auto& [k, v] : defaults()) c.values_[k] = {v, ConfigLayer::kDefault};
  return c;
}

void Config::set(const std::string& key, std::string value, ConfigLayer layer) {
  if (!known(key)) throw ConfigError("unknown config key '" + key + "'");
  // A lower layer never overrides a higher one, whatever the load order.
  auto& entry = values_[key];
  if (layer >= entry.layer) entry = {std::move(value), layer};
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::map<std::string, std::string> parsed;
  try {
    parsed = parse_toml(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (auto& [k, v] : parsed) {
    if (!known(k)) throw ConfigError(path.string() + ": unknown key '" + k + "'");
    set(k, std::move(v), ConfigLayer::kFile);
  }
}

void Config::load_environment(const std::function<const char*(const char*)>& getenv) {
  for (const auto& [key, unused] : defaults()) {
    if (const char* v = getenv(env_name(key).c_str())) set(key, v, ConfigLayer::kEnvironment);
  }
}

bool Config::known(const std::string& key) const { return defaults().contains(key); }

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second.value;
}

std::optional<ConfigLayer> Config::source(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second.layer;
}

std::string Config::str(const std::string& key) const {
  auto v = get(key);
  if (!v) throw ConfigError("missing config key '" + key + "'");
  return *v;
}

namespace {

template <typename T>
T parse_whole(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

std::int64_t Config::integer(const std::string& key) const {
  return parse_whole<std::int64_t>(key, str(key));
}

std::uint64_t Config::unsigned_integer(const std::string& key) const {
  return parse_whole<std::uint64_t>(key, str(key));
}

double Config::real(const std::string& key) const {
  const auto text = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
}

bool Config::boolean(const std::string& key) const {
  auto text = str(key);
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::map<std::string, std::string> Config::merged() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, e] : values_) out[k] = e.value;
  return out;
}

}  // namespace veriframe
