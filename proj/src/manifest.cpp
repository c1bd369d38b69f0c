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

#include "veriframe/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "veriframe/csv.hpp"
#include "veriframe/error.hpp"

namespace veriframe {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

const std::vector<std::string> kHeader{"name", "label", "split", "original"};

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::kFake ? "FAKE" : "REAL";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

std::optional<Label> parse_label(std::string_view token) {
  const auto t = lower(token);
  if (t == "real") return Label::kReal;
  if (t == "fake") return Label::kFake;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view token) {
  const auto t = lower(token);
  if (t == "train") return Split::kTrain;
  if (t == "val") return Split::kVal;
  if (t == "test") return Split::kTest;
  return std::nullopt;
}

Manifest parse_manifest(std::string_view text, std::string source) {
  Manifest manifest;
  manifest.source_path = std::move(source);
  const auto rows = csv::lines(text);

  std::size_t line_no = 0;
  bool header_seen = false;
  std::unordered_set<std::string> names;
  for (auto line : rows) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto fields = csv::split_record(line);
    if (!header_seen) {
      if (line_no == 1 && fields.size() == kHeader.size() &&
          !fields[0].empty() && fields[0].front() == '\xEF') {
        fields[0].erase(0, 3);  // UTF-8 byte order mark
      }
      std::vector<std::string> lowered;
      for (const auto& f : fields) lowered.push_back(lower(f));
      if (lowered != kHeader) {
        throw ManifestError("expected header 'name,label,split,original'",
                            line_no);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw ManifestError("expected 4 columns, found " +
                              std::to_string(fields.size()),
                          line_no);
    }
    ManifestEntry entry;
    entry.name = fields[0];
    if (entry.name.empty()) throw ManifestError("empty name", line_no);
    auto label = parse_label(fields[1]);
    if (!label) throw ManifestError("unknown label '" + fields[1] + "'", line_no);
    entry.label = *label;
    auto split = parse_split(fields[2]);
    if (!split) throw ManifestError("unknown split '" + fields[2] + "'", line_no);
    entry.split = *split;
    if (!fields[3].empty() && lower(fields[3]) != "none") {
      if (entry.label == Label::kReal) {
        throw ManifestError("REAL entry must not name an original", line_no);
      }
      entry.original = fields[3];
    }
    if (!names.insert(entry.name).second) {
      throw ManifestError("duplicate name '" + entry.name + "'", line_no);
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw ManifestError("empty manifest");
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.string());
}

std::string to_csv(const Manifest& manifest) {
  std::string out = csv::join_record(kHeader) + "\n";
  for (const auto& e : manifest.entries) {
    out += csv::join_record({e.name, std::string(to_string(e.label)),
                             std::string(to_string(e.split)),
                             e.original.value_or("None")}) +
           "\n";
  }
  return out;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << to_csv(manifest);
}

std::size_t ClassDistribution::total() const {
  return std::accumulate(cells_.begin(), cells_.end(), std::size_t{0});
}

ClassDistribution class_distribution(const Manifest& manifest) {
  ClassDistribution dist;
  for (const auto& e : manifest.entries) dist.add(e.label, e.split);
  return dist;
}

}  // namespace veriframe
