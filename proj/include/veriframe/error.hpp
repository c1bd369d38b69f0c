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
 * @brief Exception hierarchy shared by every module
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace veriframe {

/// Base class for every domain error. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to a public operation (non-positive size, length
/// mismatch, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  ManifestError(const std::string& message, std::size_t row = 0)
      : Error(row == 0 ? message
                       : "row " + std::to_string(row) + ": " + message),
        row_(row) {}

  /// 1-based line number in the source file, 0 when not row-specific.
  [[nodiscard]] std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Undecodable image, video or payload bytes.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class DetectorError : public Error {
 public:
  DetectorError(const std::string& backend, const std::string& message)
      : Error("detector '" + backend + "': " + message), backend_(backend) {}

  [[nodiscard]] const std::string& backend() const { return backend_; }

 private:
  std::string backend_;
};

/// Unknown backbone, bad head configuration, input shape mismatch.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, tampered or unsupported model artifact.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(int epoch)
      : Error("training diverged: non-finite loss in epoch " +
              std::to_string(epoch)),
        epoch_(epoch) {}

  [[nodiscard]] int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace veriframe
