// Copyright 2026 The Longform RL Authors.
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

// Exception hierarchy shared by every module. Each error carries a short
// class name so the CLI can report a single-line error class.

#ifndef LONGFORM_COMMON_ERROR_H_
#define LONGFORM_COMMON_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace longform {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
  virtual std::string_view kind() const noexcept { return "error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  std::string_view kind() const noexcept override { return "io"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  std::string_view kind() const noexcept override { return "config"; }
};

class NotFoundError : public Error {
 public:
  using Error::Error;
  std::string_view kind() const noexcept override { return "not_found"; }
};

class NumericError : public Error {
 public:
  using Error::Error;
  std::string_view kind() const noexcept override { return "numeric"; }
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
  std::string_view kind() const noexcept override { return "convergence"; }
};

class TransportError : public Error {
 public:
  using Error::Error;
  std::string_view kind() const noexcept override { return "transport"; }
};

struct FieldError {
  std::string path;
  std::string message;
};

// Validation failures keep one entry per offending field so HTTP handlers can
// echo them back with their paths.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(message), fields_{{"", message}} {}
  ValidationError(std::string path, std::string message)
      : ValidationError(
            std::vector<FieldError>{{std::move(path), std::move(message)}}) {}
  explicit ValidationError(std::vector<FieldError> fields)
      : Error(Summarize(fields)), fields_(std::move(fields)) {}

  std::string_view kind() const noexcept override { return "validation"; }
  const std::vector<FieldError>& fields() const { return fields_; }

 private:
  static std::string Summarize(const std::vector<FieldError>& fields) {
    std::string out;
    for (const FieldError& f : fields) {
      if (!out.empty()) out += "; ";
      out += f.path.empty() ? f.message : f.path + ": " + f.message;
    }
    return out;
  }

  std::vector<FieldError> fields_;
};

}  // namespace longform

#endif  // LONGFORM_COMMON_ERROR_H_
