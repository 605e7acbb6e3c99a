// Copyright 2026 The qdetect Authors
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

#include <stdexcept>
#include <string>

namespace qdetect {

// Process exit codes surfaced by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kNumerical = 3,
  kCacheMiss = 4,
};

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what, ExitCode code)
      : std::runtime_error(what), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode code() const noexcept { return code_; }

 private:
  std::string kind_;
  ExitCode code_;
};

// Invalid construction input: bad parameter ranges, malformed tables,
// dimension mismatches, unparsable config files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error("ConfigError", what, ExitCode::kConfig) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string kind, const std::string& what)
      : Error(std::move(kind), what, ExitCode::kNumerical) {}
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, double last_delta)
      : NumericalError("NonConvergence", what), last_delta_(last_delta) {}
  double last_delta() const noexcept { return last_delta_; }

 private:
  double last_delta_;
};

class UnsupportedParameter : public NumericalError {
 public:
  explicit UnsupportedParameter(const std::string& what)
      : NumericalError("UnsupportedParameter", what) {}
};

class ImpossibleObservation : public NumericalError {
 public:
  explicit ImpossibleObservation(const std::string& what)
      : NumericalError("ImpossibleObservation", what) {}
};

class ImpossibleAction : public NumericalError {
 public:
  explicit ImpossibleAction(const std::string& what)
      : NumericalError("ImpossibleAction", what) {}
};

class RunawayEpisode : public NumericalError {
 public:
  explicit RunawayEpisode(const std::string& what)
      : NumericalError("RunawayEpisode", what) {}
};

class CacheMiss : public Error {
 public:
  explicit CacheMiss(const std::string& what)
      : Error("CacheMiss", what, ExitCode::kCacheMiss) {}
};

}  // namespace qdetect
