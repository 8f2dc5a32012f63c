/*
 * Copyright 2026 The miverify Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace miverify {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameters, fractions, flags or experiment configs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operand shapes that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Data that breaks a dataset or package invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class FormatError : public ValidationError {
 public:
  FormatError(std::size_t line, const std::string& what)
      : ValidationError(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }
  FormatError with_context(const std::string& ctx) const {
    return FormatError(line_, ctx + what(), 0);
  }

 private:
  FormatError(std::size_t line, const std::string& full, int) : ValidationError(full), line_(line) {}
  std::size_t line_;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }
  DivergenceError with_context(const std::string& ctx) const {
    return DivergenceError(epoch_, ctx + what(), 0);
  }

 private:
  DivergenceError(int epoch, const std::string& full, int) : Error(full), epoch_(epoch) {}
  int epoch_;
};

// An iterative solver hit its iteration cap before reaching tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(double residual, const std::string& what)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }
  ConvergenceError with_context(const std::string& ctx) const {
    return ConvergenceError(residual_, ctx + what(), 0);
  }

 private:
  ConvergenceError(double residual, const std::string& full, int) : Error(full), residual_(residual) {}
  double residual_;
};

}  // namespace miverify
