// Copyright 2026 The levexp Authors
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

#ifndef LEVEXP_ERRORS_HPP
#define LEVEXP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace levexp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A Gaussian state violates the Heisenberg bound beyond the clamp tolerance.
class InvalidStateError : public Error {
  public:
    using Error::Error;
};

/// Malformed configuration, schedule or input file.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Numerical integration could not reach the requested accuracy.
class IntegrationError : public Error {
  public:
    using Error::Error;
};

/// Lock-in reconstruction failed (trace too short, undersampled).
class ReconstructionError : public Error {
  public:
    using Error::Error;
};

/// Monte Carlo ensemble failed (too many invalid shots).
class EnsembleError : public Error {
  public:
    using Error::Error;
};

/// Mathieu parameter calibration has no solution in the stability region.
class CalibrationError : public Error {
  public:
    using Error::Error;
};

/// Least-squares fit did not converge.
class FitError : public Error {
  public:
    using Error::Error;
};

/// The fit Jacobian is singular; `direction` names the unidentifiable
/// parameter combination.
class DegeneracyError : public FitError {
  public:
    DegeneracyError(const std::string& msg, std::string direction)
        : FitError(msg), direction_(std::move(direction)) {}
    const std::string& direction() const noexcept { return direction_; }

  private:
    std::string direction_;
};

}  // namespace levexp

#endif  // LEVEXP_ERRORS_HPP
