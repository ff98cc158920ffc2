// SPDX-License-Identifier: Apache-2.0
//
// capa-select: aperture selection for continuous aperture arrays
// Copyright (C) 2026 The capa-select authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace capa
{
    // Argument outside the mathematical domain of an operation
    class DomainError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Requested aperture does not fit into the array frame
    class ApertureTooLarge : public DomainError
    {
    public:
        using DomainError::DomainError;
    };

    // Base class for failures that happen while evaluating a model
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Zero distance between a source and an observation point
    class SingularityError : public NumericalError
    {
    public:
        using NumericalError::NumericalError;
    };

    // Adaptive integration stopped before reaching the requested tolerance
    class ConvergenceError : public NumericalError
    {
    public:
        ConvergenceError(const std::string &what, double partial_value, double error_estimate)
            : NumericalError(what), partial_value_(partial_value), error_estimate_(error_estimate) {}

        double partial_value() const noexcept { return partial_value_; }
        double error_estimate() const noexcept { return error_estimate_; }

    private:
        double partial_value_;
        double error_estimate_;
    };

    // Model output violates a structural property (e.g. a correlation matrix that is not PSD)
    class ModelError : public NumericalError
    {
    public:
        using NumericalError::NumericalError;
    };

    // Malformed or out-of-domain experiment configuration
    class ConfigError : public std::runtime_error
    {
    public:
        explicit ConfigError(const std::string &what, int line = 0)
            : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

        int line() const noexcept { return line_; }

    private:
        int line_;
    };
}
