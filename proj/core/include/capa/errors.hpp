// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_ERRORS_HPP
#define CAPA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace capa {

/// Invalid scalar parameter (non-positive dimension, out-of-range order, ...).
class InvalidParameterError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Matrix/vector shape mismatch between caller and callee.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Evaluation of a genuinely singular function at its singular point.
class SingularityError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Degenerate input (zero beamformer, all-zero receivers).
class DegenerateInputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Linear system too ill-conditioned to solve reliably.
class IllConditionedError : public std::runtime_error {
  public:
    IllConditionedError(const std::string &what, double condition_estimate)
        : std::runtime_error(what), condition(condition_estimate) {}
    double condition;
};

} // namespace capa

#endif
