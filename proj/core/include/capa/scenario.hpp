// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_SCENARIO_HPP
#define CAPA_SCENARIO_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "capa/em.hpp"
#include "capa/quadrature.hpp"
#include "capa/wmmse.hpp"

namespace capa {

/// Monte Carlo scenario: users dropped uniformly in a disc parallel to the
/// aperture plane. All randomness is keyed by (seed, trial_index).
struct ScenarioConfig {
    std::uint64_t seed = 1;
    int num_users = 4;
    Eigen::Vector3d drop_center{30.0, -30.0, 50.0};
    double drop_radius = 15.0; // m
    double noise_power = 0.0;  // W per user; must be set (or calibrated) before use
    int trials = 1;
};

/// Order-independent per-trial RNG seed (splitmix64 mixing).
std::uint64_t derive_trial_seed(std::uint64_t seed, std::uint64_t trial_index);

/// K user positions uniform in the drop disc (exact disc sampling via
/// r = R*sqrt(u)); deterministic per (seed, trial_index).
UserScene generate_scene(const ScenarioConfig &config, std::uint64_t trial_index);

/// Noise power giving a single user at drop_center a matched-filter SNR of
/// snr_db under full-power transmission.
double calibrate_noise_power(const SolveContext &ctx, const Eigen::Vector3d &user_position,
                             double p_t, double snr_db);

struct TrialAggregate {
    double mean = 0.0;
    double stddev = 0.0;
    int trials = 0;
    double converged_fraction = 0.0;
};

struct TrialOutcome {
    double value = 0.0;
    bool converged = true;
};

/// Runs `evaluate` once per trial and aggregates; the reduction is a fixed
/// sequential pass over trial indices, so results are independent of
/// evaluation order (and of how callers parallelize the evaluations).
TrialAggregate run_trials(const ScenarioConfig &config,
                          const std::function<TrialOutcome(const UserScene &, std::uint64_t)> &evaluate,
                          int num_threads = 1);

} // namespace capa

#endif
