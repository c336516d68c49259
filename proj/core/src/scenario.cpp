// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/scenario.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "capa/errors.hpp"

namespace capa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform double in [0, 1); explicit construction keeps the value stream
// independent of the standard library's distribution implementation.
double uniform01(std::mt19937_64 &rng) { return (rng() >> 11) * 0x1.0p-53; }

} // namespace

std::uint64_t derive_trial_seed(std::uint64_t seed, std::uint64_t trial_index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(trial_index + 0x51ED2700FCA330DBULL));
}

UserScene generate_scene(const ScenarioConfig &config, std::uint64_t trial_index) {
    if (config.num_users < 1)
        throw InvalidParameterError("generate_scene: need at least one user");
    if (config.drop_radius < 0.0)
        throw InvalidParameterError("generate_scene: negative drop radius");
    if (config.noise_power <= 0.0)
        throw InvalidParameterError("generate_scene: noise power must be set before use");

    std::mt19937_64 rng(derive_trial_seed(config.seed, trial_index));
    UserScene scene;
    scene.positions.reserve(config.num_users);
    for (int k = 0; k < config.num_users; ++k) {
        const double radius = config.drop_radius * std::sqrt(uniform01(rng));
        const double angle = 2.0 * M_PI * uniform01(rng);
        scene.positions.push_back(config.drop_center +
                                  Eigen::Vector3d(radius * std::cos(angle),
                                                  radius * std::sin(angle), 0.0));
    }
    scene.noise_powers = Eigen::VectorXd::Constant(config.num_users, config.noise_power);
    return scene;
}

double calibrate_noise_power(const SolveContext &ctx, const Eigen::Vector3d &user_position,
                             double p_t, double snr_db) {
    UserScene scene;
    scene.positions.push_back(user_position);
    scene.noise_powers = Eigen::VectorXd::Ones(1); // placeholder, unused below
    const Eigen::MatrixXcd h = channel_matrix(scene, ctx.grid, ctx.medium);
    Eigen::MatrixXcd w = h.adjoint();
    w = scale_full_power(w, ctx.grid, ctx.approx, p_t);
    const std::complex<double> gain = effective_gains(h, ctx.grid, w)(0, 0);
    return std::norm(gain) / std::pow(10.0, snr_db / 10.0);
}

TrialAggregate run_trials(const ScenarioConfig &config,
                          const std::function<TrialOutcome(const UserScene &, std::uint64_t)> &evaluate,
                          int num_threads) {
    if (config.trials < 1)
        throw InvalidParameterError("run_trials: need at least one trial");

    std::vector<TrialOutcome> outcomes(config.trials);
    if (num_threads <= 1) {
        for (int t = 0; t < config.trials; ++t)
            outcomes[t] = evaluate(generate_scene(config, t), t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < num_threads; ++w)
            pool.emplace_back([&]() {
                for (int t = next.fetch_add(1); t < config.trials; t = next.fetch_add(1))
                    outcomes[t] = evaluate(generate_scene(config, t), t);
            });
        for (auto &th : pool)
            th.join();
    }

    TrialAggregate agg;
    agg.trials = config.trials;
    double sum = 0.0, converged = 0.0;
    for (const auto &o : outcomes) {
        sum += o.value;
        converged += o.converged ? 1.0 : 0.0;
    }
    agg.mean = sum / config.trials;
    agg.converged_fraction = converged / config.trials;
    if (config.trials > 1) {
        double ss = 0.0;
        for (const auto &o : outcomes)
            ss += (o.value - agg.mean) * (o.value - agg.mean);
        agg.stddev = std::sqrt(ss / (config.trials - 1));
    }
    return agg;
}

} // namespace capa
