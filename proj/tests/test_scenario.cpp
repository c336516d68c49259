// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "capa/errors.hpp"
#include "capa/scenario.hpp"

using namespace capa;

namespace {

Medium default_medium() { return medium_from_config(2.4e9, 5.8e7, 4.0e-7 * M_PI); }

ScenarioConfig base_config() {
    ScenarioConfig cfg;
    cfg.seed = 7;
    cfg.num_users = 4;
    cfg.drop_center = Eigen::Vector3d(30.0, -30.0, 50.0);
    cfg.drop_radius = 15.0;
    cfg.noise_power = 1e-2;
    return cfg;
}

} // namespace

TEST_CASE("derive_trial_seed separates seeds and trials") {
    CHECK(derive_trial_seed(1, 0) == derive_trial_seed(1, 0));
    CHECK(derive_trial_seed(1, 0) != derive_trial_seed(1, 1));
    CHECK(derive_trial_seed(1, 0) != derive_trial_seed(2, 0));
    // nearby (seed, trial) pairs must not collide through the mixing
    std::vector<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 16; ++s)
        for (std::uint64_t t = 0; t < 16; ++t)
            seen.push_back(derive_trial_seed(s, t));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("generate_scene is deterministic per (seed, trial)") {
    const ScenarioConfig cfg = base_config();
    const UserScene a = generate_scene(cfg, 3);
    const UserScene b = generate_scene(cfg, 3);
    REQUIRE(a.num_users() == cfg.num_users);
    for (int k = 0; k < a.num_users(); ++k)
        CHECK((a.positions[k] - b.positions[k]).norm() == 0.0);
    const UserScene c = generate_scene(cfg, 4);
    CHECK((a.positions[0] - c.positions[0]).norm() > 0.0);
    CHECK(a.noise_powers.size() == cfg.num_users);
    CHECK(a.noise_powers[2] == cfg.noise_power);
}

TEST_CASE("zero drop radius collapses all users to the center") {
    ScenarioConfig cfg = base_config();
    cfg.drop_radius = 0.0;
    const UserScene scene = generate_scene(cfg, 11);
    for (const auto &p : scene.positions)
        CHECK((p - cfg.drop_center).norm() == 0.0);
}

TEST_CASE("generate_scene validates its inputs") {
    ScenarioConfig cfg = base_config();
    cfg.num_users = 0;
    CHECK_THROWS_AS(generate_scene(cfg, 0), InvalidParameterError);
    cfg = base_config();
    cfg.drop_radius = -1.0;
    CHECK_THROWS_AS(generate_scene(cfg, 0), InvalidParameterError);
    cfg = base_config();
    cfg.noise_power = 0.0;
    CHECK_THROWS_AS(generate_scene(cfg, 0), InvalidParameterError);
}

TEST_CASE("drops are uniform in the disc") {
    // Oracle: with u uniform and r = R*sqrt(u), the radial CDF is (r/R)^2 and
    // the positional mean is the disc center. 10^4 samples give a standard
    // error of about R/200 per axis and a KS band well under 0.02.
    ScenarioConfig cfg = base_config();
    cfg.num_users = 1;
    const int n = 10000;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    std::vector<double> radii(n);
    for (int t = 0; t < n; ++t) {
        const UserScene scene = generate_scene(cfg, t);
        mean += scene.positions[0];
        radii[t] = (scene.positions[0] - cfg.drop_center).norm();
        CHECK(radii[t] <= cfg.drop_radius);
        CHECK(scene.positions[0].z() == cfg.drop_center.z()); // disc parallel to the aperture
    }
    mean /= n;
    // per-axis standard error is R/(2*sqrt(n)) = 0.075 m; 0.02*R is a 4-sigma band
    CHECK((mean - cfg.drop_center).norm() < 0.02 * cfg.drop_radius);

    std::sort(radii.begin(), radii.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double model = (radii[i] / cfg.drop_radius) * (radii[i] / cfg.drop_radius);
        ks = std::max(ks, std::abs(model - (i + 1.0) / n));
        ks = std::max(ks, std::abs(model - static_cast<double>(i) / n));
    }
    CHECK(ks < 0.02);
}

TEST_CASE("run_trials aggregates a single trial exactly") {
    ScenarioConfig cfg = base_config();
    cfg.trials = 1;
    const TrialAggregate agg = run_trials(
        cfg, [](const UserScene &scene, std::uint64_t) {
            return TrialOutcome{scene.positions[0].x(), true};
        });
    const UserScene scene = generate_scene(cfg, 0);
    CHECK(agg.mean == scene.positions[0].x());
    CHECK(agg.stddev == 0.0);
    CHECK(agg.trials == 1);
    CHECK(agg.converged_fraction == 1.0);
}

TEST_CASE("run_trials is invariant to the thread count") {
    ScenarioConfig cfg = base_config();
    cfg.trials = 64;
    const auto evaluate = [](const UserScene &scene, std::uint64_t trial) {
        double acc = 0.0;
        for (const auto &p : scene.positions)
            acc += p.x() + 0.5 * p.y();
        return TrialOutcome{acc, trial % 5 != 0};
    };
    const TrialAggregate seq = run_trials(cfg, evaluate, 1);
    const TrialAggregate par = run_trials(cfg, evaluate, 4);
    CHECK(seq.mean == par.mean);
    CHECK(seq.stddev == par.stddev);
    CHECK(seq.converged_fraction == par.converged_fraction);
    CHECK(seq.converged_fraction == doctest::Approx(51.0 / 64.0).epsilon(1e-14));
}

TEST_CASE("doubling the trial count shrinks the standard error") {
    // Meta-trial oracle: the spread of per-run means over independent seeds
    // should contract by about 1/sqrt(2) when the trial count doubles.
    const auto evaluate = [](const UserScene &scene, std::uint64_t) {
        return TrialOutcome{scene.positions[0].x(), true};
    };
    const auto spread_of_means = [&](int trials, std::uint64_t seed_base) {
        const int meta = 100;
        std::vector<double> means(meta);
        for (int m = 0; m < meta; ++m) {
            ScenarioConfig cfg = base_config();
            cfg.num_users = 1;
            cfg.seed = seed_base + m;
            cfg.trials = trials;
            means[m] = run_trials(cfg, evaluate).mean;
        }
        double mu = 0.0;
        for (double v : means)
            mu += v;
        mu /= meta;
        double ss = 0.0;
        for (double v : means)
            ss += (v - mu) * (v - mu);
        return std::sqrt(ss / (meta - 1));
    };
    // disjoint seed ranges keep the two spread estimates independent; with
    // 100 meta-runs the 1/sqrt(2) contraction is resolved to about +-0.07
    const double ratio = spread_of_means(400, 1000) / spread_of_means(200, 5000);
    CHECK(ratio > 0.5);
    CHECK(ratio < 0.92);
}

TEST_CASE("run_trials rejects an empty trial set") {
    ScenarioConfig cfg = base_config();
    cfg.trials = 0;
    CHECK_THROWS_AS(run_trials(cfg, [](const UserScene &, std::uint64_t) {
                        return TrialOutcome{};
                    }),
                    InvalidParameterError);
}

TEST_CASE("calibrate_noise_power hits the requested matched-filter SNR") {
    const Medium med = default_medium();
    const SolveContext ctx =
        make_solve_context(med, Aperture{0.2, 0.2, Eigen::Vector3d::Zero()}, 12);
    const Eigen::Vector3d user(30.0, -30.0, 50.0);
    const double p_t = 1.0;
    const double noise = calibrate_noise_power(ctx, user, p_t, 20.0);
    REQUIRE(noise > 0.0);

    UserScene scene;
    scene.positions.push_back(user);
    scene.noise_powers = Eigen::VectorXd::Constant(1, noise);
    const Eigen::MatrixXcd h = channel_matrix(scene, ctx.grid, ctx.medium);
    Eigen::MatrixXcd w = scale_full_power(h.adjoint(), ctx.grid, ctx.approx, p_t);
    const double snr = std::norm(effective_gains(h, ctx.grid, w)(0, 0)) / noise;
    CHECK(10.0 * std::log10(snr) == doctest::Approx(20.0).epsilon(1e-10));
}
