// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "capa/scenario.hpp"
#include "capa/spda.hpp"

using namespace capa;

namespace {

Medium default_medium() { return medium_from_config(2.4e9, 5.8e7, 4.0e-7 * M_PI); }

const Aperture kAperture{0.5, 0.5, Eigen::Vector3d::Zero()};
constexpr double kNoise = 8.7524415591901766e-03;

UserScene default_scene() {
    ScenarioConfig sc;
    sc.noise_power = kNoise;
    return generate_scene(sc, 0);
}

void bm_kernel_approx_build(benchmark::State &state) {
    const Medium med = default_medium();
    const ApertureGrid grid =
        build_aperture_grid(kAperture, gauss_legendre(static_cast<int>(state.range(0))));
    for (auto _ : state) {
        KernelApprox approx = build_kernel_approx(med, grid);
        benchmark::DoNotOptimize(approx.d.data());
    }
}

// One full WMMSE iteration (receivers, weights, beta, beamformer) at a fixed
// iterate; the per-iteration cost drives the complexity scaling in the rule
// order M (I = M^2 grid points).
void bm_wmmse_iteration(benchmark::State &state) {
    const Medium med = default_medium();
    const SolveContext ctx =
        make_solve_context(med, kAperture, static_cast<int>(state.range(0)));
    const UserScene scene = default_scene();
    const Eigen::MatrixXcd h = channel_matrix(scene, ctx.grid, med);
    const Eigen::MatrixXcd w0 = scale_full_power(h.adjoint(), ctx.grid, ctx.approx, 1.0);
    for (auto _ : state) {
        const Eigen::MatrixXcd gains = effective_gains(h, ctx.grid, w0);
        const Eigen::VectorXd noise_eq = equivalent_noise(w0, ctx.grid, ctx.approx, scene, 1.0);
        const auto [receivers, weights] = update_receivers(gains, noise_eq);
        const double beta = compute_beta(receivers, weights, scene, 1.0);
        const auto [gamma, gtilde] = build_gtilde(h, receivers, ctx.approx, ctx.grid);
        Eigen::MatrixXcd w = beamformer_update(gamma, weights, gtilde, beta);
        benchmark::DoNotOptimize(w.data());
    }
}

void bm_spda_solve(benchmark::State &state) {
    const Medium med = default_medium();
    const DiscreteArray array = spda_array(kAperture, med.lambda / state.range(0));
    const UserScene scene = default_scene();
    SolverConfig cfg;
    for (auto _ : state) {
        SpdaResult res = spda_solve(array, scene, med, 1.0, cfg);
        benchmark::DoNotOptimize(res.sum_rate_bps);
    }
}

BENCHMARK(bm_kernel_approx_build)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_wmmse_iteration)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_spda_solve)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
