// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/wmmse.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "capa/errors.hpp"

namespace capa {

using cd = std::complex<double>;

SolveContext make_solve_context(const Medium &medium, const Aperture &aperture, int gl_order,
                                bool coupled) {
    SolveContext ctx;
    ctx.medium = medium;
    ctx.grid = build_aperture_grid(aperture, gauss_legendre(gl_order));
    ctx.approx = coupled ? build_kernel_approx(medium, ctx.grid) : uncoupled_kernel(ctx.grid);
    return ctx;
}

Eigen::MatrixXcd channel_matrix(const UserScene &scene, const ApertureGrid &grid,
                                const Medium &medium) {
    const int k_users = scene.num_users();
    if (k_users == 0)
        throw InvalidParameterError("channel_matrix: scene has no users");
    Eigen::MatrixXcd h(k_users, grid.size());
    for (int k = 0; k < k_users; ++k)
        for (int i = 0; i < grid.size(); ++i)
            h(k, i) = channel_response(medium, scene.positions[k], grid.points.col(i));
    return h;
}

Eigen::MatrixXcd effective_gains(const Eigen::MatrixXcd &h, const ApertureGrid &grid,
                                 const Eigen::MatrixXcd &w) {
    if (h.cols() != grid.size() || w.rows() != grid.size())
        throw DimensionError("effective_gains: shapes inconsistent with grid");
    return h * (grid.phi_weights.asDiagonal() * w);
}

Eigen::VectorXd equivalent_noise(const Eigen::MatrixXcd &w, const ApertureGrid &grid,
                                 const KernelApprox &approx, const UserScene &scene, double p_t) {
    if (p_t <= 0.0)
        throw InvalidParameterError("equivalent_noise: transmit power must be positive");
    const double power = em_power(w, grid, approx);
    if (power == 0.0)
        throw DegenerateInputError("equivalent_noise: zero beamformer");
    return scene.noise_powers * (power / p_t);
}

std::pair<Eigen::VectorXcd, Eigen::VectorXd> update_receivers(const Eigen::MatrixXcd &gains,
                                                              const Eigen::VectorXd &noise_eq) {
    const int k_users = static_cast<int>(gains.rows());
    Eigen::VectorXcd receivers(k_users);
    Eigen::VectorXd weights(k_users);
    for (int k = 0; k < k_users; ++k) {
        const double total = gains.row(k).squaredNorm() + noise_eq[k];
        receivers[k] = gains(k, k) / total;
        const double mmse = 1.0 - std::norm(gains(k, k)) / total;
        weights[k] = 1.0 / mmse;
    }
    return {receivers, weights};
}

double compute_beta(const Eigen::VectorXcd &receivers, const Eigen::VectorXd &mse_weights,
                    const UserScene &scene, double p_t) {
    double inv_beta = 0.0;
    for (int k = 0; k < receivers.size(); ++k)
        inv_beta += mse_weights[k] * scene.noise_powers[k] * std::norm(receivers[k]) / (2.0 * p_t);
    if (inv_beta == 0.0)
        throw DegenerateInputError("compute_beta: all receivers are zero");
    return 1.0 / inv_beta;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> gtilde_from_samples(const Eigen::MatrixXcd &g_samples,
                                                                  const KernelApprox &approx,
                                                                  const ApertureGrid &grid) {
    const Eigen::MatrixXcd gamma = apply_inverse_kernel(approx, grid, g_samples);
    const Eigen::MatrixXcd gtilde =
        g_samples.adjoint() * (grid.phi_weights.asDiagonal() * gamma);
    return {gamma, gtilde};
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> build_gtilde(const Eigen::MatrixXcd &h,
                                                           const Eigen::VectorXcd &receivers,
                                                           const KernelApprox &approx,
                                                           const ApertureGrid &grid) {
    if (h.rows() != receivers.size())
        throw DimensionError("build_gtilde: receiver count does not match channel rows");
    const Eigen::MatrixXcd g_samples = h.adjoint() * receivers.asDiagonal();
    return gtilde_from_samples(g_samples, approx, grid);
}

Eigen::MatrixXcd beamformer_update(const Eigen::MatrixXcd &gamma,
                                   const Eigen::VectorXd &mse_weights,
                                   const Eigen::MatrixXcd &gtilde, double beta) {
    const int k_users = static_cast<int>(mse_weights.size());
    Eigen::MatrixXcd system = gtilde * mse_weights.asDiagonal().toDenseMatrix().cast<cd>();
    system += (1.0 / beta) * Eigen::MatrixXcd::Identity(k_users, k_users);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(system);
    const double cond =
        svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    if (!std::isfinite(cond) || cond > 1e12)
        throw IllConditionedError("beamformer_update: system condition estimate " +
                                      std::to_string(cond),
                                  cond);

    // Solve W * system = Gamma * U via the transposed system.
    const Eigen::MatrixXcd rhs = gamma * mse_weights.asDiagonal();
    return system.transpose().partialPivLu().solve(rhs.transpose()).transpose();
}

double sum_rate(const Eigen::MatrixXcd &gains, const Eigen::VectorXd &noise_eq) {
    double rate = 0.0;
    for (int k = 0; k < gains.rows(); ++k) {
        const double interference =
            gains.row(k).squaredNorm() - std::norm(gains(k, k)) + noise_eq[k];
        rate += std::log2(1.0 + std::norm(gains(k, k)) / interference);
    }
    return rate;
}

double surrogate_objective(const Eigen::MatrixXcd &gains, const Eigen::VectorXd &noise_eq,
                           const Eigen::VectorXcd &receivers, const Eigen::VectorXd &mse_weights) {
    double value = 0.0;
    for (int k = 0; k < gains.rows(); ++k) {
        const double vk2 = std::norm(receivers[k]);
        const double eps = vk2 * gains.row(k).squaredNorm() + 1.0 -
                           2.0 * std::real(std::conj(receivers[k]) * gains(k, k)) +
                           noise_eq[k] * vk2;
        value += mse_weights[k] * eps - std::log(mse_weights[k]);
    }
    return value;
}

Eigen::MatrixXcd scale_full_power(const Eigen::MatrixXcd &w, const ApertureGrid &grid,
                                  const KernelApprox &approx, double p_t) {
    const double power = em_power(w, grid, approx);
    if (power == 0.0)
        throw DegenerateInputError("scale_full_power: zero beamformer");
    return w * std::sqrt(p_t / power);
}

double stationarity_residual(const Eigen::MatrixXcd &w, const Eigen::MatrixXcd &g_samples,
                             const Eigen::VectorXd &mse_weights, double beta,
                             const KernelApprox &approx, const ApertureGrid &grid) {
    const Eigen::MatrixXcd gu = g_samples * mse_weights.asDiagonal();
    const Eigen::MatrixXcd inner =
        g_samples.adjoint() * (grid.phi_weights.asDiagonal() * w); // K x K
    Eigen::MatrixXcd defect = gu * inner - gu;
    defect += apply_forward_kernel(approx, grid, w) / beta;

    const auto weighted_norm = [&](const Eigen::MatrixXcd &m) {
        return std::sqrt((m.cwiseAbs2().array().colwise() * grid.phi_weights.array()).sum());
    };
    const double ref = weighted_norm(gu);
    if (ref == 0.0)
        return weighted_norm(defect);
    return weighted_norm(defect) / ref;
}

namespace {

Eigen::MatrixXcd initial_beamformer(const Eigen::MatrixXcd &h, const SolveContext &ctx,
                                    const SolverConfig &config, double p_t) {
    const int k_users = static_cast<int>(h.rows());
    Eigen::MatrixXcd w;
    if (config.init == SolverConfig::Init::matched_filter) {
        w = h.adjoint();
    } else {
        std::mt19937_64 rng(config.seed);
        const auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
        w.resize(h.cols(), k_users);
        for (int i = 0; i < w.rows(); ++i)
            for (int k = 0; k < k_users; ++k)
                w(i, k) = cd(2.0 * unit() - 1.0, 2.0 * unit() - 1.0);
    }
    return scale_full_power(w, ctx.grid, ctx.approx, p_t);
}

} // namespace

WmmseResult solve_multiuser_with_channel(const Eigen::MatrixXcd &h,
                                         const Eigen::VectorXd &noise_powers,
                                         const SolveContext &ctx, const SolverConfig &config,
                                         double p_t) {
    if (config.max_iters < 1 || config.rel_tol <= 0.0)
        throw InvalidParameterError("solve_multiuser: invalid solver configuration");
    if (h.cols() != ctx.grid.size())
        throw DimensionError("solve_multiuser: channel columns do not match grid size");

    UserScene noise_only;
    noise_only.positions.resize(h.rows()); // positions unused on this path
    noise_only.noise_powers = noise_powers;

    WmmseResult result;
    const int k_users = static_cast<int>(h.rows());
    Eigen::MatrixXcd w = initial_beamformer(h, ctx, config, p_t);

    double prev_rate = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < config.max_iters; ++it) {
        const Eigen::MatrixXcd gains = effective_gains(h, ctx.grid, w);
        const Eigen::VectorXd noise_eq = equivalent_noise(w, ctx.grid, ctx.approx, noise_only, p_t);
        auto [receivers, weights] = update_receivers(gains, noise_eq);

        // After the MMSE update, mu_k eps_k == 1, so the surrogate collapses
        // to K - sum ln(mu_k) and the rate trace is sum log2(mu_k).
        const double rate = weights.array().log2().sum();
        result.trace.push_back({rate, k_users - weights.array().log().sum()});
        result.receivers = receivers;
        result.mse_weights = weights;
        result.iterations = it + 1;

        if (std::abs(rate - prev_rate) <= config.rel_tol * std::max(std::abs(rate), 1e-30)) {
            result.converged = true;
            break;
        }
        prev_rate = rate;

        result.beta = compute_beta(receivers, weights, noise_only, p_t);
        auto [gamma, gtilde] = build_gtilde(h, receivers, ctx.approx, ctx.grid);
        w = beamformer_update(gamma, weights, gtilde, result.beta);
    }

    result.w = scale_full_power(w, ctx.grid, ctx.approx, p_t);
    result.sum_rate_bps = result.trace.back().sum_rate_bps;
    return result;
}

WmmseResult solve_multiuser(const UserScene &scene, const SolveContext &ctx,
                            const SolverConfig &config, double p_t) {
    return solve_multiuser_with_channel(channel_matrix(scene, ctx.grid, ctx.medium),
                                        scene.noise_powers, ctx, config, p_t);
}

WmmseResult solve_multiuser(const UserScene &scene, const Aperture &aperture, const Medium &medium,
                            const SolverConfig &config, double p_t, int gl_order, bool coupled) {
    return solve_multiuser(scene, make_solve_context(medium, aperture, gl_order, coupled), config,
                           p_t);
}

} // namespace capa
