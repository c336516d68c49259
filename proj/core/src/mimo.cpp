// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/mimo.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "capa/errors.hpp"

namespace capa {

using cd = std::complex<double>;

Eigen::MatrixXcd cross_channel_matrix(const ApertureGrid &rx_grid, const ApertureGrid &tx_grid,
                                      const Medium &medium) {
    Eigen::MatrixXcd h(rx_grid.size(), tx_grid.size());
    for (int j = 0; j < rx_grid.size(); ++j)
        for (int i = 0; i < tx_grid.size(); ++i) {
            const Eigen::Vector3d d = rx_grid.points.col(j) - tx_grid.points.col(i);
            if (d.norm() == 0.0)
                throw SingularityError("cross_channel_matrix: overlapping apertures");
            h(j, i) = channel_response(medium, rx_grid.points.col(j), tx_grid.points.col(i));
        }
    return h;
}

Eigen::MatrixXcd mimo_gram(const Eigen::MatrixXcd &w, const Eigen::MatrixXcd &h_cross,
                           const ApertureGrid &tx_grid, const ApertureGrid &rx_grid) {
    if (h_cross.cols() != tx_grid.size() || h_cross.rows() != rx_grid.size() ||
        w.rows() != tx_grid.size())
        throw DimensionError("mimo_gram: shapes inconsistent with grids");
    const Eigen::MatrixXcd e_rx = h_cross * (tx_grid.phi_weights.asDiagonal() * w);
    return e_rx.adjoint() * (rx_grid.phi_weights.asDiagonal() * e_rx);
}

double mimo_rate(const Eigen::MatrixXcd &gram, double sigma2) {
    if (sigma2 <= 0.0)
        throw InvalidParameterError("mimo_rate: noise power must be positive");
    const int n = static_cast<int>(gram.rows());
    const Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n) + gram / sigma2;
    // log2 det via LU; the matrix is I + PSD, so the determinant is real > 0.
    return std::log2(std::abs(m.partialPivLu().determinant()));
}

Eigen::MatrixXcd mimo_mmse_filter(const Eigen::MatrixXcd &e_rx, const Eigen::MatrixXcd &gram,
                                  double sigma2) {
    if (sigma2 <= 0.0)
        throw InvalidParameterError("mimo_mmse_filter: noise power must be positive");
    const int n = static_cast<int>(gram.rows());
    const Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(n, n) + gram / sigma2;
    return (e_rx / sigma2) * m.inverse();
}

Eigen::MatrixXcd mse_matrix(const Eigen::MatrixXcd &w, const Eigen::MatrixXcd &v_samples,
                            const Eigen::MatrixXcd &h_cross, const ApertureGrid &tx_grid,
                            const ApertureGrid &rx_grid, const KernelApprox &approx,
                            double sigma_r2, double p_t) {
    if (v_samples.rows() != rx_grid.size() || v_samples.cols() != w.cols())
        throw DimensionError("mse_matrix: filter shape inconsistent with grid and streams");
    const int n = static_cast<int>(w.cols());
    const Eigen::MatrixXcd e_rx = h_cross * (tx_grid.phi_weights.asDiagonal() * w);
    const Eigen::MatrixXcd m_int = v_samples.adjoint() * (rx_grid.phi_weights.asDiagonal() * e_rx);
    const Eigen::MatrixXcd v_gram =
        v_samples.adjoint() * (rx_grid.phi_weights.asDiagonal() * v_samples);
    const Eigen::MatrixXcd residual = Eigen::MatrixXcd::Identity(n, n) - m_int;
    const double sigma_eq2 = sigma_r2 * em_power(w, tx_grid, approx) / p_t;
    return residual * residual.adjoint() + sigma_eq2 * v_gram;
}

namespace {

// Deterministic stream init: conjugate channels of N receive points spread
// along the grid, jointly power-normalized.
Eigen::MatrixXcd initial_mimo_beamformer(const Eigen::MatrixXcd &h_cross, int n_streams,
                                         const SolveContext &tx_ctx, double p_t) {
    const int rx_count = static_cast<int>(h_cross.rows());
    Eigen::MatrixXcd w(h_cross.cols(), n_streams);
    for (int s = 0; s < n_streams; ++s) {
        const int j = static_cast<int>((static_cast<long long>(s) + 1) * rx_count / (n_streams + 1));
        w.col(s) = h_cross.row(j).conjugate().transpose();
    }
    return scale_full_power(w, tx_ctx.grid, tx_ctx.approx, p_t);
}

} // namespace

MimoResult solve_mimo(const MimoScene &scene, const SolveContext &tx_ctx,
                      const ApertureGrid &rx_grid, const SolverConfig &config) {
    if (scene.n_streams < 1)
        throw InvalidParameterError("solve_mimo: stream count must be >= 1");
    if (scene.sigma_r2 <= 0.0 || scene.p_t <= 0.0)
        throw InvalidParameterError("solve_mimo: noise power and transmit power must be positive");
    if ((scene.tx_aperture.center - scene.rx_aperture.center).norm() == 0.0)
        throw InvalidParameterError("solve_mimo: apertures must be disjoint");

    const Eigen::MatrixXcd h_cross = cross_channel_matrix(rx_grid, tx_ctx.grid, tx_ctx.medium);
    const int n = scene.n_streams;

    MimoResult result;
    Eigen::MatrixXcd w = initial_mimo_beamformer(h_cross, n, tx_ctx, scene.p_t);
    Eigen::MatrixXcd v_samples;

    double prev_rate = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < config.max_iters; ++it) {
        const Eigen::MatrixXcd e_rx = h_cross * (tx_ctx.grid.phi_weights.asDiagonal() * w);
        const Eigen::MatrixXcd gram = e_rx.adjoint() * (rx_grid.phi_weights.asDiagonal() * e_rx);
        const double sigma_eq2 = scene.sigma_r2 * em_power(w, tx_ctx.grid, tx_ctx.approx) / scene.p_t;

        v_samples = mimo_mmse_filter(e_rx, gram, sigma_eq2);
        const double rate = mimo_rate(gram, sigma_eq2);
        result.rate_trace_bps.push_back(rate);
        result.iterations = it + 1;

        if (std::abs(rate - prev_rate) <= config.rel_tol * std::max(std::abs(rate), 1e-30)) {
            result.converged = true;
            break;
        }
        prev_rate = rate;

        // U = E_MMSE^{-1} = I + Q/sigma_eq2; the weights need not be diagonal
        // here, so the beamformer update is done with the full matrix.
        const Eigen::MatrixXcd u =
            Eigen::MatrixXcd::Identity(n, n) + gram / sigma_eq2;
        const Eigen::MatrixXcd v_gram =
            v_samples.adjoint() * (rx_grid.phi_weights.asDiagonal() * v_samples);
        const double inv_beta = scene.sigma_r2 * (u * v_gram).trace().real() / (2.0 * scene.p_t);
        const double beta = 1.0 / inv_beta;

        // g(s) samples: integral of h^H(r-s) v(r) over the receive aperture.
        const Eigen::MatrixXcd g_samples =
            h_cross.adjoint() * (rx_grid.phi_weights.asDiagonal() * v_samples);
        auto [gamma, gtilde] = gtilde_from_samples(g_samples, tx_ctx.approx, tx_ctx.grid);

        Eigen::MatrixXcd system = gtilde * u;
        system += (1.0 / beta) * Eigen::MatrixXcd::Identity(n, n);
        w = system.transpose().partialPivLu().solve((gamma * u).transpose()).transpose();
    }

    result.w = scale_full_power(w, tx_ctx.grid, tx_ctx.approx, scene.p_t);
    result.v_samples = v_samples;
    result.rate_bps = result.rate_trace_bps.back();
    return result;
}

MimoResult solve_mimo(const MimoScene &scene, const Medium &medium, const SolverConfig &config,
                      int gl_order, int gl_order_rx) {
    const SolveContext tx_ctx = make_solve_context(medium, scene.tx_aperture, gl_order);
    const int rx_order = (gl_order_rx > 0) ? gl_order_rx : gl_order;
    const ApertureGrid rx_grid = build_aperture_grid(scene.rx_aperture, gauss_legendre(rx_order));
    return solve_mimo(scene, tx_ctx, rx_grid, config);
}

} // namespace capa
