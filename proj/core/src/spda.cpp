// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/spda.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "capa/errors.hpp"

namespace capa {

using cd = std::complex<double>;

DiscreteArray spda_array(const Aperture &aperture, double spacing, SpdaCoupling coupling) {
    if (spacing <= 0.0)
        throw InvalidParameterError("spda_array: spacing must be positive");
    const int nx = static_cast<int>(std::floor(aperture.lx / spacing));
    const int ny = static_cast<int>(std::floor(aperture.ly / spacing));
    if (nx < 1 || ny < 1)
        throw InvalidParameterError("spda_array: spacing exceeds the aperture, array is empty");

    DiscreteArray array;
    array.spacing = spacing;
    array.element_area = spacing * spacing;
    array.coupling = coupling;
    array.positions.resize(3, nx * ny);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            array.positions.col(ix * ny + iy) =
                aperture.center + Eigen::Vector3d((ix - (nx - 1) / 2.0) * spacing,
                                                  (iy - (ny - 1) / 2.0) * spacing, 0.0);
    return array;
}

Eigen::MatrixXd spda_coupling_matrix(const DiscreteArray &array, const Medium &medium) {
    const int n = array.size();
    const double ae = array.element_area;
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i) {
        c(i, i) = medium.zs * ae + c_rad_analytic(Eigen::Vector3d::Zero(), medium) * ae * ae;
        for (int j = i + 1; j < n; ++j) {
            const double v =
                c_rad_analytic(array.positions.col(i) - array.positions.col(j), medium) * ae * ae;
            c(i, j) = v;
            c(j, i) = v;
        }
    }
    return c;
}

SpdaResult spda_solve(const DiscreteArray &array, const UserScene &scene, const Medium &medium,
                      double p_t, const SolverConfig &config) {
    if (p_t <= 0.0)
        throw InvalidParameterError("spda_solve: transmit power must be positive");
    const int k_users = scene.num_users();
    const int n_elem = array.size();

    Eigen::MatrixXcd h(k_users, n_elem);
    for (int k = 0; k < k_users; ++k)
        for (int n = 0; n < n_elem; ++n)
            h(k, n) = channel_response(medium, scene.positions[k], array.positions.col(n)) *
                      array.element_area;

    const bool coupled = array.coupling == SpdaCoupling::sampled_kernel;
    // uncoupled C = diag_power * I: mutual (off-diagonal) coupling ignored,
    // per-element self-impedance kept so the power scale stays physical
    const double ae = array.element_area;
    const double diag_power =
        medium.zs * ae + c_rad_analytic(Eigen::Vector3d::Zero(), medium) * ae * ae;
    Eigen::LLT<Eigen::MatrixXcd> c_factor;

    Eigen::MatrixXcd c_full;
    if (coupled) {
        c_full = spda_coupling_matrix(array, medium).cast<cd>();
        c_factor.compute(c_full);
    }
    const auto em_power_spda = [&](const Eigen::MatrixXcd &w) {
        if (!coupled)
            return 0.5 * diag_power * w.squaredNorm();
        return 0.5 * w.conjugate().cwiseProduct(c_full * w).sum().real();
    };

    SpdaResult result;
    Eigen::MatrixXcd w = h.adjoint(); // matched filter init
    w *= std::sqrt(p_t / em_power_spda(w));

    double prev_rate = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < config.max_iters; ++it) {
        const Eigen::MatrixXcd gains = h * w;
        const Eigen::VectorXd noise_eq = scene.noise_powers * (em_power_spda(w) / p_t);
        auto [receivers, weights] = update_receivers(gains, noise_eq);

        const double rate = weights.array().log2().sum();
        result.trace.push_back({rate, k_users - weights.array().log().sum()});
        result.iterations = it + 1;

        if (std::abs(rate - prev_rate) <= config.rel_tol * std::max(std::abs(rate), 1e-30)) {
            result.converged = true;
            break;
        }
        prev_rate = rate;

        const double beta = compute_beta(receivers, weights, scene, p_t);
        const Eigen::MatrixXcd g_mat = h.adjoint() * receivers.asDiagonal(); // N_a x K

        // W = ((1/beta) C + G U G^H)^{-1} G U, via the Woodbury identity with
        // the cached factorization of C: Y = beta C^{-1} G, W = Y (U^{-1} + G^H Y)^{-1}.
        Eigen::MatrixXcd y;
        if (coupled)
            y = beta * c_factor.solve(g_mat);
        else
            y = (beta / diag_power) * g_mat;
        Eigen::MatrixXcd small = g_mat.adjoint() * y;
        small += weights.cwiseInverse().cast<cd>().asDiagonal();
        w = small.transpose().partialPivLu().solve(y.transpose()).transpose();
    }

    w *= std::sqrt(p_t / em_power_spda(w));
    result.w = w;
    result.sum_rate_bps = result.trace.back().sum_rate_bps;
    return result;
}

} // namespace capa
