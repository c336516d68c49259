// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_MIMO_HPP
#define CAPA_MIMO_HPP

#include <vector>

#include <Eigen/Core>

#include "capa/coupling.hpp"
#include "capa/em.hpp"
#include "capa/quadrature.hpp"
#include "capa/wmmse.hpp"

namespace capa {

/// Aperture-to-aperture link: a transmit surface serving a parallel,
/// unrotated receive surface with N independent streams.
struct MimoScene {
    Aperture tx_aperture;
    Aperture rx_aperture;
    int n_streams = 1;
    double sigma_r2 = 0.0; // receiver noise power, W
    double p_t = 0.0;      // transmit power budget, W
};

struct MimoResult {
    Eigen::MatrixXcd w;         // I_T x N, scaled to full power
    Eigen::MatrixXcd v_samples; // I_R x N receive field filter at rx grid points
    double rate_bps = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> rate_trace_bps;
};

/// I_R x I_T channel samples h(r_j - s_i) between the two grids. Throws if
/// any point pair coincides (overlapping apertures).
Eigen::MatrixXcd cross_channel_matrix(const ApertureGrid &rx_grid, const ApertureGrid &tx_grid,
                                      const Medium &medium);

/// N x N stream Gram Q = E_rx^H Phi_R E_rx with E_rx = H * Phi_T * W.
Eigen::MatrixXcd mimo_gram(const Eigen::MatrixXcd &w, const Eigen::MatrixXcd &h_cross,
                           const ApertureGrid &tx_grid, const ApertureGrid &rx_grid);

/// log2 det(I_N + gram / sigma2).
double mimo_rate(const Eigen::MatrixXcd &gram, double sigma2);

/// Continuous MMSE field filter sampled at the receive grid:
/// v(r_j) = E_rx[j,:]/sigma2 * (I + gram/sigma2)^{-1}.
Eigen::MatrixXcd mimo_mmse_filter(const Eigen::MatrixXcd &e_rx, const Eigen::MatrixXcd &gram,
                                  double sigma2);

/// Stream MSE matrix (I - M^H)(I - M^H)^H + sigma_r2 * em_power(W)/P_T * V_gram
/// with M = integral of v^H e_rx and V_gram the filter Gram over the receive
/// aperture.
Eigen::MatrixXcd mse_matrix(const Eigen::MatrixXcd &w, const Eigen::MatrixXcd &v_samples,
                            const Eigen::MatrixXcd &h_cross, const ApertureGrid &tx_grid,
                            const ApertureGrid &rx_grid, const KernelApprox &approx,
                            double sigma_r2, double p_t);

/// WMMSE solve of the aperture-to-aperture rate maximization, reusing the
/// multi-user beamformer machinery with the receive-side field filter.
MimoResult solve_mimo(const MimoScene &scene, const SolveContext &tx_ctx,
                      const ApertureGrid &rx_grid, const SolverConfig &config);

/// Convenience overload building both grids (receive order = transmit order).
MimoResult solve_mimo(const MimoScene &scene, const Medium &medium, const SolverConfig &config,
                      int gl_order, int gl_order_rx = 0);

} // namespace capa

#endif
