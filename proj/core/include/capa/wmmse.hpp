// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_WMMSE_HPP
#define CAPA_WMMSE_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "capa/coupling.hpp"
#include "capa/em.hpp"
#include "capa/quadrature.hpp"

namespace capa {

/// Reusable per-(aperture, frequency, order) solve context: the sample grid
/// and the kernel expansion. Scene-independent, safe to share across trials.
struct SolveContext {
    Medium medium;
    ApertureGrid grid;
    KernelApprox approx;
};

SolveContext make_solve_context(const Medium &medium, const Aperture &aperture, int gl_order,
                                bool coupled = true);

struct SolverConfig {
    int max_iters = 200;
    double rel_tol = 1e-4; // relative sum-rate change
    enum class Init { matched_filter, random_seeded };
    Init init = Init::matched_filter;
    std::uint64_t seed = 0; // used by random_seeded init only
};

struct IterationRecord {
    double sum_rate_bps;  // log2 rates
    double surrogate;     // sum_k (mu_k eps_k - ln mu_k) at the MMSE point
};

struct WmmseResult {
    Eigen::MatrixXcd w;          // I x K, scaled to full power
    Eigen::VectorXcd receivers;  // v_k at the last iteration
    Eigen::VectorXd mse_weights; // mu_k at the last iteration
    double beta = 0.0;
    double sum_rate_bps = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<IterationRecord> trace;
};

/// K x I channel matrix H[k, i] = channel_response(medium, r_k, s_i).
Eigen::MatrixXcd channel_matrix(const UserScene &scene, const ApertureGrid &grid,
                                const Medium &medium);

/// K x K effective gains E = H * Phi_T * W; entry (k, i) approximates the
/// aperture integral of h_k against beam pattern i.
Eigen::MatrixXcd effective_gains(const Eigen::MatrixXcd &h, const ApertureGrid &grid,
                                 const Eigen::MatrixXcd &w);

/// Equivalent noise powers sigma_k^2 * em_power(W) / P_T. W must be nonzero.
Eigen::VectorXd equivalent_noise(const Eigen::MatrixXcd &w, const ApertureGrid &grid,
                                 const KernelApprox &approx, const UserScene &scene, double p_t);

/// MMSE receivers v_k and MSE weights mu_k = 1/eps_k^MMSE from the effective
/// gains and equivalent noise.
std::pair<Eigen::VectorXcd, Eigen::VectorXd> update_receivers(const Eigen::MatrixXcd &gains,
                                                              const Eigen::VectorXd &noise_eq);

/// beta with 1/beta = sum_k mu_k sigma_k^2 |v_k|^2 / (2 P_T).
double compute_beta(const Eigen::VectorXcd &receivers, const Eigen::VectorXd &mse_weights,
                    const UserScene &scene, double p_t);

/// Inverse-kernel images of the weighted conjugate channels. g_samples is the
/// I x K matrix of g(s) = v_k h_k^*(s) rows stacked over grid points; returns
/// Gamma = c_T^{-1} g and Gtilde = integral of g^H against Gamma.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> gtilde_from_samples(const Eigen::MatrixXcd &g_samples,
                                                                  const KernelApprox &approx,
                                                                  const ApertureGrid &grid);

/// Convenience wrapper building g_samples = H^H diag(v).
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> build_gtilde(const Eigen::MatrixXcd &h,
                                                           const Eigen::VectorXcd &receivers,
                                                           const KernelApprox &approx,
                                                           const ApertureGrid &grid);

/// W = Gamma * U * ((1/beta) I + Gtilde U)^{-1}. Throws IllConditionedError if
/// the system's condition estimate exceeds 1e12.
Eigen::MatrixXcd beamformer_update(const Eigen::MatrixXcd &gamma,
                                   const Eigen::VectorXd &mse_weights,
                                   const Eigen::MatrixXcd &gtilde, double beta);

/// sum_k log2(1 + |e_kk|^2 / (sum_{i != k} |e_ki|^2 + noise_eq_k)).
double sum_rate(const Eigen::MatrixXcd &gains, const Eigen::VectorXd &noise_eq);

/// WMMSE surrogate sum_k (mu_k eps_k - ln mu_k) for arbitrary (W-derived
/// gains, noise, receivers, weights).
double surrogate_objective(const Eigen::MatrixXcd &gains, const Eigen::VectorXd &noise_eq,
                           const Eigen::VectorXcd &receivers, const Eigen::VectorXd &mse_weights);

/// Rescales W so that em_power(W) == P_T.
Eigen::MatrixXcd scale_full_power(const Eigen::MatrixXcd &w, const ApertureGrid &grid,
                                  const KernelApprox &approx, double p_t);

/// Normalized quadratured L2 norm of the stationarity defect p(s) of the
/// beamforming optimality condition, at the given iterate.
double stationarity_residual(const Eigen::MatrixXcd &w, const Eigen::MatrixXcd &g_samples,
                             const Eigen::VectorXd &mse_weights, double beta,
                             const KernelApprox &approx, const ApertureGrid &grid);

/// Full KA-based WMMSE solve against a prebuilt channel matrix.
WmmseResult solve_multiuser_with_channel(const Eigen::MatrixXcd &h, const Eigen::VectorXd &noise_powers,
                                         const SolveContext &ctx, const SolverConfig &config,
                                         double p_t);

WmmseResult solve_multiuser(const UserScene &scene, const SolveContext &ctx,
                            const SolverConfig &config, double p_t);

WmmseResult solve_multiuser(const UserScene &scene, const Aperture &aperture, const Medium &medium,
                            const SolverConfig &config, double p_t, int gl_order,
                            bool coupled = true);

} // namespace capa

#endif
