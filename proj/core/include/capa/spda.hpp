// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_SPDA_HPP
#define CAPA_SPDA_HPP

#include <vector>

#include <Eigen/Core>

#include "capa/em.hpp"
#include "capa/quadrature.hpp"
#include "capa/wmmse.hpp"

namespace capa {

enum class SpdaCoupling { none, sampled_kernel };

/// Spatially discrete array baseline: a uniform grid of element centers
/// inside the aperture rectangle. Element coefficients carry current-density
/// units; channels and power are scaled by the element area accordingly.
struct DiscreteArray {
    double spacing = 0.0;      // m
    double element_area = 0.0; // m^2, = spacing^2
    Eigen::Matrix3Xd positions;
    SpdaCoupling coupling = SpdaCoupling::sampled_kernel;

    int size() const { return static_cast<int>(positions.cols()); }
};

/// Uniform element placement symmetric about the aperture center. Throws an
/// empty-array error when the spacing exceeds the aperture.
DiscreteArray spda_array(const Aperture &aperture, double spacing,
                         SpdaCoupling coupling = SpdaCoupling::sampled_kernel);

/// Discrete coupling matrix from kernel sampling with piecewise-constant
/// currents: off-diagonal c_rad(p_n - p_m)*A_e^2, diagonal Zs*A_e +
/// c_rad(0)*A_e^2. The Riemann-sum limit of the continuous EM power.
Eigen::MatrixXd spda_coupling_matrix(const DiscreteArray &array, const Medium &medium);

struct SpdaResult {
    Eigen::MatrixXcd w; // N_a x K element coefficients, scaled to full power
    double sum_rate_bps = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<IterationRecord> trace;
};

/// Classical matrix WMMSE over the discrete array, with EM power
/// 0.5 * tr(W^H C W) (coupled) or 0.5 * diag(C)[0] * ||W||_F^2 (uncoupled:
/// mutual coupling ignored, self-impedance kept).
SpdaResult spda_solve(const DiscreteArray &array, const UserScene &scene, const Medium &medium,
                      double p_t, const SolverConfig &config);

} // namespace capa

#endif
