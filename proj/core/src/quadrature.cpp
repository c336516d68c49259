// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/quadrature.hpp"

#include <cmath>
#include <string>

#include "capa/errors.hpp"

namespace capa {

namespace {

// Legendre P_n(x) and its derivative via the three-term recurrence.
void legendre(int n, double x, double &p, double &dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p = (n == 0) ? 1.0 : p1;
    dp = (n == 0) ? 0.0 : n * (x * p1 - p0) / (x * x - 1.0);
}

} // namespace

QuadratureRule gauss_legendre(int order) {
    if (order < 1 || order > 200)
        throw InvalidParameterError("gauss_legendre: order must be in [1, 200], got " +
                                    std::to_string(order));

    QuadratureRule rule;
    rule.order = order;
    rule.nodes.resize(order);
    rule.weights.resize(order);

    const int half = order / 2;
    for (int k = 0; k < half; ++k) {
        // Tricomi-style initial guess for the k-th root from the upper end.
        double x = std::cos(M_PI * (k + 0.75) / (order + 0.5));
        double p = 0.0, dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            legendre(order, x, p, dp);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-14)
                break;
        }
        legendre(order, x, p, dp);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[order - 1 - k] = x;
        rule.nodes[k] = -x; // exact mirror
        rule.weights[order - 1 - k] = w;
        rule.weights[k] = w;
    }
    if (order % 2 == 1) {
        double p = 0.0, dp = 1.0;
        legendre(order, 0.0, p, dp);
        rule.nodes[half] = 0.0;
        rule.weights[half] = 2.0 / (dp * dp);
    }
    return rule;
}

ApertureGrid build_aperture_grid(const Aperture &aperture, const QuadratureRule &rule) {
    if (aperture.lx <= 0.0 || aperture.ly <= 0.0)
        throw InvalidParameterError("build_aperture_grid: aperture dimensions must be positive");

    const int m_order = rule.order;
    const int count = m_order * m_order;

    ApertureGrid grid;
    grid.aperture = aperture;
    grid.rule = rule;
    grid.points.resize(3, count);
    grid.phi_weights.resize(count);

    const double quarter_area = aperture.area() / 4.0;
    for (int m = 0; m < m_order; ++m) {
        for (int mp = 0; mp < m_order; ++mp) {
            const int i = m * m_order + mp;
            grid.points.col(i) = aperture.center + Eigen::Vector3d(rule.nodes[m] * aperture.lx / 2.0,
                                                                   rule.nodes[mp] * aperture.ly / 2.0,
                                                                   0.0);
            grid.phi_weights[i] = quarter_area * rule.weights[m] * rule.weights[mp];
        }
    }
    return grid;
}

std::complex<double> surface_integral(const Eigen::VectorXcd &samples, const ApertureGrid &grid) {
    if (samples.size() != grid.phi_weights.size())
        throw DimensionError("surface_integral: sample count does not match grid size");
    return (samples.array() * grid.phi_weights.array().cast<std::complex<double>>()).sum();
}

} // namespace capa
