// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_QUADRATURE_HPP
#define CAPA_QUADRATURE_HPP

#include <complex>

#include <Eigen/Core>

namespace capa {

/// Gauss-Legendre rule on (-1, 1). Nodes are strictly increasing and exactly
/// symmetric about zero; weights sum to 2.
struct QuadratureRule {
    int order = 0;
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Computes the order-M Gauss-Legendre rule by Newton iteration on the
/// Legendre polynomial, with symmetric mirroring of the node set.
/// Throws InvalidParameterError unless 1 <= M <= 200.
QuadratureRule gauss_legendre(int order);

/// Planar rectangular aperture on a z = const plane, polarized along y.
struct Aperture {
    double lx = 0.0; // m
    double ly = 0.0; // m
    Eigen::Vector3d center = Eigen::Vector3d::Zero();

    double area() const { return lx * ly; }
};

/// Tensor-product sample grid over an aperture. Point i = m*M + m' sits at
/// center + (theta_m*Lx/2, theta_m'*Ly/2, 0); phi_weights holds the diagonal
/// of the surface quadrature matrix (sums to the aperture area).
struct ApertureGrid {
    Aperture aperture;
    QuadratureRule rule;
    Eigen::Matrix3Xd points;      // 3 x I
    Eigen::VectorXd phi_weights;  // I

    int size() const { return static_cast<int>(phi_weights.size()); }
};

ApertureGrid build_aperture_grid(const Aperture &aperture, const QuadratureRule &rule);

/// Weighted sum of per-point samples: sum_i phi_weights[i] * samples[i].
std::complex<double> surface_integral(const Eigen::VectorXcd &samples, const ApertureGrid &grid);

} // namespace capa

#endif
