// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/em.hpp"

#include <cmath>

#include "capa/errors.hpp"

namespace capa {

using cd = std::complex<double>;

namespace {

constexpr cd kJ{0.0, 1.0};
// Below this value of kappa0*r the sinc-family derivatives are evaluated by
// series to avoid cancellation near the removable singularity.
constexpr double kSeriesThreshold = 1e-3;

// s(u) = sin(u)/u and relatives, shared by the phi derivatives.
double sinc_u(double u) { return (u == 0.0) ? 1.0 : std::sin(u) / u; }

// s'(u)/u = (u*cos(u) - sin(u))/u^3, series -1/3 + u^2/30 - u^4/840.
double dsinc_over_u(double u) {
    if (u < kSeriesThreshold) {
        const double u2 = u * u;
        return -1.0 / 3.0 + u2 / 30.0 - u2 * u2 / 840.0;
    }
    return (u * std::cos(u) - std::sin(u)) / (u * u * u);
}

// s''(u) = ((2 - u^2)*sin(u) - 2u*cos(u))/u^3, series -1/3 + u^2/10 - u^4/168.
double d2sinc(double u) {
    if (u < kSeriesThreshold) {
        const double u2 = u * u;
        return -1.0 / 3.0 + u2 / 10.0 - u2 * u2 / 168.0;
    }
    return ((2.0 - u * u) * std::sin(u) - 2.0 * u * std::cos(u)) / (u * u * u);
}

} // namespace

Medium medium_from_config(double fc, double sigma_s, double mu_s) {
    if (fc <= 0.0 || sigma_s <= 0.0 || mu_s <= 0.0)
        throw InvalidParameterError("medium_from_config: fc, sigma_s, mu_s must be positive");
    Medium m;
    m.fc = fc;
    m.lambda = kSpeedOfLight / fc;
    m.kappa0 = 2.0 * M_PI / m.lambda;
    m.z0 = 120.0 * M_PI;
    m.sigma_s = sigma_s;
    m.mu_s = mu_s;
    m.zs = std::sqrt(M_PI * fc * mu_s / sigma_s);
    return m;
}

cd scalar_green(const Eigen::Vector3d &d, const Medium &medium) {
    const double r = d.norm();
    if (r == 0.0)
        throw SingularityError("scalar_green: evaluation at coincident points");
    return std::exp(kJ * (medium.kappa0 * r)) / (4.0 * M_PI * r);
}

cd d2y_scalar_green(const Eigen::Vector3d &d, const Medium &medium) {
    const double r = d.norm();
    if (r == 0.0)
        throw SingularityError("d2y_scalar_green: evaluation at coincident points");
    const double k = medium.kappa0;
    const cd g = std::exp(kJ * (k * r)) / (4.0 * M_PI * r);
    const cd gp = g * (kJ * k - 1.0 / r);                              // g'(r)
    const cd gpp = g * (-k * k - 2.0 * kJ * k / r + 2.0 / (r * r));    // g''(r)
    const double t2 = (d.y() / r) * (d.y() / r);
    return gpp * t2 + gp / r * (1.0 - t2);
}

cd channel_response(const Medium &medium, const Eigen::Vector3d &r, const Eigen::Vector3d &s) {
    const Eigen::Vector3d d = r - s;
    if (d.norm() == 0.0)
        throw SingularityError("channel_response: coincident field and source points");
    const double k = medium.kappa0;
    return -kJ * (k * medium.z0) * (scalar_green(d, medium) + d2y_scalar_green(d, medium) / (k * k));
}

double phi_kernel(const Eigen::Vector3d &d, const Medium &medium) {
    const double u = medium.kappa0 * d.norm();
    return medium.kappa0 / (4.0 * M_PI) * sinc_u(u);
}

double d2y_phi_kernel(const Eigen::Vector3d &d, const Medium &medium) {
    const double k = medium.kappa0;
    const double r = d.norm();
    const double scale = k * k * k / (4.0 * M_PI);
    if (r == 0.0)
        return scale * (-1.0 / 3.0);
    const double u = k * r;
    const double t2 = (d.y() / r) * (d.y() / r);
    return scale * (d2sinc(u) * t2 + dsinc_over_u(u) * (1.0 - t2));
}

double c_rad_analytic(const Eigen::Vector3d &d, const Medium &medium) {
    const double k = medium.kappa0;
    return k * medium.z0 * (phi_kernel(d, medium) + d2y_phi_kernel(d, medium) / (k * k));
}

double ft_phi(const Eigen::Vector2d &kappa, const Medium &medium) {
    const double k0 = medium.kappa0;
    const double n = kappa.norm();
    if (std::abs(n - k0) < 1e-9 * k0)
        throw SingularityError("ft_phi: wavenumber on the branch circle");
    if (n > k0)
        return 0.0;
    return 1.0 / (2.0 * std::sqrt(k0 * k0 - n * n));
}

double c_rad_wavenumber(const Eigen::Vector2d &kappa, const Medium &medium) {
    const double k0 = medium.kappa0;
    const double n = kappa.norm();
    if (std::abs(n - k0) < 1e-9 * k0)
        throw SingularityError("c_rad_wavenumber: wavenumber on the branch circle");
    if (n > k0)
        return 0.0;
    const double ky_ratio2 = (kappa.y() / k0) * (kappa.y() / k0);
    return medium.z0 * (1.0 - ky_ratio2) / (2.0 * std::sqrt(1.0 - (n / k0) * (n / k0)));
}

} // namespace capa
