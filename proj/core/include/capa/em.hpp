// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_EM_HPP
#define CAPA_EM_HPP

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace capa {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact

/// Carrier-derived physical constants of the propagation medium and the
/// conducting surface.
struct Medium {
    double fc = 0.0;      // Hz
    double lambda = 0.0;  // m
    double kappa0 = 0.0;  // rad/m, 2*pi/lambda
    double z0 = 0.0;      // ohm, free-space impedance (120*pi by default)
    double sigma_s = 0.0; // S/m, surface conductivity
    double mu_s = 0.0;    // H/m, surface permeability
    double zs = 0.0;      // ohm, surface resistance sqrt(pi*fc*mu_s/sigma_s)
};

/// Derives wavelength, wavenumber, and surface resistance from the carrier
/// frequency and conductor properties. All inputs must be positive.
Medium medium_from_config(double fc, double sigma_s, double mu_s);

/// Single-antenna receivers served by the transmit aperture. Positions are
/// absolute coordinates; every user is polarized along the y-axis.
struct UserScene {
    std::vector<Eigen::Vector3d> positions;
    Eigen::VectorXd noise_powers; // W, one entry per user

    int num_users() const { return static_cast<int>(positions.size()); }
};

/// e^{j*kappa0*|d|} / (4*pi*|d|). Throws SingularityError at d = 0.
std::complex<double> scalar_green(const Eigen::Vector3d &d, const Medium &medium);

/// Analytic second partial derivative of scalar_green with respect to the
/// y-component of d. Throws SingularityError at d = 0.
std::complex<double> d2y_scalar_green(const Eigen::Vector3d &d, const Medium &medium);

/// y-polarized channel response between aperture point s and field point r:
/// -j*kappa0*Z0 * (g(r-s) + d_y^2 g(r-s) / kappa0^2).
std::complex<double> channel_response(const Medium &medium, const Eigen::Vector3d &r,
                                      const Eigen::Vector3d &s);

/// sin(kappa0*|d|) / (4*pi*|d|), continued to kappa0/(4*pi) at d = 0.
double phi_kernel(const Eigen::Vector3d &d, const Medium &medium);

/// Analytic d_y^2 of phi_kernel; smooth everywhere, series-evaluated near 0.
double d2y_phi_kernel(const Eigen::Vector3d &d, const Medium &medium);

/// Radiated coupling kernel kappa0*Z0*(phi + d_y^2 phi / kappa0^2); total at
/// d = 0 with value kappa0^2*Z0/(6*pi).
double c_rad_analytic(const Eigen::Vector3d &d, const Medium &medium);

/// 2-D Fourier transform of phi: 1/(2*sqrt(kappa0^2 - |kappa|^2)) inside the
/// propagating disc, zero outside. Throws SingularityError on the branch
/// circle (within 1e-9*kappa0).
double ft_phi(const Eigen::Vector2d &kappa, const Medium &medium);

/// Wavenumber-domain radiated kernel Z0*(1 - kappa_y^2/kappa0^2) /
/// (2*sqrt(1 - |kappa|^2/kappa0^2)) inside the disc, zero outside.
double c_rad_wavenumber(const Eigen::Vector2d &kappa, const Medium &medium);

} // namespace capa

#endif
