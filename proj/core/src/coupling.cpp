// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/coupling.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "capa/errors.hpp"

namespace capa {

using cd = std::complex<double>;

namespace {

constexpr cd kJ{0.0, 1.0};

double sinc(double x) { return (x == 0.0) ? 1.0 : std::sin(x) / x; }

// Closed-form aperture integral of exp(j*(kappa_i' - kappa_i)^T s). The sinc
// product is the centered-rectangle result; the phase factor accounts for an
// aperture center away from the origin.
cd gram_entry(const Eigen::Vector3d &ki, const Eigen::Vector3d &kip, const Aperture &aperture) {
    const Eigen::Vector3d dk = ki - kip;
    const double mag = aperture.area() * sinc(aperture.lx * dk.x() / 2.0) *
                       sinc(aperture.ly * dk.y() / 2.0);
    return mag * std::exp(-kJ * dk.dot(aperture.center));
}

// Splits m = hi + lo with hi holding the top ~21 mantissa bits of each entry,
// grid-aligned per row (or per column), so that products of two hi parts
// accumulate exactly in a double GEMM of this size (Ozaki splitting).
void split_matrix(const Eigen::MatrixXd &m, bool by_rows, Eigen::MatrixXd &hi,
                  Eigen::MatrixXd &lo) {
    constexpr int kShift = 32; // keeps 53 - 32 = 21 bits in the hi part
    hi.resize(m.rows(), m.cols());
    const int count = static_cast<int>(by_rows ? m.rows() : m.cols());
    for (int i = 0; i < count; ++i) {
        const double peak =
            by_rows ? m.row(i).cwiseAbs().maxCoeff() : m.col(i).cwiseAbs().maxCoeff();
        if (peak == 0.0) {
            if (by_rows)
                hi.row(i).setZero();
            else
                hi.col(i).setZero();
            continue;
        }
        const double sigma = std::ldexp(1.0, std::ilogb(peak) + 1 + kShift);
        if (by_rows)
            hi.row(i) = (m.row(i).array() + sigma) - sigma;
        else
            hi.col(i) = (m.col(i).array() + sigma) - sigma;
    }
    lo = m - hi;
}

// R = D*A - I evaluated accurately. A plain double product rounds at the
// level of the residual itself, so the leading partial products are made
// exact via Ozaki splitting; the correction terms are ~2^-21 of scale and
// ordinary GEMMs suffice for them.
Eigen::MatrixXcd residual_product(const Eigen::MatrixXcd &d, const Eigen::MatrixXcd &a) {
    const Eigen::MatrixXd dr = d.real(), di = d.imag(), ar = a.real(), ai = a.imag();
    Eigen::MatrixXd dr1, dr2, di1, di2, ar1, ar2, ai1, ai2;
    split_matrix(dr, true, dr1, dr2);
    split_matrix(di, true, di1, di2);
    split_matrix(ar, false, ar1, ar2);
    split_matrix(ai, false, ai1, ai2);

    Eigen::MatrixXd re = dr1 * ar1 - di1 * ai1;
    re.diagonal().array() -= 1.0;
    re += dr1 * ar2 + dr2 * ar - di1 * ai2 - di2 * ai;
    Eigen::MatrixXd im = dr1 * ai1 + di1 * ar1;
    im += dr1 * ai2 + dr2 * ai + di1 * ar2 + di2 * ar;

    Eigen::MatrixXcd r(d.rows(), a.cols());
    r.real() = re;
    r.imag() = im;
    return r;
}

} // namespace

KernelApprox build_kernel_approx(const Medium &medium, const ApertureGrid &grid,
                                 KernelMatrices matrices) {
    const int m_order = grid.rule.order;
    if (m_order < 2)
        throw InvalidParameterError("build_kernel_approx: rule order must be >= 2");

    const double k0 = medium.kappa0;
    const int count = m_order * m_order;

    KernelApprox approx;
    approx.order = m_order;
    approx.count = count;
    approx.zs = medium.zs;
    approx.rho.resize(count);
    approx.kappas.resize(3, count);

    // The integrand carries an inverse-square-root singularity at the disc
    // boundary, so plain Gauss-Legendre in (kx, ky) converges only
    // algebraically. The sine substitution kx = kappa0*sin(psi) (and likewise
    // in ky against the chord) makes the weighted integrand analytic; the
    // cosine Jacobian cancels the singular factor exactly and the rule
    // converges geometrically in M.
    const Eigen::VectorXd &theta = grid.rule.nodes;
    const Eigen::VectorXd &omega = grid.rule.weights;
    const double half_pi = M_PI / 2.0;
    for (int m = 0; m < m_order; ++m) {
        const double psi_x = half_pi * theta[m];
        const double kx = k0 * std::sin(psi_x);
        const double half_chord = k0 * std::cos(psi_x);
        // cos(psi_x) of the Jacobian already divided out against the
        // singular factor below.
        const double wx = k0 * half_pi * omega[m];
        for (int mp = 0; mp < m_order; ++mp) {
            const int i = m * m_order + mp;
            const double psi_y = half_pi * theta[mp];
            const double ky = half_chord * std::sin(psi_y);
            const double wy = half_chord * half_pi * omega[mp];
            // C_rad(kappa) with sqrt(1 - |kappa|^2/kappa0^2) replaced by its
            // exact value cos(psi_x)*cos(psi_y) under the substitution; the
            // cosines cancel against the Jacobian, leaving a smooth factor.
            const double c_rad_desingularized =
                medium.z0 * (1.0 - (ky * ky) / (k0 * k0)) / 2.0;
            approx.rho[i] = wx * wy * c_rad_desingularized / (4.0 * M_PI * M_PI);
            approx.kappas.col(i) = Eigen::Vector3d(kx, ky, 0.0);
        }
    }
    approx.lambda_diag = approx.rho / approx.zs;

    if (matrices == KernelMatrices::expansion_only)
        return approx;

    approx.q.resize(count, count);
    for (int i = 0; i < count; ++i)
        for (int ip = 0; ip < count; ++ip)
            approx.q(i, ip) = gram_entry(approx.kappas.col(i), approx.kappas.col(ip), grid.aperture);

    const int grid_size = grid.size();
    approx.x.resize(count, grid_size);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < grid_size; ++j)
            approx.x(i, j) = std::exp(-kJ * approx.kappas.col(i).dot(grid.points.col(j)));

    // D = (I + Lambda*Q)^{-1}. The system's conditioning puts a plain double
    // inverse residual near 1e-9, so the LU seed is Newton-refined with the
    // residual evaluated accurately: D <- D - D*(D*A - I).
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(count, count);
    a += approx.lambda_diag.asDiagonal() * approx.q;
    approx.d = a.partialPivLu().inverse();
    for (int it = 0; it < 2; ++it) {
        const Eigen::MatrixXcd r = residual_product(approx.d, a);
        if (r.norm() / std::sqrt(static_cast<double>(count)) < 1e-12)
            break;
        approx.d -= r * approx.d;
    }
    return approx;
}

KernelApprox uncoupled_kernel(const ApertureGrid &grid) {
    KernelApprox approx;
    approx.order = 0;
    approx.count = 0;
    approx.zs = 1.0;
    approx.x.resize(0, grid.size());
    return approx;
}

cd kernel_approx_eval(const KernelApprox &approx, const Eigen::Vector3d &s) {
    cd sum = 0.0;
    for (int i = 0; i < approx.count; ++i)
        sum += approx.rho[i] * std::exp(kJ * approx.kappas.col(i).dot(s));
    return sum;
}

double em_power(const Eigen::MatrixXcd &w, const ApertureGrid &grid, const KernelApprox &approx) {
    if (w.rows() != grid.size())
        throw DimensionError("em_power: beamformer row count does not match grid size");
    const Eigen::MatrixXcd phi_w = grid.phi_weights.asDiagonal() * w;
    double power = approx.zs * (w.conjugate().cwiseProduct(phi_w)).sum().real();
    if (approx.coupled()) {
        const Eigen::MatrixXcd y = approx.x * phi_w; // I x K plane-wave projections
        power += (approx.rho.asDiagonal() * y).cwiseProduct(y.conjugate()).sum().real();
    }
    return 0.5 * power;
}

Eigen::MatrixXcd apply_inverse_kernel(const KernelApprox &approx, const ApertureGrid &grid,
                                      const Eigen::MatrixXcd &samples) {
    if (samples.rows() != grid.size())
        throw DimensionError("apply_inverse_kernel: sample row count does not match grid size");
    if (!approx.coupled())
        return samples / approx.zs;
    const Eigen::MatrixXcd proj = approx.x * (grid.phi_weights.asDiagonal() * samples);
    return (samples - approx.x.adjoint() * (approx.d * (approx.lambda_diag.asDiagonal() * proj))) /
           approx.zs;
}

Eigen::MatrixXcd apply_forward_kernel(const KernelApprox &approx, const ApertureGrid &grid,
                                      const Eigen::MatrixXcd &samples) {
    if (samples.rows() != grid.size())
        throw DimensionError("apply_forward_kernel: sample row count does not match grid size");
    Eigen::MatrixXcd out = approx.zs * samples;
    if (approx.coupled()) {
        const Eigen::MatrixXcd proj = approx.x * (grid.phi_weights.asDiagonal() * samples);
        out += approx.x.adjoint() * (approx.rho.asDiagonal() * proj);
    }
    return out;
}

double inverse_residual(const KernelApprox &approx) {
    if (!approx.coupled())
        return 0.0;
    // The accurate product keeps the measurement itself from flooring above
    // the actual residual of D.
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(approx.count, approx.count);
    a += approx.lambda_diag.asDiagonal() * approx.q;
    return residual_product(approx.d, a).norm() / std::sqrt(static_cast<double>(approx.count));
}

} // namespace capa
