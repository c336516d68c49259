// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_COUPLING_HPP
#define CAPA_COUPLING_HPP

#include <complex>

#include <Eigen/Core>

#include "capa/em.hpp"
#include "capa/quadrature.hpp"

namespace capa {

/// Plane-wave expansion of the radiated coupling kernel over the transmit
/// aperture, plus the matrices realizing the inverse kernel.
///
/// The radiated kernel is approximated as sum_i rho_i * exp(j*kappa_i^T s),
/// with weights and wavenumbers generated from a tensor Gauss-Legendre rule
/// over the propagating disc. The inverse-kernel matrices are
///   Lambda = diag(rho_i / Zs),
///   Q[i,i'] = closed-form aperture integral of the plane-wave product,
///   D = (I + Lambda*Q)^{-1},
///   X[i,j]  = exp(-j*kappa_i^T s_j) at the aperture grid points.
///
/// An "uncoupled" instance (empty expansion, zs == 1) degrades every operator
/// to the identity pathway, realizing the no-coupling power model.
struct KernelApprox {
    int order = 0;        // M of the generating rule (0 for uncoupled)
    int count = 0;        // I = M^2 plane waves
    double zs = 1.0;      // effective surface resistance in all formulas
    Eigen::VectorXd rho;               // I
    Eigen::Matrix3Xd kappas;           // 3 x I, z-component zero
    Eigen::VectorXd lambda_diag;       // rho / zs
    Eigen::MatrixXcd q;                // I x I plane-wave Gram (closed form)
    Eigen::MatrixXcd d;                // (I + Lambda*Q)^{-1}
    Eigen::MatrixXcd x;                // I x I_grid plane-wave samples

    bool coupled() const { return count > 0; }
};

/// Whether to also assemble Q, D, X (needed by the operators below). Kernel
/// evaluation alone only needs the expansion itself.
enum class KernelMatrices { full, expansion_only };

/// Builds the plane-wave expansion and inverse-kernel matrices for the grid's
/// aperture. Requires rule order >= 2.
KernelApprox build_kernel_approx(const Medium &medium, const ApertureGrid &grid,
                                 KernelMatrices matrices = KernelMatrices::full);

/// Coupling-free variant: identity power pathway, unit effective Zs.
KernelApprox uncoupled_kernel(const ApertureGrid &grid);

/// sum_i rho_i * exp(j*kappa_i^T s). The exact kernel is real; the imaginary
/// residue of the sum is a measured approximation artifact.
std::complex<double> kernel_approx_eval(const KernelApprox &approx, const Eigen::Vector3d &s);

/// Total EM power of beamformer samples W (I_grid x K):
/// 0.5 * [zs*tr(W^H Phi W) + tr(W^H Phi X^H diag(rho) X Phi W)].
double em_power(const Eigen::MatrixXcd &w, const ApertureGrid &grid, const KernelApprox &approx);

/// Applies the inverse coupling kernel to per-point function samples:
/// (1/zs) * (F - X^H D Lambda X Phi F).
Eigen::MatrixXcd apply_inverse_kernel(const KernelApprox &approx, const ApertureGrid &grid,
                                      const Eigen::MatrixXcd &samples);

/// Applies the forward coupling operator f -> zs*f + X^H diag(rho) X Phi f
/// (the quadratured integral of the approximated kernel against f).
Eigen::MatrixXcd apply_forward_kernel(const KernelApprox &approx, const ApertureGrid &grid,
                                      const Eigen::MatrixXcd &samples);

/// ||D(I + Lambda*Q) - I||_F / sqrt(I); should be at rounding level.
double inverse_residual(const KernelApprox &approx);

} // namespace capa

#endif
