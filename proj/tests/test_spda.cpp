// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "capa/errors.hpp"
#include "capa/spda.hpp"

using namespace capa;
using cd = std::complex<double>;

namespace {

Medium default_medium() { return medium_from_config(2.4e9, 5.8e7, 4.0e-7 * M_PI); }

UserScene two_user_scene(double noise) {
    UserScene scene;
    scene.positions = {Eigen::Vector3d(3.0, -3.0, 5.0), Eigen::Vector3d(-2.0, 1.0, 6.0)};
    scene.noise_powers = Eigen::VectorXd::Constant(2, noise);
    return scene;
}

double spda_em_power(const Eigen::MatrixXcd &w, const Eigen::MatrixXd &c) {
    return 0.5 * (w.adjoint() * c.cast<cd>() * w).trace().real();
}

} // namespace

TEST_CASE("spda_array lays out floor(L/s)^2 elements symmetric about the center") {
    const Aperture ap{0.5, 0.5, Eigen::Vector3d(1.0, -2.0, 0.5)};
    const double lambda = default_medium().lambda;
    const DiscreteArray array = spda_array(ap, lambda / 2.0);
    const int n_side = static_cast<int>(std::floor(0.5 / (lambda / 2.0)));
    REQUIRE(array.size() == n_side * n_side);
    CHECK(array.element_area == doctest::Approx(lambda * lambda / 4.0).epsilon(1e-14));
    // centroid of a symmetric layout is the aperture center
    const Eigen::Vector3d centroid = array.positions.rowwise().mean();
    CHECK((centroid - ap.center).norm() < 1e-12);
    // adjacent elements along y differ by exactly one spacing
    CHECK((array.positions.col(1) - array.positions.col(0)).norm() ==
          doctest::Approx(lambda / 2.0).epsilon(1e-14));
    // every element stays inside the aperture rectangle
    for (int i = 0; i < array.size(); ++i) {
        CHECK(std::abs(array.positions.col(i).x() - ap.center.x()) <= ap.lx / 2.0 + 1e-12);
        CHECK(std::abs(array.positions.col(i).y() - ap.center.y()) <= ap.ly / 2.0 + 1e-12);
    }
}

TEST_CASE("spda_array rejects degenerate spacings") {
    const Aperture ap{0.5, 0.5, Eigen::Vector3d::Zero()};
    CHECK_THROWS_AS(spda_array(ap, 0.0), InvalidParameterError);
    CHECK_THROWS_AS(spda_array(ap, -0.1), InvalidParameterError);
    CHECK_THROWS_AS(spda_array(ap, 0.6), InvalidParameterError);
}

TEST_CASE("spda_coupling_matrix samples the radiative kernel") {
    const Medium med = default_medium();
    const Aperture ap{0.25, 0.25, Eigen::Vector3d::Zero()};
    const DiscreteArray array = spda_array(ap, med.lambda / 2.0);
    const Eigen::MatrixXd c = spda_coupling_matrix(array, med);
    REQUIRE(c.rows() == array.size());
    CHECK((c - c.transpose()).norm() == 0.0);
    const double ae = array.element_area;
    const double diag = med.zs * ae + med.kappa0 * med.kappa0 * med.z0 / (6.0 * M_PI) * ae * ae;
    CHECK(c(0, 0) == doctest::Approx(diag).epsilon(1e-13));
    const Eigen::Vector3d d = array.positions.col(2) - array.positions.col(0);
    CHECK(c(0, 2) == doctest::Approx(c_rad_analytic(d, med) * ae * ae).epsilon(1e-13));
    // the sampled operator must stay positive definite for the cached LLT
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("the Woodbury beamformer update matches a direct dense solve") {
    // One hand-rolled iteration from the matched-filter start, with the
    // regularized system solved densely, must reproduce the solver's first
    // iterate (max_iters = 1 performs exactly one beamformer update).
    const Medium med = default_medium();
    const Aperture ap{0.25, 0.25, Eigen::Vector3d::Zero()};
    const DiscreteArray array = spda_array(ap, med.lambda / 2.0);
    const UserScene scene = two_user_scene(1e-4);
    const double p_t = 1.0;

    SolverConfig cfg;
    cfg.max_iters = 1;
    const SpdaResult res = spda_solve(array, scene, med, p_t, cfg);

    Eigen::MatrixXcd h(scene.num_users(), array.size());
    for (int k = 0; k < scene.num_users(); ++k)
        for (int n = 0; n < array.size(); ++n)
            h(k, n) = channel_response(med, scene.positions[k], array.positions.col(n)) *
                      array.element_area;
    const Eigen::MatrixXd c = spda_coupling_matrix(array, med);

    Eigen::MatrixXcd w = h.adjoint();
    w *= std::sqrt(p_t / spda_em_power(w, c));
    const Eigen::VectorXd noise_eq = scene.noise_powers * (spda_em_power(w, c) / p_t);
    auto [receivers, weights] = update_receivers(h * w, noise_eq);
    const double beta = compute_beta(receivers, weights, scene, p_t);
    const Eigen::MatrixXcd g_mat = h.adjoint() * receivers.asDiagonal();

    const Eigen::MatrixXcd a =
        c.cast<cd>() / beta + g_mat * weights.cast<cd>().asDiagonal() * g_mat.adjoint();
    Eigen::MatrixXcd w_direct = a.partialPivLu().solve(g_mat * weights.cast<cd>().asDiagonal());
    w_direct *= std::sqrt(p_t / spda_em_power(w_direct, c));

    CHECK((res.w - w_direct).norm() < 1e-10 * w_direct.norm());
}

TEST_CASE("spda_solve has a monotone surrogate and full output power") {
    const Medium med = default_medium();
    const Aperture ap{0.25, 0.25, Eigen::Vector3d::Zero()};
    const DiscreteArray array = spda_array(ap, med.lambda / 2.0);
    const UserScene scene = two_user_scene(1e-3);
    SolverConfig cfg;
    cfg.rel_tol = 1e-5;
    const SpdaResult res = spda_solve(array, scene, med, 1.0, cfg);
    REQUIRE(res.trace.size() >= 3);
    for (size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace[i].surrogate <= res.trace[i - 1].surrogate + 1e-9);
    const Eigen::MatrixXd c = spda_coupling_matrix(array, med);
    CHECK(spda_em_power(res.w, c) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.sum_rate_bps == res.trace.back().sum_rate_bps);
    CHECK(res.sum_rate_bps > 0.0);
}

TEST_CASE("the uncoupled variant uses a diagonal power model") {
    const Medium med = default_medium();
    const Aperture ap{0.25, 0.25, Eigen::Vector3d::Zero()};
    const DiscreteArray array = spda_array(ap, med.lambda / 2.0, SpdaCoupling::none);
    const UserScene scene = two_user_scene(1e-3);
    SolverConfig cfg;
    const SpdaResult res = spda_solve(array, scene, med, 1.0, cfg);
    const double ae = array.element_area;
    const double self_power = med.zs * ae + c_rad_analytic(Eigen::Vector3d::Zero(), med) * ae * ae;
    CHECK(0.5 * self_power * res.w.squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.sum_rate_bps > 0.0);
}

TEST_CASE("spda_solve validates the power budget") {
    const Medium med = default_medium();
    const DiscreteArray array = spda_array(Aperture{0.25, 0.25, Eigen::Vector3d::Zero()},
                                           med.lambda / 2.0);
    const UserScene scene = two_user_scene(1e-3);
    SolverConfig cfg;
    CHECK_THROWS_AS(spda_solve(array, scene, med, 0.0, cfg), InvalidParameterError);
}
