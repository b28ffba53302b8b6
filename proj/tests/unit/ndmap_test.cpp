// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The crackmono Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "common.hpp"
#include "crackmono/errors.hpp"

using namespace testing;

namespace {

Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) a(i, j) = normal(gen);
    }
    return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

double dense_min_eig(const Eigen::MatrixXd& a) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff();
}

} // namespace

TEST_CASE("current basis is orthonormal and mean-free on gamma") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const CurrentBasis b = build_basis(m, 16);
    CHECK(b.size() == 16);
    CHECK(b.label == "loop-hats-16");
    CHECK((b.gram - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < b.size(); ++i) CHECK(std::abs(b.gamma.mean(b.current(i))) < 1e-14);
    CHECK_THROWS_AS(build_basis(m, 64), InputError);
    CHECK_THROWS_AS(build_basis(m, 0), InputError);
}

TEST_CASE("basis transfer to a refined gamma keeps the Gram matrix") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const CurrentBasis b = build_basis(m, 12);
    const CurrentBasis t = transfer_basis(b, gamma_trace(refine_uniform(m)));
    CHECK(t.gamma.size() == 2 * b.gamma.size());
    CHECK((t.gram - b.gram).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ND matrix is symmetric positive definite and ordered by monotonicity") {
    const auto e = small_square({{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}, CrackKind::insulating},
                                 {{Vec2(0.5, 0.125), Vec2(0.5, 0.375)}, CrackKind::conducting}});
    const Conductivity g = Conductivity::constant(e.mesh, 1.0);
    const CurrentBasis b = build_basis(e.mesh, 16);
    const NdMatrix n0 = nd_matrix(e.mesh, g, Configuration::none(), b);
    const NdMatrix ni = nd_matrix(e.mesh, g, Configuration::with_cracks(e.cracks.only(CrackKind::insulating)), b);
    const NdMatrix nc = nd_matrix(e.mesh, g, Configuration::with_cracks(e.cracks.only(CrackKind::conducting)), b);
    const NdMatrix nd = nd_matrix(e.mesh, g, Configuration::with_cracks(e.cracks), b);
    CHECK(n0.asymmetry < 1e-12);
    CHECK(nd.asymmetry < 1e-12);
    CHECK(dense_min_eig(n0.entries) > 0.0);
    CHECK(nd.summary.insulating == 1);
    CHECK(nd.summary.conducting == 1);
    for (const auto& [hi, lo] : {std::pair{&ni, &n0}, {&n0, &nc}, {&ni, &nd}, {&nd, &nc}}) {
        const Certificate c = compare(*hi, *lo);
        CHECK(c.passed);
        CHECK(c.min_eig == doctest::Approx(dense_min_eig(hi->entries - lo->entries)).epsilon(1e-6).scale(1e-12));
        CHECK_FALSE(compare(*lo, *hi).passed);
    }
}

TEST_CASE("ND matrix transforms covariantly under an orthogonal change of basis") {
    const auto e = small_square({{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}, CrackKind::insulating}});
    const Conductivity g = Conductivity::constant(e.mesh, 1.0);
    const CurrentBasis b = build_basis(e.mesh, 10);
    const Eigen::MatrixXd q = random_orthogonal(10, 9);
    CurrentBasis rotated = b;
    rotated.vectors = b.vectors * q;
    rotated.gram = q.transpose() * b.gram * q;
    const Configuration c = Configuration::with_cracks(e.cracks);
    const NdMatrix n = nd_matrix(e.mesh, g, c, b);
    const NdMatrix r = nd_matrix(e.mesh, g, c, rotated);
    CHECK((r.entries - q.transpose() * n.entries * q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nd_form matches the matrix quadratic form") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const Conductivity g = Conductivity::constant(m, 1.0);
    const CurrentBasis b = build_basis(m, 8);
    const auto dm = dofs(m, Configuration::none());
    ForwardSolver solver(m, g, dm);
    const NdMatrix n = nd_matrix(solver, b);
    Eigen::VectorXd c(8);
    c << 1, -2, 0.5, 0, 3, 1, -1, 0.25;
    CHECK(nd_form(solver, b.combine(c)) == doctest::Approx(c.dot(n.entries * c)).epsilon(1e-12));
}

TEST_CASE("psd test agrees with matrices of known spectrum") {
    const Eigen::MatrixXd q = random_orthogonal(7, 1);
    Eigen::VectorXd d(7);
    d << 3.0, 1.0, 0.5, 1e-3, 0.0, -1e-9, -2e-6;
    const Eigen::MatrixXd a = q * d.asDiagonal() * q.transpose();
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    const PsdResult r = psd_test(sym, 1e-8);
    CHECK(r.min_eig == doctest::Approx(-2e-6).epsilon(1e-6));
    CHECK_FALSE(r.passed);
    CHECK(psd_test(sym, 1e-5).passed);
    Eigen::MatrixXd skew = sym;
    skew(0, 1) += 1.0;
    CHECK_THROWS_AS(psd_test(skew, 0.0), InputError);
    CHECK_THROWS_AS(psd_test(sym, -1.0), InputError);
    CHECK(spectral_scale(sym) == doctest::Approx(3.0));
}

TEST_CASE("compare scales tau with the minuend") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3) * 5.0;
    const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(3, 3) * (5.0 + 4e-8);
    const Certificate c = compare(a, "a", b, "b", 1e-8);
    CHECK(c.tau == doctest::Approx(5e-8));
    CHECK(c.passed);
    CHECK_FALSE(compare(a, "a", b, "b", 1e-9).passed);
}

TEST_CASE("projection identities hold on a mixed configuration") {
    const auto e = small_square({{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}, CrackKind::insulating},
                                 {{Vec2(0.5, 0.125), Vec2(0.5, 0.375)}, CrackKind::conducting}});
    const Conductivity g = Conductivity::constant(e.mesh, 1.0);
    const CurrentBasis b = build_basis(e.mesh, 12);
    for (int f : {0, 5, 11}) {
        for (auto which : {ProjectionIdentity::insulating_part, ProjectionIdentity::conducting_part}) {
            const IdentityCheck c = projection_identity_check(e.mesh, g, e.cracks, b, f, which);
            CHECK(c.rhs >= 0.0);
            CHECK(c.relative_error < 1e-8);
        }
    }
    CHECK_THROWS_AS(projection_identity_check(e.mesh, g, e.cracks, b, 12, ProjectionIdentity::insulating_part),
                    InputError);
}
