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

#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

#include "common.hpp"
#include "crackmono/errors.hpp"

using namespace testing;

namespace {

double total_area(const Mesh& m) {
    double a = 0.0;
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) a += m.signed_area(t);
    return a;
}

// Union-find oracle for admissibility: members are interior pixels, no two
// members touch only at a corner, and every non-member reaches the outside.
bool admissible_oracle(const PixelSet& s) {
    const auto& g = *s.grid;
    auto in = [&](int i, int j) { return i >= 0 && j >= 0 && i < g.nx && j < g.ny && s.contains(g.index(i, j)); };
    for (int p = 0; p < g.size(); ++p) {
        if (s.contains(p) && !g.interior[p]) return false;
    }
    for (int j = -1; j < g.ny; ++j) {
        for (int i = -1; i < g.nx; ++i) {
            if (in(i, j) && in(i + 1, j + 1) && !in(i + 1, j) && !in(i, j + 1)) return false;
            if (in(i + 1, j) && in(i, j + 1) && !in(i, j) && !in(i + 1, j + 1)) return false;
            if (!in(i, j) && !in(i + 1, j + 1) && in(i + 1, j) && in(i, j + 1)) return false;
            if (!in(i + 1, j) && !in(i, j + 1) && in(i, j) && in(i + 1, j + 1)) return false;
        }
    }
    const int outside = g.size();
    std::vector<int> parent(g.size() + 1);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (in(i, j)) continue;
            const int p = g.index(i, j);
            if (i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1) unite(p, outside);
            if (i + 1 < g.nx && !in(i + 1, j)) unite(p, g.index(i + 1, j));
            if (j + 1 < g.ny && !in(i, j + 1)) unite(p, g.index(i, j + 1));
        }
    }
    for (int p = 0; p < g.size(); ++p) {
        if (!s.contains(p) && find(p) != find(outside)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("rectangle mesh tiles the domain") {
    const Mesh m = build_rect_mesh(2.0, 1.0, 0.25);
    CHECK_NOTHROW(check_mesh(m));
    CHECK(m.triangles.size() == 2 * 8 * 4);
    CHECK(total_area(m) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m.gamma_edges.size() == m.boundary_edges.size());
    CHECK_THROWS_AS(build_rect_mesh(1.0, 1.0, 0.0), InputError);
}

TEST_CASE("uniform refinement preserves area and quadruples triangles") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 0.25);
    const Mesh r = refine_uniform(m);
    CHECK_NOTHROW(check_mesh(r));
    CHECK(r.triangles.size() == 4 * m.triangles.size());
    CHECK(total_area(r) == doctest::Approx(total_area(m)).epsilon(1e-14));
    CHECK(r.max_edge_length() == doctest::Approx(0.5 * m.max_edge_length()));
    CHECK(gamma_trace(r).length == doctest::Approx(gamma_trace(m).length));
}

TEST_CASE("disk mesh approaches the disk area") {
    const Mesh m = build_disk_mesh(1.0, 12);
    CHECK_NOTHROW(check_mesh(m));
    CHECK(m.triangles.size() == 6 * 12 * 12);
    // Inscribed regular polygon with 72 sides.
    const double n = 72.0;
    CHECK(total_area(m) == doctest::Approx(0.5 * n * std::sin(2.0 * std::numbers::pi / n)).epsilon(1e-12));
}

TEST_CASE("gamma trace of the full square boundary") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 0.125);
    const GammaTrace g = gamma_trace(m);
    CHECK(g.closed);
    CHECK(g.size() == 32);
    CHECK(g.length == doctest::Approx(4.0));
    CHECK(g.integral(Eigen::VectorXd::Ones(g.size())) == doctest::Approx(4.0));
    CHECK(m.vertices[g.nodes[0]].isZero());
    for (int k = 1; k < g.size(); ++k) CHECK(g.arclength[k] > g.arclength[k - 1]);
    // Mass matrix integrates x exactly: the integral of x over the boundary is 2.
    Eigen::VectorXd x(g.size());
    for (int k = 0; k < g.size(); ++k) x[k] = m.vertices[g.nodes[k]].x();
    CHECK(g.integral(x) == doctest::Approx(2.0));
}

TEST_CASE("gamma arc from a box selector is open") {
    const Mesh m = mark_gamma(build_rect_mesh(1.0, 1.0, 0.125), BoxSelector{Vec2(-0.1, -0.1), Vec2(1.1, 0.05)});
    const GammaTrace g = gamma_trace(m);
    CHECK_FALSE(g.closed);
    CHECK(g.length == doctest::Approx(1.0));
    CHECK(g.size() == 9);
}

TEST_CASE("embedded cracks follow their polyline") {
    const std::vector<Vec2> seg{Vec2(0.3, 0.45), Vec2(0.7, 0.45)};
    const auto e = embed_crack(build_rect_mesh(1.0, 1.0, 0.125), seg, CrackKind::insulating);
    CHECK_NOTHROW(check_mesh(e.mesh));
    REQUIRE(e.cracks.components.size() == 1);
    const auto& chain = e.cracks.components[0].chain;
    CHECK(e.mesh.vertices[chain.front()].isApprox(seg[0]));
    CHECK(e.mesh.vertices[chain.back()].isApprox(seg[1]));
    for (int v : chain) CHECK(point_segment_distance(e.mesh.vertices[v], seg[0], seg[1]) < 1e-12);
    CHECK_NOTHROW(check_crack_set(e.mesh, e.cracks));
    CHECK(distance_to_cracks(e.mesh, e.cracks, Vec2(0.5, 0.55)) == doctest::Approx(0.1));
}

TEST_CASE("edge chains on lattice lines") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 0.125);
    const auto chain = find_edge_chain(m, Vec2(0.25, 0.5), Vec2(0.75, 0.5));
    CHECK(chain.size() == 5);
    const EdgeChainFinder finder(m);
    CHECK(finder(Vec2(0.25, 0.5), Vec2(0.75, 0.5)) == chain);
    CHECK_THROWS_AS(find_edge_chain(m, Vec2(0.25, 0.5), Vec2(0.3, 0.5)), InputError);
}

TEST_CASE("admissibility agrees with a brute-force oracle on every 4x4 subset") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 12.0);
    auto grid = std::make_shared<const PixelGrid>(build_pixel_grid(m, Vec2(1.0 / 6.0, 1.0 / 6.0), 4, 4, 1.0 / 6.0));
    for (int p = 0; p < grid->size(); ++p) REQUIRE(grid->interior[p]);
    int admissible = 0;
    for (int bits = 0; bits < (1 << 16); ++bits) {
        PixelSet s(grid);
        for (int p = 0; p < 16; ++p) {
            if (bits & (1 << p)) s.insert(p);
        }
        const bool expected = admissible_oracle(s);
        admissible += expected ? 1 : 0;
        REQUIRE(pixelset_is_admissible(s) == expected);
    }
    CHECK(admissible > 1);
}

TEST_CASE("admissibility on larger random sets") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    auto grid = std::make_shared<const PixelGrid>(build_pixel_grid(m, Vec2(0.0, 0.0), 8, 8, 0.125));
    std::mt19937_64 gen(3);
    std::bernoulli_distribution coin(0.6);
    for (int trial = 0; trial < 2000; ++trial) {
        PixelSet s(grid);
        for (int p = 0; p < grid->size(); ++p) {
            if (grid->interior[p] && coin(gen)) s.insert(p);
        }
        REQUIRE(pixelset_is_admissible(s) == admissible_oracle(s));
    }
}

TEST_CASE("interior pixels keep away from the boundary") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const auto grid = small_grid(m);
    const PixelSet all = interior_pixels(grid);
    CHECK(all.count() == 36);
    CHECK(pixelset_is_admissible(all));
    CHECK(pixelset_is_admissible(PixelSet(grid)));
    for (int p : all.indices()) {
        CHECK(grid->column(p) > 0);
        CHECK(grid->row(p) < 7);
    }
}

TEST_CASE("dilation matches the Chebyshev-ball oracle") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const auto grid = small_grid(m);
    PixelSet s(grid);
    s.insert(grid->index(2, 3));
    s.insert(grid->index(6, 6));
    for (int r = 0; r < 3; ++r) {
        const PixelSet d = dilate(s, r);
        for (int p = 0; p < grid->size(); ++p) {
            bool near = false;
            for (int q : s.indices()) {
                near = near || std::max(std::abs(grid->column(p) - grid->column(q)),
                                        std::abs(grid->row(p) - grid->row(q))) <= r;
            }
            CHECK(d.contains(p) == near);
        }
    }
}

TEST_CASE("peeling candidates are admissible single-pixel removals") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const auto grid = small_grid(m);
    const PixelSet all = interior_pixels(grid);
    const auto cands = peel_candidates(all);
    CHECK(cands.size() == 20);
    for (const auto& c : cands) {
        CHECK(c.count() == all.count() - 1);
        CHECK(pixelset_is_admissible(c));
    }
}

TEST_CASE("pixels meeting a crack use closed squares") {
    const auto e = small_square({{{Vec2(0.3125, 0.4375), Vec2(0.6875, 0.4375)}, CrackKind::insulating}});
    const auto grid = small_grid(e.mesh);
    const PixelSet hit = pixels_meeting(grid, e.mesh, e.cracks);
    CHECK(hit.count() == 4);
    for (int i = 2; i <= 5; ++i) CHECK(hit.contains(grid->index(i, 3)));
    // A crack along a pixel edge meets both rows.
    const auto f = small_square({{{Vec2(0.375, 0.5), Vec2(0.625, 0.5)}, CrackKind::conducting}});
    const PixelSet both = pixels_meeting(grid, f.mesh, f.cracks);
    CHECK(both.count() == 8);
}
