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

#include <algorithm>
#include <cmath>
#include <set>

#include "common.hpp"
#include "crackmono/errors.hpp"
#include "crackmono/reconstruct.hpp"

using namespace testing;

namespace {

std::set<std::pair<int, int>> edge_set(const CrackSet& c) {
    std::set<std::pair<int, int>> out;
    for (const auto& [a, b] : c.edges()) out.insert({std::min(a, b), std::max(a, b)});
    return out;
}

std::vector<std::vector<int>> chains(const std::vector<InnerDecision>& ds) {
    std::vector<std::vector<int>> out;
    for (const auto& d : ds) out.push_back(d.candidate.chain);
    return out;
}

} // namespace

TEST_CASE("upper method peels everything without cracks") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const Conductivity g = Conductivity::constant(m, 1.0);
    const CurrentBasis b = build_basis(m, 16);
    const NdMatrix data = nd_matrix(m, g, Configuration::none(), b);
    const UpperBoundResult r = reconstruct_upper(data, m, g, b, small_grid(m));
    CHECK(r.final_set.empty());
    CHECK(r.initial.size() == 2);
    CHECK(std::all_of(r.peel_trace.begin(), r.peel_trace.end(), [](const PeelStep& s) { return s.accepted; }));
    CHECK(r.peel_trace.size() == 36);
    CHECK(raster_csv(r.final_set) == [] {
        std::string row = "0,0,0,0,0,0,0,0\n";
        std::string all;
        for (int j = 0; j < 8; ++j) all += row;
        return all;
    }());
}

TEST_CASE("inclusion test certificates match direct comparisons") {
    const auto e = small_square({{{Vec2(0.375, 0.5), Vec2(0.625, 0.5)}, CrackKind::insulating}});
    const Conductivity g = Conductivity::constant(e.mesh, 1.0);
    const CurrentBasis b = build_basis(e.mesh, 16);
    const auto grid = small_grid(e.mesh);
    const NdMatrix data = nd_matrix(e.mesh, g, Configuration::with_cracks(e.cracks), b);

    PixelSet cover = dilate(pixels_meeting(grid, e.mesh, e.cracks), 1);
    const InclusionTest ok = test_inclusion(data, e.mesh, g, b, cover, UpperMode::both);
    REQUIRE(ok.certificates.size() == 2);
    const Certificate excl = compare(nd_matrix(e.mesh, g, Configuration::insulating_region(cover), b), data);
    const Certificate froz = compare(data, nd_matrix(e.mesh, g, Configuration::conducting_region(cover), b));
    CHECK(ok.passed);
    CHECK(ok.certificates[0].min_eig == doctest::Approx(excl.min_eig).epsilon(1e-12).scale(excl.tau));
    CHECK(ok.certificates[1].min_eig == doctest::Approx(froz.min_eig).epsilon(1e-12).scale(froz.tau));

    PixelSet far(grid);
    far.insert(grid->index(1, 1));
    const InclusionTest bad = test_inclusion(data, e.mesh, g, b, far, UpperMode::both);
    CHECK_FALSE(bad.passed);
    REQUIRE(bad.certificates.size() == 1);
    CHECK(bad.certificates[0].min_eig < -bad.certificates[0].tau);
    const InclusionTest again = test_inclusion(data, e.mesh, g, b, far, UpperMode::both);
    CHECK(again.certificates[0].min_eig == bad.certificates[0].min_eig);
}

TEST_CASE("candidate enumeration count") {
    const Mesh m = build_rect_mesh(1.0, 1.0, 1.0 / 16.0);
    const auto grid = small_grid(m);
    // Interior pixels span a 7 x 7 lattice of points; a chain of L steps fits 7 - L ways per line.
    const auto c = enumerate_candidates(m, grid, 0.125, {1, 2});
    CHECK(c.size() == 2 * 7 * (6 + 5));
    CHECK((c.front().to - c.front().from).norm() == doctest::Approx(0.125));
    CHECK((c.back().to - c.back().from).norm() == doctest::Approx(0.25));
    CHECK(enumerate_candidates(m, grid, 0.0625, {1}).size() == 2 * 13 * 12);
}

TEST_CASE("inner method accepts sub-chains and rejects far chains") {
    const auto e = small_square({{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}, CrackKind::insulating}});
    const Conductivity g = Conductivity::constant(e.mesh, 1.0);
    const CurrentBasis b = build_basis(e.mesh, 24);
    const auto grid = small_grid(e.mesh);
    const NdMatrix data = nd_matrix(e.mesh, g, Configuration::with_cracks(e.cracks), b);
    const auto cands = enumerate_candidates(e.mesh, grid, 0.125, {1, 2});
    const InnerResult r = reconstruct_inner(data, e.mesh, g, b, cands, CrackKind::insulating, kDefaultTauFactor, 1);
    CHECK(r.accepted.size() + r.rejected.size() == cands.size());
    const InnerScores s = score_inner(r, e.mesh, e.cracks, 0.25);
    CHECK(s.subchains == 4 + 3);
    CHECK(s.subchains_accepted == s.subchains);
    CHECK(s.far > 0);
    CHECK(s.far_rejected == s.far);
    CHECK(s.coverage == doctest::Approx(1.0));
    CHECK(edge_coverage(r, e.mesh, e.cracks) == doctest::Approx(1.0));

    const auto truth = edge_set(e.cracks);
    for (const auto& d : r.accepted) {
        CrackSet one{{{d.candidate.chain, CrackKind::insulating}}};
        for (const auto& edge : edge_set(one)) CHECK(truth.count(edge) == 1);
    }

    const InnerResult threaded = reconstruct_inner(data, e.mesh, g, b, cands, CrackKind::insulating, kDefaultTauFactor, 3);
    CHECK(chains(threaded.accepted) == chains(r.accepted));
    CHECK(chains(threaded.rejected) == chains(r.rejected));
}

TEST_CASE("inner method refuses data with the other crack kind") {
    const auto e = small_square({{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}, CrackKind::insulating},
                                 {{Vec2(0.5, 0.125), Vec2(0.5, 0.375)}, CrackKind::conducting}});
    const Conductivity g = Conductivity::constant(e.mesh, 1.0);
    const CurrentBasis b = build_basis(e.mesh, 8);
    const NdMatrix data = nd_matrix(e.mesh, g, Configuration::with_cracks(e.cracks), b);
    const auto cands = enumerate_candidates(e.mesh, small_grid(e.mesh), 0.125, {1});
    CHECK_THROWS_AS(reconstruct_inner(data, e.mesh, g, b, cands, CrackKind::insulating), InputError);
    CHECK_THROWS_AS(reconstruct_inner(data, e.mesh, g, b, cands, CrackKind::conducting), InputError);
}

TEST_CASE("scores of exact and empty results") {
    const auto e = small_square({{{Vec2(0.25, 0.5), Vec2(0.75, 0.5)}, CrackKind::conducting}});
    const auto grid = small_grid(e.mesh);
    const PixelSet hit = pixels_meeting(grid, e.mesh, e.cracks);
    const Scores exact = score(hit, e.mesh, e.cracks);
    CHECK(exact.recall == 1.0);
    CHECK(exact.precision == 1.0);
    CHECK(exact.truth_pixels == 12);
    CHECK(exact.hausdorff_to_truth == doctest::Approx(0.0625 * std::sqrt(2.0)));
    const Scores none = score(PixelSet(grid), e.mesh, e.cracks);
    CHECK(none.recall == 0.0);
    CHECK(none.precision == 1.0);
    CHECK(upper_mode_from_string(to_string(UpperMode::conducting)) == UpperMode::conducting);
    CHECK_THROWS_AS(upper_mode_from_string("sideways"), InputError);
}
