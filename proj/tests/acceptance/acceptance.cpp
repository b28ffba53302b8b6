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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 100).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "crackmono/harness.hpp"

#ifndef CRACKMONO_SOURCE_DIR
#define CRACKMONO_SOURCE_DIR "."
#endif

using namespace crackmono;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

std::filesystem::path scenario_path(const std::string& name) {
    return std::filesystem::path(CRACKMONO_SOURCE_DIR) / "scenarios" / (name + ".json");
}

int failures = 0;

void run(int id, const char* title, double limit_s, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_s > 0.0 && secs > limit_s) {
        v.passed = false;
        v.detail += fmt("; over the %.0f s limit", limit_s);
    }
    if (!v.passed) ++failures;
    std::printf("%s %d %s: %s (%.1f s)\n", v.passed ? "PASS" : "FAIL", id, title, v.detail.c_str(), secs);
    std::fflush(stdout);
}

// Random lattice-aligned segment well inside the unit square.
CrackSpec random_segment(std::mt19937_64& gen, CrackKind kind) {
    std::uniform_int_distribution<int> pos(10, 54);
    std::uniform_int_distribution<int> len(6, 16);
    std::bernoulli_distribution vertical(0.5);
    const int a = pos(gen);
    const int b = pos(gen);
    const int l = len(gen);
    const int lo = std::min(b, 54 - l);
    CrackSpec c;
    c.kind = kind;
    const double h = 1.0 / 64.0;
    if (vertical(gen)) {
        c.points = {Vec2(a * h, lo * h), Vec2(a * h, (lo + l) * h)};
    } else {
        c.points = {Vec2(lo * h, a * h), Vec2((lo + l) * h, a * h)};
    }
    return c;
}

double segment_gap(const CrackSpec& a, const CrackSpec& b) {
    return segment_segment_distance(a.points[0], a.points[1], b.points[0], b.points[1]);
}

// Randomised mixed scenarios on the unit square: one insulating and one
// conducting segment at least four pixels apart, plus one random box of
// background conductivity.
std::vector<Scenario> random_scenarios(int count, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    std::uniform_real_distribution<double> value(0.5, 2.0);
    std::vector<Scenario> out;
    while (static_cast<int>(out.size()) < count) {
        Scenario s;
        s.name = "random-" + std::to_string(out.size());
        s.grid = GridSpec{};
        s.cracks = {random_segment(gen, CrackKind::insulating), random_segment(gen, CrackKind::conducting)};
        if (segment_gap(s.cracks[0], s.cracks[1]) < 4.0 / 32.0) continue;
        const double x0 = unit(gen), x1 = unit(gen), y0 = unit(gen), y1 = unit(gen);
        s.gamma0.regions.push_back(
            {Vec2(std::min(x0, x1), std::min(y0, y1)), Vec2(std::max(x0, x1), std::max(y0, y1)), value(gen)});
        out.push_back(s);
    }
    return out;
}

Verdict forward_convergence() {
    double previous = std::numeric_limits<double>::infinity();
    bool monotone = true;
    std::string detail;
    double last_error = 0.0;
    int last_triangles = 0;
    for (int rings : {10, 20, 41}) {
        const Mesh mesh = mark_gamma(build_disk_mesh(1.0, rings), FullBoundary{});
        const GammaTrace gamma = gamma_trace(mesh);
        Eigen::VectorXd f(gamma.size());
        for (int k = 0; k < gamma.size(); ++k) {
            const Vec2& p = mesh.vertices[gamma.nodes[k]];
            f[k] = std::cos(std::atan2(p.y(), p.x()));
        }
        f.array() -= gamma.mean(f);
        auto dm = std::make_shared<const DofMap>(build_dofmap(mesh, Configuration::none()));
        ForwardSolver solver(mesh, Conductivity::constant(mesh, 1.0), dm);
        const double value = nd_form(solver, f);
        const double error = std::abs(value - std::numbers::pi) / std::numbers::pi;
        monotone = monotone && error < previous;
        previous = error;
        last_error = error;
        last_triangles = static_cast<int>(mesh.triangles.size());
        detail += fmt("%s%d tri: %.4f%%", detail.empty() ? "" : ", ", last_triangles, 100.0 * error);
    }
    return {monotone && last_error <= 0.02 && last_triangles >= 10000,
            detail + (monotone ? ", monotone" : ", not monotone")};
}

Verdict monotonicity_chain() {
    int passed = 0;
    double worst = std::numeric_limits<double>::infinity();
    const auto scenarios = random_scenarios(6, 2024);
    for (const auto& s : scenarios) {
        const Setup setup = build_setup(s);
        const NdMatrix data = simulate(s, setup).data;
        const MonotonicityRun r = verify_monotonicity(setup, data, s.chain_margin, s.tau_factor);
        for (const auto* list : {&r.chain, &r.brackets}) {
            for (const auto& c : *list) worst = std::min(worst, c.min_eig / c.tau);
        }
        if (r.passed && r.chain.size() == 4 && r.brackets.size() == 2) ++passed;
    }
    return {passed == static_cast<int>(scenarios.size()) && passed >= 5,
            fmt("%d/%zu scenarios pass 4 chain links + 2 data brackets; lowest min_eig/tau %.3g", passed,
                scenarios.size(), worst)};
}

Verdict projection_identities() {
    const auto scenarios = random_scenarios(5, 77);
    double worst[2] = {0.0, 0.0};
    int pairs[2] = {0, 0};
    for (const auto& s : scenarios) {
        const Setup setup = build_setup(s);
        for (int f : {0, 7, 15, 26}) {
            for (int which = 0; which < 2; ++which) {
                const auto id = which == 0 ? ProjectionIdentity::insulating_part : ProjectionIdentity::conducting_part;
                const IdentityCheck c = projection_identity_check(setup.mesh, setup.gamma0, setup.truth, setup.basis, f, id);
                worst[which] = std::max(worst[which], c.relative_error);
                ++pairs[which];
            }
        }
    }
    return {pairs[0] >= 20 && pairs[1] >= 20 && worst[0] <= 1e-8 && worst[1] <= 1e-8,
            fmt("%d+%d pairs; worst relative error insulating part %.2e, conducting part %.2e", pairs[0], pairs[1],
                worst[0], worst[1])};
}

Verdict adjoint_identity() {
    const Scenario s = load_scenario(scenario_path("mixed"));
    const Setup setup = build_setup(s);
    PixelSet support(setup.grid);
    for (int j = 3; j < 7; ++j) {
        for (int i = 3; i < 9; ++i) support.insert(setup.grid->index(i, j));
    }
    PixelSet region(setup.grid);
    for (int j = 24; j < 28; ++j) {
        for (int i = 4; i < 10; ++i) region.insert(setup.grid->index(i, j));
    }
    const std::vector<Configuration> configs{Configuration::none(), Configuration::with_cracks(setup.truth),
                                             Configuration::insulating_region(region),
                                             Configuration::conducting_region(region)};
    std::mt19937_64 gen(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int nt = static_cast<int>(setup.mesh.triangles.size());
    const auto mask = support.triangle_mask(nt);
    double worst = 0.0;
    int checks = 0;
    for (const auto& config : configs) {
        auto dm = std::make_shared<const DofMap>(build_dofmap(setup.mesh, config));
        ForwardSolver solver(setup.mesh, setup.gamma0, dm);
        for (int k = 0; k < 100; ++k) {
            auto field = ElementVectorField::zero(nt);
            for (int t = 0; t < nt; ++t) {
                if (mask[t]) field.values[t] = Vec2(normal(gen), normal(gen));
            }
            Eigen::VectorXd c(setup.basis.size());
            for (auto& x : c) x = normal(gen);
            const AdjointCheck a = adjoint_check(setup.mesh, solver, support, field, setup.basis.combine(c));
            worst = std::max(worst, a.relative_error);
            ++checks;
        }
    }
    return {worst <= 1e-10, fmt("%d pairs over %zu configurations; worst relative error %.2e", checks, configs.size(), worst)};
}

Verdict localized_trends() {
    std::string detail;
    bool ok = true;
    for (const char* name : {"locpot", "locpot-conducting"}) {
        const Scenario s = load_scenario(scenario_path(name));
        const Setup setup = build_setup(s);
        const LocpotRun run = localized_demo(setup, s.locpot, s.chain_margin);
        const auto& d = run.report.decades;
        const bool pass = d[0] <= -2.0 && d[1] <= -2.0 && d[2] >= 2.0;
        ok = ok && pass && !run.y0.invisible;
        detail += fmt("%s%s: decades %+.2f %+.2f %+.2f", detail.empty() ? "" : "; ", to_string(run.variant).c_str(),
                      d[0], d[1], d[2]);
    }
    return {ok, detail + " (need <= -2, <= -2, >= +2)"};
}

Verdict upper_round_trip() {
    const Scenario s = load_scenario(scenario_path("mixed"));
    const Setup setup = build_setup(s);
    const NdMatrix data = simulate(s, setup).data;
    const UpperBoundResult r =
        reconstruct_upper(data, setup.mesh, setup.gamma0, setup.basis, setup.grid, {s.upper_mode, s.tau_factor});
    const Scores sc = score(r.final_set, setup.mesh, setup.truth);
    const PixelSet hit = pixels_meeting(setup.grid, setup.mesh, setup.truth);
    const PixelSet reach = dilate(r.final_set, 1);
    int near = 0;
    for (int p : hit.indices()) near += reach.contains(p) ? 1 : 0;
    const double tolerant = hit.count() > 0 ? static_cast<double>(near) / hit.count() : 1.0;
    const double limit = 2.0 * setup.grid->h;
    return {tolerant == 1.0 && sc.hausdorff_to_truth <= limit,
            fmt("recall %.3f within one pixel (strict %.3f), Hausdorff(final -> D) %.4f vs %.4f, %d final pixels",
                tolerant, sc.recall, sc.hausdorff_to_truth, limit, sc.result_pixels)};
}

Verdict inner_round_trip() {
    std::string detail;
    bool ok = true;
    for (const char* name : {"insulating", "conducting"}) {
        const Scenario s = load_scenario(scenario_path(name));
        const Setup setup = build_setup(s);
        const NdMatrix data = simulate(s, setup).data;
        const CrackKind kind = *s.inner.kind;
        const auto candidates = enumerate_candidates(setup.mesh, setup.grid, s.inner.spacing, s.inner.lengths);
        const InnerResult r = reconstruct_inner(data, setup.mesh, setup.gamma0, setup.basis, candidates, kind, s.tau_factor);
        const InnerScores sc = score_inner(r, setup.mesh, setup.truth, 2.0 * setup.grid->h);
        bool certified = true;
        for (const auto& d : r.rejected) certified = certified && d.certificate.min_eig < -d.certificate.tau;
        const double far_rate = sc.far > 0 ? static_cast<double>(sc.far_rejected) / sc.far : 1.0;
        const bool pass = sc.subchains > 0 && sc.subchains_accepted == sc.subchains && far_rate >= 0.95 &&
                          sc.coverage >= 0.9 && certified;
        ok = ok && pass;
        detail += fmt("%s%s: sub-chains %d/%d, far rejected %d/%d, coverage %.3f", detail.empty() ? "" : "; ", name,
                      sc.subchains_accepted, sc.subchains, sc.far_rejected, sc.far, sc.coverage);
    }
    return {ok, detail};
}

// Box of pixels [i0, i1] x [j0, j1].
void add_box(PixelSet& set, int i0, int i1, int j0, int j1) {
    for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) set.insert(set.grid->index(i, j));
    }
}

Verdict contrapositive() {
    const Scenario s = load_scenario(scenario_path("mixed"));
    const Setup setup = build_setup(s);
    const NdMatrix data = simulate(s, setup).data;
    // Insulating crack: columns 10..21 of row 20. Conducting: column 22, rows 5..14.
    struct Case {
        const char* name;
        PixelSet c;
    };
    std::vector<Case> cases;
    {
        PixelSet c(setup.grid);
        add_box(c, 9, 18, 19, 21); // insulating tip beyond column 18 missing
        add_box(c, 21, 23, 4, 15);
        cases.push_back({"insulating tip", c});
    }
    {
        PixelSet c(setup.grid);
        add_box(c, 9, 22, 19, 21);
        add_box(c, 21, 23, 8, 15); // conducting tip below row 8 missing
        cases.push_back({"conducting tip", c});
    }
    std::string detail;
    bool ok = true;
    for (const auto& k : cases) {
        if (!pixelset_is_admissible(k.c)) throw InputError("test inclusion is not admissible");
        const InclusionTest t = test_inclusion(data, setup.mesh, setup.gamma0, setup.basis, k.c, UpperMode::both,
                                               s.tau_factor);
        const NdMatrix up = nd_matrix(setup.mesh, setup.gamma0, Configuration::insulating_region(k.c), setup.basis);
        const NdMatrix low = nd_matrix(setup.mesh, setup.gamma0, Configuration::conducting_region(k.c), setup.basis);
        const Certificate a = compare(up, data, s.tau_factor);
        const Certificate b = compare(data, low, s.tau_factor);
        const double ratio = std::min(a.min_eig / a.tau, b.min_eig / b.tau);
        const bool pass = ratio < -10.0 && !t.passed;
        ok = ok && pass;
        detail += fmt("%s%s: min_eig/tau %.3g (excluded) %.3g (frozen)", detail.empty() ? "" : "; ", k.name,
                      a.min_eig / a.tau, b.min_eig / b.tau);
    }
    return {ok, detail};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    Scenario s = load_scenario(scenario_path("mixed"));
    s = apply_overrides(s, {.seed = 42, .tau_factor = std::nullopt, .modes = std::nullopt, .anti_crime = true,
                            .noise = 1e-3});
    const auto base = std::filesystem::temp_directory_path() / "crackmono-acceptance";
    std::filesystem::remove_all(base);
    std::string detail;
    bool ok = true;
    for (const auto& [name, cmd] : std::vector<std::pair<std::string, CommandResult (*)(const Scenario&, RunOutput&)>>{
             {"simulate", cmd_simulate}, {"verify-monotonicity", cmd_verify_monotonicity}, {"reconstruct-upper", cmd_reconstruct_upper}}) {
        std::string reports[2];
        std::string manifests[2];
        for (int k = 0; k < 2; ++k) {
            RunOutput out;
            cmd(s, out);
            const auto dir = base / (name + "-" + std::to_string(k));
            write_run(dir, out);
            reports[k] = slurp(dir / "report.json");
            const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
            for (const auto& e : m["artifacts"]) {
                if (e["path"] != "timings.json") manifests[k] += e["path"].get<std::string>() + e["sha256"].get<std::string>();
            }
        }
        const bool same = !reports[0].empty() && reports[0] == reports[1] && manifests[0] == manifests[1];
        ok = ok && same;
        detail += fmt("%s%s %s", detail.empty() ? "" : ", ", name.c_str(), same ? "identical" : "differs");
    }
    std::filesystem::remove_all(base);
    return {ok, detail + " (seed 42, noise 1e-3, anti-crime on)"};
}

} // namespace

int main() {
    run(1, "forward convergence on the disk", 30.0, forward_convergence);
    run(2, "monotonicity chain", 300.0, monotonicity_chain);
    run(3, "projection identities", 0.0, projection_identities);
    run(4, "adjoint identity", 0.0, adjoint_identity);
    run(5, "localized potential trends", 600.0, localized_trends);
    run(6, "upper-bound round trip", 1800.0, upper_round_trip);
    run(7, "inner round trip", 0.0, inner_round_trip);
    run(8, "contrapositive certificates", 0.0, contrapositive);
    run(9, "determinism", 0.0, determinism);
    std::printf("%d of 9 criteria failed\n", failures);
    return std::min(failures, 100);
}
