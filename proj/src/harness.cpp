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

#include "crackmono/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <openssl/evp.h>

namespace crackmono {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string out = "invalid scenario";
    for (const auto& p : problems) out += "; " + p;
    return out;
}

// Collects every schema problem instead of stopping at the first.
class Reader {
public:
    std::vector<std::string> problems;

    void fail(const std::string& path, const std::string& what) { problems.push_back(path + ": " + what); }

    bool object(const json& j, const std::string& path, const std::set<std::string>& keys) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        for (const auto& [k, v] : j.items()) {
            if (!keys.contains(k)) fail(path + "." + k, "unknown key");
        }
        return true;
    }

    void number(const json& j, const std::string& path, const char* key, double& out) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            fail(path + "." + key, "expected a finite number");
            return;
        }
        out = v.get<double>();
    }

    void integer(const json& j, const std::string& path, const char* key, int& out) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (!v.is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return;
        }
        out = v.get<int>();
    }

    void string(const json& j, const std::string& path, const char* key, std::string& out) {
        if (!j.contains(key)) return;
        const auto& v = j.at(key);
        if (!v.is_string()) {
            fail(path + "." + key, "expected a string");
            return;
        }
        out = v.get<std::string>();
    }

    bool point(const json& v, const std::string& path, Vec2& out) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            fail(path, "expected [x, y]");
            return false;
        }
        out = Vec2(v[0].get<double>(), v[1].get<double>());
        if (!out.allFinite()) {
            fail(path, "expected finite coordinates");
            return false;
        }
        return true;
    }

    void point(const json& j, const std::string& path, const char* key, Vec2& out) {
        if (j.contains(key)) point(j.at(key), path + "." + key, out);
    }

    template <class T, class Parse>
    void choice(const json& j, const std::string& path, const char* key, T& out, Parse parse) {
        std::string name;
        if (!j.contains(key)) return;
        string(j, path, key, name);
        if (name.empty()) return;
        try {
            out = parse(name);
        } catch (const InputError& e) {
            fail(path + "." + key, e.what());
        }
    }
};

bool inside_domain(const DomainSpec& d, const Vec2& p) {
    if (d.shape == "disk") return p.norm() < d.radius;
    return p.x() > 0.0 && p.y() > 0.0 && p.x() < d.width && p.y() < d.height;
}

void validate(const Scenario& s, Reader& r) {
    const auto& d = s.domain;
    if (d.shape == "rectangle") {
        if (!(d.width > 0.0) || !(d.height > 0.0)) r.fail("domain", "width and height must be positive");
        if (!(d.h > 0.0) || d.h > 0.5 * std::min(d.width, d.height)) {
            r.fail("domain.h", "must lie in (0, min(width, height) / 2]");
        }
    } else if (d.shape == "disk") {
        if (!(d.radius > 0.0)) r.fail("domain.radius", "must be positive");
        if (d.rings < 2) r.fail("domain.rings", "must be at least 2");
    } else {
        r.fail("domain.shape", "expected \"rectangle\" or \"disk\"");
    }
    if (s.gamma.type == "box") {
        if (!(s.gamma.min.array() < s.gamma.max.array()).all()) r.fail("gamma", "box min must lie below max");
    } else if (s.gamma.type != "full" && s.gamma.type != "angle") {
        r.fail("gamma.type", "expected \"full\", \"box\" or \"angle\"");
    }
    if (!(s.gamma0.value > 0.0)) r.fail("gamma0.value", "must be positive");
    for (std::size_t k = 0; k < s.gamma0.regions.size(); ++k) {
        const auto& g = s.gamma0.regions[k];
        const std::string path = "gamma0.regions[" + std::to_string(k) + "]";
        if (!(g.value > 0.0)) r.fail(path + ".value", "must be positive");
        if (!(g.min.array() < g.max.array()).all()) r.fail(path, "min must lie below max");
    }
    for (std::size_t k = 0; k < s.cracks.size(); ++k) {
        const auto& c = s.cracks[k];
        const std::string path = "cracks[" + std::to_string(k) + "]";
        if (c.points.size() < 2) r.fail(path + ".points", "needs at least two points");
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            if (!inside_domain(d, c.points[i])) {
                r.fail(path + ".points[" + std::to_string(i) + "]", "lies outside the open domain");
            }
        }
    }
    if (s.grid) {
        if (s.grid->nx < 1 || s.grid->ny < 1) r.fail("grid", "nx and ny must be positive");
        if (!(s.grid->h > 0.0)) r.fail("grid.h", "must be positive");
    }
    if (s.modes < 1) r.fail("modes", "must be at least 1");
    if (!(s.tau_factor >= 0.0)) r.fail("tau_factor", "must be non-negative");
    if (!(s.noise >= 0.0)) r.fail("noise", "must be non-negative");
    if (s.inner.spacing < 0.0) r.fail("inner.spacing", "must be positive");
    if (s.inner.lengths.empty()) r.fail("inner.lengths", "must not be empty");
    for (int k : s.inner.lengths) {
        if (k < 1) r.fail("inner.lengths", "entries must be at least 1");
    }
    if (s.locpot.margin < 0) r.fail("locpot.margin", "must be non-negative");
    if (s.locpot.n_values.empty()) r.fail("locpot.n_values", "must not be empty");
    for (std::size_t k = 0; k < s.locpot.n_values.size(); ++k) {
        if (!(s.locpot.n_values[k] > 0.0) || (k > 0 && !(s.locpot.n_values[k] > s.locpot.n_values[k - 1]))) {
            r.fail("locpot.n_values", "must be positive and increasing");
            break;
        }
    }
    if (s.chain_margin < 0) r.fail("monotonicity.margin", "must be non-negative");
}

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json pixels_json(const PixelSet& set) {
    json out = json::array();
    for (int p : set.indices()) out.push_back(json::array({set.grid->column(p), set.grid->row(p)}));
    return out;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void begin(const char* command, const Scenario& s, RunOutput& out) {
    out.report["command"] = command;
    out.report["scenario"] = to_json(s);
}

json data_json(const SyntheticData& d) {
    return {{"config", d.data.config_label},
            {"basis", d.data.basis_label},
            {"source", d.source},
            {"source_triangles", d.source_triangles},
            {"crime_gap", d.crime_gap},
            {"noise_norm", d.noise_norm},
            {"noise_floor", d.noise_floor},
            {"tau_below_noise", d.tau_below_noise}};
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : InputError(join_problems(problems)), problems_(std::move(problems)) {}

Scenario parse_scenario(const json& doc) {
    Reader r;
    Scenario s;
    if (!r.object(doc, "$", {"name", "domain", "gamma", "gamma0", "cracks", "grid", "modes", "tau_factor", "noise",
                             "seed", "anti_crime", "upper", "inner", "locpot", "monotonicity"})) {
        throw ConfigError(r.problems);
    }
    r.string(doc, "$", "name", s.name);
    if (!doc.contains("domain")) {
        r.fail("domain", "missing");
    } else if (const auto& d = doc.at("domain");
               r.object(d, "domain", {"shape", "width", "height", "h", "radius", "rings"})) {
        r.string(d, "domain", "shape", s.domain.shape);
        r.number(d, "domain", "width", s.domain.width);
        r.number(d, "domain", "height", s.domain.height);
        r.number(d, "domain", "h", s.domain.h);
        r.number(d, "domain", "radius", s.domain.radius);
        r.integer(d, "domain", "rings", s.domain.rings);
    }
    if (doc.contains("gamma")) {
        const auto& g = doc.at("gamma");
        if (r.object(g, "gamma", {"type", "min", "max", "center", "from", "to"})) {
            r.string(g, "gamma", "type", s.gamma.type);
            r.point(g, "gamma", "min", s.gamma.min);
            r.point(g, "gamma", "max", s.gamma.max);
            r.point(g, "gamma", "center", s.gamma.center);
            r.number(g, "gamma", "from", s.gamma.from);
            r.number(g, "gamma", "to", s.gamma.to);
        }
    }
    if (doc.contains("gamma0")) {
        const auto& g = doc.at("gamma0");
        if (r.object(g, "gamma0", {"value", "regions"})) {
            r.number(g, "gamma0", "value", s.gamma0.value);
            if (g.contains("regions")) {
                if (!g.at("regions").is_array()) {
                    r.fail("gamma0.regions", "expected an array");
                } else {
                    for (std::size_t k = 0; k < g.at("regions").size(); ++k) {
                        const auto& e = g.at("regions")[k];
                        const std::string path = "gamma0.regions[" + std::to_string(k) + "]";
                        ConductivityRegion region;
                        if (!r.object(e, path, {"min", "max", "value"})) continue;
                        r.point(e, path, "min", region.min);
                        r.point(e, path, "max", region.max);
                        r.number(e, path, "value", region.value);
                        s.gamma0.regions.push_back(region);
                    }
                }
            }
        }
    }
    if (doc.contains("cracks")) {
        const auto& cs = doc.at("cracks");
        if (!cs.is_array()) {
            r.fail("cracks", "expected an array");
        } else {
            for (std::size_t k = 0; k < cs.size(); ++k) {
                const std::string path = "cracks[" + std::to_string(k) + "]";
                CrackSpec c;
                if (!r.object(cs[k], path, {"kind", "points"})) continue;
                if (!cs[k].contains("kind")) r.fail(path + ".kind", "missing");
                r.choice(cs[k], path, "kind", c.kind, crack_kind_from_string);
                if (!cs[k].contains("points") || !cs[k].at("points").is_array()) {
                    r.fail(path + ".points", "expected an array of [x, y]");
                } else {
                    const auto& pts = cs[k].at("points");
                    for (std::size_t i = 0; i < pts.size(); ++i) {
                        Vec2 p;
                        if (r.point(pts[i], path + ".points[" + std::to_string(i) + "]", p)) c.points.push_back(p);
                    }
                }
                s.cracks.push_back(std::move(c));
            }
        }
    }
    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        if (r.object(g, "grid", {"origin", "nx", "ny", "h"})) {
            GridSpec grid;
            r.point(g, "grid", "origin", grid.origin);
            r.integer(g, "grid", "nx", grid.nx);
            r.integer(g, "grid", "ny", grid.ny);
            r.number(g, "grid", "h", grid.h);
            s.grid = grid;
        }
    }
    r.integer(doc, "$", "modes", s.modes);
    r.number(doc, "$", "tau_factor", s.tau_factor);
    r.number(doc, "$", "noise", s.noise);
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned()) {
            r.fail("seed", "expected a non-negative integer");
        } else {
            s.seed = doc.at("seed").get<std::uint64_t>();
        }
    }
    if (doc.contains("anti_crime")) {
        if (!doc.at("anti_crime").is_boolean()) {
            r.fail("anti_crime", "expected true or false");
        } else {
            s.anti_crime = doc.at("anti_crime").get<bool>();
        }
    }
    if (doc.contains("upper")) {
        const auto& u = doc.at("upper");
        if (r.object(u, "upper", {"mode"})) r.choice(u, "upper", "mode", s.upper_mode, upper_mode_from_string);
    }
    if (doc.contains("inner")) {
        const auto& in = doc.at("inner");
        if (r.object(in, "inner", {"kind", "spacing", "lengths"})) {
            CrackKind kind = CrackKind::insulating;
            if (in.contains("kind")) {
                r.choice(in, "inner", "kind", kind, crack_kind_from_string);
                s.inner.kind = kind;
            }
            r.number(in, "inner", "spacing", s.inner.spacing);
            if (in.contains("spacing") && !(s.inner.spacing > 0.0)) r.fail("inner.spacing", "must be positive");
            if (in.contains("lengths")) {
                const auto& l = in.at("lengths");
                if (!l.is_array()) {
                    r.fail("inner.lengths", "expected an array of integers");
                } else {
                    s.inner.lengths.clear();
                    for (const auto& v : l) {
                        if (!v.is_number_integer()) {
                            r.fail("inner.lengths", "expected an array of integers");
                            break;
                        }
                        s.inner.lengths.push_back(v.get<int>());
                    }
                }
            }
        }
    }
    if (doc.contains("locpot")) {
        const auto& l = doc.at("locpot");
        if (r.object(l, "locpot", {"variant", "margin", "n_values"})) {
            r.choice(l, "locpot", "variant", s.locpot.variant, crack_kind_from_string);
            r.integer(l, "locpot", "margin", s.locpot.margin);
            if (l.contains("n_values")) {
                const auto& n = l.at("n_values");
                if (!n.is_array()) {
                    r.fail("locpot.n_values", "expected an array of numbers");
                } else {
                    s.locpot.n_values.clear();
                    for (const auto& v : n) {
                        if (!v.is_number()) {
                            r.fail("locpot.n_values", "expected an array of numbers");
                            break;
                        }
                        s.locpot.n_values.push_back(v.get<double>());
                    }
                }
            }
        }
    }
    if (doc.contains("monotonicity")) {
        const auto& m = doc.at("monotonicity");
        if (r.object(m, "monotonicity", {"margin"})) r.integer(m, "monotonicity", "margin", s.chain_margin);
    }
    validate(s, r);
    if (!r.problems.empty()) throw ConfigError(r.problems);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path.string() + ": cannot open"});
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({path.string() + ": " + e.what()});
    }
    return parse_scenario(doc);
}

json to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    if (s.domain.shape == "disk") {
        j["domain"] = {{"shape", "disk"}, {"radius", s.domain.radius}, {"rings", s.domain.rings}};
    } else {
        j["domain"] = {{"shape", s.domain.shape}, {"width", s.domain.width}, {"height", s.domain.height},
                       {"h", s.domain.h}};
    }
    json g = {{"type", s.gamma.type}};
    if (s.gamma.type == "box") {
        g["min"] = vec(s.gamma.min);
        g["max"] = vec(s.gamma.max);
    } else if (s.gamma.type == "angle") {
        g["center"] = vec(s.gamma.center);
        g["from"] = s.gamma.from;
        g["to"] = s.gamma.to;
    }
    j["gamma"] = g;
    json regions = json::array();
    for (const auto& r : s.gamma0.regions) {
        regions.push_back({{"min", vec(r.min)}, {"max", vec(r.max)}, {"value", r.value}});
    }
    j["gamma0"] = {{"value", s.gamma0.value}, {"regions", regions}};
    json cracks = json::array();
    for (const auto& c : s.cracks) {
        json pts = json::array();
        for (const auto& p : c.points) pts.push_back(vec(p));
        cracks.push_back({{"kind", to_string(c.kind)}, {"points", pts}});
    }
    j["cracks"] = cracks;
    if (s.grid) {
        j["grid"] = {{"origin", vec(s.grid->origin)}, {"nx", s.grid->nx}, {"ny", s.grid->ny}, {"h", s.grid->h}};
    }
    j["modes"] = s.modes;
    j["tau_factor"] = s.tau_factor;
    j["noise"] = s.noise;
    j["seed"] = s.seed;
    j["anti_crime"] = s.anti_crime;
    j["upper"] = {{"mode", to_string(s.upper_mode)}};
    json inner = {{"lengths", s.inner.lengths}};
    if (s.inner.spacing > 0.0) inner["spacing"] = s.inner.spacing;
    if (s.inner.kind) inner["kind"] = to_string(*s.inner.kind);
    j["inner"] = inner;
    j["locpot"] = {{"variant", to_string(s.locpot.variant)},
                   {"margin", s.locpot.margin},
                   {"n_values", s.locpot.n_values}};
    j["monotonicity"] = {{"margin", s.chain_margin}};
    return j;
}

Scenario apply_overrides(Scenario s, const Overrides& o) {
    if (o.seed) s.seed = *o.seed;
    if (o.tau_factor) s.tau_factor = *o.tau_factor;
    if (o.modes) s.modes = *o.modes;
    if (o.anti_crime) s.anti_crime = *o.anti_crime;
    if (o.noise) s.noise = *o.noise;
    Reader r;
    validate(s, r);
    if (!r.problems.empty()) throw ConfigError(r.problems);
    return s;
}

Mesh build_domain_mesh(const Scenario& s) {
    Mesh mesh = s.domain.shape == "disk" ? build_disk_mesh(s.domain.radius, s.domain.rings)
                                         : build_rect_mesh(s.domain.width, s.domain.height, s.domain.h);
    if (s.gamma.type == "box") return mark_gamma(std::move(mesh), BoxSelector{s.gamma.min, s.gamma.max});
    if (s.gamma.type == "angle") {
        return mark_gamma(std::move(mesh), AngleSelector{s.gamma.center, s.gamma.from, s.gamma.to});
    }
    return mark_gamma(std::move(mesh), FullBoundary{});
}

Conductivity build_conductivity(const Mesh& mesh, const Gamma0Spec& spec) {
    Conductivity c = Conductivity::constant(mesh, spec.value);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec2 x = mesh.centroid(static_cast<int>(t));
        for (const auto& r : spec.regions) {
            if ((x.array() >= r.min.array()).all() && (x.array() <= r.max.array()).all()) c.values[t] = r.value;
        }
    }
    check_conductivity(mesh, c);
    return c;
}

EmbedResult embed_cracks(const Mesh& mesh, const std::vector<CrackSpec>& cracks) {
    EmbedResult out{mesh, {}};
    for (const auto& c : cracks) out = embed_crack(out.mesh, c.points, c.kind, out.cracks);
    return out;
}

Setup build_setup(const Scenario& s) {
    auto embedded = embed_cracks(build_domain_mesh(s), s.cracks);
    Setup setup;
    setup.mesh = std::move(embedded.mesh);
    setup.truth = std::move(embedded.cracks);
    setup.gamma0 = build_conductivity(setup.mesh, s.gamma0);
    const GammaTrace gamma = gamma_trace(setup.mesh);
    if (s.modes > gamma.size() - 1) {
        throw ConfigError({"modes: " + std::to_string(s.modes) + " exceeds the " + std::to_string(gamma.size() - 1) +
                           " currents gamma supports"});
    }
    setup.basis = build_basis(gamma, s.modes);
    GridSpec g;
    if (s.grid) {
        g = *s.grid;
    } else if (s.domain.shape == "disk") {
        g.origin = Vec2(-s.domain.radius, -s.domain.radius);
        g.h = 2.0 * s.domain.radius / g.nx;
    } else {
        g.h = std::max(s.domain.width / g.nx, s.domain.height / g.ny);
    }
    setup.grid = std::make_shared<const PixelGrid>(build_pixel_grid(setup.mesh, g.origin, g.nx, g.ny, g.h));
    return setup;
}

Eigen::MatrixXd symmetric_noise(int size, double level, double scale, std::uint64_t seed) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(size, size);
    if (level == 0.0 || scale == 0.0 || size == 0) return e;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = 0; j < size; ++j) {
        for (int i = 0; i <= j; ++i) e(i, j) = e(j, i) = normal(gen);
    }
    const double norm = spectral_scale(e);
    return norm > 0.0 ? Eigen::MatrixXd(e * (level * scale / norm)) : e;
}

SyntheticData simulate(const Scenario& s, const Setup& setup) {
    SyntheticData out;
    out.same_mesh = nd_matrix(setup.mesh, setup.gamma0, Configuration::with_cracks(setup.truth), setup.basis);
    if (s.anti_crime) {
        const auto fine = embed_cracks(refine_uniform(build_domain_mesh(s)), s.cracks);
        const auto basis = transfer_basis(setup.basis, gamma_trace(fine.mesh));
        out.data = nd_matrix(fine.mesh, build_conductivity(fine.mesh, s.gamma0), Configuration::with_cracks(fine.cracks),
                             basis);
        out.source = "refined-mesh";
        out.source_triangles = static_cast<int>(fine.mesh.triangles.size());
    } else {
        out.data = out.same_mesh;
        out.source = "inversion-mesh";
        out.source_triangles = static_cast<int>(setup.mesh.triangles.size());
    }
    const double top = out.same_mesh.entries.cwiseAbs().maxCoeff();
    out.crime_gap = top > 0.0 ? (out.data.entries - out.same_mesh.entries).cwiseAbs().maxCoeff() / top : 0.0;
    const double scale = spectral_scale(out.data.entries);
    if (s.noise > 0.0) {
        const Eigen::MatrixXd e = symmetric_noise(setup.basis.size(), s.noise, scale, s.seed);
        out.data.entries += e;
        out.data.config_label += "+noise";
        out.noise_norm = spectral_scale(e);
        out.noise_floor = scale > 0.0 ? out.noise_norm / scale : 0.0;
        out.tau_below_noise = out.noise_floor > s.tau_factor;
    }
    return out;
}

MonotonicityRun verify_monotonicity(const Setup& setup, const NdMatrix& data, int margin, double tau_factor) {
    const CrackSet s0 = setup.truth.only(CrackKind::insulating);
    const CrackSet sinf = setup.truth.only(CrackKind::conducting);
    const PixelSet v = dilate(pixels_meeting(setup.grid, setup.mesh, s0), margin);
    const PixelSet w = dilate(pixels_meeting(setup.grid, setup.mesh, sinf), margin);
    for (const auto* set : {&v, &w}) {
        for (int p : set->indices()) {
            if (!setup.grid->interior[p]) throw InputError("crack neighbourhood leaves the interior pixels");
        }
    }
    const auto nd = [&](const Configuration& c) { return nd_matrix(setup.mesh, setup.gamma0, c, setup.basis); };
    const NdMatrix nv = nd(Configuration::insulating_region(v));
    const NdMatrix ns0 = nd(Configuration::with_cracks(s0));
    const NdMatrix n0 = nd(Configuration::none());
    const NdMatrix nsinf = nd(Configuration::with_cracks(sinf));
    const NdMatrix nw = nd(Configuration::conducting_region(w));
    MonotonicityRun run;
    run.chain = {compare(nv, ns0, tau_factor), compare(ns0, n0, tau_factor), compare(n0, nsinf, tau_factor),
                 compare(nsinf, nw, tau_factor)};
    run.brackets = {compare(ns0, data, tau_factor), compare(data, nsinf, tau_factor)};
    for (const auto& c : run.chain) run.passed = run.passed && c.passed;
    for (const auto& c : run.brackets) run.passed = run.passed && c.passed;
    return run;
}

LocpotRun localized_demo(const Setup& setup, const LocpotSpec& spec, int chain_margin) {
    const CrackKind other = spec.variant == CrackKind::insulating ? CrackKind::conducting : CrackKind::insulating;
    const CrackSet target = setup.truth.only(spec.variant);
    const CrackSet rest = setup.truth.only(other);
    if (target.empty() || rest.empty()) throw InputError("localized potentials need cracks of both kinds");
    const PixelSet blow = dilate(pixels_meeting(setup.grid, setup.mesh, target), chain_margin);
    const PixelSet near = dilate(pixels_meeting(setup.grid, setup.mesh, rest), chain_margin);
    const PixelSet vanish = dilate(near, spec.margin);
    for (int p = 0; p < setup.grid->size(); ++p) {
        if (blow.contains(p) && vanish.contains(p)) throw InputError("blow-up and vanishing regions overlap");
    }
    const Configuration full = Configuration::with_cracks(setup.truth);
    const Configuration base = Configuration::with_cracks(rest);
    auto dm = std::make_shared<const DofMap>(build_dofmap(setup.mesh, base));
    ForwardSolver solver(setup.mesh, setup.gamma0, dm);
    const SourceOperator a_full = build_source_operator(setup.mesh, setup.gamma0, full, blow, setup.basis);
    const SourceOperator a1 = build_source_operator(setup.mesh, solver, blow, setup.basis);
    const SourceOperator a2 = build_source_operator(setup.mesh, solver, vanish, setup.basis);
    LocpotRun run;
    run.variant = spec.variant;
    run.blowup_pixels = blow.count();
    run.vanish_pixels = vanish.count();
    run.y0 = pick_y0(a_full, a1);
    run.sequence = localized_sequence(a1.matrix, a2.matrix, run.y0.y0, spec.n_values);
    const auto nd = [&](const Configuration& c) {
        return nd_matrix(setup.mesh, setup.gamma0, c, setup.basis).entries;
    };
    const Eigen::MatrixXd free = nd(Configuration::none());
    const Eigen::MatrixXd blown = nd(full);
    std::vector<NamedForm> forms{{"vanish_excluded", nd(Configuration::insulating_region(near)) - free},
                                 {"vanish_frozen", free - nd(Configuration::conducting_region(near))}};
    if (spec.variant == CrackKind::insulating) {
        forms.push_back({"blowup", blown - nd(base)});
    } else {
        forms.push_back({"blowup", nd(base) - blown});
    }
    run.report = blowup_metrics(run.sequence, forms);
    return run;
}

json to_json(const Mesh& mesh) {
    json v = json::array();
    for (const auto& p : mesh.vertices) v.push_back(vec(p));
    json t = json::array();
    for (const auto& tri : mesh.triangles) t.push_back(tri);
    json g = json::array();
    for (const auto& e : mesh.gamma_edges) g.push_back(e);
    return {{"vertices", v}, {"triangles", t}, {"gamma_edges", g}};
}

json to_json(const CrackSet& cracks) {
    json out = json::array();
    for (const auto& c : cracks.components) out.push_back({{"kind", to_string(c.kind)}, {"chain", c.chain}});
    return out;
}

json to_json(const PixelGrid& grid) {
    json interior = json::array();
    for (int p = 0; p < grid.size(); ++p) {
        if (grid.interior[p]) interior.push_back(json::array({grid.column(p), grid.row(p)}));
    }
    return {{"origin", vec(grid.origin)}, {"nx", grid.nx}, {"ny", grid.ny}, {"h", grid.h}, {"interior", interior}};
}

json to_json(const NdMatrix& n) {
    return {{"config", n.config_label},
            {"basis", n.basis_label},
            {"asymmetry", n.asymmetry},
            {"summary",
             {{"insulating", n.summary.insulating},
              {"conducting", n.summary.conducting},
              {"excluded_pixels", n.summary.excluded_pixels},
              {"frozen_pixels", n.summary.frozen_pixels}}},
            {"entries", matrix_json(n.entries)}};
}

json to_json(const Certificate& c) {
    return {{"minuend", c.minuend}, {"subtrahend", c.subtrahend}, {"min_eig", c.min_eig}, {"tau", c.tau},
            {"passed", c.passed}};
}

json to_json(const Scores& s) {
    return {{"precision", s.precision},
            {"recall", s.recall},
            {"hausdorff_to_truth", s.hausdorff_to_truth},
            {"hausdorff_from_truth", s.hausdorff_from_truth},
            {"result_pixels", s.result_pixels},
            {"truth_pixels", s.truth_pixels}};
}

json to_json(const UpperBoundResult& r) {
    json trace = json::array();
    for (const auto& step : r.peel_trace) {
        json certs = json::array();
        for (const auto& c : step.certificates) certs.push_back(to_json(c));
        trace.push_back({{"pixel", json::array({r.final_set.grid->column(step.pixel), r.final_set.grid->row(step.pixel)})},
                         {"accepted", step.accepted},
                         {"certificates", certs}});
    }
    json initial = json::array();
    for (const auto& c : r.initial) initial.push_back(to_json(c));
    return {{"inequalities_used", to_string(r.inequalities_used)},
            {"final_set", pixels_json(r.final_set)},
            {"sweeps", r.sweeps},
            {"closest_accept", r.closest_accept},
            {"closest_reject", r.closest_reject},
            {"initial", initial},
            {"peel_trace", trace}};
}

json to_json(const InnerResult& r) {
    const auto list = [](const std::vector<InnerDecision>& ds) {
        json out = json::array();
        for (const auto& d : ds) {
            out.push_back({{"chain", d.candidate.chain},
                           {"from", vec(d.candidate.from)},
                           {"to", vec(d.candidate.to)},
                           {"certificate", to_json(d.certificate)}});
        }
        return out;
    };
    return {{"kind", to_string(r.kind)}, {"accepted", list(r.accepted)}, {"rejected", list(r.rejected)}};
}

std::string certificates_csv(const std::vector<Certificate>& certs) {
    std::ostringstream out;
    out << std::setprecision(17) << "minuend,subtrahend,min_eig,tau,passed\n";
    for (const auto& c : certs) {
        out << c.minuend << ',' << c.subtrahend << ',' << c.min_eig << ',' << c.tau << ',' << (c.passed ? 1 : 0)
            << '\n';
    }
    return out.str();
}

std::string field_csv(const Mesh& mesh, const Field& field) {
    const auto& dm = *field.dofmap;
    std::vector<double> sum(mesh.vertices.size(), 0.0);
    std::vector<int> hits(mesh.vertices.size(), 0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const int d = dm.triangle_dofs[t][k];
            if (d < 0) continue;
            sum[mesh.triangles[t][k]] += field.values[d];
            ++hits[mesh.triangles[t][k]];
        }
    }
    std::ostringstream out;
    out << std::setprecision(17) << "x,y,u\n";
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        out << mesh.vertices[v].x() << ',' << mesh.vertices[v].y() << ',';
        if (hits[v] > 0) {
            out << sum[v] / hits[v];
        } else {
            out << "nan";
        }
        out << '\n';
    }
    return out.str();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &size, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream out;
    for (unsigned int k = 0; k < size; ++k) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
    return out.str();
}

void write_run(const std::filesystem::path& dir, const RunOutput& out) {
    std::filesystem::create_directories(dir);
    std::map<std::string, std::string> files = out.artifacts;
    files["report.json"] = out.report.dump(2) + "\n";
    files["timings.json"] = out.timings.dump(2) + "\n";
    json manifest = json::array();
    for (const auto& [name, bytes] : files) {
        std::ofstream f(dir / name, std::ios::binary);
        f << bytes;
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        manifest.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    f << json{{"artifacts", manifest}}.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

CommandResult cmd_simulate(const Scenario& s, RunOutput& out) {
    begin("simulate", s, out);
    Stopwatch clock;
    const Setup setup = build_setup(s);
    out.timings["setup_s"] = clock.seconds();
    const SyntheticData data = simulate(s, setup);
    out.timings["total_s"] = clock.seconds();
    auto dm = std::make_shared<const DofMap>(build_dofmap(setup.mesh, Configuration::with_cracks(setup.truth)));
    const Field u = solve_neumann(setup.mesh, setup.gamma0, dm, setup.basis.current(0));
    out.artifacts["mesh.json"] = to_json(setup.mesh).dump() + "\n";
    out.artifacts["cracks.json"] = to_json(setup.truth).dump(2) + "\n";
    out.artifacts["grid.json"] = to_json(*setup.grid).dump() + "\n";
    json nd = to_json(data.data);
    nd["data"] = data_json(data);
    out.artifacts["data.json"] = nd.dump(2) + "\n";
    out.artifacts["field.csv"] = field_csv(setup.mesh, u);
    out.report["mesh"] = {{"vertices", setup.mesh.vertices.size()}, {"triangles", setup.mesh.triangles.size()},
                          {"gamma_nodes", setup.basis.gamma.size()}};
    out.report["data"] = data_json(data);
    return std::nullopt;
}

CommandResult cmd_ndmatrix(const Scenario& s, RunOutput& out) {
    begin("ndmatrix", s, out);
    Stopwatch clock;
    const Setup setup = build_setup(s);
    const NdMatrix n = nd_matrix(setup.mesh, setup.gamma0, Configuration::with_cracks(setup.truth), setup.basis);
    const NdMatrix n0 = nd_matrix(setup.mesh, setup.gamma0, Configuration::none(), setup.basis);
    out.timings["total_s"] = clock.seconds();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(n.entries, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig0(n0.entries, Eigen::EigenvaluesOnly);
    std::ostringstream csv;
    csv << std::setprecision(17) << "index,cracks,background\n";
    for (int k = 0; k < setup.basis.size(); ++k) {
        csv << k << ',' << eig.eigenvalues()[k] << ',' << eig0.eigenvalues()[k] << '\n';
    }
    out.artifacts["ndmatrix.json"] = json{{"cracks", to_json(n)}, {"background", to_json(n0)}}.dump(2) + "\n";
    out.artifacts["eigenvalues.csv"] = csv.str();
    const PsdResult positive = psd_test(n.entries, s.tau_factor * spectral_scale(n.entries));
    out.report["ndmatrix"] = {{"config", n.config_label},
                              {"basis", n.basis_label},
                              {"asymmetry", n.asymmetry},
                              {"min_eig", positive.min_eig},
                              {"max_eig", eig.eigenvalues().maxCoeff()},
                              {"positive", positive.passed}};
    return std::nullopt;
}

CommandResult cmd_reconstruct_upper(const Scenario& s, RunOutput& out) {
    begin("reconstruct-upper", s, out);
    Stopwatch clock;
    const Setup setup = build_setup(s);
    const SyntheticData data = simulate(s, setup);
    out.report["data"] = data_json(data);
    out.timings["data_s"] = clock.seconds();
    UpperBoundResult r;
    try {
        r = reconstruct_upper(data.data, setup.mesh, setup.gamma0, setup.basis, setup.grid,
                              {s.upper_mode, s.tau_factor});
    } catch (const DataError& e) {
        out.report["upper"] = {{"error", e.what()}};
        return std::string(e.what());
    }
    out.timings["total_s"] = clock.seconds();
    const Scores sc = score(r.final_set, setup.mesh, setup.truth);
    std::vector<Certificate> certs = r.initial;
    for (const auto& step : r.peel_trace) certs.insert(certs.end(), step.certificates.begin(), step.certificates.end());
    int accepted = 0;
    for (const auto& step : r.peel_trace) accepted += step.accepted ? 1 : 0;
    out.artifacts["upper.json"] = to_json(r).dump() + "\n";
    out.artifacts["raster.csv"] = raster_csv(r.final_set);
    out.artifacts["certificates.csv"] = certificates_csv(certs);
    json initial = json::array();
    for (const auto& c : r.initial) initial.push_back(to_json(c));
    out.report["upper"] = {{"mode", to_string(r.inequalities_used)},
                           {"initial", initial},
                           {"probes", r.peel_trace.size()},
                           {"accepted", accepted},
                           {"sweeps", r.sweeps},
                           {"final_pixels", r.final_set.count()},
                           {"closest_accept", r.closest_accept},
                           {"closest_reject", r.closest_reject},
                           {"scores", to_json(sc)}};
    return std::nullopt;
}

CommandResult cmd_reconstruct_inner(const Scenario& s, RunOutput& out) {
    begin("reconstruct-inner", s, out);
    Stopwatch clock;
    const Setup setup = build_setup(s);
    CrackKind kind = CrackKind::insulating;
    if (s.inner.kind) {
        kind = *s.inner.kind;
    } else if (setup.truth.count(CrackKind::conducting) > 0 && setup.truth.count(CrackKind::insulating) == 0) {
        kind = CrackKind::conducting;
    }
    const SyntheticData data = simulate(s, setup);
    out.report["data"] = data_json(data);
    const double spacing = s.inner.spacing > 0.0 ? s.inner.spacing : setup.grid->h;
    const auto candidates = enumerate_candidates(setup.mesh, setup.grid, spacing, s.inner.lengths);
    out.timings["data_s"] = clock.seconds();
    const InnerResult r =
        reconstruct_inner(data.data, setup.mesh, setup.gamma0, setup.basis, candidates, kind, s.tau_factor);
    out.timings["total_s"] = clock.seconds();
    const InnerScores sc = score_inner(r, setup.mesh, setup.truth, 2.0 * setup.grid->h);
    std::vector<Certificate> certs;
    for (const auto* list : {&r.accepted, &r.rejected}) {
        for (const auto& d : *list) certs.push_back(d.certificate);
    }
    double margin = -std::numeric_limits<double>::infinity();
    for (const auto& d : r.rejected) margin = std::max(margin, d.certificate.min_eig);
    out.artifacts["inner.json"] = to_json(r).dump() + "\n";
    out.artifacts["certificates.csv"] = certificates_csv(certs);
    out.report["inner"] = {{"kind", to_string(kind)},
                           {"spacing", spacing},
                           {"candidates", candidates.size()},
                           {"accepted", r.accepted.size()},
                           {"rejected", r.rejected.size()},
                           {"closest_reject", std::isfinite(margin) ? margin : 0.0},
                           {"scores",
                            {{"subchains", sc.subchains},
                             {"subchains_accepted", sc.subchains_accepted},
                             {"far", sc.far},
                             {"far_rejected", sc.far_rejected},
                             {"coverage", sc.coverage}}}};
    return std::nullopt;
}

CommandResult cmd_locpot_demo(const Scenario& s, RunOutput& out) {
    begin("locpot-demo", s, out);
    Stopwatch clock;
    const Setup setup = build_setup(s);
    const LocpotRun run = localized_demo(setup, s.locpot, s.chain_margin);
    out.timings["total_s"] = clock.seconds();
    out.artifacts["locpot.csv"] = sequence_csv(run.sequence, run.report);
    json decades = json::object();
    for (std::size_t k = 0; k < run.report.names.size(); ++k) decades[run.report.names[k]] = run.report.decades[k];
    out.report["locpot"] = {{"variant", to_string(run.variant)},
                            {"blowup_pixels", run.blowup_pixels},
                            {"vanish_pixels", run.vanish_pixels},
                            {"y0_singular_value", run.y0.singular_value},
                            {"invisible", run.y0.invisible},
                            {"decades", decades}};
    return std::nullopt;
}

CommandResult cmd_verify_monotonicity(const Scenario& s, RunOutput& out) {
    begin("verify-monotonicity", s, out);
    Stopwatch clock;
    const Setup setup = build_setup(s);
    const SyntheticData data = simulate(s, setup);
    out.report["data"] = data_json(data);
    const MonotonicityRun run = verify_monotonicity(setup, data.data, s.chain_margin, s.tau_factor);
    out.timings["total_s"] = clock.seconds();
    json chain = json::array();
    json brackets = json::array();
    for (const auto& c : run.chain) chain.push_back(to_json(c));
    for (const auto& c : run.brackets) brackets.push_back(to_json(c));
    std::vector<Certificate> all = run.chain;
    all.insert(all.end(), run.brackets.begin(), run.brackets.end());
    out.artifacts["certificates.csv"] = certificates_csv(all);
    out.report["monotonicity"] = {{"chain", chain}, {"brackets", brackets}, {"passed", run.passed}};
    if (!run.passed) return std::string("monotonicity chain failed");
    return std::nullopt;
}

} // namespace crackmono
