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

#include "crackmono/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>

#include "crackmono/errors.hpp"
#include "mesh_internal.hpp"

namespace crackmono {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace

double Mesh::signed_area(int t) const {
    const auto& tri = triangles[t];
    const Vec2& a = vertices[tri[0]];
    return 0.5 * cross(vertices[tri[1]] - a, vertices[tri[2]] - a);
}

Vec2 Mesh::centroid(int t) const {
    const auto& tri = triangles[t];
    return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

double Mesh::max_edge_length() const {
    double longest = 0.0;
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) {
            longest = std::max(longest, (vertices[tri[k]] - vertices[tri[(k + 1) % 3]]).norm());
        }
    }
    return longest;
}

double Mesh::diameter() const {
    if (vertices.empty()) return 0.0;
    Vec2 lo = vertices.front();
    Vec2 hi = vertices.front();
    for (const auto& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
}

namespace detail {

std::uint64_t edge_key(int a, int b) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (lo << 32) | hi;
}

std::vector<Edge> boundary_loops(const std::vector<Triangle>& triangles) {
    std::unordered_map<std::uint64_t, int> uses;
    uses.reserve(triangles.size() * 3);
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) ++uses[edge_key(tri[k], tri[(k + 1) % 3])];
    }
    std::map<int, int> next;
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k];
            const int b = tri[(k + 1) % 3];
            if (uses[edge_key(a, b)] == 1) next[a] = b;
        }
    }
    // Emit edges loop by loop so that consecutive entries chain head to tail.
    std::vector<Edge> edges;
    edges.reserve(next.size());
    std::map<int, bool> visited;
    for (const auto& [start, unused] : next) {
        if (visited[start]) continue;
        int v = start;
        while (!visited[v]) {
            visited[v] = true;
            const int w = next.at(v);
            edges.push_back({v, w});
            v = w;
        }
    }
    return edges;
}

std::vector<std::vector<int>> vertex_triangles(const Mesh& mesh) {
    std::vector<std::vector<int>> result(mesh.vertices.size());
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        for (int v : mesh.triangles[t]) result[v].push_back(t);
    }
    return result;
}

bool point_in_body(const Mesh& mesh, const Vec2& p) {
    int winding = 0;
    for (const auto& e : mesh.boundary_edges) {
        const Vec2& a = mesh.vertices[e[0]];
        const Vec2& b = mesh.vertices[e[1]];
        if (a.y() <= p.y()) {
            if (b.y() > p.y() && cross(b - a, p - a) > 0.0) ++winding;
        } else if (b.y() <= p.y() && cross(b - a, p - a) < 0.0) {
            --winding;
        }
    }
    return winding != 0;
}

double distance_to_boundary(const Mesh& mesh, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : mesh.boundary_edges) {
        best = std::min(best, point_segment_distance(p, mesh.vertices[e[0]], mesh.vertices[e[1]]));
    }
    return best;
}

} // namespace detail

namespace {

void check_gamma(const Mesh& mesh) {
    if (mesh.gamma_edges.empty()) throw InputError("gamma is empty");
    std::unordered_map<std::uint64_t, bool> on_boundary;
    for (const auto& e : mesh.boundary_edges) on_boundary[detail::edge_key(e[0], e[1])] = true;
    std::map<int, int> next;
    std::map<int, int> incoming;
    for (const auto& e : mesh.gamma_edges) {
        if (!on_boundary.count(detail::edge_key(e[0], e[1]))) {
            throw InputError("gamma edge is not a boundary edge");
        }
        if (next.count(e[0])) throw InputError("gamma edges branch");
        next[e[0]] = e[1];
        ++incoming[e[1]];
    }
    int start = next.begin()->first;
    int open_ends = 0;
    for (const auto& [v, w] : next) {
        if (!incoming.count(v)) {
            start = v;
            ++open_ends;
        }
    }
    if (open_ends > 1) throw InputError("gamma is not connected along the boundary");
    std::size_t walked = 0;
    int v = start;
    while (next.count(v) && walked <= mesh.gamma_edges.size()) {
        v = next[v];
        ++walked;
        if (v == start) break;
    }
    if (walked != mesh.gamma_edges.size()) {
        throw InputError("gamma is not connected along the boundary");
    }
}

} // namespace

void check_mesh(const Mesh& mesh) {
    if (mesh.triangles.empty()) throw InputError("mesh has no triangles");
    const int nv = static_cast<int>(mesh.vertices.size());
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        for (int v : mesh.triangles[t]) {
            if (v < 0 || v >= nv) throw InputError("triangle references a missing vertex");
        }
        if (!(mesh.signed_area(t) > 0.0)) {
            throw InputError("triangle " + std::to_string(t) + " has non-positive area");
        }
    }
    // Conformity: interior edges are shared by two opposite-oriented triangles.
    std::unordered_map<std::uint64_t, std::array<int, 2>> oriented;
    for (const auto& tri : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k];
            const int b = tri[(k + 1) % 3];
            auto& count = oriented[detail::edge_key(a, b)];
            ++count[a < b ? 0 : 1];
        }
    }
    std::size_t once = 0;
    for (const auto& [key, count] : oriented) {
        if (count[0] > 1 || count[1] > 1) throw InputError("mesh edge shared with equal orientation");
        if (count[0] + count[1] == 1) ++once;
    }
    if (once != mesh.boundary_edges.size()) {
        throw InputError("boundary edges do not match the once-used triangle edges");
    }
    std::map<int, int> out_degree;
    std::map<int, int> in_degree;
    for (const auto& e : mesh.boundary_edges) {
        const auto it = oriented.find(detail::edge_key(e[0], e[1]));
        if (it == oriented.end() || it->second[0] + it->second[1] != 1) {
            throw InputError("boundary edge is not a once-used triangle edge");
        }
        const bool forward = e[0] < e[1];
        if (it->second[forward ? 0 : 1] != 1) throw InputError("boundary edge orientation mismatch");
        ++out_degree[e[0]];
        ++in_degree[e[1]];
    }
    for (const auto& [v, d] : out_degree) {
        if (d != 1 || in_degree[v] != 1) throw InputError("boundary edges do not form closed loops");
    }
    // A hanging node shows up as a boundary vertex inside another boundary edge.
    const double tol = 1e-12 * mesh.diameter();
    for (const auto& e : mesh.boundary_edges) {
        const Vec2& a = mesh.vertices[e[0]];
        const Vec2& b = mesh.vertices[e[1]];
        for (const auto& [v, d] : out_degree) {
            if (v == e[0] || v == e[1]) continue;
            if (point_segment_distance(mesh.vertices[v], a, b) < tol) {
                throw InputError("hanging node on boundary edge");
            }
        }
    }
    check_gamma(mesh);
}

Mesh build_rect_mesh(double width, double height, double target_h) {
    if (!(width > 0.0) || !(height > 0.0) || !(target_h > 0.0) || !std::isfinite(width) ||
        !std::isfinite(height) || !std::isfinite(target_h)) {
        throw InputError("rectangle dimensions and target_h must be positive");
    }
    if (target_h > 0.5 * std::min(width, height) * (1.0 + 1e-12)) {
        throw InputError("target_h must not exceed half the shorter side");
    }
    const int nx = static_cast<int>(std::ceil(width / target_h - 1e-9));
    const int ny = static_cast<int>(std::ceil(height / target_h - 1e-9));
    Mesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            mesh.vertices.emplace_back(width * i / nx, height * j / ny);
        }
    }
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    mesh.boundary_edges = detail::boundary_loops(mesh.triangles);
    mesh.gamma_edges = mesh.boundary_edges;
    return mesh;
}

Mesh build_disk_mesh(double radius, int rings) {
    if (!(radius > 0.0) || rings < 1) throw InputError("disk needs positive radius and rings >= 1");
    Mesh mesh;
    mesh.vertices.emplace_back(0.0, 0.0);
    std::vector<std::vector<int>> ring_ids{{0}};
    for (int k = 1; k <= rings; ++k) {
        const int n = 6 * k;
        std::vector<int> ids;
        const double r = radius * k / rings;
        for (int j = 0; j < n; ++j) {
            const double theta = 2.0 * std::numbers::pi * j / n;
            ids.push_back(static_cast<int>(mesh.vertices.size()));
            mesh.vertices.emplace_back(r * std::cos(theta), r * std::sin(theta));
        }
        ring_ids.push_back(std::move(ids));
    }
    for (int k = 1; k <= rings; ++k) {
        const auto& inner = ring_ids[k - 1];
        const auto& outer = ring_ids[k];
        const int n0 = static_cast<int>(inner.size());
        const int n1 = static_cast<int>(outer.size());
        if (k == 1) {
            for (int b = 0; b < n1; ++b) mesh.triangles.push_back({0, outer[b], outer[(b + 1) % n1]});
            continue;
        }
        // Merge the two rings by angle; each step consumes one vertex of one ring.
        int a = 0;
        int b = 0;
        while (a < n0 || b < n1) {
            const double next_in = static_cast<double>(a + 1) / n0;
            const double next_out = static_cast<double>(b + 1) / n1;
            if (b < n1 && (a == n0 || next_out <= next_in)) {
                mesh.triangles.push_back({inner[a % n0], outer[b], outer[(b + 1) % n1]});
                ++b;
            } else {
                mesh.triangles.push_back({inner[a], outer[b % n1], inner[(a + 1) % n0]});
                ++a;
            }
        }
    }
    mesh.boundary_edges = detail::boundary_loops(mesh.triangles);
    mesh.gamma_edges = mesh.boundary_edges;
    return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
    Mesh fine;
    fine.vertices = mesh.vertices;
    std::unordered_map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = detail::edge_key(a, b);
        const auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int id = static_cast<int>(fine.vertices.size());
        fine.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
        midpoint.emplace(key, id);
        return id;
    };
    fine.triangles.reserve(mesh.triangles.size() * 4);
    for (const auto& tri : mesh.triangles) {
        const int a = tri[0];
        const int b = tri[1];
        const int c = tri[2];
        const int ab = mid(a, b);
        const int bc = mid(b, c);
        const int ca = mid(c, a);
        fine.triangles.push_back({a, ab, ca});
        fine.triangles.push_back({ab, b, bc});
        fine.triangles.push_back({ca, bc, c});
        fine.triangles.push_back({ab, bc, ca});
    }
    auto split = [&](const std::vector<Edge>& edges) {
        std::vector<Edge> out;
        out.reserve(edges.size() * 2);
        for (const auto& e : edges) {
            const int m = mid(e[0], e[1]);
            out.push_back({e[0], m});
            out.push_back({m, e[1]});
        }
        return out;
    };
    fine.boundary_edges = split(mesh.boundary_edges);
    fine.gamma_edges = split(mesh.gamma_edges);
    return fine;
}

namespace {

bool selected(const GammaSelector& selector, const Vec2& p) {
    return std::visit(
        [&p](const auto& s) -> bool {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, FullBoundary>) {
                return true;
            } else if constexpr (std::is_same_v<S, BoxSelector>) {
                return p.x() >= s.min.x() && p.x() <= s.max.x() && p.y() >= s.min.y() &&
                       p.y() <= s.max.y();
            } else {
                constexpr double two_pi = 2.0 * std::numbers::pi;
                const Vec2 d = p - s.center;
                auto wrap = [](double a) {
                    a = std::fmod(a, two_pi);
                    return a < 0.0 ? a + two_pi : a;
                };
                const double phi = wrap(std::atan2(d.y(), d.x()) - s.from);
                return phi <= wrap(s.to - s.from);
            }
        },
        selector);
}

} // namespace

Mesh mark_gamma(Mesh mesh, const GammaSelector& selector) {
    std::vector<Edge> gamma;
    for (const auto& e : mesh.boundary_edges) {
        const Vec2 m = 0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]);
        if (selected(selector, m)) gamma.push_back(e);
    }
    if (gamma.empty()) throw InputError("gamma selector matches no boundary edge");
    mesh.gamma_edges = std::move(gamma);
    check_gamma(mesh);
    return mesh;
}

double GammaTrace::integral(const Eigen::VectorXd& values) const {
    return (mass * values).sum();
}

double GammaTrace::inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(mass * b);
}

GammaTrace gamma_trace(const Mesh& mesh) {
    check_gamma(mesh);
    std::map<int, int> next;
    std::map<int, int> incoming;
    for (const auto& e : mesh.gamma_edges) {
        next[e[0]] = e[1];
        ++incoming[e[1]];
    }
    GammaTrace trace;
    int start = -1;
    for (const auto& [v, w] : next) {
        if (!incoming.count(v)) start = v;
    }
    trace.closed = start < 0;
    if (trace.closed) {
        start = next.begin()->first;
        for (const auto& [v, w] : next) {
            const Vec2& p = mesh.vertices[v];
            const Vec2& q = mesh.vertices[start];
            if (p.y() < q.y() || (p.y() == q.y() && p.x() < q.x())) start = v;
        }
    }
    int v = start;
    double s = 0.0;
    while (true) {
        trace.nodes.push_back(v);
        trace.arclength.push_back(s);
        const auto it = next.find(v);
        if (it == next.end()) break;
        s += (mesh.vertices[it->second] - mesh.vertices[v]).norm();
        v = it->second;
        if (v == start) break;
    }
    trace.length = s;
    const int n = trace.size();
    std::unordered_map<int, int> local;
    for (int k = 0; k < n; ++k) local[trace.nodes[k]] = k;
    std::vector<Eigen::Triplet<double>> entries;
    for (const auto& e : mesh.gamma_edges) {
        const int a = local.at(e[0]);
        const int b = local.at(e[1]);
        const double len = (mesh.vertices[e[1]] - mesh.vertices[e[0]]).norm();
        entries.emplace_back(a, a, len / 3.0);
        entries.emplace_back(b, b, len / 3.0);
        entries.emplace_back(a, b, len / 6.0);
        entries.emplace_back(b, a, len / 6.0);
    }
    trace.mass.resize(n, n);
    trace.mass.setFromTriplets(entries.begin(), entries.end());
    return trace;
}

} // namespace crackmono
