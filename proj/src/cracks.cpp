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

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "crackmono/errors.hpp"
#include "crackmono/geometry.hpp"
#include "mesh_internal.hpp"

namespace crackmono {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
           d4 != 0;
}

} // namespace

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + s * ab)).norm();
}

double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    if (segments_cross(a, b, c, d)) return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

std::string to_string(CrackKind kind) {
    return kind == CrackKind::insulating ? "insulating" : "conducting";
}

CrackKind crack_kind_from_string(const std::string& name) {
    if (name == "insulating") return CrackKind::insulating;
    if (name == "conducting") return CrackKind::conducting;
    throw InputError("unknown crack kind '" + name + "'");
}

int CrackSet::count(CrackKind kind) const {
    return static_cast<int>(std::count_if(components.begin(), components.end(),
                                          [kind](const auto& c) { return c.kind == kind; }));
}

CrackSet CrackSet::only(CrackKind kind) const {
    CrackSet out;
    for (const auto& c : components) {
        if (c.kind == kind) out.components.push_back(c);
    }
    return out;
}

std::vector<Edge> CrackSet::edges() const {
    std::vector<Edge> out;
    for (const auto& c : components) {
        for (std::size_t k = 0; k + 1 < c.chain.size(); ++k) out.push_back({c.chain[k], c.chain[k + 1]});
    }
    return out;
}

std::vector<Edge> CrackSet::edges(CrackKind kind) const { return only(kind).edges(); }

double distance_to_cracks(const Mesh& mesh, const CrackSet& cracks, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : cracks.edges()) {
        best = std::min(best, point_segment_distance(p, mesh.vertices[e[0]], mesh.vertices[e[1]]));
    }
    return best;
}

void check_crack_set(const Mesh& mesh, const CrackSet& cracks) {
    const int nv = static_cast<int>(mesh.vertices.size());
    std::unordered_set<std::uint64_t> mesh_edges;
    for (const auto& tri : mesh.triangles) {
        for (int k = 0; k < 3; ++k) mesh_edges.insert(detail::edge_key(tri[k], tri[(k + 1) % 3]));
    }
    std::unordered_set<int> boundary_vertices;
    for (const auto& e : mesh.boundary_edges) boundary_vertices.insert(e[0]);
    const double eps = 1e-12 * mesh.diameter();

    std::unordered_map<int, int> owner;
    for (int ci = 0; ci < static_cast<int>(cracks.components.size()); ++ci) {
        const auto& chain = cracks.components[ci].chain;
        if (chain.size() < 2) throw InputError("crack component needs at least one edge");
        for (std::size_t k = 0; k < chain.size(); ++k) {
            const int v = chain[k];
            if (v < 0 || v >= nv) throw InputError("crack chain references a missing vertex");
            if (boundary_vertices.count(v) || detail::distance_to_boundary(mesh, mesh.vertices[v]) <= eps) {
                throw InputError("crack touches the boundary");
            }
            const auto [it, fresh] = owner.emplace(v, ci);
            if (!fresh) {
                throw InputError(it->second == ci ? "crack chain is not simple"
                                                  : "crack components share a vertex");
            }
            if (k + 1 < chain.size() && !mesh_edges.count(detail::edge_key(v, chain[k + 1]))) {
                throw InputError("crack chain step is not a mesh edge");
            }
        }
    }
    // Separation between components.
    for (std::size_t i = 0; i < cracks.components.size(); ++i) {
        for (std::size_t j = i + 1; j < cracks.components.size(); ++j) {
            const auto& ci = cracks.components[i].chain;
            const auto& cj = cracks.components[j].chain;
            for (std::size_t a = 0; a + 1 < ci.size(); ++a) {
                for (std::size_t b = 0; b + 1 < cj.size(); ++b) {
                    const double d = segment_segment_distance(
                        mesh.vertices[ci[a]], mesh.vertices[ci[a + 1]], mesh.vertices[cj[b]],
                        mesh.vertices[cj[b + 1]]);
                    if (d <= eps) throw InputError("crack components are not separated");
                }
            }
        }
    }
    // The body minus the cracks stays connected.
    std::unordered_set<std::uint64_t> cut;
    for (const auto& e : cracks.edges()) cut.insert(detail::edge_key(e[0], e[1]));
    std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) edge_tris[detail::edge_key(tri[k], tri[(k + 1) % 3])].push_back(t);
    }
    std::vector<char> seen(mesh.triangles.size(), 0);
    std::queue<int> todo;
    todo.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!todo.empty()) {
        const int t = todo.front();
        todo.pop();
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const auto key = detail::edge_key(tri[k], tri[(k + 1) % 3]);
            if (cut.count(key)) continue;
            for (int s : edge_tris[key]) {
                if (!seen[s]) {
                    seen[s] = 1;
                    ++reached;
                    todo.push(s);
                }
            }
        }
    }
    if (reached != mesh.triangles.size()) throw InputError("cracks disconnect the body");
}

namespace {

/// Incremental edge/triangle splitting that keeps the mesh conforming.
class MeshEditor {
public:
    explicit MeshEditor(Mesh mesh) : mesh_(std::move(mesh)), vt_(detail::vertex_triangles(mesh_)) {}

    Mesh& mesh() { return mesh_; }
    const std::vector<int>& triangles_at(int v) const { return vt_[v]; }

    int split_edge(int a, int b, const Vec2& p) {
        const int m = add_vertex(p);
        std::vector<int> shared;
        for (int t : vt_[a]) {
            const auto& tri = mesh_.triangles[t];
            if (std::find(tri.begin(), tri.end(), b) != tri.end()) shared.push_back(t);
        }
        if (shared.empty()) throw InputError("internal: split of a non-edge");
        for (int t : shared) {
            auto tri = mesh_.triangles[t];
            int k = 0;
            while (!((tri[k] == a && tri[(k + 1) % 3] == b) || (tri[k] == b && tri[(k + 1) % 3] == a))) ++k;
            const int p0 = tri[k];
            const int p1 = tri[(k + 1) % 3];
            const int p2 = tri[(k + 2) % 3];
            mesh_.triangles[t] = {p0, m, p2};
            add_triangle({m, p1, p2});
            erase(vt_[p1], t);
            vt_[m].push_back(t);
        }
        split_listed(mesh_.boundary_edges, a, b, m);
        split_listed(mesh_.gamma_edges, a, b, m);
        return m;
    }

    int split_triangle(int t, const Vec2& p) {
        const int m = add_vertex(p);
        const auto tri = mesh_.triangles[t];
        mesh_.triangles[t] = {tri[0], tri[1], m};
        vt_[m].push_back(t);
        erase(vt_[tri[2]], t);
        add_triangle({tri[1], tri[2], m});
        add_triangle({tri[2], tri[0], m});
        return m;
    }

    /// Inserts `p` into triangle `t` (which must contain it), snapping to a
    /// nearby vertex or edge.
    int insert_in(int t, const Vec2& p) {
        const auto tri = mesh_.triangles[t];
        double longest = 0.0;
        for (int k = 0; k < 3; ++k) {
            longest = std::max(longest, (mesh_.vertices[tri[k]] - mesh_.vertices[tri[(k + 1) % 3]]).norm());
        }
        const double snap = 0.1 * longest;
        for (int v : tri) {
            if ((mesh_.vertices[v] - p).norm() < snap) return v;
        }
        for (int k = 0; k < 3; ++k) {
            const Vec2& a = mesh_.vertices[tri[k]];
            const Vec2& b = mesh_.vertices[tri[(k + 1) % 3]];
            if (point_segment_distance(p, a, b) < snap) {
                const Vec2 ab = b - a;
                const Vec2 proj = a + std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0) * ab;
                return split_edge(tri[k], tri[(k + 1) % 3], proj);
            }
        }
        return split_triangle(t, p);
    }

    int locate(const Vec2& p) const {
        for (int t = 0; t < static_cast<int>(mesh_.triangles.size()); ++t) {
            const auto& tri = mesh_.triangles[t];
            const Vec2& a = mesh_.vertices[tri[0]];
            const Vec2& b = mesh_.vertices[tri[1]];
            const Vec2& c = mesh_.vertices[tri[2]];
            const double area = cross(b - a, c - a);
            const double tol = -1e-12 * area;
            if (cross(b - a, p - a) >= tol && cross(c - b, p - b) >= tol && cross(a - c, p - c) >= tol) {
                return t;
            }
        }
        return -1;
    }

private:
    int add_vertex(const Vec2& p) {
        mesh_.vertices.push_back(p);
        vt_.emplace_back();
        return static_cast<int>(mesh_.vertices.size()) - 1;
    }

    int add_triangle(const Triangle& tri) {
        const int t = static_cast<int>(mesh_.triangles.size());
        mesh_.triangles.push_back(tri);
        for (int v : tri) vt_[v].push_back(t);
        return t;
    }

    static void erase(std::vector<int>& list, int value) {
        list.erase(std::remove(list.begin(), list.end(), value), list.end());
    }

    static void split_listed(std::vector<Edge>& edges, int a, int b, int m) {
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const Edge e = edges[k];
            if ((e[0] == a && e[1] == b) || (e[0] == b && e[1] == a)) {
                edges[k] = {e[0], m};
                edges.insert(edges.begin() + static_cast<std::ptrdiff_t>(k) + 1, Edge{m, e[1]});
                return;
            }
        }
    }

    Mesh mesh_;
    std::vector<std::vector<int>> vt_;
};

void validate_polyline(const Mesh& mesh, std::span<const Vec2> polyline) {
    if (polyline.size() < 2) throw InputError("crack polyline needs at least two points");
    const double eps = 1e-12 * mesh.diameter();
    for (std::size_t k = 0; k < polyline.size(); ++k) {
        if (!polyline[k].allFinite()) throw InputError("crack polyline has non-finite coordinates");
        if (!detail::point_in_body(mesh, polyline[k])) throw InputError("crack point outside the body");
        if (k + 1 < polyline.size() && (polyline[k + 1] - polyline[k]).norm() <= eps) {
            throw InputError("consecutive crack points coincide");
        }
    }
    for (std::size_t k = 0; k + 1 < polyline.size(); ++k) {
        for (const auto& e : mesh.boundary_edges) {
            if (segment_segment_distance(polyline[k], polyline[k + 1], mesh.vertices[e[0]],
                                         mesh.vertices[e[1]]) <= eps) {
                throw InputError("crack touches the boundary");
            }
        }
        for (std::size_t j = k + 2; j + 1 < polyline.size(); ++j) {
            if (segment_segment_distance(polyline[k], polyline[k + 1], polyline[j], polyline[j + 1]) <= eps) {
                throw InputError("crack polyline intersects itself");
            }
        }
    }
}

} // namespace

EmbedResult embed_crack(const Mesh& mesh, std::span<const Vec2> polyline, CrackKind kind,
                        const CrackSet& existing) {
    validate_polyline(mesh, polyline);
    MeshEditor editor(mesh);
    const int first_tri = editor.locate(polyline[0]);
    if (first_tri < 0) throw InputError("crack point outside the mesh");
    int cur = editor.insert_in(first_tri, polyline[0]);
    std::vector<int> chain{cur};

    const std::size_t guard = 64 * (mesh.triangles.size() + 16);
    std::size_t steps = 0;
    for (std::size_t seg = 1; seg < polyline.size(); ++seg) {
        const Vec2 target = polyline[seg];
        while (true) {
            if (++steps > guard) throw InputError("crack embedding did not terminate");
            Mesh& m = editor.mesh();
            const Vec2 c = m.vertices[cur];
            const Vec2 d = target - c;
            if (d.norm() <= 1e-12 * m.diameter()) break;
            const Vec2 dir = d.normalized();
            int next = -1;
            bool done = false;
            const std::vector<int> fan = editor.triangles_at(cur);
            for (int t : fan) {
                const auto tri = m.triangles[t];
                int k = 0;
                while (tri[k] != cur) ++k;
                const int v1 = tri[(k + 1) % 3];
                const int v2 = tri[(k + 2) % 3];
                const Vec2 e1 = m.vertices[v1] - c;
                const Vec2 e2 = m.vertices[v2] - c;
                const double s1 = cross(e1.normalized(), dir);
                const double s2 = cross(dir, e2.normalized());
                if (s1 < -1e-12 || s2 < -1e-12) continue;
                // Direction runs along an existing edge.
                for (const auto& [v, e, s] : {std::tuple{v1, e1, s1}, std::tuple{v2, e2, s2}}) {
                    if (std::abs(s) <= 1e-10 && e.dot(dir) > 0.0) {
                        if (d.norm() < 0.1 * e.norm()) {
                            next = cur;
                            done = true;
                        } else if (d.norm() >= e.norm() * (1.0 - 0.1)) {
                            next = v;
                            if (d.norm() <= e.norm() * (1.0 + 0.1)) done = true;
                        } else {
                            next = editor.split_edge(cur, v, target);
                            done = true;
                        }
                        break;
                    }
                }
                if (next >= 0) break;
                // Crossing of the opposite edge v1-v2.
                const Vec2 a = m.vertices[v1];
                const Vec2 b = m.vertices[v2];
                const Vec2 ab = b - a;
                const double denom = cross(d, ab);
                if (std::abs(denom) <= 0.0) continue;
                const double s = cross(a - c, ab) / denom;
                if (s >= 1.0 - 1e-12) {
                    next = editor.insert_in(t, target);
                    done = true;
                    break;
                }
                const Vec2 x = c + s * d;
                const double snap = 0.1 * ab.norm();
                if ((x - a).norm() < snap) {
                    next = v1;
                } else if ((x - b).norm() < snap) {
                    next = v2;
                } else {
                    bool boundary = false;
                    for (const auto& be : m.boundary_edges) {
                        if ((be[0] == v1 && be[1] == v2) || (be[0] == v2 && be[1] == v1)) boundary = true;
                    }
                    if (boundary) throw InputError("crack leaves the body");
                    next = editor.split_edge(v1, v2, x);
                }
                break;
            }
            if (next < 0) throw InputError("crack embedding lost its way");
            if (next != cur) chain.push_back(next);
            cur = next;
            if (done) break;
        }
    }

    EmbedResult result;
    result.mesh = std::move(editor.mesh());
    result.cracks = existing;
    result.cracks.components.push_back({chain, kind});
    check_crack_set(result.mesh, result.cracks);
    return result;
}

EdgeChainFinder::EdgeChainFinder(const Mesh& mesh) : mesh_(&mesh) {
    neighbours_.resize(mesh.vertices.size());
    for (const auto& tri : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            auto& list = neighbours_[tri[k]];
            for (int j = 1; j < 3; ++j) {
                const int w = tri[(k + j) % 3];
                if (std::find(list.begin(), list.end(), w) == list.end()) list.push_back(w);
            }
        }
    }
    tol_ = 1e-9 * mesh.diameter();
    for (int v = 0; v < static_cast<int>(mesh.vertices.size()); ++v) {
        by_position_.emplace(key(mesh.vertices[v]), v);
    }
}

std::pair<long long, long long> EdgeChainFinder::key(const Vec2& p) const {
    return {std::llround(p.x() / (100.0 * tol_)), std::llround(p.y() / (100.0 * tol_))};
}

std::optional<int> EdgeChainFinder::vertex_at(const Vec2& p) const {
    const auto [kx, ky] = key(p);
    for (long long dx = -1; dx <= 1; ++dx) {
        for (long long dy = -1; dy <= 1; ++dy) {
            const auto range = by_position_.equal_range({kx + dx, ky + dy});
            for (auto it = range.first; it != range.second; ++it) {
                if ((mesh_->vertices[it->second] - p).norm() <= tol_) return it->second;
            }
        }
    }
    return std::nullopt;
}

std::vector<int> EdgeChainFinder::operator()(const Vec2& from, const Vec2& to) const {
    const auto start = vertex_at(from);
    const auto stop = vertex_at(to);
    if (!start || !stop) throw InputError("edge chain endpoint is not a mesh vertex");
    std::vector<int> chain{*start};
    int cur = *start;
    while (cur != *stop) {
        const Vec2 c = mesh_->vertices[cur];
        const Vec2 d = to - c;
        int best = -1;
        double best_len = std::numeric_limits<double>::infinity();
        for (int w : neighbours_[cur]) {
            const Vec2 e = mesh_->vertices[w] - c;
            if (e.dot(d) <= 0.0) continue;
            if (std::abs(cross(e, d)) > tol_ * d.norm()) continue;
            if (e.norm() > d.norm() + tol_) continue;
            if (e.norm() < best_len) {
                best_len = e.norm();
                best = w;
            }
        }
        if (best < 0) throw InputError("no mesh edge chain between the given points");
        chain.push_back(best);
        cur = best;
    }
    return chain;
}

std::vector<int> find_edge_chain(const Mesh& mesh, const Vec2& from, const Vec2& to) {
    return EdgeChainFinder(mesh)(from, to);
}

} // namespace crackmono
