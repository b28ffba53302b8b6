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
#include <numeric>
#include <queue>

#include "crackmono/errors.hpp"
#include "crackmono/geometry.hpp"
#include "mesh_internal.hpp"

namespace crackmono {

Vec2 PixelGrid::lower_corner(int p) const {
    return origin + h * Vec2(column(p), row(p));
}

Vec2 PixelGrid::center(int p) const { return lower_corner(p) + Vec2(0.5 * h, 0.5 * h); }

PixelGrid build_pixel_grid(const Mesh& mesh, const Vec2& origin, int nx, int ny, double h) {
    if (nx < 1 || ny < 1 || !(h > 0.0)) throw InputError("pixel grid needs nx, ny >= 1 and h > 0");
    PixelGrid grid;
    grid.origin = origin;
    grid.nx = nx;
    grid.ny = ny;
    grid.h = h;
    grid.pixel_triangles.resize(static_cast<std::size_t>(nx * ny));
    grid.triangle_pixel.assign(mesh.triangles.size(), -1);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const Vec2 c = (mesh.centroid(t) - origin) / h;
        const int i = static_cast<int>(std::floor(c.x()));
        const int j = static_cast<int>(std::floor(c.y()));
        if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
        const int p = grid.index(i, j);
        grid.triangle_pixel[t] = p;
        grid.pixel_triangles[p].push_back(t);
    }
    grid.interior.assign(static_cast<std::size_t>(nx * ny), 0);
    const double eps = 1e-12 * h;
    for (int p = 0; p < grid.size(); ++p) {
        if (!detail::point_in_body(mesh, grid.center(p))) continue;
        const Vec2 lo = grid.lower_corner(p);
        const std::array<Vec2, 4> corners{lo, lo + Vec2(h, 0), lo + Vec2(h, h), lo + Vec2(0, h)};
        bool clear = true;
        for (int k = 0; k < 4 && clear; ++k) {
            for (const auto& e : mesh.boundary_edges) {
                if (segment_segment_distance(corners[k], corners[(k + 1) % 4], mesh.vertices[e[0]],
                                             mesh.vertices[e[1]]) <= eps) {
                    clear = false;
                    break;
                }
            }
        }
        grid.interior[p] = clear ? 1 : 0;
    }
    return grid;
}

PixelSet::PixelSet(std::shared_ptr<const PixelGrid> g) : grid(std::move(g)) {
    members.assign(static_cast<std::size_t>(grid->size()), 0);
}

int PixelSet::count() const {
    return static_cast<int>(std::count(members.begin(), members.end(), 1));
}

std::vector<int> PixelSet::indices() const {
    std::vector<int> out;
    for (int p = 0; p < static_cast<int>(members.size()); ++p) {
        if (members[p]) out.push_back(p);
    }
    return out;
}

std::vector<char> PixelSet::triangle_mask(int num_triangles) const {
    std::vector<char> mask(static_cast<std::size_t>(num_triangles), 0);
    if (static_cast<int>(grid->triangle_pixel.size()) != num_triangles) {
        throw InputError("pixel grid was built for a different mesh");
    }
    for (int t = 0; t < num_triangles; ++t) {
        const int p = grid->triangle_pixel[t];
        if (p >= 0 && members[p]) mask[t] = 1;
    }
    return mask;
}

PixelSet interior_pixels(std::shared_ptr<const PixelGrid> grid) {
    PixelSet set(grid);
    for (int p = 0; p < grid->size(); ++p) set.members[p] = grid->interior[p];
    return set;
}

PixelSet dilate(const PixelSet& set, int radius) {
    const auto& g = *set.grid;
    PixelSet out(set.grid);
    for (int p : set.indices()) {
        const int i0 = g.column(p);
        const int j0 = g.row(p);
        for (int j = std::max(0, j0 - radius); j <= std::min(g.ny - 1, j0 + radius); ++j) {
            for (int i = std::max(0, i0 - radius); i <= std::min(g.nx - 1, i0 + radius); ++i) {
                out.insert(g.index(i, j));
            }
        }
    }
    return out;
}

namespace {

bool member_at(const PixelSet& set, int i, int j) {
    const auto& g = *set.grid;
    if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) return false;
    return set.contains(g.index(i, j));
}

} // namespace

bool pixelset_is_admissible(const PixelSet& set) {
    const auto& g = *set.grid;
    for (int p = 0; p < g.size(); ++p) {
        if (set.contains(p) && !g.interior[p]) return false;
    }
    // A 2x2 checkerboard window is the only corner-only contact pattern.
    for (int j = -1; j < g.ny; ++j) {
        for (int i = -1; i < g.nx; ++i) {
            const bool a = member_at(set, i, j);
            const bool b = member_at(set, i + 1, j);
            const bool c = member_at(set, i, j + 1);
            const bool d = member_at(set, i + 1, j + 1);
            if (a == d && b == c && a != b) return false;
        }
    }
    // The complement, joined through everything outside the grid, is edge-connected.
    std::vector<char> seen(static_cast<std::size_t>(g.size()), 0);
    std::queue<int> todo;
    for (int p = 0; p < g.size(); ++p) {
        const int i = g.column(p);
        const int j = g.row(p);
        const bool border = i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1;
        if (border && !set.contains(p)) {
            seen[p] = 1;
            todo.push(p);
        }
    }
    while (!todo.empty()) {
        const int p = todo.front();
        todo.pop();
        const int i = g.column(p);
        const int j = g.row(p);
        const std::array<std::array<int, 2>, 4> steps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (const auto& s : steps) {
            const int ni = i + s[0];
            const int nj = j + s[1];
            if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
            const int q = g.index(ni, nj);
            if (!seen[q] && !set.contains(q)) {
                seen[q] = 1;
                todo.push(q);
            }
        }
    }
    for (int p = 0; p < g.size(); ++p) {
        if (!set.contains(p) && !seen[p]) return false;
    }
    return true;
}

bool is_boundary_pixel(const PixelSet& set, int p) {
    if (!set.contains(p)) return false;
    const auto& g = *set.grid;
    const int i = g.column(p);
    const int j = g.row(p);
    return !member_at(set, i + 1, j) || !member_at(set, i - 1, j) || !member_at(set, i, j + 1) ||
           !member_at(set, i, j - 1);
}

std::vector<PixelSet> peel_candidates(const PixelSet& set) {
    std::vector<PixelSet> out;
    for (int p = 0; p < set.grid->size(); ++p) {
        if (!is_boundary_pixel(set, p)) continue;
        PixelSet next = set;
        next.erase(p);
        if (pixelset_is_admissible(next)) out.push_back(std::move(next));
    }
    return out;
}

namespace {

// Liang-Barsky clip of segment ab against the closed box [lo, hi].
bool segment_meets_box(const Vec2& a, const Vec2& b, const Vec2& lo, const Vec2& hi) {
    double t0 = 0.0;
    double t1 = 1.0;
    const Vec2 d = b - a;
    for (int axis = 0; axis < 2; ++axis) {
        const double p[2] = {-d[axis], d[axis]};
        const double q[2] = {a[axis] - lo[axis], hi[axis] - a[axis]};
        for (int k = 0; k < 2; ++k) {
            if (p[k] == 0.0) {
                if (q[k] < 0.0) return false;
            } else {
                const double r = q[k] / p[k];
                if (p[k] < 0.0) {
                    t0 = std::max(t0, r);
                } else {
                    t1 = std::min(t1, r);
                }
            }
        }
    }
    return t0 <= t1;
}

} // namespace

PixelSet pixels_meeting(std::shared_ptr<const PixelGrid> grid, const Mesh& mesh,
                        const CrackSet& cracks) {
    PixelSet out(grid);
    const auto edges = cracks.edges();
    for (int p = 0; p < grid->size(); ++p) {
        const Vec2 lo = grid->lower_corner(p);
        const Vec2 hi = lo + Vec2(grid->h, grid->h);
        for (const auto& e : edges) {
            if (segment_meets_box(mesh.vertices[e[0]], mesh.vertices[e[1]], lo, hi)) {
                out.insert(p);
                break;
            }
        }
    }
    return out;
}

} // namespace crackmono
