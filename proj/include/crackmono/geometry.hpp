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

#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace crackmono {

using Vec2 = Eigen::Vector2d;
using Edge = std::array<int, 2>;
using Triangle = std::array<int, 3>;

/// Conforming triangulation of a polygonal body with a marked boundary part.
///
/// Triangles are counter-clockwise. Boundary edges are oriented as in their
/// owning triangle, so the body lies to the left and the outward normal points
/// to the right of each edge.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<Edge> boundary_edges;
    std::vector<Edge> gamma_edges;

    double signed_area(int t) const;
    Vec2 centroid(int t) const;
    double max_edge_length() const;
    double diameter() const;
};

/// Throws InputError naming the first violated mesh invariant.
void check_mesh(const Mesh& mesh);

/// Structured rectangle [0,width]x[0,height]; every cell is split along its
/// rising diagonal. Gamma defaults to the full boundary.
Mesh build_rect_mesh(double width, double height, double target_h);

/// Polygonal disk centred at the origin made of `rings` concentric rings;
/// ring k carries 6k vertices, giving 6*rings^2 triangles.
Mesh build_disk_mesh(double radius, int rings);

/// Uniform refinement: every triangle is split into four.
Mesh refine_uniform(const Mesh& mesh);

// Boundary-arc descriptions used to mark Gamma. An edge is selected when its
// midpoint satisfies the predicate.
struct FullBoundary {};
struct BoxSelector {
    Vec2 min;
    Vec2 max;
};
/// Polar angle window about `center`, measured counter-clockwise from
/// `from` to `to` (radians, wraps through 2*pi).
struct AngleSelector {
    Vec2 center{0.0, 0.0};
    double from = 0.0;
    double to = 0.0;
};
using GammaSelector = std::variant<FullBoundary, BoxSelector, AngleSelector>;

Mesh mark_gamma(Mesh mesh, const GammaSelector& selector);

enum class CrackKind { insulating, conducting };

std::string to_string(CrackKind kind);
CrackKind crack_kind_from_string(const std::string& name);

struct CrackComponent {
    std::vector<int> chain; ///< vertex indices along interior mesh edges
    CrackKind kind = CrackKind::insulating;
};

struct CrackSet {
    std::vector<CrackComponent> components;

    bool empty() const { return components.empty(); }
    int count(CrackKind kind) const;
    /// Components of one kind, in their original order.
    CrackSet only(CrackKind kind) const;
    /// All edges of all components (or of one kind).
    std::vector<Edge> edges() const;
    std::vector<Edge> edges(CrackKind kind) const;
};

/// Throws InputError naming the first violated crack invariant.
void check_crack_set(const Mesh& mesh, const CrackSet& cracks);

struct EmbedResult {
    Mesh mesh;
    CrackSet cracks;
};

/// Splits mesh edges along `polyline` until a chain of mesh edges follows it
/// (vertices within 0.1 of the local edge length of the polyline), then
/// appends the chain to `existing` as a new component.
EmbedResult embed_crack(const Mesh& mesh, std::span<const Vec2> polyline, CrackKind kind,
                        const CrackSet& existing = {});

/// Vertex chain along existing collinear mesh edges from the vertex at `from`
/// to the vertex at `to`. Throws InputError if there is no such chain.
std::vector<int> find_edge_chain(const Mesh& mesh, const Vec2& from, const Vec2& to);

/// Reusable form of find_edge_chain for many queries on one mesh. Holds a
/// pointer to the mesh, which must outlive it.
class EdgeChainFinder {
public:
    explicit EdgeChainFinder(const Mesh& mesh);

    std::optional<int> vertex_at(const Vec2& p) const;
    std::vector<int> operator()(const Vec2& from, const Vec2& to) const;

private:
    std::pair<long long, long long> key(const Vec2& p) const;

    const Mesh* mesh_;
    double tol_ = 0.0;
    std::vector<std::vector<int>> neighbours_;
    std::multimap<std::pair<long long, long long>, int> by_position_;
};

/// Gamma as an ordered curve with its P1 boundary mass matrix.
struct GammaTrace {
    std::vector<int> nodes;        ///< mesh vertices, ordered along the boundary
    std::vector<double> arclength; ///< arc length of each node from nodes[0]
    Eigen::SparseMatrix<double> mass;
    double length = 0.0;
    bool closed = false;

    int size() const { return static_cast<int>(nodes.size()); }
    /// Integral of a nodal function over Gamma.
    double integral(const Eigen::VectorXd& values) const;
    double mean(const Eigen::VectorXd& values) const { return integral(values) / length; }
    double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

/// Ordered Gamma nodes. A closed loop starts at the lowest-then-leftmost
/// node; an open arc starts at its counter-clockwise first end.
GammaTrace gamma_trace(const Mesh& mesh);

/// Square pixels tiling [origin, origin + (nx, ny) * h]. Each triangle is
/// assigned to the pixel holding its centroid (or -1 outside the grid).
struct PixelGrid {
    Vec2 origin{0.0, 0.0};
    int nx = 0;
    int ny = 0;
    double h = 0.0;
    std::vector<int> triangle_pixel;
    std::vector<std::vector<int>> pixel_triangles;
    /// Pixel square lies in the open body at positive distance from its boundary.
    std::vector<char> interior;

    int size() const { return nx * ny; }
    int index(int i, int j) const { return j * nx + i; }
    int column(int p) const { return p % nx; }
    int row(int p) const { return p / nx; }
    Vec2 center(int p) const;
    Vec2 lower_corner(int p) const;
};

PixelGrid build_pixel_grid(const Mesh& mesh, const Vec2& origin, int nx, int ny, double h);

/// Union of grid pixels used as a test inclusion.
struct PixelSet {
    std::shared_ptr<const PixelGrid> grid;
    std::vector<char> members;

    PixelSet() = default;
    explicit PixelSet(std::shared_ptr<const PixelGrid> g);

    bool contains(int p) const { return members[p] != 0; }
    void insert(int p) { members[p] = 1; }
    void erase(int p) { members[p] = 0; }
    int count() const;
    bool empty() const { return count() == 0; }
    std::vector<int> indices() const;
    /// Per-triangle membership of the pixel union.
    std::vector<char> triangle_mask(int num_triangles) const;

    bool operator==(const PixelSet& other) const { return members == other.members; }
};

/// All interior pixels of the grid (the widest admissible start set).
PixelSet interior_pixels(std::shared_ptr<const PixelGrid> grid);

/// Adds every pixel within `radius` (Chebyshev, in pixels) of a member.
PixelSet dilate(const PixelSet& set, int radius);

bool pixelset_is_admissible(const PixelSet& set);

/// Member pixel with an edge neighbour outside the set (or on the grid border).
bool is_boundary_pixel(const PixelSet& set, int p);

/// Every admissible set obtained by removing one boundary pixel, in row-major
/// order of the removed pixel.
std::vector<PixelSet> peel_candidates(const PixelSet& set);

/// Pixels whose closed square meets the crack polylines.
PixelSet pixels_meeting(std::shared_ptr<const PixelGrid> grid, const Mesh& mesh,
                        const CrackSet& cracks);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// Distance from `p` to the union of crack edges.
double distance_to_cracks(const Mesh& mesh, const CrackSet& cracks, const Vec2& p);

} // namespace crackmono
