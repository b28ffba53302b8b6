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

#include "crackmono/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/IterativeLinearSolvers>

#include "crackmono/errors.hpp"
#include "mesh_internal.hpp"

namespace crackmono {

Conductivity Conductivity::constant(const Mesh& mesh, double value) {
    return {std::vector<double>(mesh.triangles.size(), value)};
}

double Conductivity::min() const { return *std::min_element(values.begin(), values.end()); }
double Conductivity::max() const { return *std::max_element(values.begin(), values.end()); }

void check_conductivity(const Mesh& mesh, const Conductivity& gamma0) {
    if (gamma0.values.size() != mesh.triangles.size()) {
        throw InputError("conductivity needs one value per triangle");
    }
    for (double g : gamma0.values) {
        if (!(g > 0.0) || !std::isfinite(g)) throw InputError("conductivity must be positive and finite");
    }
}

std::string Configuration::label() const {
    std::string out;
    auto append = [&out](const std::string& part) {
        if (!out.empty()) out += "+";
        out += part;
    };
    if (!cracks.empty()) {
        append("cracks(" + std::to_string(cracks.count(CrackKind::insulating)) + "i," +
               std::to_string(cracks.count(CrackKind::conducting)) + "c)");
    }
    if (excluded) append("excluded(" + std::to_string(excluded->count()) + "px)");
    if (frozen) append("frozen(" + std::to_string(frozen->count()) + "px)");
    return out.empty() ? "none" : out;
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) std::swap(a, b);
        parent_[a] = b;
    }

private:
    std::vector<int> parent_;
};

} // namespace

DofMap build_dofmap(const Mesh& mesh, const CrackSet& cracks, const std::optional<PixelSet>& excluded,
                    const std::optional<PixelSet>& frozen) {
    return build_dofmap(mesh, Configuration{cracks, excluded, frozen});
}

DofMap build_dofmap(const Mesh& mesh, const Configuration& config) {
    if (config.excluded && config.frozen) {
        throw InputError("excluded and frozen regions are mutually exclusive");
    }
    if (!config.cracks.empty()) check_crack_set(mesh, config.cracks);
    const int nt = static_cast<int>(mesh.triangles.size());
    const int nv = static_cast<int>(mesh.vertices.size());

    std::vector<char> excluded(static_cast<std::size_t>(nt), 0);
    std::vector<char> frozen(static_cast<std::size_t>(nt), 0);
    if (config.excluded) excluded = config.excluded->triangle_mask(nt);
    if (config.frozen) frozen = config.frozen->triangle_mask(nt);

    auto touched = [&](const std::vector<char>& mask) {
        std::vector<char> v(static_cast<std::size_t>(nv), 0);
        for (int t = 0; t < nt; ++t) {
            if (mask[t]) {
                for (int x : mesh.triangles[t]) v[x] = 1;
            }
        }
        return v;
    };
    if (config.excluded) {
        const auto hit = touched(excluded);
        for (const auto& c : config.cracks.components) {
            if (c.kind != CrackKind::conducting) continue;
            for (int v : c.chain) {
                if (hit[v]) throw InputError("excluded region overlaps a conducting crack");
            }
        }
    }
    if (config.frozen) {
        const auto hit = touched(frozen);
        for (const auto& c : config.cracks.components) {
            if (c.kind != CrackKind::insulating) continue;
            for (int v : c.chain) {
                if (hit[v]) throw InputError("frozen region overlaps an insulating crack");
            }
        }
    }

    // Corner (t, k) has id 3t + k. Corners are glued across every shared edge
    // that is not an insulating crack edge.
    std::unordered_set<std::uint64_t> cut;
    for (const auto& e : config.cracks.edges(CrackKind::insulating)) cut.insert(detail::edge_key(e[0], e[1]));
    DisjointSets corners(static_cast<std::size_t>(3 * nt));
    std::unordered_map<std::uint64_t, std::pair<int, int>> first_use;
    first_use.reserve(static_cast<std::size_t>(3 * nt));
    for (int t = 0; t < nt; ++t) {
        if (excluded[t]) continue;
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const int a = tri[k];
            const int b = tri[(k + 1) % 3];
            const auto key = detail::edge_key(a, b);
            if (cut.count(key)) continue;
            const auto [it, fresh] = first_use.emplace(key, std::pair{t, k});
            if (fresh) continue;
            const auto [s, j] = it->second;
            const auto& other = mesh.triangles[s];
            // Same vertex on both sides of the shared edge.
            for (int x : {a, b}) {
                int ko = 0;
                while (other[ko] != x) ++ko;
                int kt = 0;
                while (tri[kt] != x) ++kt;
                corners.unite(3 * t + kt, 3 * s + ko);
            }
        }
        if (frozen[t]) {
            corners.unite(3 * t, 3 * t + 1);
            corners.unite(3 * t, 3 * t + 2);
        }
    }
    // Tie every corner on a conducting component.
    {
        std::vector<int> group(static_cast<std::size_t>(nv), -1);
        int g = 0;
        for (const auto& c : config.cracks.components) {
            if (c.kind == CrackKind::conducting) {
                for (int v : c.chain) group[v] = g;
            }
            ++g;
        }
        std::vector<int> anchor(config.cracks.components.size(), -1);
        for (int t = 0; t < nt; ++t) {
            if (excluded[t]) continue;
            for (int k = 0; k < 3; ++k) {
                const int gv = group[mesh.triangles[t][k]];
                if (gv < 0) continue;
                if (anchor[gv] < 0) {
                    anchor[gv] = 3 * t + k;
                } else {
                    corners.unite(anchor[gv], 3 * t + k);
                }
            }
        }
    }

    DofMap dm;
    dm.label = config.label();
    dm.triangle_dofs.assign(static_cast<std::size_t>(nt), Triangle{-1, -1, -1});
    dm.active.assign(static_cast<std::size_t>(nt), 0);
    dm.vertex_dofs.assign(static_cast<std::size_t>(nv), {});
    // Number dofs by vertex, then by first triangle, so numbering is deterministic.
    std::vector<std::vector<std::pair<int, int>>> corners_at(static_cast<std::size_t>(nv));
    for (int t = 0; t < nt; ++t) {
        if (excluded[t]) continue;
        for (int k = 0; k < 3; ++k) corners_at[mesh.triangles[t][k]].push_back({t, k});
    }
    std::unordered_map<int, int> dof_of_root;
    for (int v = 0; v < nv; ++v) {
        for (const auto& [t, k] : corners_at[v]) {
            const int root = corners.find(3 * t + k);
            auto [it, fresh] = dof_of_root.emplace(root, dm.num_dofs);
            if (fresh) ++dm.num_dofs;
            dm.triangle_dofs[t][k] = it->second;
            auto& list = dm.vertex_dofs[v];
            if (std::find(list.begin(), list.end(), it->second) == list.end()) list.push_back(it->second);
        }
    }
    for (int t = 0; t < nt; ++t) dm.active[t] = !excluded[t] && !frozen[t];

    dm.gamma = gamma_trace(mesh);
    dm.gamma_dofs.reserve(dm.gamma.nodes.size());
    for (int v : dm.gamma.nodes) {
        if (dm.vertex_dofs[v].size() != 1) throw InputError("gamma node without a unique dof");
        dm.gamma_dofs.push_back(dm.vertex_dofs[v].front());
    }
    return dm;
}

std::array<Vec2, 3> hat_gradients(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[t];
    const double two_area = 2.0 * mesh.signed_area(t);
    std::array<Vec2, 3> g;
    for (int k = 0; k < 3; ++k) {
        const Vec2& b = mesh.vertices[tri[(k + 1) % 3]];
        const Vec2& c = mesh.vertices[tri[(k + 2) % 3]];
        g[k] = Vec2(b.y() - c.y(), c.x() - b.x()) / two_area;
    }
    return g;
}

Eigen::SparseMatrix<double> assemble_stiffness(const Mesh& mesh, const Conductivity& gamma0,
                                               const DofMap& dm) {
    check_conductivity(mesh, gamma0);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(mesh.triangles.size() * 9);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        if (!dm.active[t]) continue;
        const auto g = hat_gradients(mesh, t);
        const double w = gamma0.values[t] * mesh.signed_area(t);
        const auto& dofs = dm.triangle_dofs[t];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) entries.emplace_back(dofs[i], dofs[j], w * g[i].dot(g[j]));
        }
    }
    Eigen::SparseMatrix<double> k(dm.num_dofs, dm.num_dofs);
    k.setFromTriplets(entries.begin(), entries.end());
    return k;
}

ForwardSolver::ForwardSolver(const Mesh& mesh, const Conductivity& gamma0, std::shared_ptr<const DofMap> dm)
    : mesh_(&mesh), dm_(std::move(dm)) {
    stiffness_ = assemble_stiffness(mesh, gamma0, *dm_);
    pinned_ = dm_->gamma_dofs.front();
    const int n = dm_->num_dofs;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(stiffness_.nonZeros()));
    for (int col = 0; col < stiffness_.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(stiffness_, col); it; ++it) {
            const int r = static_cast<int>(it.row());
            const int c = static_cast<int>(it.col());
            if (r == pinned_ || c == pinned_) continue;
            entries.emplace_back(r < pinned_ ? r : r - 1, c < pinned_ ? c : c - 1, it.value());
        }
    }
    reduced_.resize(n - 1, n - 1);
    reduced_.setFromTriplets(entries.begin(), entries.end());
    factor_.compute(reduced_);
    factored_ = factor_.info() == Eigen::Success && (factor_.vectorD().array() > 0.0).all();
}

Eigen::VectorXd ForwardSolver::neumann_load(const Eigen::VectorXd& current) const {
    const auto& gamma = dm_->gamma;
    if (current.size() != gamma.size()) throw InputError("current has wrong length for gamma");
    const Eigen::VectorXd weighted = gamma.mass * current;
    const double total = weighted.sum();
    if (std::abs(total) > kSolverTolerance * (weighted.cwiseAbs().sum() + 1e-300)) {
        throw InputError("boundary current is not mean-free on gamma");
    }
    Eigen::VectorXd load = Eigen::VectorXd::Zero(dm_->num_dofs);
    for (int k = 0; k < gamma.size(); ++k) load[dm_->gamma_dofs[k]] += weighted[k];
    return load;
}

Eigen::VectorXd ForwardSolver::source_load(const ElementVectorField& source) const {
    if (source.values.size() != mesh_->triangles.size()) {
        throw InputError("source field needs one vector per triangle");
    }
    Eigen::VectorXd load = Eigen::VectorXd::Zero(dm_->num_dofs);
    for (int t = 0; t < static_cast<int>(mesh_->triangles.size()); ++t) {
        const Vec2& f = source.values[t];
        if (f.isZero(0.0)) continue;
        const auto& dofs = dm_->triangle_dofs[t];
        if (dofs[0] < 0) continue;
        const auto g = hat_gradients(*mesh_, t);
        const double area = mesh_->signed_area(t);
        for (int k = 0; k < 3; ++k) load[dofs[k]] += area * f.dot(g[k]);
    }
    return load;
}

Eigen::VectorXd ForwardSolver::solve_load(const Eigen::VectorXd& load) const {
    const int n = dm_->num_dofs;
    Eigen::VectorXd reduced_load(n - 1);
    for (int d = 0, r = 0; d < n; ++d) {
        if (d != pinned_) reduced_load[r++] = load[d];
    }
    Eigen::VectorXd x;
    if (factored_) {
        x = factor_.solve(reduced_load);
    } else {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(reduced_);
        cg.setTolerance(1e-12);
        cg.setMaxIterations(10 * n);
        x = cg.solve(reduced_load);
        if (cg.info() != Eigen::Success) throw SolverError("iterative fallback did not converge", cg.error());
    }
    Eigen::VectorXd u(n);
    for (int d = 0, r = 0; d < n; ++d) u[d] = d == pinned_ ? 0.0 : x[r++];

    const double scale = load.norm();
    if (scale > 0.0) {
        const double residual = (stiffness_ * u - load).norm() / scale;
        if (!(residual <= kSolverTolerance)) throw SolverError("forward solve failed", residual);
    }
    // Ground: zero mean of the Gamma trace.
    Eigen::VectorXd trace(dm_->gamma.size());
    for (int k = 0; k < trace.size(); ++k) trace[k] = u[dm_->gamma_dofs[k]];
    u.array() -= dm_->gamma.mean(trace);
    return u;
}

Field ForwardSolver::solve_neumann(const Eigen::VectorXd& current) const {
    return {solve_load(neumann_load(current)), dm_};
}

Field ForwardSolver::solve_source(const ElementVectorField& source) const {
    return {solve_load(source_load(source)), dm_};
}

Field solve_neumann(const Mesh& mesh, const Conductivity& gamma0, std::shared_ptr<const DofMap> dm,
                    const Eigen::VectorXd& current) {
    return ForwardSolver(mesh, gamma0, std::move(dm)).solve_neumann(current);
}

Field solve_source(const Mesh& mesh, const Conductivity& gamma0, std::shared_ptr<const DofMap> dm,
                   const ElementVectorField& source) {
    return ForwardSolver(mesh, gamma0, std::move(dm)).solve_source(source);
}

double energy(const Eigen::SparseMatrix<double>& stiffness, const Field& a, const Field& b) {
    if (a.dofmap != b.dofmap) throw InputError("fields live on different dof maps");
    if (a.values.size() != stiffness.rows()) throw InputError("stiffness does not match the fields");
    return a.values.dot(stiffness * b.values);
}

ElementVectorField gradient_on(const Mesh& mesh, const Field& field, const std::vector<char>& region) {
    const int nt = static_cast<int>(mesh.triangles.size());
    if (static_cast<int>(region.size()) != nt) throw InputError("region mask has wrong length");
    auto out = ElementVectorField::zero(nt);
    for (int t = 0; t < nt; ++t) {
        if (!region[t]) continue;
        const auto& dofs = field.dofmap->triangle_dofs[t];
        if (dofs[0] < 0) continue;
        const auto g = hat_gradients(mesh, t);
        Vec2 grad = Vec2::Zero();
        for (int k = 0; k < 3; ++k) grad += field.values[dofs[k]] * g[k];
        out.values[t] = grad;
    }
    return out;
}

ElementVectorField gradient_on(const Mesh& mesh, const Field& field, const PixelSet& region) {
    return gradient_on(mesh, field, region.triangle_mask(static_cast<int>(mesh.triangles.size())));
}

Eigen::VectorXd trace_on_gamma(const Field& field) {
    const auto& dm = *field.dofmap;
    Eigen::VectorXd trace(dm.gamma.size());
    for (int k = 0; k < trace.size(); ++k) trace[k] = field.values[dm.gamma_dofs[k]];
    trace.array() -= dm.gamma.mean(trace);
    return trace;
}

Field transfer(const Field& field, std::shared_ptr<const DofMap> target) {
    const auto& src = *field.dofmap;
    const auto nt = target->triangle_dofs.size();
    if (src.triangle_dofs.size() != nt) throw InputError("dof maps belong to different meshes");
    Eigen::VectorXd values = Eigen::VectorXd::Zero(target->num_dofs);
    std::vector<char> assigned(static_cast<std::size_t>(target->num_dofs), 0);
    const double tol = 1e-12 * (field.values.cwiseAbs().maxCoeff() + 1.0);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& to = target->triangle_dofs[t];
        const auto& from = src.triangle_dofs[t];
        if (to[0] < 0) continue;
        if (from[0] < 0) throw InputError("field is undefined on part of the target space");
        for (int k = 0; k < 3; ++k) {
            const double v = field.values[from[k]];
            if (!assigned[to[k]]) {
                values[to[k]] = v;
                assigned[to[k]] = 1;
            } else if (std::abs(values[to[k]] - v) > tol) {
                throw InputError("field does not lie in the target space");
            }
        }
    }
    return {values, std::move(target)};
}

Field interpolate(const Eigen::VectorXd& vertex_values, std::shared_ptr<const DofMap> dm) {
    if (vertex_values.size() != static_cast<Eigen::Index>(dm->vertex_dofs.size())) {
        throw InputError("need one value per mesh vertex");
    }
    Eigen::VectorXd values = Eigen::VectorXd::Zero(dm->num_dofs);
    for (std::size_t v = 0; v < dm->vertex_dofs.size(); ++v) {
        for (int d : dm->vertex_dofs[v]) values[d] = vertex_values[static_cast<Eigen::Index>(v)];
    }
    return {values, std::move(dm)};
}

} // namespace crackmono
