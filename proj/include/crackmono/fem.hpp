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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "crackmono/geometry.hpp"

namespace crackmono {

/// Per-triangle background conductivity.
struct Conductivity {
    std::vector<double> values;

    static Conductivity constant(const Mesh& mesh, double value);
    double min() const;
    double max() const;
};

/// Throws InputError unless there is one positive finite value per triangle.
void check_conductivity(const Mesh& mesh, const Conductivity& gamma0);

/// What the forward problem sees besides the background: cracks of both kinds,
/// plus optionally one pixel region that is either perfectly insulating
/// (excluded) or perfectly conducting (frozen).
struct Configuration {
    CrackSet cracks;
    std::optional<PixelSet> excluded;
    std::optional<PixelSet> frozen;

    static Configuration none() { return {}; }
    static Configuration with_cracks(CrackSet c) { return {std::move(c), std::nullopt, std::nullopt}; }
    static Configuration insulating_region(PixelSet c) { return {{}, std::move(c), std::nullopt}; }
    static Configuration conducting_region(PixelSet c) { return {{}, std::nullopt, std::move(c)}; }

    /// Short human-readable tag such as "cracks(1i,1c)" or "excluded(12px)".
    std::string label() const;
};

/// Degrees of freedom of the constrained P1 space of a configuration.
///
/// Each triangle corner maps to a dof. Corners at a vertex share a dof unless
/// an insulating crack edge separates them, so interior vertices of an
/// insulating chain carry two dofs and crack tips one. All corners on one
/// conducting component or one connected frozen region share a dof. Corners
/// of excluded triangles carry none.
struct DofMap {
    int num_dofs = 0;
    std::vector<Triangle> triangle_dofs; ///< -1 entries for excluded triangles
    std::vector<char> active;            ///< triangle contributes to the energy
    std::vector<std::vector<int>> vertex_dofs;
    GammaTrace gamma;
    std::vector<int> gamma_dofs; ///< dof of each ordered Gamma node
    std::string label;
};

DofMap build_dofmap(const Mesh& mesh, const Configuration& config);
DofMap build_dofmap(const Mesh& mesh, const CrackSet& cracks,
                    const std::optional<PixelSet>& excluded = std::nullopt,
                    const std::optional<PixelSet>& frozen = std::nullopt);

/// Gradients of the three P1 hat functions of triangle `t` (constant per triangle).
std::array<Vec2, 3> hat_gradients(const Mesh& mesh, int t);

Eigen::SparseMatrix<double> assemble_stiffness(const Mesh& mesh, const Conductivity& gamma0,
                                               const DofMap& dm);

/// P1 potential on a DofMap.
struct Field {
    Eigen::VectorXd values;
    std::shared_ptr<const DofMap> dofmap;
};

/// Per-triangle constant vector field, zero outside its support.
struct ElementVectorField {
    std::vector<Vec2> values;

    static ElementVectorField zero(int num_triangles) {
        return {std::vector<Vec2>(static_cast<std::size_t>(num_triangles), Vec2::Zero())};
    }
};

/// Relative tolerance on the variational residual and on the Gamma mean.
inline constexpr double kSolverTolerance = 1e-10;

/// Factorised grounded system for one configuration; any number of
/// right-hand sides may be solved against it concurrently.
class ForwardSolver {
public:
    ForwardSolver(const Mesh& mesh, const Conductivity& gamma0, std::shared_ptr<const DofMap> dm);

    const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
    const std::shared_ptr<const DofMap>& dofmap() const { return dm_; }

    /// Potential for a Gamma current given by its nodal values on the ordered
    /// Gamma nodes. The current must be mean-free.
    Field solve_neumann(const Eigen::VectorXd& current) const;

    /// Potential driven by an interior source field and zero boundary current.
    Field solve_source(const ElementVectorField& source) const;

    /// Grounded solution for a dof-space load whose entries sum to zero.
    Eigen::VectorXd solve_load(const Eigen::VectorXd& load) const;

    /// Dof-space load of a Gamma current.
    Eigen::VectorXd neumann_load(const Eigen::VectorXd& current) const;
    Eigen::VectorXd source_load(const ElementVectorField& source) const;

private:
    const Mesh* mesh_;
    std::shared_ptr<const DofMap> dm_;
    Eigen::SparseMatrix<double> stiffness_;
    int pinned_ = 0;
    Eigen::SparseMatrix<double> reduced_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
    bool factored_ = false;
};

/// One-shot forms of the solver methods.
Field solve_neumann(const Mesh& mesh, const Conductivity& gamma0, std::shared_ptr<const DofMap> dm,
                    const Eigen::VectorXd& current);
Field solve_source(const Mesh& mesh, const Conductivity& gamma0, std::shared_ptr<const DofMap> dm,
                   const ElementVectorField& source);

/// a^T K b. Both fields must live on the dof map of K.
double energy(const Eigen::SparseMatrix<double>& stiffness, const Field& a, const Field& b);

/// Gradient of `field` on the triangles flagged in `region`, zero elsewhere.
ElementVectorField gradient_on(const Mesh& mesh, const Field& field, const std::vector<char>& region);
ElementVectorField gradient_on(const Mesh& mesh, const Field& field, const PixelSet& region);

/// Nodal trace on the ordered Gamma nodes with its Gamma mean removed.
Eigen::VectorXd trace_on_gamma(const Field& field);

/// Re-expresses `field` on `target`, which must describe a space containing it
/// (for example crack-free into cracked). Throws InputError otherwise.
Field transfer(const Field& field, std::shared_ptr<const DofMap> target);

/// Nodal interpolant of a function given by per-vertex values.
Field interpolate(const Eigen::VectorXd& vertex_values, std::shared_ptr<const DofMap> dm);

} // namespace crackmono
