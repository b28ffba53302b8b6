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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crackmono/fem.hpp"
#include "crackmono/geometry.hpp"

namespace crackmono {

/// Mean-free boundary currents on Gamma, orthonormal in the Gamma L2 product.
struct CurrentBasis {
    GammaTrace gamma;
    Eigen::MatrixXd vectors; ///< nodal values, one column per current
    Eigen::MatrixXd gram;    ///< vectors^T * mass * vectors
    std::string label;

    int size() const { return static_cast<int>(vectors.cols()); }
    Eigen::VectorXd current(int i) const { return vectors.col(i); }
    /// Nodal current of a coefficient vector.
    Eigen::VectorXd combine(const Eigen::VectorXd& coefficients) const { return vectors * coefficients; }
};

/// M arc-length hat functions on Gamma, made mean-free and then orthonormalised
/// (modified Gram-Schmidt in the Gamma product, two passes).
CurrentBasis build_basis(const Mesh& mesh, int modes);
CurrentBasis build_basis(const GammaTrace& gamma, int modes);

/// The same currents sampled on another discretisation of the same Gamma
/// curve (for example after uniform refinement), by arc-length interpolation.
CurrentBasis transfer_basis(const CurrentBasis& basis, const GammaTrace& target);

/// Counts describing the configuration behind an ND matrix.
struct ConfigSummary {
    int insulating = 0;
    int conducting = 0;
    int excluded_pixels = 0;
    int frozen_pixels = 0;
};

ConfigSummary summarize(const Configuration& config);

struct NdMatrix {
    Eigen::MatrixXd entries;
    std::string basis_label;
    std::string config_label;
    ConfigSummary summary;
    /// max |N - N^T| before symmetrisation, relative to max |N|.
    double asymmetry = 0.0;
};

/// Gram matrix of the ND map: entries(i, j) = <u_i|Gamma, f_j>.
NdMatrix nd_matrix(const ForwardSolver& solver, const CurrentBasis& basis);
NdMatrix nd_matrix(const Mesh& mesh, const Conductivity& gamma0, const Configuration& config,
                   const CurrentBasis& basis);

/// <Lambda f, f> for an arbitrary mean-free nodal current.
double nd_form(const ForwardSolver& solver, const Eigen::VectorXd& current);

struct PsdResult {
    bool passed = false;
    double min_eig = 0.0;
    double tau = 0.0;
};

/// True iff the smallest eigenvalue of A is >= -tau. Rejects A with
/// max |A - A^T| > 1e-8 max |A|.
PsdResult psd_test(const Eigen::MatrixXd& a, double tau);

inline constexpr double kDefaultTauFactor = 1e-8;

/// Largest absolute eigenvalue of a symmetric matrix.
double spectral_scale(const Eigen::MatrixXd& a);

/// One recorded inequality check "minuend >= subtrahend".
struct Certificate {
    std::string minuend;
    std::string subtrahend;
    double min_eig = 0.0;
    double tau = 0.0;
    bool passed = false;
};

/// Tests minuend - subtrahend >= 0 with tau = factor * spectral_scale(minuend).
Certificate compare(const NdMatrix& minuend, const NdMatrix& subtrahend,
                    double tau_factor = kDefaultTauFactor);
Certificate compare(const Eigen::MatrixXd& minuend, const std::string& minuend_label,
                    const Eigen::MatrixXd& subtrahend, const std::string& subtrahend_label,
                    double tau_factor = kDefaultTauFactor);

enum class ProjectionIdentity {
    insulating_part, ///< N_{S0}^{Sinf} - N_0^{Sinf} against |u - u_inf|^2
    conducting_part, ///< N_{S0}^0 - N_{S0}^{Sinf} against |u_0 - u|^2
};

struct IdentityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double relative_error = 0.0;
};

/// Quadratic-form difference of two ND matrices at one basis current against
/// the energy of the difference of the two potentials in the larger space.
IdentityCheck projection_identity_check(const Mesh& mesh, const Conductivity& gamma0,
                                        const CrackSet& cracks, const CurrentBasis& basis,
                                        int f_index, ProjectionIdentity which);

} // namespace crackmono
