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

#include <string>
#include <vector>

#include <Eigen/Core>

#include "crackmono/fem.hpp"
#include "crackmono/ndmap.hpp"

namespace crackmono {

/// Source-to-boundary operator L(V) of one configuration in fixed bases: the
/// current basis on Gamma and the orthonormal L2(V) basis e_d / sqrt(area) of
/// per-triangle constant fields. Column 2k + d belongs to triangles[k], axis d.
struct SourceOperator {
    PixelSet support;
    std::vector<int> triangles;
    std::string config_label;
    Eigen::MatrixXd matrix;

    int rows() const { return static_cast<int>(matrix.rows()); }
    int cols() const { return static_cast<int>(matrix.cols()); }
    /// Coefficients of a field on V in the column basis.
    Eigen::VectorXd coefficients(const Mesh& mesh, const ElementVectorField& field) const;
};

SourceOperator build_source_operator(const Mesh& mesh, const Conductivity& gamma0,
                                     const Configuration& config, const PixelSet& support,
                                     const CurrentBasis& basis);

/// Same as above against an existing factorisation.
SourceOperator build_source_operator(const Mesh& mesh, const ForwardSolver& solver, const PixelSet& support,
                                     const CurrentBasis& basis);

/// <L F, f>_Gamma against <F, grad u_f>_{L2(V)}, each from its own solve.
struct AdjointCheck {
    double forward = 0.0;
    double adjoint = 0.0;
    double relative_error = 0.0; ///< relative to |F| |grad u_f|_V
};

AdjointCheck adjoint_check(const Mesh& mesh, const ForwardSolver& solver, const PixelSet& support,
                           const ElementVectorField& field, const Eigen::VectorXd& current);

struct Y0Pick {
    Eigen::VectorXd y0;
    double singular_value = 0.0;
    bool invisible = false;
};

inline constexpr double kInvisibleThreshold = 1e-12;

/// Dominant left singular vector of full - base.
Y0Pick pick_y0(const SourceOperator& full, const SourceOperator& base);

/// Numerical rank at threshold rel * sigma_max.
int numerical_rank(const Eigen::MatrixXd& a, double rel = 1e-10);

/// Cosines of the principal angles between the numerical column spaces of a
/// and b at a common rank (the smaller of the two numerical ranks).
Eigen::VectorXd principal_cosines(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel = 1e-10);

/// Smallest C with |a^T x| <= C |b^T x| over the sampled x (infinite when
/// some b^T x vanishes while a^T x does not).
double range_ratio(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& samples);

struct LocSequence {
    Eigen::VectorXd y0;
    std::vector<double> n_values;
    std::vector<Eigen::VectorXd> f_n; ///< coefficients in the current basis
    std::vector<double> a1_norms;     ///< |A1^T f_n|
    std::vector<double> a2_norms;     ///< |A2^T f_n|
};

std::vector<double> default_n_values();

/// xi_n = (A2 A2^T + I/n)^{-1} y0 and f_n = xi_n / |A2^T xi_n|^{3/2}.
LocSequence localized_sequence(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                               const Eigen::VectorXd& y0, const std::vector<double>& n_values);

/// Symmetric ND difference whose quadratic form is tracked along a sequence.
struct NamedForm {
    std::string name;
    Eigen::MatrixXd matrix;
};

struct BlowupReport {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values; ///< values[form][n]
    /// log10 of |value at last n| / |value at first n| per form.
    std::vector<double> decades;
};

BlowupReport blowup_metrics(const LocSequence& seq, const std::vector<NamedForm>& forms);

/// Rows n, |A1^T f|, |A2^T f|, then one column per form.
std::string sequence_csv(const LocSequence& seq, const BlowupReport& report);

} // namespace crackmono
