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

#include "crackmono/locpot.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "crackmono/errors.hpp"

namespace crackmono {

Eigen::VectorXd SourceOperator::coefficients(const Mesh& mesh, const ElementVectorField& field) const {
    Eigen::VectorXd c(cols());
    for (std::size_t k = 0; k < triangles.size(); ++k) {
        const int t = triangles[k];
        const double root = std::sqrt(mesh.signed_area(t));
        c[2 * k] = root * field.values[t].x();
        c[2 * k + 1] = root * field.values[t].y();
    }
    return c;
}

SourceOperator build_source_operator(const Mesh& mesh, const ForwardSolver& solver, const PixelSet& support,
                                     const CurrentBasis& basis) {
    const auto& dm = *solver.dofmap();
    if (dm.gamma.size() != basis.gamma.size()) throw InputError("basis was built for another gamma");
    SourceOperator op;
    op.support = support;
    op.config_label = dm.label;
    const int nt = static_cast<int>(mesh.triangles.size());
    const auto mask = support.triangle_mask(nt);
    for (int t = 0; t < nt; ++t) {
        if (mask[t] && dm.triangle_dofs[t][0] >= 0) op.triangles.push_back(t);
    }
    const Eigen::MatrixXd project = basis.vectors.transpose() * dm.gamma.mass;
    op.matrix.resize(basis.size(), 2 * static_cast<int>(op.triangles.size()));
    auto field = ElementVectorField::zero(nt);
    for (std::size_t k = 0; k < op.triangles.size(); ++k) {
        const int t = op.triangles[k];
        const double root = std::sqrt(mesh.signed_area(t));
        for (int d = 0; d < 2; ++d) {
            field.values[t] = Vec2::Unit(d) / root;
            op.matrix.col(2 * static_cast<Eigen::Index>(k) + d) =
                project * trace_on_gamma(solver.solve_source(field));
        }
        field.values[t] = Vec2::Zero();
    }
    return op;
}

SourceOperator build_source_operator(const Mesh& mesh, const Conductivity& gamma0,
                                     const Configuration& config, const PixelSet& support,
                                     const CurrentBasis& basis) {
    auto dm = std::make_shared<const DofMap>(build_dofmap(mesh, config));
    ForwardSolver solver(mesh, gamma0, dm);
    return build_source_operator(mesh, solver, support, basis);
}

AdjointCheck adjoint_check(const Mesh& mesh, const ForwardSolver& solver, const PixelSet& support,
                           const ElementVectorField& field, const Eigen::VectorXd& current) {
    const int nt = static_cast<int>(mesh.triangles.size());
    const auto mask = support.triangle_mask(nt);
    for (int t = 0; t < nt; ++t) {
        if (!mask[t] && !field.values[t].isZero(0.0)) throw InputError("source field leaves its support");
    }
    const auto& gamma = solver.dofmap()->gamma;
    AdjointCheck out;
    out.forward = gamma.inner(trace_on_gamma(solver.solve_source(field)), current);
    const auto grad = gradient_on(mesh, solver.solve_neumann(current), mask);
    double field_norm = 0.0;
    double grad_norm = 0.0;
    for (int t = 0; t < nt; ++t) {
        if (!mask[t]) continue;
        const double area = mesh.signed_area(t);
        out.adjoint += area * field.values[t].dot(grad.values[t]);
        field_norm += area * field.values[t].squaredNorm();
        grad_norm += area * grad.values[t].squaredNorm();
    }
    const double scale = std::sqrt(field_norm * grad_norm);
    out.relative_error = scale > 0.0 ? std::abs(out.forward - out.adjoint) / scale : 0.0;
    return out;
}

Y0Pick pick_y0(const SourceOperator& full, const SourceOperator& base) {
    if (full.triangles != base.triangles || full.rows() != base.rows()) {
        throw InputError("source operators act on different supports");
    }
    Y0Pick out;
    if (full.cols() == 0) {
        out.y0 = Eigen::VectorXd::Zero(full.rows());
        out.invisible = true;
        return out;
    }
    const Eigen::MatrixXd a = full.matrix - base.matrix;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    out.singular_value = svd.singularValues()(0);
    out.y0 = svd.matrixU().col(0);
    Eigen::Index top = 0;
    out.y0.cwiseAbs().maxCoeff(&top);
    if (out.y0[top] < 0.0) out.y0 = -out.y0;
    const double scale = std::max(full.matrix.norm(), base.matrix.norm());
    out.invisible = !(out.singular_value > kInvisibleThreshold * std::max(scale, 1.0));
    return out;
}

int numerical_rank(const Eigen::MatrixXd& a, double rel) {
    if (a.size() == 0) return 0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    int r = 0;
    while (r < s.size() && s[r] > rel * s[0]) ++r;
    return r;
}

Eigen::VectorXd principal_cosines(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double rel) {
    if (a.rows() != b.rows()) throw InputError("operators map into different spaces");
    const int r = std::min(numerical_rank(a, rel), numerical_rank(b, rel));
    if (r == 0) return {};
    Eigen::BDCSVD<Eigen::MatrixXd> sa(a, Eigen::ComputeThinU);
    Eigen::BDCSVD<Eigen::MatrixXd> sb(b, Eigen::ComputeThinU);
    const Eigen::MatrixXd overlap = sa.matrixU().leftCols(r).transpose() * sb.matrixU().leftCols(r);
    Eigen::JacobiSVD<Eigen::MatrixXd> so(overlap);
    return so.singularValues();
}

double range_ratio(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& samples) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < samples.cols(); ++k) {
        const double num = (a.transpose() * samples.col(k)).norm();
        const double den = (b.transpose() * samples.col(k)).norm();
        if (den == 0.0) {
            if (num > 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, num / den);
    }
    return worst;
}

std::vector<double> default_n_values() { return {1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6}; }

LocSequence localized_sequence(const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
                               const Eigen::VectorXd& y0, const std::vector<double>& n_values) {
    if (a1.rows() != a2.rows() || y0.size() != a2.rows()) throw InputError("operator sizes disagree");
    if (y0.norm() == 0.0) throw InputError("y0 must be non-zero");
    if (n_values.empty()) throw InputError("need at least one n");
    for (std::size_t k = 0; k < n_values.size(); ++k) {
        if (!(n_values[k] > 0.0) || (k > 0 && !(n_values[k] > n_values[k - 1]))) {
            throw InputError("n values must be positive and increasing");
        }
    }
    const Eigen::MatrixXd gram = a2 * a2.transpose();
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    LocSequence seq;
    seq.y0 = y0;
    seq.n_values = n_values;
    for (double n : n_values) {
        const Eigen::VectorXd xi = (gram + identity / n).ldlt().solve(y0);
        const double size = (a2.transpose() * xi).norm();
        if (!(size > 0.0)) throw SolverError("degenerate sequence: A2^T xi vanishes", 0.0);
        const Eigen::VectorXd f = xi / std::pow(size, 1.5);
        seq.f_n.push_back(f);
        seq.a1_norms.push_back((a1.transpose() * f).norm());
        seq.a2_norms.push_back((a2.transpose() * f).norm());
    }
    return seq;
}

BlowupReport blowup_metrics(const LocSequence& seq, const std::vector<NamedForm>& forms) {
    BlowupReport report;
    for (const auto& form : forms) {
        if (form.matrix.rows() != seq.y0.size() || form.matrix.cols() != seq.y0.size()) {
            throw InputError("form " + form.name + " has the wrong size");
        }
        report.names.push_back(form.name);
        std::vector<double> values;
        for (const auto& f : seq.f_n) values.push_back(f.dot(form.matrix * f));
        const double first = std::abs(values.front());
        const double last = std::abs(values.back());
        report.decades.push_back(first > 0.0 && last > 0.0 ? std::log10(last / first)
                                 : last > 0.0              ? std::numeric_limits<double>::infinity()
                                 : first > 0.0             ? -std::numeric_limits<double>::infinity()
                                                           : 0.0);
        report.values.push_back(std::move(values));
    }
    return report;
}

std::string sequence_csv(const LocSequence& seq, const BlowupReport& report) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "n,a1_norm,a2_norm";
    for (const auto& name : report.names) out << ',' << name;
    out << '\n';
    for (std::size_t k = 0; k < seq.n_values.size(); ++k) {
        out << seq.n_values[k] << ',' << seq.a1_norms[k] << ',' << seq.a2_norms[k];
        for (const auto& column : report.values) out << ',' << column[k];
        out << '\n';
    }
    return out.str();
}

} // namespace crackmono
