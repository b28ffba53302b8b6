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

#include "crackmono/ndmap.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Eigenvalues>

#include "crackmono/errors.hpp"

namespace crackmono {

namespace {

Eigen::VectorXd hat(const GammaTrace& gamma, double center, double width) {
    Eigen::VectorXd v(gamma.size());
    for (int k = 0; k < gamma.size(); ++k) {
        double d = std::abs(gamma.arclength[k] - center);
        if (gamma.closed) d = std::min(d, gamma.length - d);
        v[k] = std::max(0.0, 1.0 - d / width);
    }
    return v;
}

} // namespace

CurrentBasis build_basis(const Mesh& mesh, int modes) { return build_basis(gamma_trace(mesh), modes); }

CurrentBasis build_basis(const GammaTrace& gamma, int modes) {
    if (modes < 1) throw InputError("basis needs at least one current");
    if (modes > gamma.size() - 1) {
        throw InputError("basis size " + std::to_string(modes) + " exceeds the " +
                         std::to_string(gamma.size() - 1) + " available on gamma");
    }
    const double width = gamma.closed ? gamma.length / (modes + 1) : gamma.length / modes;
    CurrentBasis basis;
    basis.gamma = gamma;
    basis.vectors.resize(gamma.size(), modes);
    for (int i = 0; i < modes; ++i) {
        Eigen::VectorXd v = hat(gamma, i * width, width);
        v.array() -= gamma.mean(v);
        const double initial = std::sqrt(gamma.inner(v, v));
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < i; ++j) {
                const Eigen::VectorXd b = basis.vectors.col(j);
                v -= gamma.inner(b, v) * b;
            }
        }
        const double norm = std::sqrt(gamma.inner(v, v));
        if (!(norm > 1e-10 * initial)) {
            throw InputError("basis is rank deficient at " + std::to_string(modes) +
                             " currents; gamma is too coarse");
        }
        basis.vectors.col(i) = v / norm;
    }
    basis.gram = basis.vectors.transpose() * (gamma.mass * basis.vectors);
    basis.label = std::string(gamma.closed ? "loop" : "arc") + "-hats-" + std::to_string(modes);
    return basis;
}

CurrentBasis transfer_basis(const CurrentBasis& basis, const GammaTrace& target) {
    const auto& src = basis.gamma;
    if (src.closed != target.closed) throw InputError("gamma curves differ in topology");
    if (std::abs(src.length - target.length) > 1e-9 * src.length) {
        throw InputError("gamma curves differ in length");
    }
    const double scale = src.length / target.length;
    CurrentBasis out;
    out.gamma = target;
    out.label = basis.label;
    out.vectors.resize(target.size(), basis.size());
    const int n = src.size();
    for (int k = 0; k < target.size(); ++k) {
        const double s = target.arclength[k] * scale;
        const auto it = std::upper_bound(src.arclength.begin(), src.arclength.end(), s);
        const int right = static_cast<int>(it - src.arclength.begin());
        const int left = std::max(0, right - 1);
        double s0 = src.arclength[left];
        double s1 = 0.0;
        int hi = 0;
        if (right < n) {
            s1 = src.arclength[right];
            hi = right;
        } else if (src.closed) {
            s1 = src.length;
            hi = 0;
        } else {
            s1 = s0;
            hi = left;
        }
        const double w = s1 > s0 ? (s - s0) / (s1 - s0) : 0.0;
        out.vectors.row(k) = (1.0 - w) * basis.vectors.row(left) + w * basis.vectors.row(hi);
    }
    for (int i = 0; i < out.size(); ++i) {
        const Eigen::VectorXd v = out.vectors.col(i);
        out.vectors.col(i).array() -= target.mean(v);
    }
    out.gram = out.vectors.transpose() * (target.mass * out.vectors);
    return out;
}

ConfigSummary summarize(const Configuration& config) {
    ConfigSummary s;
    s.insulating = config.cracks.count(CrackKind::insulating);
    s.conducting = config.cracks.count(CrackKind::conducting);
    if (config.excluded) s.excluded_pixels = config.excluded->count();
    if (config.frozen) s.frozen_pixels = config.frozen->count();
    return s;
}

NdMatrix nd_matrix(const ForwardSolver& solver, const CurrentBasis& basis) {
    const auto& dm = *solver.dofmap();
    if (dm.gamma.size() != basis.gamma.size()) throw InputError("basis was built for another gamma");
    const int m = basis.size();
    Eigen::MatrixXd traces(dm.gamma.size(), m);
    for (int i = 0; i < m; ++i) traces.col(i) = trace_on_gamma(solver.solve_neumann(basis.current(i)));
    const Eigen::MatrixXd raw = traces.transpose() * (dm.gamma.mass * basis.vectors);
    NdMatrix out;
    const double top = raw.cwiseAbs().maxCoeff();
    out.asymmetry = top > 0.0 ? (raw - raw.transpose()).cwiseAbs().maxCoeff() / top : 0.0;
    out.entries = 0.5 * (raw + raw.transpose());
    out.basis_label = basis.label;
    out.config_label = dm.label;
    return out;
}

NdMatrix nd_matrix(const Mesh& mesh, const Conductivity& gamma0, const Configuration& config,
                   const CurrentBasis& basis) {
    auto dm = std::make_shared<const DofMap>(build_dofmap(mesh, config));
    ForwardSolver solver(mesh, gamma0, dm);
    NdMatrix out = nd_matrix(solver, basis);
    out.summary = summarize(config);
    return out;
}

double nd_form(const ForwardSolver& solver, const Eigen::VectorXd& current) {
    const auto& gamma = solver.dofmap()->gamma;
    return gamma.inner(trace_on_gamma(solver.solve_neumann(current)), current);
}

PsdResult psd_test(const Eigen::MatrixXd& a, double tau) {
    if (a.rows() != a.cols()) throw InputError("psd test needs a square matrix");
    if (!(tau >= 0.0)) throw InputError("tau must be non-negative");
    if (a.size() == 0) return {true, 0.0, tau};
    const double top = a.cwiseAbs().maxCoeff();
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8 * top) {
        throw InputError("psd test needs a symmetric matrix");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SolverError("symmetric eigensolver failed", 0.0);
    const double lowest = eig.eigenvalues()(0);
    return {lowest >= -tau, lowest, tau};
}

double spectral_scale(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Certificate compare(const Eigen::MatrixXd& minuend, const std::string& minuend_label,
                    const Eigen::MatrixXd& subtrahend, const std::string& subtrahend_label,
                    double tau_factor) {
    if (minuend.rows() != subtrahend.rows() || minuend.cols() != subtrahend.cols()) {
        throw InputError("compared matrices differ in size");
    }
    const double tau = tau_factor * spectral_scale(minuend);
    const PsdResult r = psd_test(minuend - subtrahend, tau);
    return {minuend_label, subtrahend_label, r.min_eig, r.tau, r.passed};
}

Certificate compare(const NdMatrix& minuend, const NdMatrix& subtrahend, double tau_factor) {
    return compare(minuend.entries, minuend.config_label, subtrahend.entries, subtrahend.config_label,
                   tau_factor);
}

IdentityCheck projection_identity_check(const Mesh& mesh, const Conductivity& gamma0,
                                        const CrackSet& cracks, const CurrentBasis& basis,
                                        int f_index, ProjectionIdentity which) {
    if (f_index < 0 || f_index >= basis.size()) throw InputError("current index out of range");
    const Eigen::VectorXd f = basis.current(f_index);
    // Larger space first; the smaller one embeds into it.
    Configuration larger;
    Configuration smaller;
    if (which == ProjectionIdentity::insulating_part) {
        larger = Configuration::with_cracks(cracks);
        smaller = Configuration::with_cracks(cracks.only(CrackKind::conducting));
    } else {
        larger = Configuration::with_cracks(cracks.only(CrackKind::insulating));
        smaller = Configuration::with_cracks(cracks);
    }
    auto dm_large = std::make_shared<const DofMap>(build_dofmap(mesh, larger));
    auto dm_small = std::make_shared<const DofMap>(build_dofmap(mesh, smaller));
    ForwardSolver large(mesh, gamma0, dm_large);
    ForwardSolver small(mesh, gamma0, dm_small);
    const Field u_large = large.solve_neumann(f);
    const Field u_small = small.solve_neumann(f);
    const auto& gamma = dm_large->gamma;
    const double form_large = gamma.inner(trace_on_gamma(u_large), f);
    const double form_small = gamma.inner(trace_on_gamma(u_small), f);

    IdentityCheck out;
    out.lhs = form_large - form_small;
    Field diff = transfer(u_small, dm_large);
    diff.values = u_large.values - diff.values;
    out.rhs = energy(large.stiffness(), diff, diff);
    const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs)) + 1e-14 * std::abs(form_large);
    out.relative_error = scale > 0.0 ? std::abs(out.lhs - out.rhs) / scale : 0.0;
    return out;
}

} // namespace crackmono
