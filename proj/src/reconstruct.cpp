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

#include "crackmono/reconstruct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "crackmono/errors.hpp"

namespace crackmono {

std::string to_string(UpperMode mode) {
    switch (mode) {
    case UpperMode::both:
        return "both";
    case UpperMode::insulating:
        return "insulating";
    case UpperMode::conducting:
        return "conducting";
    }
    return "both";
}

UpperMode upper_mode_from_string(const std::string& name) {
    if (name == "both") return UpperMode::both;
    if (name == "insulating") return UpperMode::insulating;
    if (name == "conducting") return UpperMode::conducting;
    throw InputError("unknown upper-bound mode '" + name + "'");
}

InclusionTest test_inclusion(const NdMatrix& data, const Mesh& mesh, const Conductivity& gamma0,
                             const CurrentBasis& basis, const PixelSet& c, UpperMode mode, double tau_factor) {
    InclusionTest out;
    if (mode != UpperMode::conducting) {
        const NdMatrix upper = nd_matrix(mesh, gamma0, Configuration::insulating_region(c), basis);
        out.certificates.push_back(compare(upper, data, tau_factor));
        if (!out.certificates.back().passed) {
            out.passed = false;
            return out;
        }
    }
    if (mode != UpperMode::insulating) {
        const NdMatrix lower = nd_matrix(mesh, gamma0, Configuration::conducting_region(c), basis);
        out.certificates.push_back(compare(data, lower, tau_factor));
        out.passed = out.certificates.back().passed;
    }
    return out;
}

UpperBoundResult reconstruct_upper(const NdMatrix& data, const Mesh& mesh, const Conductivity& gamma0,
                                   const CurrentBasis& basis, std::shared_ptr<const PixelGrid> grid,
                                   const UpperOptions& options) {
    UpperBoundResult result;
    result.inequalities_used = options.mode;
    PixelSet current = interior_pixels(grid);
    const auto start = test_inclusion(data, mesh, gamma0, basis, current, options.mode, options.tau_factor);
    result.initial = start.certificates;
    if (!start.passed) {
        const auto& c = start.certificates.back();
        std::ostringstream msg;
        msg << "data fails against the full interior: " << c.minuend << " - " << c.subtrahend
            << " has min eigenvalue " << c.min_eig << " < -" << c.tau;
        throw DataError(msg.str());
    }
    result.closest_accept = std::numeric_limits<double>::infinity();
    result.closest_reject = -std::numeric_limits<double>::infinity();
    std::vector<char> rejected(static_cast<std::size_t>(grid->size()), 0);
    bool final_sweep = false;
    while (true) {
        ++result.sweeps;
        bool changed = false;
        std::vector<int> layer;
        for (int p = 0; p < grid->size(); ++p) {
            if (is_boundary_pixel(current, p) && (final_sweep || !rejected[p])) layer.push_back(p);
        }
        for (int p : layer) {
            PixelSet next = current;
            next.erase(p);
            if (!pixelset_is_admissible(next)) continue;
            auto probe = test_inclusion(data, mesh, gamma0, basis, next, options.mode, options.tau_factor);
            for (const auto& c : probe.certificates) {
                if (probe.passed) {
                    result.closest_accept = std::min(result.closest_accept, c.min_eig);
                } else if (!c.passed) {
                    result.closest_reject = std::max(result.closest_reject, c.min_eig);
                }
            }
            result.peel_trace.push_back({p, probe.passed, std::move(probe.certificates)});
            if (probe.passed) {
                current = std::move(next);
                changed = true;
            } else {
                rejected[p] = 1;
            }
        }
        if (changed) {
            final_sweep = false;
        } else if (!final_sweep) {
            final_sweep = true;
        } else {
            break;
        }
    }
    if (!std::isfinite(result.closest_accept)) result.closest_accept = 0.0;
    if (!std::isfinite(result.closest_reject)) result.closest_reject = 0.0;
    result.final_set = std::move(current);
    return result;
}

namespace {

bool in_region_closure(const PixelGrid& grid, const PixelSet& region, const Vec2& p) {
    const Vec2 q = (p - grid.origin) / grid.h;
    const double eps = 1e-9;
    for (int i : {static_cast<int>(std::floor(q.x() - eps)), static_cast<int>(std::floor(q.x() + eps))}) {
        for (int j : {static_cast<int>(std::floor(q.y() - eps)), static_cast<int>(std::floor(q.y() + eps))}) {
            if (i < 0 || j < 0 || i >= grid.nx || j >= grid.ny) continue;
            if (region.contains(grid.index(i, j))) return true;
        }
    }
    return false;
}

} // namespace

std::vector<CandidateChain> enumerate_candidates(const Mesh& mesh, std::shared_ptr<const PixelGrid> grid,
                                                 double spacing, const std::vector<int>& lengths,
                                                 const std::optional<PixelSet>& region) {
    if (!(spacing > 0.0)) throw InputError("candidate spacing must be positive");
    for (int k : lengths) {
        if (k < 1) throw InputError("candidate lengths must be at least one step");
    }
    PixelSet allowed = region ? *region : interior_pixels(grid);
    for (int p : allowed.indices()) {
        if (!grid->interior[p]) throw InputError("candidate region leaves the interior pixels");
    }
    const int ni = static_cast<int>(std::floor(grid->nx * grid->h / spacing + 1e-9));
    const int nj = static_cast<int>(std::floor(grid->ny * grid->h / spacing + 1e-9));
    EdgeChainFinder finder(mesh);
    std::vector<CandidateChain> out;
    for (int k : lengths) {
        for (int dir = 0; dir < 2; ++dir) {
            const Vec2 step = spacing * Vec2::Unit(dir);
            for (int j = 0; j <= nj; ++j) {
                for (int i = 0; i <= ni; ++i) {
                    const Vec2 a = grid->origin + spacing * Vec2(i, j);
                    const Vec2 b = a + k * step;
                    bool inside = true;
                    for (int s = 0; s <= 2 * k && inside; ++s) {
                        inside = in_region_closure(*grid, allowed, a + 0.5 * s * step);
                    }
                    if (!inside) continue;
                    try {
                        out.push_back({finder(a, b), a, b});
                    } catch (const InputError&) {
                        // No edge chain on this mesh.
                    }
                }
            }
        }
    }
    return out;
}

InnerResult reconstruct_inner(const NdMatrix& data, const Mesh& mesh, const Conductivity& gamma0,
                              const CurrentBasis& basis, const std::vector<CandidateChain>& candidates,
                              CrackKind kind, double tau_factor, int threads) {
    const bool mixed = kind == CrackKind::insulating ? data.summary.conducting > 0 : data.summary.insulating > 0;
    if (mixed) {
        throw InputError("inner method needs " + to_string(kind) + "-only data");
    }
    const auto probe = [&](const CandidateChain& cand) {
        CrackSet chi;
        chi.components.push_back({cand.chain, kind});
        const NdMatrix test = nd_matrix(mesh, gamma0, Configuration::with_cracks(chi), basis);
        return kind == CrackKind::insulating ? compare(data, test, tau_factor) : compare(test, data, tau_factor);
    };
    const int n = static_cast<int>(candidates.size());
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, n));
    std::vector<Certificate> certs(candidates.size());
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto work = [&] {
        for (int k = next++; k < n; k = next++) {
            try {
                certs[k] = probe(candidates[k]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    InnerResult result;
    result.kind = kind;
    for (int k = 0; k < n; ++k) {
        (certs[k].passed ? result.accepted : result.rejected).push_back({candidates[k], certs[k]});
    }
    return result;
}

Scores score(const PixelSet& result, const Mesh& mesh, const CrackSet& truth, int dilation) {
    Scores s;
    const PixelSet hit = pixels_meeting(result.grid, mesh, truth);
    const PixelSet near = dilate(hit, dilation);
    s.result_pixels = result.count();
    s.truth_pixels = hit.count();
    int recalled = 0;
    int precise = 0;
    for (int p = 0; p < result.grid->size(); ++p) {
        if (hit.contains(p) && result.contains(p)) ++recalled;
        if (near.contains(p) && result.contains(p)) ++precise;
    }
    s.recall = s.truth_pixels > 0 ? static_cast<double>(recalled) / s.truth_pixels : 1.0;
    s.precision = s.result_pixels > 0 ? static_cast<double>(precise) / s.result_pixels : 1.0;
    const double inf = std::numeric_limits<double>::infinity();
    for (int p : result.indices()) {
        s.hausdorff_to_truth =
            std::max(s.hausdorff_to_truth, truth.empty() ? inf : distance_to_cracks(mesh, truth, result.grid->center(p)));
    }
    for (const auto& c : truth.components) {
        for (int v : c.chain) {
            double best = inf;
            for (int p : result.indices()) best = std::min(best, (result.grid->center(p) - mesh.vertices[v]).norm());
            s.hausdorff_from_truth = std::max(s.hausdorff_from_truth, best);
        }
    }
    return s;
}

double edge_coverage(const InnerResult& result, const Mesh& mesh, const CrackSet& truth) {
    const auto edges = truth.edges();
    if (edges.empty()) return 1.0;
    const double tol = 1e-9 * mesh.diameter();
    int covered = 0;
    for (const auto& e : edges) {
        const Vec2 mid = 0.5 * (mesh.vertices[e[0]] + mesh.vertices[e[1]]);
        for (const auto& d : result.accepted) {
            if (point_segment_distance(mid, d.candidate.from, d.candidate.to) <= tol) {
                ++covered;
                break;
            }
        }
    }
    return static_cast<double>(covered) / static_cast<double>(edges.size());
}

InnerScores score_inner(const InnerResult& result, const Mesh& mesh, const CrackSet& truth, double far_distance) {
    std::set<Edge> truth_edges;
    for (auto e : truth.edges()) {
        if (e[0] > e[1]) std::swap(e[0], e[1]);
        truth_edges.insert(e);
    }
    InnerScores s;
    s.coverage = edge_coverage(result, mesh, truth);
    const auto visit = [&](const InnerDecision& d, bool accepted) {
        ++s.candidates;
        bool sub = !truth_edges.empty();
        for (std::size_t k = 0; k + 1 < d.candidate.chain.size() && sub; ++k) {
            Edge e{d.candidate.chain[k], d.candidate.chain[k + 1]};
            if (e[0] > e[1]) std::swap(e[0], e[1]);
            sub = truth_edges.contains(e);
        }
        if (sub) {
            ++s.subchains;
            if (accepted) ++s.subchains_accepted;
        }
        double dist = std::numeric_limits<double>::infinity();
        for (const auto& e : truth_edges) {
            dist = std::min(dist, segment_segment_distance(d.candidate.from, d.candidate.to, mesh.vertices[e[0]],
                                                           mesh.vertices[e[1]]));
        }
        if (dist >= far_distance) {
            ++s.far;
            if (!accepted) ++s.far_rejected;
        }
    };
    for (const auto& d : result.accepted) visit(d, true);
    for (const auto& d : result.rejected) visit(d, false);
    return s;
}

std::string raster_csv(const PixelSet& set) {
    std::ostringstream out;
    const auto& g = *set.grid;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (i > 0) out << ',';
            out << (set.contains(g.index(i, j)) ? 1 : 0);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace crackmono
