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

#include "crackmono/fem.hpp"
#include "crackmono/geometry.hpp"
#include "crackmono/ndmap.hpp"

namespace crackmono {

enum class UpperMode { both, insulating, conducting };

std::string to_string(UpperMode mode);
UpperMode upper_mode_from_string(const std::string& name);

struct UpperOptions {
    UpperMode mode = UpperMode::both;
    double tau_factor = kDefaultTauFactor;
};

/// Checks of data against one test inclusion C: N_C^0 >= data (excluded C)
/// and data >= N_0^C (frozen C). Stops at the first failure.
struct InclusionTest {
    bool passed = true;
    std::vector<Certificate> certificates;
};

InclusionTest test_inclusion(const NdMatrix& data, const Mesh& mesh, const Conductivity& gamma0,
                             const CurrentBasis& basis, const PixelSet& c, UpperMode mode,
                             double tau_factor = kDefaultTauFactor);

struct PeelStep {
    int pixel = -1;
    bool accepted = false;
    std::vector<Certificate> certificates;
};

struct UpperBoundResult {
    PixelSet final_set;
    std::vector<PeelStep> peel_trace;
    UpperMode inequalities_used = UpperMode::both;
    std::vector<Certificate> initial;
    int sweeps = 0;
    /// Most negative min_eig among accepted probes, and the largest among
    /// rejected ones: how close the calls came to tau.
    double closest_accept = 0.0;
    double closest_reject = 0.0;
};

/// Greedy single-pixel peeling from all interior pixels. Each sweep probes,
/// in row-major order, the boundary pixels of the set as it stood when the
/// sweep began; accepted removals apply at once. A pixel rejected once is not
/// probed again until a final full sweep, which restarts the loop if anything
/// is still removable. Throws DataError if the starting set already fails.
UpperBoundResult reconstruct_upper(const NdMatrix& data, const Mesh& mesh, const Conductivity& gamma0,
                                   const CurrentBasis& basis, std::shared_ptr<const PixelGrid> grid,
                                   const UpperOptions& options = {});

/// Test crack for the inner method: a straight chain of mesh edges.
struct CandidateChain {
    std::vector<int> chain;
    Vec2 from;
    Vec2 to;
};

/// Horizontal and vertical chains from lattice point to lattice point
/// (spacing `spacing` from the grid origin) with `lengths` lattice steps,
/// lying in the closure of `region` (default: the interior pixels). Ordered
/// by length, then direction (x first), then row, then column.
std::vector<CandidateChain> enumerate_candidates(const Mesh& mesh, std::shared_ptr<const PixelGrid> grid,
                                                 double spacing, const std::vector<int>& lengths = {1, 2, 4},
                                                 const std::optional<PixelSet>& region = std::nullopt);

struct InnerDecision {
    CandidateChain candidate;
    Certificate certificate;
};

struct InnerResult {
    std::vector<InnerDecision> accepted;
    std::vector<InnerDecision> rejected;
    CrackKind kind = CrackKind::insulating;
};

/// Insulating: accept iff data >= N_chi. Conducting: accept iff
/// N_0^chi >= data. Data must carry cracks of the requested kind only.
/// Candidates are probed on `threads` workers (0: hardware concurrency);
/// the result does not depend on the thread count.
InnerResult reconstruct_inner(const NdMatrix& data, const Mesh& mesh, const Conductivity& gamma0,
                              const CurrentBasis& basis, const std::vector<CandidateChain>& candidates,
                              CrackKind kind, double tau_factor = kDefaultTauFactor, int threads = 0);

struct Scores {
    double precision = 1.0;
    double recall = 1.0;
    double hausdorff_to_truth = 0.0;   ///< max over result pixel centres of the distance to the cracks
    double hausdorff_from_truth = 0.0; ///< max over crack vertices of the distance to a result pixel centre
    int result_pixels = 0;
    int truth_pixels = 0;
};

/// Recall against the pixels meeting the truth; precision against those
/// pixels dilated by `dilation`.
Scores score(const PixelSet& result, const Mesh& mesh, const CrackSet& truth, int dilation = 1);

/// Fraction of truth edges lying on an edge of an accepted candidate.
double edge_coverage(const InnerResult& result, const Mesh& mesh, const CrackSet& truth);

/// Candidate classes against the truth: sub-chains (every edge a truth edge)
/// and far chains (at distance >= far_distance from every truth edge).
struct InnerScores {
    int candidates = 0;
    int subchains = 0;
    int subchains_accepted = 0;
    int far = 0;
    int far_rejected = 0;
    double coverage = 0.0;
};

InnerScores score_inner(const InnerResult& result, const Mesh& mesh, const CrackSet& truth, double far_distance);

/// 0/1 raster, one line per grid row starting at the lowest row.
std::string raster_csv(const PixelSet& set);

} // namespace crackmono
