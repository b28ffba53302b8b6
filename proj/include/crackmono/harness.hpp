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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crackmono/errors.hpp"
#include "crackmono/fem.hpp"
#include "crackmono/geometry.hpp"
#include "crackmono/locpot.hpp"
#include "crackmono/ndmap.hpp"
#include "crackmono/reconstruct.hpp"

namespace crackmono {

/// Scenario validation failure; one entry per problem found.
class ConfigError : public InputError {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct DomainSpec {
    std::string shape = "rectangle"; ///< "rectangle" or "disk"
    double width = 1.0;
    double height = 1.0;
    double h = 1.0 / 64.0;
    double radius = 1.0;
    int rings = 20;
};

struct GammaSpec {
    std::string type = "full"; ///< "full", "box" or "angle"
    Vec2 min{0.0, 0.0};
    Vec2 max{0.0, 0.0};
    Vec2 center{0.0, 0.0};
    double from = 0.0;
    double to = 0.0;
};

struct ConductivityRegion {
    Vec2 min;
    Vec2 max;
    double value = 1.0;
};

/// Constant background, overridden on axis-aligned boxes (by triangle centroid;
/// later boxes win).
struct Gamma0Spec {
    double value = 1.0;
    std::vector<ConductivityRegion> regions;
};

struct CrackSpec {
    CrackKind kind = CrackKind::insulating;
    std::vector<Vec2> points;
};

struct GridSpec {
    Vec2 origin{0.0, 0.0};
    int nx = 32;
    int ny = 32;
    double h = 1.0 / 32.0;
};

struct InnerSpec {
    std::optional<CrackKind> kind; ///< default: the kind of the scenario's cracks
    double spacing = 0.0;          ///< default: grid h
    std::vector<int> lengths{1, 2, 4};
};

struct LocpotSpec {
    CrackKind variant = CrackKind::insulating;
    int margin = 1; ///< pixel rings around the other crack kind where potentials vanish
    std::vector<double> n_values = default_n_values();
};

struct Scenario {
    std::string name = "scenario";
    DomainSpec domain;
    GammaSpec gamma;
    Gamma0Spec gamma0;
    std::vector<CrackSpec> cracks;
    std::optional<GridSpec> grid;
    int modes = 32;
    double tau_factor = kDefaultTauFactor;
    double noise = 0.0;
    std::uint64_t seed = 0;
    bool anti_crime = false;
    UpperMode upper_mode = UpperMode::both;
    InnerSpec inner;
    LocpotSpec locpot;
    int chain_margin = 1; ///< pixel rings added around each crack kind for V and W
};

Scenario parse_scenario(const nlohmann::json& doc);
/// Reads and parses a scenario file; unreadable or malformed files raise ConfigError.
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json to_json(const Scenario& s);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> tau_factor;
    std::optional<int> modes;
    std::optional<bool> anti_crime;
    std::optional<double> noise;
};

/// Applies command-line overrides and re-validates.
Scenario apply_overrides(Scenario s, const Overrides& o);

/// Inversion-side objects: the mesh with the cracks embedded, the crack chains
/// on it, the background, the current basis and the pixel grid.
struct Setup {
    Mesh mesh;
    CrackSet truth;
    Conductivity gamma0;
    CurrentBasis basis;
    std::shared_ptr<const PixelGrid> grid;
};

Mesh build_domain_mesh(const Scenario& s);
Conductivity build_conductivity(const Mesh& mesh, const Gamma0Spec& spec);
/// Embeds the crack polylines one after another.
EmbedResult embed_cracks(const Mesh& mesh, const std::vector<CrackSpec>& cracks);
Setup build_setup(const Scenario& s);

struct SyntheticData {
    NdMatrix data;            ///< what the methods see (anti-crime and noise applied)
    NdMatrix same_mesh;       ///< truth on the inversion mesh, noise free
    std::string source;       ///< "inversion-mesh" or "refined-mesh"
    int source_triangles = 0;
    double crime_gap = 0.0;   ///< max |data - same_mesh| / max |same_mesh| before noise
    double noise_norm = 0.0;  ///< spectral norm of the added perturbation
    double noise_floor = 0.0; ///< noise_norm relative to the spectral scale of the clean data
    bool tau_below_noise = false;
};

SyntheticData simulate(const Scenario& s, const Setup& setup);

/// Symmetric perturbation with spectral norm `level` * scale, drawn from a
/// generator seeded with `seed`.
Eigen::MatrixXd symmetric_noise(int size, double level, double scale, std::uint64_t seed);

struct MonotonicityRun {
    std::vector<Certificate> chain; ///< consecutive links V >= S0 >= 0 >= Sinf >= W
    std::vector<Certificate> brackets; ///< S0 >= data >= Sinf with data carrying both kinds
    bool passed = true;
};

MonotonicityRun verify_monotonicity(const Setup& setup, const NdMatrix& data, int margin, double tau_factor);

struct LocpotRun {
    CrackKind variant = CrackKind::insulating;
    Y0Pick y0;
    LocSequence sequence;
    BlowupReport report;
    int blowup_pixels = 0;
    int vanish_pixels = 0;
};

/// Variant insulating: blow-up on V around the insulating cracks, vanishing on
/// the conducting ones' neighbourhood; variant conducting mirrors it.
LocpotRun localized_demo(const Setup& setup, const LocpotSpec& spec, int chain_margin);

// JSON and CSV exports.
nlohmann::json to_json(const Mesh& mesh);
nlohmann::json to_json(const CrackSet& cracks);
nlohmann::json to_json(const PixelGrid& grid);
nlohmann::json to_json(const NdMatrix& n);
nlohmann::json to_json(const Certificate& c);
nlohmann::json to_json(const Scores& s);
nlohmann::json to_json(const UpperBoundResult& r);
nlohmann::json to_json(const InnerResult& r);
std::string certificates_csv(const std::vector<Certificate>& certs);
/// One line per mesh vertex: x, y and the mean of the field's values at its corners.
std::string field_csv(const Mesh& mesh, const Field& field);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Everything a run produces. `report` must be deterministic; wall-clock data
/// goes to `timings`.
struct RunOutput {
    nlohmann::json report = nlohmann::json::object();
    nlohmann::json timings = nlohmann::json::object();
    std::map<std::string, std::string> artifacts;
};

/// Writes the artifacts, report.json and timings.json, then manifest.json
/// listing each of them with its size and SHA-256.
void write_run(const std::filesystem::path& dir, const RunOutput& out);

/// CLI subcommands; each fills a RunOutput and returns a failure message when
/// a verification it performs does not pass (the artifacts are complete either way).
using CommandResult = std::optional<std::string>;

CommandResult cmd_simulate(const Scenario& s, RunOutput& out);
CommandResult cmd_ndmatrix(const Scenario& s, RunOutput& out);
CommandResult cmd_reconstruct_upper(const Scenario& s, RunOutput& out);
CommandResult cmd_reconstruct_inner(const Scenario& s, RunOutput& out);
CommandResult cmd_locpot_demo(const Scenario& s, RunOutput& out);
CommandResult cmd_verify_monotonicity(const Scenario& s, RunOutput& out);

} // namespace crackmono
