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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "crackmono/harness.hpp"

using namespace crackmono;
using nlohmann::json;

namespace {

json small_doc() {
    return json::parse(R"({
      "name": "small",
      "domain": {"shape": "rectangle", "width": 1.0, "height": 1.0, "h": 0.03125},
      "cracks": [
        {"kind": "insulating", "points": [[0.3125, 0.65625], [0.65625, 0.65625]]},
        {"kind": "conducting", "points": [[0.5, 0.15625], [0.5, 0.34375]]}
      ],
      "grid": {"origin": [0.0, 0.0], "nx": 16, "ny": 16, "h": 0.0625},
      "modes": 12
    })");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("scenario parsing and round trip") {
    const Scenario s = parse_scenario(small_doc());
    CHECK(s.name == "small");
    CHECK(s.cracks.size() == 2);
    CHECK(s.cracks[1].kind == CrackKind::conducting);
    CHECK(s.grid->nx == 16);
    CHECK(s.tau_factor == kDefaultTauFactor);
    CHECK(to_json(parse_scenario(to_json(s))) == to_json(s));
}

TEST_CASE("scenario errors are itemized") {
    json doc = small_doc();
    doc["domain"]["h"] = -1.0;
    doc["modes"] = 0;
    doc["colour"] = "blue";
    doc["cracks"][0]["points"][1] = json::array({2.0, 0.5});
    try {
        parse_scenario(doc);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.problems().size() == 4);
    }
    CHECK_THROWS_AS(parse_scenario(json::array()), ConfigError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST_CASE("overrides are validated") {
    const Scenario s = parse_scenario(small_doc());
    Overrides o;
    o.seed = 7;
    o.anti_crime = true;
    o.modes = 6;
    const Scenario t = apply_overrides(s, o);
    CHECK(t.seed == 7);
    CHECK(t.anti_crime);
    CHECK(t.modes == 6);
    Overrides bad;
    bad.noise = -1.0;
    CHECK_THROWS_AS(apply_overrides(s, bad), ConfigError);
    Overrides many;
    many.modes = 1000;
    CHECK_THROWS_AS(build_setup(apply_overrides(s, many)), ConfigError);
}

TEST_CASE("symmetric noise") {
    const Eigen::MatrixXd a = symmetric_noise(10, 1e-3, 2.0, 5);
    CHECK((a - a.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(2e-3));
    CHECK(symmetric_noise(10, 1e-3, 2.0, 5) == a);
    CHECK(symmetric_noise(10, 1e-3, 2.0, 6) != a);
    CHECK(symmetric_noise(10, 0.0, 2.0, 5).isZero(0.0));
}

TEST_CASE("sha256 of known strings") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("run directories carry a hashed manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "crackmono_harness_test";
    std::filesystem::remove_all(dir);
    RunOutput out;
    out.report["x"] = 1;
    out.timings["total"] = 0.5;
    out.artifacts["a.csv"] = "1,2\n";
    write_run(dir, out);
    const json manifest = json::parse(slurp(dir / "manifest.json"));
    int seen = 0;
    for (const auto& entry : manifest.at("artifacts")) {
        const std::string bytes = slurp(dir / entry.at("path").get<std::string>());
        CHECK(entry.at("sha256") == sha256_hex(bytes));
        CHECK(entry.at("bytes") == bytes.size());
        ++seen;
    }
    CHECK(seen == 3);
    CHECK(json::parse(slurp(dir / "report.json")).at("x") == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic data and the monotonicity chain on a small mixed scenario") {
    Scenario s = parse_scenario(small_doc());
    const Setup setup = build_setup(s);
    CHECK(setup.truth.count(CrackKind::insulating) == 1);
    CHECK(setup.truth.count(CrackKind::conducting) == 1);
    CHECK(setup.basis.size() == 12);

    const SyntheticData plain = simulate(s, setup);
    CHECK(plain.source == "inversion-mesh");
    CHECK(plain.crime_gap == 0.0);
    CHECK(plain.data.entries == plain.same_mesh.entries);
    const MonotonicityRun run = verify_monotonicity(setup, plain.data, s.chain_margin, s.tau_factor);
    CHECK(run.chain.size() == 4);
    CHECK(run.brackets.size() == 2);
    CHECK(run.passed);

    s.anti_crime = true;
    s.noise = 1e-4;
    s.seed = 3;
    const SyntheticData crime = simulate(s, setup);
    CHECK(crime.source == "refined-mesh");
    CHECK(crime.crime_gap > 1e-10);
    CHECK(crime.noise_floor == doctest::Approx(1e-4));
    CHECK(crime.tau_below_noise);
    CHECK(simulate(s, setup).data.entries == crime.data.entries);
}
