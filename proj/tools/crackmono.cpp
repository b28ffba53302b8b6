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

// Command-line front end. Exit codes: 0 success, 1 unexpected failure,
// 2 bad configuration or input, 3 failed verification or inconsistent data,
// 4 solver failure. Errors are written to stderr as one JSON object.

#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "crackmono/harness.hpp"

namespace {

using crackmono::CommandResult;
using crackmono::RunOutput;
using crackmono::Scenario;

int report_error(int code, const std::string& kind, const std::string& message,
                 const std::vector<std::string>& problems = {}) {
    nlohmann::json err = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    if (!problems.empty()) err["error"]["problems"] = problems;
    std::cerr << err.dump() << std::endl;
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Crack reconstruction by monotonicity tests on Neumann-to-Dirichlet matrices"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;
    std::optional<int> modes;
    std::optional<std::string> anti_crime;
    std::optional<double> noise;

    using Command = std::function<CommandResult(const Scenario&, RunOutput&)>;
    const std::map<std::string, std::pair<std::string, Command>> commands{
        {"simulate", {"generate synthetic ND data and export mesh, cracks and a sample field", crackmono::cmd_simulate}},
        {"ndmatrix", {"ND matrices of the crack configuration and the background", crackmono::cmd_ndmatrix}},
        {"reconstruct-upper", {"upper-bound peeling reconstruction", crackmono::cmd_reconstruct_upper}},
        {"reconstruct-inner", {"union of accepted test cracks", crackmono::cmd_reconstruct_inner}},
        {"locpot-demo", {"localized potential sequence and its quadratic forms", crackmono::cmd_locpot_demo}},
        {"verify-monotonicity", {"check the monotonicity chain; exit 0 iff it passes", crackmono::cmd_verify_monotonicity}},
    };
    std::string chosen;
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config, "scenario JSON file")->required();
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "noise generator seed");
        sub->add_option("--tau", tau, "tau factor relative to the spectral scale")->check(CLI::NonNegativeNumber);
        sub->add_option("--modes", modes, "number of boundary currents M")->check(CLI::PositiveNumber);
        sub->add_option("--anti-crime", anti_crime, "generate data on a refined mesh")
            ->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--noise", noise, "relative symmetric noise level")->check(CLI::NonNegativeNumber);
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(2, "usage", e.what());
    }

    try {
        crackmono::Overrides o;
        o.seed = seed;
        o.tau_factor = tau;
        o.modes = modes;
        if (anti_crime) o.anti_crime = *anti_crime == "on";
        o.noise = noise;
        const Scenario scenario = crackmono::apply_overrides(crackmono::load_scenario(config), o);
        RunOutput out;
        const CommandResult failure = commands.at(chosen).second(scenario, out);
        out.report["status"] = failure ? "failed" : "ok";
        crackmono::write_run(out_dir, out);
        if (failure) return report_error(3, "verification", *failure);
        std::cout << nlohmann::json{{"status", "ok"}, {"command", chosen}, {"out", out_dir}}.dump() << std::endl;
        return 0;
    } catch (const crackmono::ConfigError& e) {
        return report_error(2, "config", e.what(), e.problems());
    } catch (const crackmono::InputError& e) {
        return report_error(2, "input", e.what());
    } catch (const crackmono::DataError& e) {
        return report_error(3, "data", e.what());
    } catch (const crackmono::SolverError& e) {
        return report_error(4, "solver", e.what());
    } catch (const std::exception& e) {
        return report_error(1, "internal", e.what());
    }
}
