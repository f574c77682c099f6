// Copyright 2026 The gibbs-sampler Authors
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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gibbs/experiment.hpp"

namespace ex = gibbs::experiment;

int main(int argc, char** argv) {
    CLI::App app{"Dissipative Gibbs-state preparation simulator"};
    app.set_version_flag("--version", std::string(ex::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    bool allow_large = false;

    CLI::App* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Config file (key = value lines)")->required();
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out-dir", out_dir, "Override output.dir");
    run->add_option("--threads", threads, "Worker threads for trajectory ensembles")->check(CLI::PositiveNumber);
    run->add_flag("--allow-large", allow_large, "Permit sizes above the default resource ceilings");

    CLI::App* list = app.add_subcommand("list-points", "Print the named Hamiltonian parameter points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (list->parsed()) {
        std::cout << ex::list_points_table();
        return 0;
    }

    try {
        ex::RunOptions opts;
        opts.seed = seed;
        if (out_dir) opts.out_dir = *out_dir;
        opts.threads = threads;
        opts.allow_large = allow_large;
        const ex::RunResult r = ex::run(ex::Config::load(config_path), opts);
        for (const auto& f : r.files) std::cout << (r.out_dir / f).string() << '\n';
        return 0;
    } catch (const gibbs::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const gibbs::ResourceCeiling& e) {
        std::cerr << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
}
