/*
 * Copyright 2026 The mumimo-sched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// mumimo: command-line front end.
//
//   mumimo run     --config exp.cfg --set users=20 --out results
//   mumimo compare --config exp.cfg
//   mumimo analyze --config exp.cfg --out results
//
// Exit codes: 0 success, 1 I/O or runtime failure, 2 usage or config error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mumimo/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> workers;
    bool trace = false;
};

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "key=value config file");
    cmd->add_option("--set", o.sets, "override one config key, key=value (repeatable)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--workers", o.workers, "concurrent simulations")->check(CLI::PositiveNumber);
    cmd->add_flag("--trace", o.trace, "write the full per-slot trace of every run");
}

mumimo::ExperimentSpec load(const Options& o)
{
    mumimo::ConfigMap config;
    if (!o.config.empty()) {
        config = mumimo::read_config_file(o.config);
    }
    for (const auto& s : o.sets) {
        auto [k, v] = mumimo::split_assignment(s);
        config[k] = v;
    }
    if (o.seed) {
        config["seed"] = std::to_string(*o.seed);
    }
    if (!o.out.empty()) {
        config["out"] = o.out;
    }
    if (o.workers) {
        config["workers"] = std::to_string(*o.workers);
    }
    if (o.trace) {
        config["trace"] = "true";
    }
    return mumimo::build_spec(config);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Queue-aware feedback filtering for MU-MIMO downlink: simulation and decay-rate analysis"};
    app.require_subcommand(1);
    Options opts;
    auto* run = app.add_subcommand("run", "simulate every point of the configured sweep");
    auto* compare = app.add_subcommand("compare", "simulate all schedulers and tabulate overflow curves side by side");
    auto* analyze = app.add_subcommand("analyze", "write decay-rate theory, merged with simulation output if present");
    for (auto* cmd : {run, compare, analyze}) {
        add_common(cmd, opts);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const auto spec = load(opts);
        if (run->parsed()) {
            return mumimo::cmd_run(spec, std::cerr);
        }
        if (compare->parsed()) {
            return mumimo::cmd_compare(spec, std::cerr);
        }
        return mumimo::cmd_analyze(spec, std::cerr);
    } catch (const mumimo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
