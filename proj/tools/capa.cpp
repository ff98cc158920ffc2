// SPDX-License-Identifier: Apache-2.0
//
// capa-select: aperture selection for continuous aperture arrays
// Copyright (C) 2026 The capa-select authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Experiment runner: capa <experiment> --config <path> [--out <dir>] [--seed <u64>] [--trials <n>]
// Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.

#include "capa/capa.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace
{
    constexpr int exit_ok = 0;
    constexpr int exit_config = 1;
    constexpr int exit_numerical = 2;

    std::string read_file(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw capa::ConfigError("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Aperture selection experiments for continuous aperture arrays"};
    std::string experiment, config_path, out_dir;
    std::optional<std::uint64_t> seed, trials;
    std::optional<unsigned> threads;

    std::string names;
    for (const auto &n : capa::experiment_names())
        names += (names.empty() ? "" : "|") + n;
    app.add_option("experiment", experiment, names)->required();
    app.add_option("--config", config_path, "key = value config file")->required();
    app.add_option("--out", out_dir, "output directory (default: the config's output key)");
    app.add_option("--seed", seed, "overrides the config seed");
    app.add_option("--trials", trials, "overrides the config Monte-Carlo trial count");
    app.add_option("--threads", threads, "worker threads; results do not depend on it");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config;
    }

    try
    {
        auto cfg = capa::parse_config(read_file(config_path));
        if (seed)
            cfg.seed = *seed;
        if (trials)
            cfg.trials = *trials;
        if (threads)
            cfg.threads = *threads;
        if (!out_dir.empty())
            cfg.output = out_dir;
        capa::validate_config(cfg);

        const auto &known = capa::experiment_names();
        if (std::find(known.begin(), known.end(), experiment) == known.end())
            throw capa::ConfigError("unknown experiment '" + experiment + "' (expected " + names + ")");

        const auto table = capa::run_experiment(experiment, cfg);

        std::error_code ec;
        std::filesystem::create_directories(cfg.output, ec);
        const auto path = std::filesystem::path(cfg.output) / (experiment + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw capa::ConfigError("cannot write '" + path.string() + "'");
        capa::write_csv(out, experiment, cfg, table);
        out.close();
        if (!out)
            throw capa::ConfigError("failed writing '" + path.string() + "'");
        std::cout << path.string() << "\n";

        if (!table.ok)
        {
            std::cerr << "capa: verification failed, see " << path.string() << "\n";
            return exit_numerical;
        }
        return exit_ok;
    }
    catch (const capa::ConfigError &e)
    {
        std::cerr << "capa: config error: " << e.what() << "\n";
        return exit_config;
    }
    catch (const capa::DomainError &e)
    {
        std::cerr << "capa: invalid parameters: " << e.what() << "\n";
        return exit_config;
    }
    catch (const capa::NumericalError &e)
    {
        std::cerr << "capa: numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
    catch (const std::exception &e)
    {
        std::cerr << "capa: numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
}
