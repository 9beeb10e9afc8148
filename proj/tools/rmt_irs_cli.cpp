// SPDX-License-Identifier: Apache-2.0
//
// rmt_irs: ergodic-rate analysis and optimization for IRS-aided MIMO links
// over double-scattering channels.
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

#include <rmt_irs/harness/sweep.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace
{
    using namespace rmt_irs;
    using namespace rmt_irs::harness;

    enum ExitCode
    {
        exit_ok = 0,
        exit_config = 1,
        exit_solver = 2
    };

    struct CommonArgs
    {
        std::string config;
        std::string preset_name;
        std::optional<std::uint64_t> seed;
        std::string out;
        std::optional<unsigned> threads;
        bool no_timing = false;
    };

    void add_common(CLI::App *cmd, CommonArgs &a)
    {
        cmd->add_option("--config", a.config, "JSON experiment configuration");
        cmd->add_option("--preset", a.preset_name, "built-in experiment: fig2, fig3 or fig4");
        cmd->add_option("--seed", a.seed, "override the configured seed");
        cmd->add_option("--out", a.out, "output CSV path");
        cmd->add_option("--threads", a.threads, "worker threads (default: $RMT_IRS_THREADS, else all cores)")
            ->check(CLI::PositiveNumber);
        cmd->add_flag("--no-timing", a.no_timing, "leave wall_time_ms empty (byte-reproducible output)");
    }

    unsigned resolve_threads(const CommonArgs &a)
    {
        if (a.threads)
            return *a.threads;
        if (const char *env = std::getenv("RMT_IRS_THREADS"))
        {
            char *end = nullptr;
            const unsigned long v = std::strtoul(env, &end, 10);
            if (*env == '\0' || *end != '\0' || v == 0)
                throw ConfigError(std::string("RMT_IRS_THREADS: expected a positive integer, got '") + env + "'");
            return static_cast<unsigned>(v);
        }
        return default_thread_count();
    }

    ExperimentConfig resolve_config(const CommonArgs &a)
    {
        if (a.config.empty() == a.preset_name.empty())
            throw ConfigError("exactly one of --config or --preset is required");
        ExperimentConfig cfg = a.config.empty() ? preset(a.preset_name) : load_config(a.config);
        if (a.seed)
            cfg.seed = *a.seed;
        if (!a.out.empty())
            cfg.output = a.out;
        return cfg;
    }

    SweepOptions sweep_options(const CommonArgs &a)
    {
        return {resolve_threads(a), !a.no_timing};
    }

    // Runs `cfg` restricted to `methods` and prints (or writes) the CSV of each variant.
    void run_methods(ExperimentConfig cfg, const std::vector<std::string> &methods, const CommonArgs &a)
    {
        cfg.methods = methods;
        const SweepOptions opts = sweep_options(a);
        for (const SweepOutput &o : run_experiment(cfg, opts, !a.out.empty()))
        {
            if (a.out.empty())
                write_csv(std::cout, o.records);
            else
                std::cerr << "wrote " << o.config.output << '\n';
        }
    }

    void write_trace(const std::string &path, const ExperimentConfig &cfg)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write '" + path + "'");
        out << "variant,snr_db,iteration,da_nats,gamma,grad_norm\n";
        for (const ExperimentConfig &c : expand(cfg))
        {
            const DeterministicEquivalent de(c.dims, build_profile(c), c.fixed_point);
            for (double snr : c.snr_db)
            {
                const AoResult r = alternating_optimize(de, c.noise_var(snr), c.power, c.optimizer);
                for (const AoIteration &it : r.trace.records)
                    out << c.name << ',' << format_double(snr) << ',' << it.iteration << ','
                        << format_double(it.da_nats) << ',' << format_double(it.gamma) << ','
                        << format_double(it.grad_norm) << '\n';
            }
        }
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"rmt_irs: ergodic rate of IRS-aided MIMO over double-scattering channels"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string trace_path;
    bool dump_config = false;

    CLI::App *da = app.add_subcommand("da", "deterministic approximation at the unoptimized point");
    CLI::App *mc = app.add_subcommand("mc", "Monte Carlo ergodic rate at the unoptimized point");
    CLI::App *opt = app.add_subcommand("optimize", "alternating water-filling / phase-gradient optimization");
    CLI::App *sweep = app.add_subcommand("sweep", "run every configured method and write the CSV files");
    CLI::App *pre = app.add_subcommand("preset", "run (or print) a built-in experiment");
    for (CLI::App *c : {da, mc, opt, sweep, pre})
        add_common(c, args);
    opt->add_option("--trace", trace_path, "also write the per-iteration DA trace to this CSV");
    pre->add_flag("--dump-config", dump_config, "print the preset as a JSON config and exit");

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
        if (pre->parsed() && args.preset_name.empty())
            throw ConfigError("preset: --preset NAME is required");
        ExperimentConfig cfg = resolve_config(args);

        if (da->parsed())
            run_methods(cfg, {"da"}, args);
        else if (mc->parsed())
            run_methods(cfg, {"mc"}, args);
        else if (opt->parsed())
        {
            run_methods(cfg, {"ao"}, args);
            if (!trace_path.empty())
                write_trace(trace_path, cfg);
        }
        else if (pre->parsed() && dump_config)
            std::cout << to_json(cfg).dump(2) << '\n';
        else
        {
            for (const SweepOutput &o : run_experiment(cfg, sweep_options(args)))
                std::cerr << "wrote " << o.config.output << " (" << o.records.size() << " rows)\n";
        }
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const SolverError &e)
    {
        std::cerr << "solver failure: " << e.what() << '\n';
        return exit_solver;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_solver;
    }
    return exit_ok;
}
