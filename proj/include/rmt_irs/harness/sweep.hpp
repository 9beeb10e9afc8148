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

#ifndef RMT_IRS_HARNESS_SWEEP_HPP
#define RMT_IRS_HARNESS_SWEEP_HPP

#include "config.hpp"

#include "../det_equiv.hpp"
#include "../optimize.hpp"
#include "../parallel.hpp"
#include "../random.hpp"
#include "../rate_eval.hpp"

#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rmt_irs::harness
{
    inline constexpr const char *csv_header =
        "config_hash,snr_db,method,rate_bits_per_antenna,rate_bits_total,stderr,wall_time_ms,iterations";

    struct SweepRecord
    {
        std::string config_hash;
        double snr_db = 0.0;
        std::string method;
        double rate_bits_per_antenna = 0.0;
        double rate_bits_total = 0.0;
        std::optional<double> stderr_bits;  ///< Monte Carlo methods only
        std::optional<double> wall_time_ms; ///< empty when timing is disabled
        std::optional<int> iterations;      ///< ao only

        bool operator==(const SweepRecord &) const = default;
    };

    struct SweepOptions
    {
        unsigned threads = 1;
        bool timing = true;
    };

    // Converts a per-antenna rate in nats into a record.
    inline SweepRecord make_record(const std::string &hash, double snr_db, const std::string &method,
                                   double rate_nats, int n_r1)
    {
        SweepRecord r;
        r.config_hash = hash;
        r.snr_db = snr_db;
        r.method = method;
        r.rate_bits_per_antenna = rate_nats / std::numbers::ln2;
        r.rate_bits_total = double(n_r1) * r.rate_bits_per_antenna;
        return r;
    }

    // 17 significant digits: parses back to the identical double.
    inline std::string format_double(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    namespace detail
    {
        inline std::uint64_t method_id(const std::string &m)
        {
            for (std::size_t i = 0; i < known_methods.size(); ++i)
                if (m == known_methods[i])
                    return i + 1;
            throw ConfigError("unknown method '" + m + "'");
        }

        inline std::uint64_t cell_seed(const ExperimentConfig &cfg, std::uint64_t hash, double snr,
                                       const std::string &method)
        {
            return derive_seed(cfg.seed, {hash, std::bit_cast<std::uint64_t>(snr), method_id(method)});
        }

        inline std::string cell_name(const std::string &method, double snr)
        {
            return "cell (method=" + method + ", snr_db=" + format_double(snr) + ")";
        }

        template <typename Fn>
        auto in_cell(const std::string &method, double snr, Fn &&fn)
        {
            try
            {
                return fn();
            }
            catch (const SolverError &e)
            {
                throw SolverError(cell_name(method, snr) + ": " + e.what(), e.residual());
            }
            catch (const std::invalid_argument &e)
            {
                throw std::invalid_argument(cell_name(method, snr) + ": " + e.what());
            }
        }

        class Stopwatch
        {
        public:
            explicit Stopwatch(bool on) : on_(on), t0_(std::chrono::steady_clock::now()) {}
            std::optional<double> ms() const
            {
                if (!on_)
                    return std::nullopt;
                return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
            }

        private:
            bool on_;
            std::chrono::steady_clock::time_point t0_;
        };
    } // namespace detail

    // Runs every (method, SNR) cell of a single configuration (no vary axis).
    // Baselines use the spiral phases and Q = P I; "ao" is the DA at the
    // optimized point and "ao_mc" the Monte Carlo rate there. Records are in
    // (method, SNR) order, independent of the thread count.
    inline std::vector<SweepRecord> run_sweep(const ExperimentConfig &cfg, const SweepOptions &opts = {})
    {
        if (cfg.vary)
            throw ConfigError("run_sweep: expand() the vary axis first");
        if (cfg.snr_db.empty())
            throw ConfigError("config field 'snr_db': must be non-empty");
        if (cfg.noise_convention != noise_convention_p_over_sigma2)
            throw ConfigError("config field 'noise_convention': unsupported");
        try
        {
            cfg.dims.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(std::string("config field 'dims': ") + e.what());
        }

        const CorrelationProfile corr = build_profile(cfg);
        const DeterministicEquivalent de(cfg.dims, corr, cfg.fixed_point);
        const std::string hash = config_hash(cfg);
        const std::uint64_t hash_value = config_hash_value(cfg);
        const PhaseVector theta0 = PhaseVector::spiral(cfg.dims.n_d1);
        const Covariance q0 = Covariance::scaled_identity(cfg.dims.n_d2, cfg.power);
        const std::size_t n_snr = cfg.snr_db.size();
        const bool need_ao = cfg.has_method("ao") || cfg.has_method("ao_mc");
        const unsigned threads = std::max(1u, opts.threads);

        // Phase 1: baselines and the optimizer, one job per (method, SNR).
        struct Job
        {
            std::string method;
            std::size_t snr_index;
        };
        std::vector<Job> jobs;
        for (const std::string &m : cfg.methods)
            if (m != "ao" && m != "ao_mc")
                for (std::size_t s = 0; s < n_snr; ++s)
                    jobs.push_back({m, s});
        if (need_ao)
            for (std::size_t s = 0; s < n_snr; ++s)
                jobs.push_back({"ao", s});

        std::map<std::pair<std::string, std::size_t>, SweepRecord> done;
        std::vector<SweepRecord> phase1(jobs.size());
        std::vector<std::optional<AoResult>> ao(n_snr);
        const unsigned inner1 = std::max(1u, threads / unsigned(std::max<std::size_t>(jobs.size(), 1)));

        parallel_for(jobs.size(), threads, [&](std::size_t j)
                     {
            const Job &job = jobs[j];
            const double snr = cfg.snr_db[job.snr_index];
            const double noise = cfg.noise_var(snr);
            detail::in_cell(job.method, snr, [&] {
                const detail::Stopwatch clock(opts.timing);
                SweepRecord rec;
                if (job.method == "da")
                    rec = make_record(hash, snr, "da", de.rate(theta0, q0, noise), cfg.dims.n_r1);
                else if (job.method == "mc" || job.method == "rayleigh_mc")
                {
                    const ChannelKind kind = job.method == "mc" ? ChannelKind::double_scattering : ChannelKind::rayleigh;
                    const RateEstimate est = mc_ergodic_rate(cfg.dims, corr, theta0, q0, noise, cfg.trials,
                                                             detail::cell_seed(cfg, hash_value, snr, job.method),
                                                             inner1, kind);
                    rec = make_record(hash, snr, job.method, est.mean_nats, cfg.dims.n_r1);
                    rec.stderr_bits = est.stderr_nats / std::numbers::ln2;
                }
                else
                {
                    ao[job.snr_index] = alternating_optimize(de, noise, cfg.power, cfg.optimizer);
                    rec = make_record(hash, snr, "ao", ao[job.snr_index]->final_da(), cfg.dims.n_r1);
                    rec.iterations = ao[job.snr_index]->outer_iterations;
                }
                rec.wall_time_ms = clock.ms();
                phase1[j] = rec;
            }); });
        for (std::size_t j = 0; j < jobs.size(); ++j)
            done[{jobs[j].method, jobs[j].snr_index}] = phase1[j];

        // Phase 2: Monte Carlo at the optimized points.
        if (cfg.has_method("ao_mc"))
        {
            std::vector<SweepRecord> phase2(n_snr);
            const unsigned inner2 = std::max(1u, threads / unsigned(n_snr));
            parallel_for(n_snr, threads, [&](std::size_t s)
                         {
                const double snr = cfg.snr_db[s];
                detail::in_cell("ao_mc", snr, [&] {
                    const detail::Stopwatch clock(opts.timing);
                    const RateEstimate est = mc_ergodic_rate(cfg.dims, corr, ao[s]->theta, ao[s]->q, cfg.noise_var(snr),
                                                             cfg.trials, detail::cell_seed(cfg, hash_value, snr, "ao_mc"),
                                                             inner2);
                    SweepRecord rec = make_record(hash, snr, "ao_mc", est.mean_nats, cfg.dims.n_r1);
                    rec.stderr_bits = est.stderr_nats / std::numbers::ln2;
                    rec.wall_time_ms = clock.ms();
                    phase2[s] = rec;
                }); });
            for (std::size_t s = 0; s < n_snr; ++s)
                done[{"ao_mc", s}] = phase2[s];
        }

        std::vector<SweepRecord> out;
        for (const std::string &m : cfg.methods)
            for (std::size_t s = 0; s < n_snr; ++s)
                out.push_back(done.at({m, s}));
        return out;
    }

    inline void write_csv(std::ostream &os, const std::vector<SweepRecord> &records)
    {
        os << csv_header << '\n';
        for (const SweepRecord &r : records)
        {
            os << r.config_hash << ',' << format_double(r.snr_db) << ',' << r.method << ','
               << format_double(r.rate_bits_per_antenna) << ',' << format_double(r.rate_bits_total) << ','
               << (r.stderr_bits ? format_double(*r.stderr_bits) : "") << ','
               << (r.wall_time_ms ? format_double(*r.wall_time_ms) : "") << ','
               << (r.iterations ? std::to_string(*r.iterations) : "") << '\n';
        }
    }

    inline std::string to_csv(const std::vector<SweepRecord> &records)
    {
        std::ostringstream os;
        write_csv(os, records);
        return os.str();
    }

    inline void write_csv_file(const std::filesystem::path &path, const std::vector<SweepRecord> &records)
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write '" + path.string() + "'");
        write_csv(out, records);
        if (!out)
            throw std::runtime_error("write failed for '" + path.string() + "'");
    }

    class CsvError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline std::vector<SweepRecord> parse_csv(std::istream &in)
    {
        std::string line;
        if (!std::getline(in, line) || line != csv_header)
            throw CsvError("csv: missing or unexpected header");
        std::vector<SweepRecord> out;
        std::size_t lineno = 1;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            std::vector<std::string> f;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                f.push_back(cell);
            if (!line.empty() && line.back() == ',')
                f.emplace_back();
            if (f.size() != 8)
                throw CsvError("csv line " + std::to_string(lineno) + ": expected 8 fields");
            auto num = [&](const std::string &s, const char *col)
            {
                char *end = nullptr;
                const double v = std::strtod(s.c_str(), &end);
                if (s.empty() || *end != '\0')
                    throw CsvError("csv line " + std::to_string(lineno) + ": bad " + col + " '" + s + "'");
                return v;
            };
            auto opt_num = [&](const std::string &s, const char *col) -> std::optional<double>
            {
                if (s.empty())
                    return std::nullopt;
                return num(s, col);
            };
            SweepRecord r;
            r.config_hash = f[0];
            r.snr_db = num(f[1], "snr_db");
            r.method = f[2];
            r.rate_bits_per_antenna = num(f[3], "rate_bits_per_antenna");
            r.rate_bits_total = num(f[4], "rate_bits_total");
            r.stderr_bits = opt_num(f[5], "stderr");
            r.wall_time_ms = opt_num(f[6], "wall_time_ms");
            if (!f[7].empty())
                r.iterations = static_cast<int>(num(f[7], "iterations"));
            out.push_back(std::move(r));
        }
        return out;
    }

    inline std::vector<SweepRecord> read_csv_file(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw CsvError("cannot open '" + path.string() + "'");
        return parse_csv(in);
    }

    struct SweepOutput
    {
        ExperimentConfig config;
        std::vector<SweepRecord> records;
    };

    // Expands the vary axis and runs each variant. When `write` is set, each
    // variant's CSV goes to its own output path.
    inline std::vector<SweepOutput> run_experiment(const ExperimentConfig &cfg, const SweepOptions &opts = {},
                                                   bool write = true)
    {
        std::vector<SweepOutput> out;
        for (const ExperimentConfig &c : expand(cfg))
        {
            SweepOutput o{c, run_sweep(c, opts)};
            if (write)
                write_csv_file(c.output, o.records);
            out.push_back(std::move(o));
        }
        return out;
    }
} // namespace rmt_irs::harness

#endif // RMT_IRS_HARNESS_SWEEP_HPP
