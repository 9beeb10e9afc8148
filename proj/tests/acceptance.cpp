// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: rmt_irs_acceptance [output_dir]

#include "support.hpp"

#include <rmt_irs/harness/sweep.hpp>
#include <rmt_irs/optimize.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rmt_irs;
using namespace rmt_irs::harness;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool pass = true;
        std::string detail;
    };

    struct Instance
    {
        SystemDims dims;
        CorrelationProfile corr;
        PhaseVector theta;
        Covariance q;
        double noise;
    };

    // Random PSD configuration; about a third of the matrices are rank-deficient.
    Instance random_instance(Rng &rng, int lo, int hi)
    {
        Instance in;
        in.dims = test::random_dims(rng, lo, hi);
        std::uniform_int_distribution<int> coin(0, 2);
        auto mat = [&](int n)
        {
            return coin(rng) == 0 ? test::random_psd(n, rng, 1 + int(rng() % n)) : test::random_psd(n, rng);
        };
        in.corr = {mat(in.dims.n_r1), mat(in.dims.n_s1), mat(in.dims.n_d1),
                   mat(in.dims.n_d1), mat(in.dims.n_s2), mat(in.dims.n_d2)};
        in.theta = test::random_phases(in.dims.n_d1, rng);
        in.q = test::random_covariance(in.dims.n_d2, 1.0, rng);
        in.noise = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 1.0)(rng));
        return in;
    }

    std::string fmt(const char *f, double a)
    {
        char buf[128];
        std::snprintf(buf, sizeof buf, f, a);
        return buf;
    }

    std::string fmt(const char *f, double a, double b)
    {
        char buf[160];
        std::snprintf(buf, sizeof buf, f, a, b);
        return buf;
    }

    Outcome da_tightness()
    {
        Outcome o;
        ExperimentConfig base = preset("fig2");
        base.vary->values = {5, 15};
        double worst = 0.0; // |DA - MC| / allowed
        for (const ExperimentConfig &c : expand(base))
        {
            ExperimentConfig cfg = c;
            cfg.methods = {"da", "mc"};
            const auto recs = run_sweep(cfg, {default_thread_count(), false});
            const std::size_t n = cfg.snr_db.size();
            for (std::size_t s = 0; s < n; ++s)
            {
                const double da = recs[s].rate_bits_per_antenna;
                const double mc = recs[n + s].rate_bits_per_antenna;
                const double allowed = std::max(0.02 * mc, 3.0 * *recs[n + s].stderr_bits);
                const double gap = std::abs(da - mc);
                worst = std::max(worst, gap / allowed);
                if (gap > allowed)
                {
                    o.pass = false;
                    o.detail += " n_L=" + std::to_string(cfg.dims.n_d1) + fmt(" snr=%g: gap %.3g", cfg.snr_db[s], gap) +
                                fmt(" > %.3g;", allowed);
                }
            }
        }
        o.detail = fmt("worst gap/allowed = %.3f", worst) + o.detail;
        return o;
    }

    Outcome fixed_point_correctness()
    {
        Outcome o;
        Rng rng(20240101);
        double worst_res = 0.0, worst_spread = 0.0;
        for (int k = 0; k < 200; ++k)
        {
            const Instance in = random_instance(rng, 1, 12);
            const DeterministicEquivalent de(in.dims, in.corr);
            const DaSpectra sp = de.spectra(de.phase_terms(in.theta), de.covariance_terms(in.q));
            const FixedPoint fp = solve_fixed_point(sp, in.noise);
            worst_res = std::max(worst_res, fixed_point_residual(sp, in.noise, fp.h));

            if (k % 20 != 0)
                continue;
            std::uniform_real_distribution<double> init(1e-6, 10.0);
            for (int start = 0; start < 100; ++start)
            {
                FixedPointOptions opt;
                opt.method = FixedPointMethod::jacobi;
                opt.tol = 1e-14;
                opt.max_iter = 1000000;
                for (double &v : opt.init)
                    v = init(rng);
                const FixedPoint other = solve_fixed_point(sp, in.noise, opt);
                for (int i = 0; i < 5; ++i)
                    worst_spread = std::max(worst_spread, rmt_irs::detail::rel_change(other.h[i], fp.h[i]));
            }
        }
        o.pass = worst_res <= 1e-8 && worst_spread <= 1e-8;
        o.detail = fmt("max residual %.2e over 200 configs; max spread %.2e over 100 starts x 10 configs",
                       worst_res, worst_spread);
        return o;
    }

    Outcome envelope()
    {
        Rng rng(20240202);
        double worst = 0.0;
        for (int k = 0; k < 50; ++k)
        {
            const Instance in = random_instance(rng, 1, 10);
            const DeterministicEquivalent de(in.dims, in.corr);
            const PhaseTerms pt = de.phase_terms(in.theta);
            const CovarianceTerms ct = de.covariance_terms(in.q);
            const DaResult r = de.evaluate(pt, ct, in.noise);
            for (int i = 0; i < 5; ++i)
            {
                const double step = 1e-5 * r.fp.h[i];
                HVector up = r.fp.h, dn = r.fp.h;
                up[i] += step;
                dn[i] -= step;
                const double d = (de.objective(up, pt, ct, in.noise) - de.objective(dn, pt, ct, in.noise)) / (2.0 * step);
                worst = std::max(worst, std::abs(d) / (1.0 + std::abs(r.rate_nats)));
            }
        }
        return {worst <= 1e-6, fmt("max |dR/dh_i| / (1 + |R|) = %.2e over 50 instances", worst)};
    }

    Outcome gradient()
    {
        Rng rng(20240303);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k)
        {
            Instance in = random_instance(rng, 2, 8);
            const DeterministicEquivalent de(in.dims, in.corr);
            const PhaseTerms pt = de.phase_terms(in.theta);
            const FixedPoint fp = de.solve(pt, de.covariance_terms(in.q), in.noise);
            const RVector g = phase_gradient(de, pt, fp);
            RVector fd(in.dims.n_d1);
            const double step = 1e-5;
            for (int i = 0; i < in.dims.n_d1; ++i)
            {
                RVector up = in.theta.theta, dn = in.theta.theta;
                up(i) += step;
                dn(i) -= step;
                fd(i) = (de.rate(PhaseVector(up), in.q, in.noise) - de.rate(PhaseVector(dn), in.q, in.noise)) / (2.0 * step);
            }
            worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-300));
        }
        return {worst <= 1e-4, fmt("max relative error %.2e over 20 instances (n_L <= 8)", worst)};
    }

    Outcome water_filling()
    {
        Rng rng(20240404);
        std::uniform_int_distribution<int> dim(1, 16);
        std::uniform_real_distribution<double> log_unif(-3.0, 2.0);
        std::exponential_distribution<double> expo(1.0);
        double worst_budget = 0.0, worst_level = 0.0, worst_gain = -1e300;
        bool inactive_ok = true;
        for (int k = 0; k < 100; ++k)
        {
            const int n = dim(rng);
            const HermitianEig e = hermitian_eig(test::random_psd(n, rng, 1 + int(rng() % n)));
            const double kappa = std::pow(10.0, log_unif(rng));
            const double budget = n * std::pow(10.0, log_unif(rng));
            const Covariance q = water_fill(e, kappa, budget);
            const RVector p = (e.vectors.adjoint() * q.q * e.vectors).diagonal().real();
            const double lmax = e.values.maxCoeff();

            worst_budget = std::max(worst_budget, std::abs(q.q.trace().real() - budget) / budget);
            double lo = 1e300, hi = -1e300;
            for (int i = 0; i < n; ++i)
                if (p(i) > 1e-10 * budget)
                {
                    const double l = p(i) + 1.0 / (kappa * e.values(i));
                    lo = std::min(lo, l);
                    hi = std::max(hi, l);
                }
            worst_level = std::max(worst_level, (hi - lo) / hi);
            for (int i = 0; i < n; ++i)
                if (p(i) <= 1e-10 * budget && e.values(i) > 1e-12 * lmax && 1.0 / (kappa * e.values(i)) < hi * (1.0 - 1e-10))
                    inactive_ok = false;

            auto objective = [&](const RVector &a)
            {
                double acc = 0.0;
                for (int i = 0; i < n; ++i)
                    acc += std::log1p(kappa * std::max(e.values(i), 0.0) * a(i));
                return acc;
            };
            const double best = objective(p);
            for (int t = 0; t < 1000; ++t)
            {
                RVector r(n);
                for (int i = 0; i < n; ++i)
                    r(i) = expo(rng);
                r *= budget / r.sum();
                worst_gain = std::max(worst_gain, (objective(r) - best) / std::abs(best));
            }
        }
        const bool pass = worst_budget <= 1e-12 && worst_level <= 1e-10 && inactive_ok && worst_gain <= 1e-12;
        return {pass, fmt("budget err %.1e, level spread %.1e", worst_budget, worst_level) +
                          std::string(", inactive KKT ") + (inactive_ok ? "ok" : "violated") +
                          fmt(", best random-minus-waterfill %.2e", worst_gain)};
    }

    Outcome ao_monotone()
    {
        Outcome o;
        int max_iter = 0;
        double worst_drop = 0.0;
        for (const ExperimentConfig &c : expand(preset("fig4")))
        {
            const DeterministicEquivalent de(c.dims, build_profile(c), c.fixed_point);
            for (double snr : c.snr_db)
            {
                const AoResult r = alternating_optimize(de, c.noise_var(snr), c.power, c.optimizer);
                max_iter = std::max(max_iter, r.outer_iterations);
                for (std::size_t t = 1; t < r.trace.records.size(); ++t)
                    worst_drop = std::max(worst_drop, r.trace.records[t - 1].da_nats - r.trace.records[t].da_nats);
                if (r.stop == AoStop::max_outer)
                {
                    o.pass = false;
                    o.detail += " " + c.name + fmt(" snr=%g hit max_outer;", snr);
                }
            }
        }
        if (worst_drop > 1e-9)
            o.pass = false;
        o.detail = fmt("max outer iterations %g, largest DA decrease %.2e", max_iter, worst_drop) + o.detail;
        return o;
    }

    Outcome rank_trend()
    {
        Outcome o;
        const auto cfgs = expand(preset("fig3"));
        std::vector<std::vector<double>> rates;
        for (const ExperimentConfig &c : cfgs)
        {
            const DeterministicEquivalent de(c.dims, build_profile(c), c.fixed_point);
            std::vector<double> row;
            for (double snr : c.snr_db)
                row.push_back(de.rate(PhaseVector::spiral(c.dims.n_d1), Covariance::scaled_identity(c.dims.n_d2, c.power),
                                      c.noise_var(snr)));
            rates.push_back(row);
        }
        const auto &snr = cfgs[0].snr_db;
        for (std::size_t s = 0; s < snr.size(); ++s)
        {
            const bool ok = rates[0][s] < rates[1][s] && rates[1][s] < rates[2][s];
            o.pass = o.pass && ok;
            char buf[128];
            std::snprintf(buf, sizeof buf, " %gdB:%.3f<%.3f<%.3f%s", snr[s], rates[0][s], rates[1][s], rates[2][s],
                          ok ? "" : "(violated)");
            o.detail += buf;
        }
        o.detail = "DA nats/antenna for n_S=3,7,15:" + o.detail;
        return o;
    }

    Outcome optimization_gain()
    {
        const auto cfgs = expand(preset("fig4"));
        const ExperimentConfig &low = cfgs.front();
        const ExperimentConfig &full = cfgs.back();
        const double snr = 10.0;
        const DeterministicEquivalent de_low(low.dims, build_profile(low), low.fixed_point);
        const DeterministicEquivalent de_full(full.dims, build_profile(full), full.fixed_point);
        const double optimized = alternating_optimize(de_low, low.noise_var(snr), low.power, low.optimizer).final_da();
        const double plain = de_full.rate(PhaseVector::spiral(full.dims.n_d1),
                                          Covariance::scaled_identity(full.dims.n_d2, full.power), full.noise_var(snr));
        return {optimized > plain, fmt("optimized n_S=3: %.4f nats, unoptimized n_S=9: %.4f nats", optimized, plain)};
    }

    Outcome sampler_moment()
    {
        const SystemDims dims{3, 2, 4, 2, 3};
        Rng prng(20240909);
        const CorrelationProfile p = test::random_profile(dims, prng);
        const CorrelationFactors f(dims, p);
        const int n = 100000;
        const CMatrix expected = (p.s1.trace().real() / dims.n_s1) * (p.d1.trace().real() / dims.n_d1) * p.r1;

        std::vector<CMatrix> g(n);
        Eigen::Index max_rank1 = 0, max_rank2 = 0;
        for (int s = 0; s < n; ++s)
        {
            Rng rng(derive_seed(20240910, {std::uint64_t(s)}));
            const ChannelRealization real = sample_channel(f, rng);
            g[s] = real.h1 * real.h1.adjoint();
            max_rank1 = std::max(max_rank1, numerical_rank(real.h1, 1e-8));
            max_rank2 = std::max(max_rank2, numerical_rank(real.h2, 1e-8));
        }
        double worst_z = 0.0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                for (int part = 0; part < (r == c ? 1 : 2); ++part)
                {
                    auto pick = [&](const cplx &v)
                    { return part == 0 ? v.real() : v.imag(); };
                    double mean = 0.0;
                    for (const CMatrix &m : g)
                        mean += pick(m(r, c));
                    mean /= n;
                    double var = 0.0;
                    for (const CMatrix &m : g)
                        var += (pick(m(r, c)) - mean) * (pick(m(r, c)) - mean);
                    const double se = std::sqrt(var / (n - 1) / n);
                    worst_z = std::max(worst_z, std::abs(mean - pick(expected(r, c))) / se);
                }
        const bool pass = worst_z <= 3.0 && max_rank1 <= dims.n_s1 && max_rank2 <= dims.n_s2;
        return {pass, fmt("max |mean - target| / stderr = %.2f", worst_z) +
                          fmt(", max rank H1 = %g, H2 = %g (n_S = 2)", double(max_rank1), double(max_rank2))};
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    Outcome determinism(const fs::path &out_dir)
    {
        Outcome o;
        std::vector<std::vector<fs::path>> files(2);
        const unsigned threads[2] = {1, 4};
        for (int k = 0; k < 2; ++k)
        {
            ExperimentConfig c = preset("fig2");
            c.output = (out_dir / ("threads" + std::to_string(threads[k])) / "fig2.csv").string();
            for (const SweepOutput &s : run_experiment(c, {threads[k], false}))
                files[k].push_back(s.config.output);
        }
        std::size_t bytes = 0;
        for (std::size_t i = 0; i < files[0].size(); ++i)
        {
            const std::string a = slurp(files[0][i]), b = slurp(files[1][i]);
            bytes += a.size();
            if (a.empty() || a != b)
            {
                o.pass = false;
                o.detail += " differs: " + files[0][i].filename().string() + ";";
            }
        }
        o.detail = std::to_string(files[0].size()) + " CSV files, " + std::to_string(bytes) +
                   " bytes, threads 1 vs 4" + (o.pass ? " identical" : "") + o.detail;
        return o;
    }
} // namespace

int main(int argc, char **argv)
{
    const fs::path out_dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rmt_irs_acceptance";
    fs::create_directories(out_dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 DA tightness vs Monte Carlo (n_L 5, 15)", da_tightness},
        {"2 fixed-point residual and uniqueness", fixed_point_correctness},
        {"3 envelope property", envelope},
        {"4 phase gradient vs finite differences", gradient},
        {"5 water-filling KKT, budget, dominance", water_filling},
        {"6 AO monotone and terminating (fig4)", ao_monotone},
        {"7 rank-deficiency trend (fig3)", rank_trend},
        {"8 optimization gain at 10 dB (fig4)", optimization_gain},
        {"9 sampler second moment and rank", sampler_moment},
        {"10 sweep determinism across threads (fig2)", [&]
         { return determinism(out_dir); }},
    };

    int failures = 0;
    for (const auto &[name, run] : criteria)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = run();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  criterion %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
