// SPDX-License-Identifier: Apache-2.0

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <rmt_irs/optimize.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

using namespace rmt_irs;
using Catch::Approx;

namespace
{
    HermitianEig diag_spectrum(std::initializer_list<double> values)
    {
        HermitianEig e;
        e.values = RVector(values.size());
        int i = 0;
        for (double v : values)
            e.values(i++) = v;
        e.vectors = CMatrix::Identity(e.values.size(), e.values.size());
        return e;
    }

    RVector allocation(const Covariance &q, const HermitianEig &e)
    {
        return (e.vectors.adjoint() * q.q * e.vectors).diagonal().real();
    }

    double wf_objective(const RVector &lambda, const RVector &p, double kappa)
    {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
            acc += std::log1p(kappa * lambda(i) * p(i));
        return acc;
    }

    struct Problem
    {
        SystemDims dims;
        CorrelationProfile corr;
        PhaseVector theta;
        Covariance q;
        double noise;
    };

    Problem random_problem(Rng &rng, int lo, int hi)
    {
        Problem p;
        p.dims = test::random_dims(rng, lo, hi);
        p.corr = test::random_profile(p.dims, rng);
        p.theta = test::random_phases(p.dims.n_d1, rng);
        p.q = test::random_covariance(p.dims.n_d2, 1.0, rng);
        p.noise = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 0.5)(rng));
        return p;
    }
} // namespace

TEST_CASE("water filling with a white spectrum is uniform", "[optimize]")
{
    Rng rng(1);
    const CMatrix u = hermitian_eig(test::random_psd(4, rng)).vectors;
    HermitianEig e{RVector::Ones(4), u};
    for (double kappa : {0.01, 1.0, 100.0})
    {
        const Covariance q = water_fill(e, kappa, 4 * 1.5);
        CHECK((q.q - 1.5 * CMatrix::Identity(4, 4)).norm() < 1e-12);
    }
}

TEST_CASE("water filling two-mode examples", "[optimize]")
{
    const HermitianEig e = diag_spectrum({2.0, 0.5});
    const RVector both = allocation(water_fill(e, 1.0, 2.0), e);
    CHECK(both(0) == Approx(1.75).epsilon(1e-14));
    CHECK(both(1) == Approx(0.25).epsilon(1e-14));

    const RVector one = allocation(water_fill(e, 0.1, 2.0), e);
    CHECK(one(0) == Approx(2.0).epsilon(1e-14));
    CHECK(one(1) == 0.0);
}

TEST_CASE("water filling edge cases", "[optimize]")
{
    const HermitianEig e = diag_spectrum({2.0, 0.5, 0.0});
    CHECK_THROWS_AS(water_fill(e, 1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(water_fill(diag_spectrum({0.0, 0.0}), 1.0, 1.0), std::invalid_argument);
    CHECK(water_fill(e, 1.0, 0.0).q.norm() == 0.0);
    CHECK((water_fill(e, 0.0, 3.0).q - CMatrix::Identity(3, 3)).norm() == 0.0);

    const RVector p = allocation(water_fill(e, 1.0, 100.0), e);
    CHECK(p(2) == 0.0);
    CHECK(p.sum() == Approx(100.0).epsilon(1e-12));
}

TEST_CASE("water filling satisfies KKT and dominates random allocations", "[optimize]")
{
    Rng rng(17);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_real_distribution<double> log_unif(-3.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    for (int rep = 0; rep < 50; ++rep)
    {
        const int n = dim(rng);
        const HermitianEig e = hermitian_eig(test::random_psd(n, rng, 1 + rep % n));
        const double kappa = std::pow(10.0, log_unif(rng));
        const double budget = n * std::pow(10.0, log_unif(rng));
        const Covariance q = water_fill(e, kappa, budget);
        const RVector p = allocation(q, e);
        const double lmax = e.values.maxCoeff();

        CHECK(std::abs(q.q.trace().real() - budget) <= 1e-12 * budget);
        double level = -1.0;
        for (int i = 0; i < n; ++i)
            if (p(i) > 1e-10 * budget)
            {
                const double l = p(i) + 1.0 / (kappa * e.values(i));
                if (level < 0.0)
                    level = l;
                CHECK(l == Approx(level).epsilon(1e-10));
            }
        REQUIRE(level > 0.0);
        for (int i = 0; i < n; ++i)
            if (p(i) <= 1e-10 * budget && e.values(i) > 1e-12 * lmax)
                CHECK(1.0 / (kappa * e.values(i)) >= level * (1.0 - 1e-10));

        const double best = wf_objective(e.values, p, kappa);
        for (int trial = 0; trial < 1000; ++trial)
        {
            RVector r(n);
            for (int i = 0; i < n; ++i)
                r(i) = expo(rng);
            r *= budget / r.sum();
            const double t = trial % 2 == 0 ? 1.0 : std::uniform_real_distribution<double>(0.0, 0.05)(rng);
            const RVector mix = (1.0 - t) * p + t * r;
            CHECK(wf_objective(e.values, mix, kappa) <= best + 1e-12 * std::abs(best));
        }
    }
}

TEST_CASE("phase gradient vanishes in degenerate cases", "[optimize]")
{
    Rng rng(23);
    {
        const SystemDims d{3, 2, 5, 2, 3};
        CorrelationProfile p = test::random_profile(d, rng);
        p.r2 = CMatrix(p.r2.diagonal().asDiagonal());
        const DeterministicEquivalent de(d, p);
        const PhaseTerms pt = de.phase_terms(test::random_phases(5, rng));
        const FixedPoint fp = de.solve(pt, de.covariance_terms(Covariance::scaled_identity(3, 1.0)), 0.5);
        CHECK(phase_gradient(de, pt, fp).norm() == 0.0);
    }
    {
        const SystemDims d{3, 2, 1, 2, 3};
        const CorrelationProfile p = test::random_profile(d, rng);
        const PhaseVector theta = test::random_phases(1, rng);
        const DeterministicEquivalent de(d, p);
        const FixedPoint fp = de.solve(de.phase_terms(theta), de.covariance_terms(Covariance::scaled_identity(3, 1.0)), 0.5);
        CHECK(phase_gradient(theta, fp, p, d).norm() == 0.0);
    }
}

TEST_CASE("phase gradient matches finite differences", "[optimize]")
{
    Rng rng(29);
    for (int rep = 0; rep < 5; ++rep)
    {
        Problem pr = random_problem(rng, 2, 7);
        pr.dims.n_d1 = 6;
        pr.corr = test::random_profile(pr.dims, rng);
        pr.theta = test::random_phases(6, rng);
        const DeterministicEquivalent de(pr.dims, pr.corr);
        const PhaseTerms pt = de.phase_terms(pr.theta);
        const FixedPoint fp = de.solve(pt, de.covariance_terms(pr.q), pr.noise);
        const RVector g = phase_gradient(de, pt, fp);

        RVector fd(6);
        const double step = 1e-5;
        for (int i = 0; i < 6; ++i)
        {
            RVector up = pr.theta.theta, dn = pr.theta.theta;
            up(i) += step;
            dn(i) -= step;
            fd(i) = (de.rate(PhaseVector(up), pr.q, pr.noise) - de.rate(PhaseVector(dn), pr.q, pr.noise)) / (2.0 * step);
        }
        CHECK((g - fd).norm() <= 1e-4 * g.norm());
    }
}

TEST_CASE("rate is 2 pi periodic in each phase", "[optimize]")
{
    Rng rng(31);
    const Problem pr = random_problem(rng, 2, 6);
    const DeterministicEquivalent de(pr.dims, pr.corr);
    const double base = de.rate(pr.theta, pr.q, pr.noise);
    for (int i = 0; i < pr.dims.n_d1; ++i)
    {
        RVector t = pr.theta.theta;
        t(i) += 2.0 * std::numbers::pi;
        CHECK(std::abs(de.rate(PhaseVector(t), pr.q, pr.noise) - base) <= 1e-10);
    }
}

TEST_CASE("backtracking on a scalar quadratic", "[optimize]")
{
    auto g = [](const PhaseVector &t)
    { return -(t.theta(0) - 1.0) * (t.theta(0) - 1.0); };
    AoConfig cfg;
    cfg.armijo_c = 0.005;
    cfg.initial_step = 1.0;
    const PhaseVector theta0 = PhaseVector::zeros(1);
    const RVector grad = RVector::Constant(1, 2.0);

    // gamma = 1 lands on theta = 2 with G = -1 < -1 + 0.005 * 1 * 2; gamma = 1/2 lands on the maximum.
    const LineSearchResult r = backtracking_step(theta0, grad, g, cfg);
    CHECK(r.gamma == 0.5);
    CHECK(r.theta.theta(0) == 1.0);
    CHECK(r.value == 0.0);
    CHECK(r.trials == 2);

    const LineSearchResult flat = backtracking_step(theta0, RVector::Zero(1), g, cfg);
    CHECK(flat.gamma == 0.0);
    CHECK(flat.theta.theta(0) == 0.0);
    CHECK(flat.trials == 0);

    AoConfig tiny = cfg;
    tiny.max_ls = 1;
    tiny.initial_step = 10.0;
    const LineSearchResult fail = backtracking_step(theta0, grad, g, tiny);
    CHECK(fail.gamma == 0.0);
    CHECK(fail.theta.theta(0) == 0.0);

    CHECK_THROWS_AS(backtracking_step(theta0, RVector::Constant(1, NAN), g, cfg), std::invalid_argument);
}

TEST_CASE("backtracking shrinks overshooting steps", "[optimize]")
{
    Rng rng(37);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep)
    {
        const int n = 4;
        Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&]
                                                         { return nd(rng); });
        const Eigen::MatrixXd h = a * a.transpose() + Eigen::MatrixXd::Identity(n, n);
        const RVector x0 = RVector::NullaryExpr(n, [&]
                                                { return nd(rng); });
        auto g = [&](const PhaseVector &t)
        { return -0.5 * (t.theta - x0).dot(h * (t.theta - x0)); };
        const PhaseVector theta = PhaseVector::zeros(n);
        const RVector grad = h * x0;

        AoConfig cfg;
        cfg.initial_step = 16.0;
        const LineSearchResult r = backtracking_step(theta, grad, g, cfg);
        REQUIRE(r.gamma > 0.0);
        CHECK(r.gamma < cfg.initial_step);
        CHECK(r.value >= g(theta) + cfg.armijo_c * r.gamma * grad.norm());
    }
}

TEST_CASE("AO config validation", "[optimize]")
{
    AoConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    for (auto mutate : std::vector<std::function<void(AoConfig &)>>{
             [](AoConfig &c)
             { c.armijo_c = 1.0; },
             [](AoConfig &c)
             { c.shrink = 0.0; },
             [](AoConfig &c)
             { c.max_outer = 0; },
             [](AoConfig &c)
             { c.max_ls = 0; },
             [](AoConfig &c)
             { c.conv_tol = 0.0; },
             [](AoConfig &c)
             { c.initial_step = -1.0; }})
    {
        AoConfig bad;
        mutate(bad);
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
}

TEST_CASE("AO stops immediately on a fully symmetric instance", "[optimize]")
{
    const SystemDims d{3, 2, 5, 2, 4};
    Rng rng(41);
    CorrelationProfile p = test::random_profile(d, rng);
    p.d2 = CMatrix::Identity(4, 4);
    p.r2 = CMatrix(p.r2.diagonal().asDiagonal());
    AoConfig cfg;
    const AoResult r = alternating_optimize(d, p, 0.3, 2.0, cfg);
    CHECK(r.outer_iterations == 1);
    CHECK(r.stop == AoStop::stationary);
    CHECK((r.q.q - 2.0 * CMatrix::Identity(4, 4)).norm() < 1e-12);
    CHECK(r.theta.theta == PhaseVector::spiral(5).theta);
}

TEST_CASE("AO trace is non-decreasing", "[optimize]")
{
    Rng rng(43);
    for (int rep = 0; rep < 4; ++rep)
    {
        const Problem pr = random_problem(rng, 2, 6);
        AoConfig cfg;
        cfg.armijo_c = 0.0005;
        const AoResult r = alternating_optimize(pr.dims, pr.corr, pr.noise, 1.0, cfg);
        REQUIRE(r.trace.records.size() == std::size_t(r.outer_iterations) + 1);
        for (std::size_t t = 1; t < r.trace.records.size(); ++t)
            CHECK(r.trace.records[t].da_nats >= r.trace.records[t - 1].da_nats - 1e-9);
        CHECK(r.outer_iterations <= cfg.max_outer);
        CHECK(r.q.q.trace().real() == Approx(pr.dims.n_d2 * 1.0).epsilon(1e-12));
        CHECK_NOTHROW(r.q.validate());
        const DeterministicEquivalent de(pr.dims, pr.corr);
        CHECK(de.rate(r.theta, r.q, pr.noise) == Approx(r.final_da()).epsilon(1e-12));
        CHECK(r.final_da() >= de.rate(PhaseVector::spiral(pr.dims.n_d1),
                                      Covariance::scaled_identity(pr.dims.n_d2, 1.0), pr.noise));
    }
}

TEST_CASE("AO reports the failing iteration", "[optimize]")
{
    Rng rng(47);
    const Problem pr = random_problem(rng, 3, 5);
    FixedPointOptions opt;
    opt.method = FixedPointMethod::jacobi;
    opt.max_iter = 1;
    const DeterministicEquivalent de(pr.dims, pr.corr, opt);
    try
    {
        (void)alternating_optimize(de, pr.noise, 1.0, AoConfig{});
        FAIL("expected SolverError");
    }
    catch (const SolverError &e)
    {
        CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
}
