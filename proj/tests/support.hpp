// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the unit tests.

#pragma once

#include <rmt_irs/channel_model.hpp>
#include <rmt_irs/linalg.hpp>
#include <rmt_irs/random.hpp>
#include <rmt_irs/types.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace rmt_irs::test
{
    // Random Hermitian PSD matrix with trace n, rank min(n, rank) (rank <= 0: full).
    inline CMatrix random_psd(int n, Rng &rng, int rank = 0)
    {
        const int r = rank > 0 ? std::min(n, rank) : n + 2;
        const CMatrix g = complex_gaussian(n, r, 1.0, rng);
        CMatrix a = g * g.adjoint();
        a = 0.5 * (a + a.adjoint());
        return a * (double(n) / a.trace().real());
    }

    inline CorrelationProfile random_profile(const SystemDims &d, Rng &rng)
    {
        return {random_psd(d.n_r1, rng), random_psd(d.n_s1, rng), random_psd(d.n_d1, rng),
                random_psd(d.n_d1, rng), random_psd(d.n_s2, rng), random_psd(d.n_d2, rng)};
    }

    inline SystemDims random_dims(Rng &rng, int lo, int hi)
    {
        std::uniform_int_distribution<int> u(lo, hi);
        return {u(rng), u(rng), u(rng), u(rng), u(rng)};
    }

    inline PhaseVector random_phases(int n, Rng &rng)
    {
        std::uniform_real_distribution<double> u(0.0, 2.0 * 3.141592653589793);
        RVector t(n);
        for (int i = 0; i < n; ++i)
            t(i) = u(rng);
        return PhaseVector(t);
    }

    // Random feasible covariance with Tr Q = n P.
    inline Covariance random_covariance(int n, double power, Rng &rng)
    {
        CMatrix q = random_psd(n, rng);
        q *= (double(n) * power) / q.trace().real();
        return {q, power};
    }

    inline double rel_err(double a, double b)
    {
        return std::abs(a - b) / std::max(std::abs(b), 1e-300);
    }
} // namespace rmt_irs::test
