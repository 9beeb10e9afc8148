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

#ifndef RMT_IRS_RATE_EVAL_HPP
#define RMT_IRS_RATE_EVAL_HPP

#include "channel_model.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rmt_irs
{
    // Monte Carlo estimate of the normalized ergodic rate (nats per receive antenna).
    struct RateEstimate
    {
        double mean_nats = 0.0;
        double stderr_nats = 0.0;
        std::size_t n_trials = 0;
        double noise_var = 1.0;
    };

    enum class ChannelKind
    {
        double_scattering,
        rayleigh
    };

    namespace detail
    {
        inline void require_finite(const ChannelRealization &real)
        {
            if (!real.h1.allFinite() || !real.h2.allFinite())
                throw std::invalid_argument("non-finite channel entries");
        }

        // Effective end-to-end channel H1 Phi H2.
        inline CMatrix cascade(const ChannelRealization &real, const PhaseVector &theta)
        {
            if (real.h1.cols() != theta.size() || real.h2.rows() != theta.size())
                throw std::invalid_argument("channel/phase dimension mismatch");
            return real.h1 * theta.phi().asDiagonal() * real.h2;
        }

        inline CMatrix gram(const CMatrix &h, const CMatrix &q)
        {
            if (h.cols() != q.rows())
                throw std::invalid_argument("channel/covariance dimension mismatch");
            CMatrix b = h * q * h.adjoint();
            return 0.5 * (b + b.adjoint());
        }
    } // namespace detail

    // (1/n_r1) log det(I + H1 Phi H2 Q H2^H Phi^H H1^H / sigma^2)
    inline double instantaneous_rate(const ChannelRealization &real, const PhaseVector &theta,
                                     const Covariance &q, double noise_var)
    {
        if (!(noise_var > 0.0))
            throw std::invalid_argument("instantaneous_rate: noise variance must be > 0");
        detail::require_finite(real);
        const CMatrix b = detail::gram(detail::cascade(real, theta), q.q);
        const double r = logdet_identity_plus(b / noise_var) / double(real.h1.rows());
        return std::max(r, 0.0);
    }

    // (1/n_r1) Tr((z I + B)^{-1}) with B = H Q H^H for the cascaded channel.
    inline double empirical_stieltjes(const ChannelRealization &real, const PhaseVector &theta,
                                      const Covariance &q, double z)
    {
        if (!(z > 0.0))
            throw std::invalid_argument("empirical_stieltjes: z must be > 0");
        detail::require_finite(real);
        const CMatrix b = detail::gram(detail::cascade(real, theta), q.q);
        const Eigen::Index n = b.rows();
        const RVector ev = hermitian_eigenvalues(b);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            acc += 1.0 / (z + std::max(ev(i), 0.0));
        return acc / double(n);
    }

    // Mean and standard error (unbiased variance) of per-trial values.
    inline RateEstimate summarize_trials(const std::vector<double> &values, double noise_var)
    {
        RateEstimate est;
        est.n_trials = values.size();
        est.noise_var = noise_var;
        if (values.empty())
            return est;
        const double n = double(values.size());
        est.mean_nats = pairwise_sum(values) / n;
        if (values.size() > 1)
        {
            std::vector<double> dev2(values.size());
            for (std::size_t i = 0; i < values.size(); ++i)
                dev2[i] = (values[i] - est.mean_nats) * (values[i] - est.mean_nats);
            est.stderr_nats = std::sqrt(pairwise_sum(dev2) / (n - 1.0) / n);
        }
        return est;
    }

    // Monte Carlo ergodic rate. Trial t draws its channel from an RNG seeded
    // with derive_seed(seed, {t}), so the result is independent of `threads`.
    inline RateEstimate mc_ergodic_rate(const SystemDims &dims, const CorrelationProfile &corr,
                                        const PhaseVector &theta, const Covariance &q, double noise_var,
                                        std::size_t n_trials, std::uint64_t seed, unsigned threads = 1,
                                        ChannelKind kind = ChannelKind::double_scattering)
    {
        if (n_trials < 1)
            throw std::invalid_argument("mc_ergodic_rate: n_trials must be >= 1");
        if (!(noise_var > 0.0))
            throw std::invalid_argument("mc_ergodic_rate: noise variance must be > 0");
        if (theta.size() != dims.n_d1 || q.dim() != dims.n_d2)
            throw std::invalid_argument("mc_ergodic_rate: phase/covariance dimension mismatch");

        const CorrelationFactors factors(dims, corr);
        std::vector<double> values(n_trials);
        parallel_for(n_trials, threads, [&](std::size_t t)
                     {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
            const ChannelRealization real = kind == ChannelKind::rayleigh
                                                ? sample_rayleigh_channel(factors, rng)
                                                : sample_channel(factors, rng);
            values[t] = instantaneous_rate(real, theta, q, noise_var); });
        return summarize_trials(values, noise_var);
    }
} // namespace rmt_irs

#endif // RMT_IRS_RATE_EVAL_HPP
