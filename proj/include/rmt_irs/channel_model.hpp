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

#ifndef RMT_IRS_CHANNEL_MODEL_HPP
#define RMT_IRS_CHANNEL_MODEL_HPP

#include "linalg.hpp"
#include "random.hpp"
#include "types.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rmt_irs
{
    // Parameters of the angular-spread correlation generator.
    struct AngularParams
    {
        double phi = std::numbers::pi / 7.0; ///< angular spread [rad], in (0, 2 pi)
        int dim = 1;                         ///< matrix dimension
        int n_paths = 2;                     ///< number of angles summed over, >= 2
        double d = 25.0;                     ///< antenna spacing [wavelengths]

        void validate() const
        {
            if (!(phi > 0.0 && phi < 2.0 * std::numbers::pi))
                throw std::invalid_argument("AngularParams: phi must lie in (0, 2 pi)");
            if (n_paths < 2)
                throw std::invalid_argument("AngularParams: n_paths must be >= 2");
            if (dim < 1)
                throw std::invalid_argument("AngularParams: dim must be >= 1");
            if (!(d > 0.0))
                throw std::invalid_argument("AngularParams: antenna spacing must be > 0");
        }
    };

    // Correlation matrix with entries
    //   C(l,m) = 1/N sum_n exp(j 2 pi d (l - m) sin(n phi / (1 - N))),
    // n running over the N values (1-N)/2, (3-N)/2, ..., (N-1)/2 (half-integers for even N).
    // Rank is at most min(dim, N); the diagonal is exactly one.
    inline CMatrix build_correlation(const AngularParams &p)
    {
        p.validate();
        const int N = p.n_paths;
        RVector sines(N);
        for (int k = 0; k < N; ++k)
        {
            const double n = 0.5 * double(1 - N) + k;
            sines(k) = std::sin(n * p.phi / double(1 - N));
        }

        CMatrix c(p.dim, p.dim);
        for (int l = 0; l < p.dim; ++l)
        {
            c(l, l) = cplx(1.0, 0.0);
            for (int m = 0; m < l; ++m)
            {
                cplx acc(0.0, 0.0);
                for (int k = 0; k < N; ++k)
                    acc += std::polar(1.0, 2.0 * std::numbers::pi * p.d * double(l - m) * sines(k));
                acc /= double(N);
                c(l, m) = acc;
                c(m, l) = std::conj(acc);
            }
        }
        return c;
    }

    // The six correlation matrices of the two double-scattering hops:
    // H_i = R_i^{1/2} X_i S_i^{1/2} Y_i D_i^{1/2}.
    struct CorrelationProfile
    {
        CMatrix r1, s1, d1, r2, s2, d2;

        static CorrelationProfile identity(const SystemDims &dims)
        {
            auto eye = [](int n)
            { return CMatrix(CMatrix::Identity(n, n)); };
            return {eye(dims.n_r1), eye(dims.n_s1), eye(dims.n_d1),
                    eye(dims.n_d1), eye(dims.n_s2), eye(dims.n_d2)};
        }

        void validate(const SystemDims &dims) const
        {
            dims.validate();
            auto check = [](const CMatrix &m, int n, const char *name)
            {
                if (m.rows() != n || m.cols() != n)
                    throw std::invalid_argument(std::string("CorrelationProfile: ") + name + " has wrong dimension");
                require_hermitian_psd(m, std::string("CorrelationProfile.") + name);
            };
            check(r1, dims.n_r1, "r1");
            check(s1, dims.n_s1, "s1");
            check(d1, dims.n_d1, "d1");
            check(r2, dims.n_d1, "r2");
            check(s2, dims.n_s2, "s2");
            check(d2, dims.n_d2, "d2");
        }
    };

    // Hermitian square roots of a profile, computed once and reused by samplers.
    struct CorrelationFactors
    {
        SystemDims dims;
        CMatrix r1, s1, d1, r2, s2, d2;

        CorrelationFactors(const SystemDims &d, const CorrelationProfile &corr)
            : dims(d)
        {
            corr.validate(d);
            r1 = psd_sqrt(corr.r1);
            s1 = psd_sqrt(corr.s1);
            d1 = psd_sqrt(corr.d1);
            r2 = psd_sqrt(corr.r2);
            s2 = psd_sqrt(corr.s2);
            d2 = psd_sqrt(corr.d2);
        }
    };

    struct ChannelRealization
    {
        CMatrix h1; ///< n_r1 x n_d1 (IRS -> receiver)
        CMatrix h2; ///< n_d1 x n_d2 (transmitter -> IRS)
    };

    // Draws one realization. X_i, Y_i are drawn in the order X1, Y1, X2, Y2
    // with entry variances 1/n_{S_i} and 1/n_{D_i}.
    inline ChannelRealization sample_channel(const CorrelationFactors &f, Rng &rng)
    {
        const SystemDims &d = f.dims;
        const CMatrix x1 = complex_gaussian(d.n_r1, d.n_s1, 1.0 / d.n_s1, rng);
        const CMatrix y1 = complex_gaussian(d.n_s1, d.n_d1, 1.0 / d.n_d1, rng);
        const CMatrix x2 = complex_gaussian(d.n_d1, d.n_s2, 1.0 / d.n_s2, rng);
        const CMatrix y2 = complex_gaussian(d.n_s2, d.n_d2, 1.0 / d.n_d2, rng);

        ChannelRealization out;
        out.h1 = (f.r1 * x1) * (f.s1 * y1) * f.d1;
        out.h2 = (f.r2 * x2) * (f.s2 * y2) * f.d2;
        return out;
    }

    inline ChannelRealization sample_channel(const SystemDims &dims, const CorrelationProfile &corr, Rng &rng)
    {
        return sample_channel(CorrelationFactors(dims, corr), rng);
    }

    // Kronecker-correlated Rayleigh hop R^{1/2} X D^{1/2}, X i.i.d. CN(0, 1/n_D).
    // Used as the full-rank baseline next to the double-scattering model.
    inline ChannelRealization sample_rayleigh_channel(const CorrelationFactors &f, Rng &rng)
    {
        const SystemDims &d = f.dims;
        const CMatrix x1 = complex_gaussian(d.n_r1, d.n_d1, 1.0 / d.n_d1, rng);
        const CMatrix x2 = complex_gaussian(d.n_d1, d.n_d2, 1.0 / d.n_d2, rng);
        return {f.r1 * x1 * f.d1, f.r2 * x2 * f.d2};
    }

    struct EffectiveTransforms
    {
        CMatrix t1; ///< Phi^H D1 Phi
        CMatrix t2; ///< D2^{1/2} Q D2^{1/2}
    };

    inline EffectiveTransforms effective_transforms(const PhaseVector &theta, const Covariance &q,
                                                    const CorrelationProfile &corr)
    {
        if (theta.size() != corr.d1.rows())
            throw std::invalid_argument("effective_transforms: theta length must equal n_d1");
        if (q.dim() != corr.d2.rows())
            throw std::invalid_argument("effective_transforms: Q dimension must equal n_d2");

        const CVector phi = theta.phi();
        CMatrix t1 = phi.conjugate().asDiagonal() * corr.d1 * phi.asDiagonal();
        const CMatrix d2h = psd_sqrt(corr.d2);
        CMatrix t2 = d2h * q.q * d2h;
        return {0.5 * (t1 + t1.adjoint()), 0.5 * (t2 + t2.adjoint())};
    }
} // namespace rmt_irs

#endif // RMT_IRS_CHANNEL_MODEL_HPP
