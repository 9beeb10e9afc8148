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

#ifndef RMT_IRS_RANDOM_HPP
#define RMT_IRS_RANDOM_HPP

#include "linalg.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rmt_irs
{
    using Rng = std::mt19937_64;

    inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Derives an independent stream seed from a base seed and a list of keys.
    inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept
    {
        std::uint64_t s = splitmix64(base);
        for (std::uint64_t k : keys)
            s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
        return s;
    }

    // rows x cols matrix of i.i.d. CN(0, variance): real and imaginary parts
    // independent N(0, variance / 2). Filled column-major.
    inline CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, Rng &rng)
    {
        std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
        CMatrix m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
            {
                const double re = nd(rng);
                const double im = nd(rng);
                m(r, c) = cplx(re, im);
            }
        return m;
    }
} // namespace rmt_irs

#endif // RMT_IRS_RANDOM_HPP
