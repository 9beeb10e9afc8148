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

#ifndef RMT_IRS_TYPES_HPP
#define RMT_IRS_TYPES_HPP

#include "linalg.hpp"

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rmt_irs
{
    // Solver failure (fixed-point non-convergence, loss of definiteness inside
    // an optimizer). Carries the last residual when one is meaningful.
    class SolverError : public std::runtime_error
    {
    public:
        explicit SolverError(const std::string &msg, double residual = 0.0)
            : std::runtime_error(msg), residual_(residual) {}
        double residual() const noexcept { return residual_; }

    private:
        double residual_;
    };

    // Antenna / scatterer / IRS counts of the two-hop link.
    //
    // Link 1 is IRS -> receiver (n_r1 x n_d1), link 2 is transmitter -> IRS
    // (n_d1 x n_d2); the IRS size n_d1 is also the receive dimension of link 2.
    struct SystemDims
    {
        int n_r1 = 1; ///< receive antennas
        int n_s1 = 1; ///< scatterers, link 1
        int n_d1 = 1; ///< IRS elements
        int n_s2 = 1; ///< scatterers, link 2
        int n_d2 = 1; ///< transmit antennas

        int n_irs() const noexcept { return n_d1; }
        int n_r2() const noexcept { return n_d1; }

        void validate() const
        {
            if (n_r1 < 1 || n_s1 < 1 || n_d1 < 1 || n_s2 < 1 || n_d2 < 1)
                throw std::invalid_argument("SystemDims: every dimension must be >= 1");
        }

        // n_r1 / n_x for the ratios entering the fixed-point system.
        double alpha_r1_s1() const noexcept { return double(n_r1) / n_s1; }
        double alpha_r1_t1() const noexcept { return double(n_r1) / n_d1; }
        double alpha_r1_s2() const noexcept { return double(n_r1) / n_s2; }
        double alpha_r1_t2() const noexcept { return double(n_r1) / n_d2; }

        friend bool operator==(const SystemDims &, const SystemDims &) = default;
    };

    // IRS phase shifts theta (radians). Phi = diag(exp(j theta)) is unit-modulus by construction.
    struct PhaseVector
    {
        RVector theta;

        PhaseVector() = default;
        explicit PhaseVector(RVector t) : theta(std::move(t))
        {
            if (!theta.allFinite())
                throw std::invalid_argument("PhaseVector: non-finite phase");
        }

        Eigen::Index size() const noexcept { return theta.size(); }

        CVector phi() const
        {
            CVector p(theta.size());
            for (Eigen::Index i = 0; i < theta.size(); ++i)
                p(i) = std::polar(1.0, theta(i));
            return p;
        }

        static PhaseVector zeros(int n) { return PhaseVector(RVector::Zero(n)); }

        // theta_l = 2 pi l / n, l = 0..n-1.
        static PhaseVector spiral(int n)
        {
            RVector t(n);
            for (int l = 0; l < n; ++l)
                t(l) = 2.0 * std::numbers::pi * l / n;
            return PhaseVector(std::move(t));
        }
    };

    // Transmit covariance Q with its per-antenna power budget P (Tr Q <= n_d2 P).
    struct Covariance
    {
        CMatrix q;
        double power = 1.0;

        Eigen::Index dim() const noexcept { return q.rows(); }

        void validate() const
        {
            require_hermitian_psd(q, "Covariance");
            if (!(power >= 0.0))
                throw std::invalid_argument("Covariance: power budget must be >= 0");
            if (q.trace().real() > double(q.rows()) * power + 1e-9)
                throw std::invalid_argument("Covariance: trace exceeds n_d2 * P");
        }

        static Covariance scaled_identity(int n, double power)
        {
            return {power * CMatrix::Identity(n, n), power};
        }
    };
} // namespace rmt_irs

#endif // RMT_IRS_TYPES_HPP
