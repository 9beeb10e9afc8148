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

#ifndef RMT_IRS_DET_EQUIV_HPP
#define RMT_IRS_DET_EQUIV_HPP

#include "channel_model.hpp"
#include "linalg.hpp"
#include "types.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rmt_irs
{
    using HVector = std::array<double, 5>;

    // Solution h1..h5 of the five coupled trace equations at spectral argument z.
    struct FixedPoint
    {
        HVector h{1.0, 1.0, 1.0, 1.0, 1.0};
        double z = 1.0;
        int iterations = 0;
        double residual = 0.0;

        // prod_{j != i} h_j
        double product_except(int i) const noexcept
        {
            double p = 1.0;
            for (int j = 0; j < 5; ++j)
                if (j != i)
                    p *= h[j];
            return p;
        }
        double product() const noexcept { return h[0] * h[1] * h[2] * h[3] * h[4]; }
    };

    // Matrix operands of the fixed-point system.
    struct DaInputs
    {
        CMatrix r1; ///< receive correlation of link 1 (n_r1)
        CMatrix s1; ///< scatterer correlation of link 1 (n_s1)
        CMatrix s2; ///< scatterer correlation of link 2 (n_s2)
        CMatrix m1; ///< T1^{1/2} R2 T1^{1/2} (n_d1)
        CMatrix t2; ///< D2^{1/2} Q D2^{1/2} (n_d2)
        SystemDims dims;
        double z = 1.0;

        void validate() const
        {
            dims.validate();
            if (!(z > 0.0))
                throw std::invalid_argument("DaInputs: z must be > 0");
            auto check = [](const CMatrix &m, int n, const char *name)
            {
                if (m.rows() != n || m.cols() != n)
                    throw std::invalid_argument(std::string("DaInputs: ") + name + " has wrong dimension");
                require_hermitian_psd(m, std::string("DaInputs.") + name);
            };
            check(r1, dims.n_r1, "r1");
            check(s1, dims.n_s1, "s1");
            check(s2, dims.n_s2, "s2");
            check(m1, dims.n_d1, "m1");
            check(t2, dims.n_d2, "t2");
        }
    };

    // Eigenvalues of the DaInputs matrices. Every trace in the fixed-point
    // system is a spectral sum, so the iteration runs on these alone.
    struct DaSpectra
    {
        RVector r1, s1, s2, m1, t2;
        SystemDims dims;

        static DaSpectra from(const DaInputs &in)
        {
            in.validate();
            return {hermitian_eigenvalues(in.r1), hermitian_eigenvalues(in.s1), hermitian_eigenvalues(in.s2),
                    hermitian_eigenvalues(in.m1), hermitian_eigenvalues(in.t2), in.dims};
        }
    };

    namespace detail
    {
        // (1/n) sum lambda / (shift + c lambda)
        inline double resolvent_trace(const RVector &lambda, double shift, double c, int n)
        {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < lambda.size(); ++i)
            {
                const double l = std::max(lambda(i), 0.0);
                acc += l / (shift + c * l);
            }
            return acc / double(n);
        }

        inline double rel_change(double a, double b)
        {
            const double s = std::max(std::abs(a), std::abs(b));
            return s == 0.0 ? 0.0 : std::abs(a - b) / s;
        }
    } // namespace detail

    // Right-hand sides of the fixed-point system evaluated at h.
    inline HVector fixed_point_map(const DaSpectra &sp, double z, const HVector &h)
    {
        const SystemDims &d = sp.dims;
        const auto [h1, h2, h3, h4, h5] = h;
        return {
            detail::resolvent_trace(sp.r1, z, h2 * h3 * h4 * h5, d.n_r1),
            detail::resolvent_trace(sp.s1, 1.0, d.alpha_r1_s1() * h1 * h3 * h4 * h5, d.n_s1),
            detail::resolvent_trace(sp.m1, 1.0, d.alpha_r1_t1() * h1 * h2 * h4 * h5, d.n_d1),
            detail::resolvent_trace(sp.s2, 1.0, d.alpha_r1_s2() * h1 * h2 * h3 * h5, d.n_s2),
            detail::resolvent_trace(sp.t2, 1.0, d.alpha_r1_t2() * h1 * h2 * h3 * h4, d.n_d2),
        };
    }

    // Largest relative discrepancy between h and the map evaluated at h.
    inline double fixed_point_residual(const DaSpectra &sp, double z, const HVector &h)
    {
        const HVector u = fixed_point_map(sp, z, h);
        double r = 0.0;
        for (int i = 0; i < 5; ++i)
            r = std::max(r, detail::rel_change(u[i], h[i]));
        return r;
    }

    enum class FixedPointMethod
    {
        product_bracket, ///< scalar root-finding on the product h1 h2 h3 h4 h5 (default)
        jacobi           ///< damped simultaneous substitution from `init`
    };

    struct FixedPointOptions
    {
        double tol = 1e-10;
        int max_iter = 5000;
        HVector init{1.0, 1.0, 1.0, 1.0, 1.0};
        FixedPointMethod method = FixedPointMethod::product_bracket;
    };

    namespace detail
    {
        // Equation i of the system written as h = (1/n) Tr(A (shift I + a x A)^{-1}), with
        // x = M / h the product of the other four unknowns and M the full product.
        struct TraceEquation
        {
            const RVector *lambda;
            double shift;
            double a;
            int n;

            double trace() const { return lambda->cwiseMax(0.0).sum(); }

            // Positive eigenvalue count; h(M) > 0 iff M < rank / (n a).
            int rank() const
            {
                int r = 0;
                for (Eigen::Index i = 0; i < lambda->size(); ++i)
                    r += (*lambda)(i) > 0.0;
                return r;
            }

            // Unique h >= 0 solving the equation at product M. For h > 0 this is
            // 1 = (1/n) sum lambda / (shift h + a M lambda), decreasing in h.
            double solve_h(double m, int max_iter) const
            {
                const double tr = trace();
                if (tr == 0.0)
                    return 0.0;
                const double upper = tr / (double(n) * shift);
                if (m == 0.0)
                    return upper;
                auto g = [&](double h)
                {
                    double acc = 0.0;
                    for (Eigen::Index i = 0; i < lambda->size(); ++i)
                    {
                        const double l = std::max((*lambda)(i), 0.0);
                        if (l > 0.0)
                            acc += l / (shift * h + a * m * l);
                    }
                    return acc / double(n) - 1.0;
                };
                if (g(0.0) <= 0.0)
                    return 0.0;
                return find_root(g, 0.0, upper, max_iter);
            }

            template <typename Fn>
            static double find_root(Fn &&fn, double lo, double hi, int max_iter)
            {
                const double flo = fn(lo), fhi = fn(hi);
                if (flo == 0.0)
                    return lo;
                if (fhi == 0.0)
                    return hi;
                boost::uintmax_t iters = static_cast<boost::uintmax_t>(std::max(max_iter, 1));
                const auto bracket = boost::math::tools::toms748_solve(
                    fn, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
                return 0.5 * (bracket.first + bracket.second);
            }
        };

        inline std::array<TraceEquation, 5> trace_equations(const DaSpectra &sp, double z)
        {
            const SystemDims &d = sp.dims;
            return {{{&sp.r1, z, 1.0, d.n_r1},
                     {&sp.s1, 1.0, d.alpha_r1_s1(), d.n_s1},
                     {&sp.m1, 1.0, d.alpha_r1_t1(), d.n_d1},
                     {&sp.s2, 1.0, d.alpha_r1_s2(), d.n_s2},
                     {&sp.t2, 1.0, d.alpha_r1_t2(), d.n_d2}}};
        }

        // Each h_i is a decreasing function of the product M, so prod_i h_i(M) - M
        // has exactly one root on [0, min_i rank_i / (n_i a_i)].
        inline FixedPoint solve_by_product(const DaSpectra &sp, double z, const FixedPointOptions &opt)
        {
            const auto eqs = trace_equations(sp, z);
            auto h_at = [&](double m)
            {
                HVector h;
                for (int i = 0; i < 5; ++i)
                    h[i] = eqs[i].solve_h(m, opt.max_iter);
                return h;
            };
            auto excess = [&](double m)
            {
                const HVector h = h_at(m);
                return h[0] * h[1] * h[2] * h[3] * h[4] - m;
            };

            double m_hi = std::numeric_limits<double>::infinity();
            for (const auto &e : eqs)
                m_hi = std::min(m_hi, double(e.rank()) / (double(e.n) * e.a));

            double m = 0.0;
            if (m_hi > 0.0 && excess(0.0) > 0.0)
                m = TraceEquation::find_root(excess, 0.0, m_hi, opt.max_iter);

            // Recover the h's and report the residual of the full map.
            HVector h = h_at(m);
            FixedPoint fp{h, z, 1, 0.0};
            const HVector u = fixed_point_map(sp, z, h);
            for (int i = 0; i < 5; ++i)
                fp.residual = std::max(fp.residual, rel_change(u[i], h[i]));
            if (!(fp.residual <= opt.tol))
            {
                std::ostringstream msg;
                msg << "solve_fixed_point: product root-finding left residual " << fp.residual;
                throw SolverError(msg.str(), fp.residual);
            }
            return fp;
        }

        // Simultaneous (Jacobi) substitution with adaptive damping:
        //   h <- (1 - lambda) h + lambda F(h),
        // lambda starting at 1 and halved whenever the residual has not improved on
        // its best value for 10 consecutive steps.
        inline FixedPoint solve_by_jacobi(const DaSpectra &sp, double z, const FixedPointOptions &opt)
        {
            HVector h = opt.init;
            double lambda = 1.0;
            double best = std::numeric_limits<double>::infinity();
            int stall = 0;
            double res = std::numeric_limits<double>::infinity();

            for (int it = 1; it <= opt.max_iter; ++it)
            {
                const HVector u = fixed_point_map(sp, z, h);
                res = 0.0;
                for (int i = 0; i < 5; ++i)
                {
                    if (!std::isfinite(u[i]))
                        throw SolverError("solve_fixed_point: non-finite iterate", res);
                    res = std::max(res, rel_change(u[i], h[i]));
                }
                if (res <= opt.tol)
                    return {u, z, it, res};

                if (res < best)
                {
                    best = res;
                    stall = 0;
                }
                else if (++stall >= 10)
                {
                    lambda *= 0.5;
                    stall = 0;
                }
                for (int i = 0; i < 5; ++i)
                    h[i] = (1.0 - lambda) * h[i] + lambda * u[i];
            }

            std::ostringstream msg;
            msg << "solve_fixed_point: no convergence after " << opt.max_iter << " iterations (residual " << res << ")";
            throw SolverError(msg.str(), res);
        }
    } // namespace detail

    // Solves the five coupled trace equations at z. Throws SolverError when the
    // returned point would not reproduce itself to `tol` (never a partial result).
    inline FixedPoint solve_fixed_point(const DaSpectra &sp, double z, const FixedPointOptions &opt = {})
    {
        if (!(z > 0.0) || !std::isfinite(z))
            throw std::invalid_argument("solve_fixed_point: z must be finite and > 0");
        if (!(opt.tol > 0.0) || opt.max_iter < 1)
            throw std::invalid_argument("solve_fixed_point: tol must be > 0 and max_iter >= 1");
        for (double v : opt.init)
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument("solve_fixed_point: initial point must be positive");

        return opt.method == FixedPointMethod::jacobi ? detail::solve_by_jacobi(sp, z, opt)
                                                      : detail::solve_by_product(sp, z, opt);
    }

    inline FixedPoint solve_fixed_point(const DaInputs &in, const FixedPointOptions &opt)
    {
        return solve_fixed_point(DaSpectra::from(in), in.z, opt);
    }

    inline FixedPoint solve_fixed_point(const DaInputs &in, double tol = 1e-10, int max_iter = 5000)
    {
        FixedPointOptions opt;
        opt.tol = tol;
        opt.max_iter = max_iter;
        return solve_fixed_point(in, opt);
    }

    // Deterministic approximation of E[m_B(z)]: (1/n_r1) Tr((z I + h2 h3 h4 h5 R1)^{-1}).
    inline double da_stieltjes(const FixedPoint &fp, const RVector &r1_eigs, double z)
    {
        const double p = fp.product_except(0);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < r1_eigs.size(); ++i)
            acc += 1.0 / (z + p * std::max(r1_eigs(i), 0.0));
        return acc / double(r1_eigs.size());
    }

    inline double da_stieltjes(const FixedPoint &fp, const CMatrix &r1, double z)
    {
        return da_stieltjes(fp, hermitian_eigenvalues(r1), z);
    }

    // Phase-dependent quantities, computed once per theta and reused across
    // noise levels and covariance updates.
    struct PhaseTerms
    {
        PhaseVector theta;
        CMatrix rotated_r2; ///< Phi R2 Phi^H
        CMatrix coupling;   ///< D1 Phi R2 Phi^H (not Hermitian)
        CMatrix m1;         ///< T1^{1/2} R2 T1^{1/2}
        RVector m1_eigs;
    };

    struct CovarianceTerms
    {
        Covariance q;
        CMatrix t2; ///< D2^{1/2} Q D2^{1/2}
        RVector t2_eigs;
    };

    struct DaResult
    {
        double rate_nats = 0.0;
        FixedPoint fp;
    };

    // Closed-form deterministic approximation of the normalized ergodic rate
    // for one correlation profile. Holds the theta/Q-independent factorizations.
    class DeterministicEquivalent
    {
    public:
        DeterministicEquivalent(const SystemDims &dims, const CorrelationProfile &corr, FixedPointOptions opt = {})
            : dims_(dims), corr_(corr), opt_(opt)
        {
            corr_.validate(dims_);
            r1_eigs_ = hermitian_eigenvalues(corr_.r1);
            s1_eigs_ = hermitian_eigenvalues(corr_.s1);
            s2_eigs_ = hermitian_eigenvalues(corr_.s2);
            d1_sqrt_ = psd_sqrt(corr_.d1);
            d2_sqrt_ = psd_sqrt(corr_.d2);
            d2_eig_ = hermitian_eig(0.5 * (corr_.d2 + corr_.d2.adjoint()));
        }

        const SystemDims &dims() const noexcept { return dims_; }
        const CorrelationProfile &correlation() const noexcept { return corr_; }
        const HermitianEig &d2_eig() const noexcept { return d2_eig_; }
        const RVector &r1_eigs() const noexcept { return r1_eigs_; }
        const FixedPointOptions &options() const noexcept { return opt_; }

        PhaseTerms phase_terms(const PhaseVector &theta) const
        {
            if (theta.size() != dims_.n_d1)
                throw std::invalid_argument("DeterministicEquivalent: theta length must equal n_d1");
            PhaseTerms pt;
            pt.theta = theta;
            const CVector phi = theta.phi();
            pt.rotated_r2 = phi.asDiagonal() * corr_.r2 * phi.conjugate().asDiagonal();
            pt.coupling = corr_.d1 * pt.rotated_r2;
            // T1^{1/2} = Phi^H D1^{1/2} Phi
            const CMatrix t1h = phi.conjugate().asDiagonal() * d1_sqrt_ * phi.asDiagonal();
            pt.m1 = t1h * corr_.r2 * t1h;
            pt.m1 = 0.5 * (pt.m1 + pt.m1.adjoint());
            pt.m1_eigs = hermitian_eigenvalues(pt.m1);
            return pt;
        }

        CovarianceTerms covariance_terms(const Covariance &q) const
        {
            if (q.dim() != dims_.n_d2)
                throw std::invalid_argument("DeterministicEquivalent: Q dimension must equal n_d2");
            CovarianceTerms ct;
            ct.q = q;
            ct.t2 = d2_sqrt_ * q.q * d2_sqrt_;
            ct.t2 = 0.5 * (ct.t2 + ct.t2.adjoint());
            ct.t2_eigs = hermitian_eigenvalues(ct.t2);
            return ct;
        }

        DaSpectra spectra(const PhaseTerms &pt, const CovarianceTerms &ct) const
        {
            return {r1_eigs_, s1_eigs_, s2_eigs_, pt.m1_eigs, ct.t2_eigs, dims_};
        }

        DaInputs inputs(const PhaseTerms &pt, const CovarianceTerms &ct, double z) const
        {
            return {corr_.r1, corr_.s1, corr_.s2, pt.m1, ct.t2, dims_, z};
        }

        FixedPoint solve(const PhaseTerms &pt, const CovarianceTerms &ct, double noise_var) const
        {
            return solve_fixed_point(spectra(pt, ct), noise_var, opt_);
        }

        // The rate expression at arbitrary h (equal to the DA only at the fixed point):
        //   (1/n_r1) [ logdet(I + h2h3h4h5 R1 / sigma^2) + logdet(I + a_S1 h1h3h4h5 S1)
        //            + logdet(I + a_S2 h1h2h3h5 S2) + logdet(I + a_D1 h1h2h4h5 D1 Phi R2 Phi^H)
        //            + logdet(I + a_D2 h1h2h3h4 D2^{1/2} Q D2^{1/2}) ] - 4 h1h2h3h4h5
        double objective(const HVector &h, const PhaseTerms &pt, const CovarianceTerms &ct, double noise_var) const
        {
            const auto [h1, h2, h3, h4, h5] = h;
            const double t1 = logdet_from_spectrum(r1_eigs_, h2 * h3 * h4 * h5 / noise_var);
            const double t2 = logdet_from_spectrum(s1_eigs_, dims_.alpha_r1_s1() * h1 * h3 * h4 * h5);
            const double t3 = logdet_from_spectrum(s2_eigs_, dims_.alpha_r1_s2() * h1 * h2 * h3 * h5);
            const double t4 = logabsdet_identity_plus(dims_.alpha_r1_t1() * h1 * h2 * h4 * h5 * pt.coupling);
            const double t5 = logdet_from_spectrum(ct.t2_eigs, dims_.alpha_r1_t2() * h1 * h2 * h3 * h4);
            return (t1 + t2 + t3 + t4 + t5) / double(dims_.n_r1) - 4.0 * h1 * h2 * h3 * h4 * h5;
        }

        DaResult evaluate(const PhaseTerms &pt, const CovarianceTerms &ct, double noise_var) const
        {
            if (!(noise_var > 0.0))
                throw std::invalid_argument("da_rate: noise variance must be > 0");
            DaResult out;
            out.fp = solve(pt, ct, noise_var);
            out.rate_nats = std::max(objective(out.fp.h, pt, ct, noise_var), 0.0);
            return out;
        }

        double rate(const PhaseVector &theta, const Covariance &q, double noise_var) const
        {
            return evaluate(phase_terms(theta), covariance_terms(q), noise_var).rate_nats;
        }

    private:
        SystemDims dims_;
        CorrelationProfile corr_;
        FixedPointOptions opt_;
        RVector r1_eigs_, s1_eigs_, s2_eigs_;
        CMatrix d1_sqrt_, d2_sqrt_;
        HermitianEig d2_eig_;
    };

    // Deterministic approximation of the normalized ergodic rate (nats per receive antenna).
    inline double da_rate(const PhaseVector &theta, const Covariance &q, const CorrelationProfile &corr,
                          const SystemDims &dims, double noise_var)
    {
        return DeterministicEquivalent(dims, corr).rate(theta, q, noise_var);
    }
} // namespace rmt_irs

#endif // RMT_IRS_DET_EQUIV_HPP
