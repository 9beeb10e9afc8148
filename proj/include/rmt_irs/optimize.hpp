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

#ifndef RMT_IRS_OPTIMIZE_HPP
#define RMT_IRS_OPTIMIZE_HPP

#include "det_equiv.hpp"
#include "linalg.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmt_irs
{
    // Settings of the alternating water-filling / phase-gradient optimizer.
    struct AoConfig
    {
        double armijo_c = 0.005; ///< sufficient-increase constant c, in (0, 1)
        double shrink = 0.5;     ///< line-search backoff factor, in (0, 1)
        int max_outer = 200;
        int max_ls = 40;
        double initial_step = 16.0; ///< gamma_0 tried first by every line search
        double conv_tol = 1e-6; ///< stop when the relative DA improvement drops below this
        std::optional<PhaseVector> init_theta; ///< defaults to the spiral 2 pi l / n_L
        std::optional<Covariance> init_q;      ///< defaults to P I

        void validate() const
        {
            if (!(armijo_c > 0.0 && armijo_c < 1.0))
                throw std::invalid_argument("AoConfig: armijo_c must lie in (0, 1)");
            if (!(shrink > 0.0 && shrink < 1.0))
                throw std::invalid_argument("AoConfig: shrink must lie in (0, 1)");
            if (max_outer < 1 || max_ls < 1)
                throw std::invalid_argument("AoConfig: max_outer and max_ls must be >= 1");
            if (!(conv_tol > 0.0))
                throw std::invalid_argument("AoConfig: conv_tol must be > 0");
            if (!(initial_step > 0.0) || !std::isfinite(initial_step))
                throw std::invalid_argument("AoConfig: initial_step must be finite and > 0");
        }
    };

    struct AoIteration
    {
        int iteration = 0;
        double da_nats = 0.0;
        double gamma = 0.0;
        double grad_norm = 0.0;
        HVector h{};
    };

    struct AoTrace
    {
        std::vector<AoIteration> records;
    };

    enum class AoStop
    {
        converged,
        stationary,
        max_outer
    };

    struct AoResult
    {
        PhaseVector theta;
        Covariance q;
        AoTrace trace;
        AoStop stop = AoStop::max_outer;
        int outer_iterations = 0;

        double final_da() const { return trace.records.empty() ? 0.0 : trace.records.back().da_nats; }
    };

    // Water-filling over the eigenmodes of D2 = U diag(lambda) U^H:
    //   Q = U diag((level - 1 / (kappa lambda_i))^+) U^H,  Tr Q = budget.
    // Modes with lambda_i <= 1e-12 lambda_max get no power. kappa == 0 means the
    // objective ignores Q; the uniform allocation is returned.
    inline Covariance water_fill(const HermitianEig &d2, double kappa, double budget)
    {
        const Eigen::Index n = d2.values.size();
        if (n == 0)
            throw std::invalid_argument("water_fill: empty spectrum");
        if (!(budget >= 0.0))
            throw std::invalid_argument("water_fill: budget must be >= 0");
        if (!(kappa >= 0.0) || !std::isfinite(kappa))
            throw std::invalid_argument("water_fill: kappa must be finite and >= 0");

        const double power = budget / double(n);
        if (budget == 0.0)
            return {CMatrix::Zero(n, n), 0.0};
        if (kappa == 0.0)
            return Covariance::scaled_identity(int(n), power);

        const double lmax = d2.values.maxCoeff();
        if (!(lmax > 0.0))
            throw std::invalid_argument("water_fill: no mode with positive gain");

        // Inverse gains of the usable modes, ascending.
        std::vector<Eigen::Index> modes;
        for (Eigen::Index i = 0; i < n; ++i)
            if (d2.values(i) > 1e-12 * lmax)
                modes.push_back(i);
        std::vector<double> floor(modes.size());
        for (std::size_t k = 0; k < modes.size(); ++k)
            floor[k] = 1.0 / (kappa * d2.values(modes[k]));
        std::vector<std::size_t> order(modes.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b)
                  { return floor[a] < floor[b]; });

        // Find the active set: the k lowest floors with level in (floor_k-1, floor_k].
        double acc = 0.0;
        std::size_t active = 0;
        for (std::size_t k = 1; k <= order.size(); ++k)
        {
            acc += floor[order[k - 1]];
            if (k == order.size() || (budget + acc) / double(k) <= floor[order[k]])
            {
                active = k;
                break;
            }
        }

        // level - floor_i written as (budget + sum_j (floor_j - floor_i)) / k, which
        // avoids cancellation when the floors dwarf the budget.
        RVector alloc = RVector::Zero(n);
        double total = 0.0;
        for (std::size_t k = 0; k < active; ++k)
        {
            const std::size_t m = order[k];
            double spread = 0.0;
            for (std::size_t j = 0; j < active; ++j)
                spread += floor[order[j]] - floor[m];
            alloc(modes[m]) = std::max((budget + spread) / double(active), 0.0);
            total += alloc(modes[m]);
        }
        alloc *= budget / total;
        CMatrix q = d2.vectors * alloc.asDiagonal() * d2.vectors.adjoint();
        q = 0.5 * (q + q.adjoint());
        q *= budget / q.trace().real();
        return {q, power};
    }

    // Gradient of the DA with respect to the IRS phases, h's held at the fixed point.
    // Entry i equals (c / n_r1) Tr[D1 (R2 o F_i) (I + c D1 Phi R2 Phi^H)^{-1}] with
    // c = a_D1 h1 h2 h4 h5; only row/column i of the perturbation is nonzero, so the
    // trace reduces to j[(K P)_ii - (P K)_ii] with K = Phi R2 Phi^H, P = W D1.
    inline RVector phase_gradient(const DeterministicEquivalent &de, const PhaseTerms &pt, const FixedPoint &fp)
    {
        const SystemDims &d = de.dims();
        const Eigen::Index n = d.n_d1;
        const double c = d.alpha_r1_t1() * fp.h[0] * fp.h[1] * fp.h[3] * fp.h[4];
        RVector grad = RVector::Zero(n);
        if (c == 0.0 || n == 1)
            return grad;

        const CMatrix &d1 = de.correlation().d1;
        const CMatrix &k = pt.rotated_r2;
        Eigen::PartialPivLU<CMatrix> lu(CMatrix::Identity(n, n) + c * pt.coupling);
        const CMatrix p = lu.solve(d1);

        const CVector kp = k.cwiseProduct(p.transpose()).rowwise().sum();
        const CVector pk = p.cwiseProduct(k.transpose()).rowwise().sum();
        const cplx j(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i)
            grad(i) = (c / double(d.n_r1)) * (j * (kp(i) - pk(i))).real();
        return grad;
    }

    inline RVector phase_gradient(const PhaseVector &theta, const FixedPoint &fp, const CorrelationProfile &corr,
                                  const SystemDims &dims)
    {
        const DeterministicEquivalent de(dims, corr);
        return phase_gradient(de, de.phase_terms(theta), fp);
    }

    struct LineSearchResult
    {
        PhaseVector theta;
        double gamma = 0.0;
        double value = 0.0;
        int trials = 0;
    };

    // Backtracking search for the largest gamma = gamma_0 shrink^k, k = 0 .. max_ls-1, with
    //   G(theta + gamma grad) >= G(theta) + c gamma ||grad||.
    // gamma = 0 (theta unchanged) signals that no step was accepted.
    template <typename Objective>
    LineSearchResult backtracking_step(const PhaseVector &theta, const RVector &grad, Objective &&objective,
                                       const AoConfig &cfg, std::optional<double> current = std::nullopt)
    {
        if (!grad.allFinite())
            throw std::invalid_argument("backtracking_step: non-finite gradient");
        const double g0 = current ? *current : objective(theta);
        LineSearchResult out{theta, 0.0, g0, 0};
        const double norm = grad.norm();
        if (norm == 0.0)
            return out;

        double gamma = cfg.initial_step;
        for (int k = 0; k < cfg.max_ls; ++k, gamma *= cfg.shrink)
        {
            PhaseVector trial(theta.theta + gamma * grad);
            const double g = objective(trial);
            ++out.trials;
            if (g >= g0 + cfg.armijo_c * gamma * norm)
            {
                out.theta = std::move(trial);
                out.gamma = gamma;
                out.value = g;
                return out;
            }
        }
        return out;
    }

    namespace detail
    {
        template <typename Fn>
        auto at_iteration(int t, Fn &&fn)
        {
            try
            {
                return fn();
            }
            catch (const SolverError &e)
            {
                throw SolverError("alternating_optimize: iteration " + std::to_string(t) + ": " + e.what(),
                                  e.residual());
            }
        }
    } // namespace detail

    // Alternating optimization of (theta, Q) on the DA. Each outer iteration
    // water-fills Q with the h's of the previous point, re-solves the fixed
    // point, takes one backtracking gradient step in theta, and records the DA.
    inline AoResult alternating_optimize(const DeterministicEquivalent &de, double noise_var, double power,
                                         const AoConfig &cfg)
    {
        cfg.validate();
        if (!(noise_var > 0.0))
            throw std::invalid_argument("alternating_optimize: noise variance must be > 0");
        if (!(power >= 0.0))
            throw std::invalid_argument("alternating_optimize: power must be >= 0");
        const SystemDims &d = de.dims();
        const double budget = double(d.n_d2) * power;

        AoResult res;
        res.theta = cfg.init_theta ? *cfg.init_theta : PhaseVector::spiral(d.n_d1);
        res.q = cfg.init_q ? *cfg.init_q : Covariance::scaled_identity(d.n_d2, power);
        if (res.theta.size() != d.n_d1 || res.q.dim() != d.n_d2)
            throw std::invalid_argument("alternating_optimize: initial point has wrong dimensions");

        PhaseTerms pt = de.phase_terms(res.theta);
        CovarianceTerms ct = de.covariance_terms(res.q);
        DaResult cur = detail::at_iteration(0, [&]
                                            { return de.evaluate(pt, ct, noise_var); });
        res.trace.records.push_back({0, cur.rate_nats, 0.0, 0.0, cur.fp.h});

        for (int t = 1; t <= cfg.max_outer; ++t)
        {
            res.outer_iterations = t;
            const double prev = cur.rate_nats;

            // Q update from the current h's.
            const double kappa = d.alpha_r1_t2() * cur.fp.h[0] * cur.fp.h[1] * cur.fp.h[2] * cur.fp.h[3];
            Covariance q_new = water_fill(de.d2_eig(), kappa, budget);
            const bool q_unchanged = (q_new.q - res.q.q).norm() <= 1e-12 * (1.0 + res.q.q.norm());
            CovarianceTerms ct_new = de.covariance_terms(q_new);
            DaResult at_q = detail::at_iteration(t, [&]
                                                 { return de.evaluate(pt, ct_new, noise_var); });

            // theta update.
            const RVector grad = phase_gradient(de, pt, at_q.fp);
            DaResult at_trial;
            auto objective = [&](const PhaseVector &th)
            {
                at_trial = de.evaluate(de.phase_terms(th), ct_new, noise_var);
                return at_trial.rate_nats;
            };
            LineSearchResult step = detail::at_iteration(t, [&]
                                                         { return backtracking_step(res.theta, grad, objective, cfg, at_q.rate_nats); });

            res.q = std::move(q_new);
            ct = std::move(ct_new);
            if (step.gamma > 0.0)
            {
                // the accepted trial is the last objective evaluation
                res.theta = step.theta;
                pt = de.phase_terms(res.theta);
                cur = at_trial;
            }
            else
            {
                cur = at_q;
            }
            res.trace.records.push_back({t, cur.rate_nats, step.gamma, grad.norm(), cur.fp.h});

            const double improvement = (cur.rate_nats - prev) / std::max(std::abs(prev), 1e-300);
            if (step.gamma == 0.0 && q_unchanged)
            {
                res.stop = AoStop::stationary;
                return res;
            }
            if (improvement < cfg.conv_tol)
            {
                res.stop = AoStop::converged;
                return res;
            }
        }
        res.stop = AoStop::max_outer;
        return res;
    }

    inline AoResult alternating_optimize(const SystemDims &dims, const CorrelationProfile &corr, double noise_var,
                                         double power, const AoConfig &cfg)
    {
        return alternating_optimize(DeterministicEquivalent(dims, corr), noise_var, power, cfg);
    }
} // namespace rmt_irs

#endif // RMT_IRS_OPTIMIZE_HPP
