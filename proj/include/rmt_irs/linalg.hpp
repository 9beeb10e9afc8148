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

#ifndef RMT_IRS_LINALG_HPP
#define RMT_IRS_LINALG_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace rmt_irs
{
    using cplx = std::complex<double>;
    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;
    using RVector = Eigen::VectorXd;

    // Tolerances shared by every Hermitian/PSD check in the library.
    inline constexpr double hermitian_rel_tol = 1e-12;
    inline constexpr double psd_rel_tol = 1e-10;

    // Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
    struct HermitianEig
    {
        RVector values;
        CMatrix vectors;
    };

    inline HermitianEig hermitian_eig(const CMatrix &a)
    {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("hermitian_eig: eigendecomposition failed");
        return {es.eigenvalues(), es.eigenvectors()};
    }

    inline RVector hermitian_eigenvalues(const CMatrix &a)
    {
        if (a.size() == 0)
            return RVector();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("hermitian_eigenvalues: eigendecomposition failed");
        return es.eigenvalues();
    }

    inline double spectral_norm(const CMatrix &a)
    {
        if (a.size() == 0)
            return 0.0;
        Eigen::JacobiSVD<CMatrix> svd(a);
        return svd.singularValues()(0);
    }

    inline bool is_hermitian(const CMatrix &a, double rel_tol = hermitian_rel_tol)
    {
        if (a.rows() != a.cols())
            return false;
        const double scale = spectral_norm(a);
        const double err = (a - a.adjoint()).cwiseAbs().maxCoeff();
        return err <= rel_tol * std::max(scale, 1e-300) || err == 0.0;
    }

    // Throws std::invalid_argument unless `a` is Hermitian PSD within the library tolerances.
    inline void require_hermitian_psd(const CMatrix &a, const std::string &what)
    {
        if (a.rows() != a.cols())
            throw std::invalid_argument(what + ": matrix is not square");
        if (!a.allFinite())
            throw std::invalid_argument(what + ": non-finite entries");
        if (!is_hermitian(a))
            throw std::invalid_argument(what + ": matrix is not Hermitian");
        const RVector ev = hermitian_eigenvalues(a);
        if (ev.size() == 0)
            return;
        const double lmax = ev.maxCoeff();
        if (ev.minCoeff() < -psd_rel_tol * std::max(lmax, 0.0))
            throw std::invalid_argument(what + ": matrix is not positive semi-definite");
    }

    // Hermitian square root B of a PSD matrix (B * B = a). Eigenvalues in
    // [-1e-10 * lambda_max, 0) are clamped to zero; anything lower is rejected.
    inline CMatrix psd_sqrt(const CMatrix &a)
    {
        if (a.rows() != a.cols())
            throw std::invalid_argument("psd_sqrt: matrix is not square");
        if (a.size() == 0)
            return a;
        const CMatrix herm = 0.5 * (a + a.adjoint());
        const HermitianEig eig = hermitian_eig(herm);
        const double lmax = std::max(eig.values.maxCoeff(), 0.0);
        RVector root(eig.values.size());
        for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        {
            const double l = eig.values(i);
            if (l < -psd_rel_tol * lmax || (lmax == 0.0 && l < 0.0))
                throw std::invalid_argument("psd_sqrt: matrix is not positive semi-definite");
            root(i) = l > 0.0 ? std::sqrt(l) : 0.0;
        }
        const CMatrix out = eig.vectors * root.asDiagonal() * eig.vectors.adjoint();
        return 0.5 * (out + out.adjoint());
    }

    // log det(I + a) for Hermitian PSD `a`, via Cholesky of the positive
    // definite argument. Throws if positive-definiteness is lost.
    inline double logdet_identity_plus(const CMatrix &a)
    {
        const Eigen::Index n = a.rows();
        if (n == 0)
            return 0.0;
        CMatrix m = CMatrix::Identity(n, n) + 0.5 * (a + a.adjoint());
        Eigen::LLT<CMatrix> llt(m);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("logdet_identity_plus: argument is not positive definite");
        const CMatrix &l = llt.matrixLLT();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            acc += std::log(l(i, i).real());
        return 2.0 * acc;
    }

    // log |det(I + a)| for a general square matrix (LU with partial pivoting).
    inline double logabsdet_identity_plus(const CMatrix &a)
    {
        const Eigen::Index n = a.rows();
        if (n == 0)
            return 0.0;
        Eigen::PartialPivLU<CMatrix> lu(CMatrix::Identity(n, n) + a);
        const CMatrix &u = lu.matrixLU();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            acc += std::log(std::abs(u(i, i)));
        return acc;
    }

    // sum_i log(1 + c * lambda_i), i.e. log det(I + c A) from the spectrum of A.
    inline double logdet_from_spectrum(const RVector &lambda, double c)
    {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
            acc += std::log1p(c * std::max(lambda(i), 0.0));
        return acc;
    }

    // Numerical rank: singular values above rel_tol * sigma_max.
    inline Eigen::Index numerical_rank(const CMatrix &a, double rel_tol)
    {
        if (a.size() == 0)
            return 0;
        Eigen::JacobiSVD<CMatrix> svd(a);
        const RVector &s = svd.singularValues();
        if (s(0) == 0.0)
            return 0;
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) > rel_tol * s(0))
                ++r;
        return r;
    }
} // namespace rmt_irs

#endif // RMT_IRS_LINALG_HPP
