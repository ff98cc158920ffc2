// SPDX-License-Identifier: Apache-2.0
//
// capa-select: aperture selection for continuous aperture arrays
// Copyright (C) 2026 The capa-select authors
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

#pragma once

#include "capa/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

namespace capa
{
    // Dense row-major complex matrix, sized for the handful of segments selection works with
    class CMatrix
    {
    public:
        using value_type = std::complex<double>;

        CMatrix() = default;
        CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

        static CMatrix identity(std::size_t n)
        {
            CMatrix m(n, n);
            for (std::size_t i = 0; i < n; ++i)
                m(i, i) = 1.0;
            return m;
        }

        std::size_t rows() const { return rows_; }
        std::size_t cols() const { return cols_; }

        value_type &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
        const value_type &operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

        CMatrix adjoint() const
        {
            CMatrix out(cols_, rows_);
            for (std::size_t i = 0; i < rows_; ++i)
                for (std::size_t j = 0; j < cols_; ++j)
                    out(j, i) = std::conj((*this)(i, j));
            return out;
        }

        double frobenius_norm() const
        {
            double s = 0.0;
            for (const auto &v : data_)
                s += std::norm(v);
            return std::sqrt(s);
        }

        friend CMatrix operator*(const CMatrix &a, const CMatrix &b)
        {
            if (a.cols_ != b.rows_)
                throw DomainError("CMatrix: dimension mismatch in product");
            CMatrix out(a.rows_, b.cols_);
            for (std::size_t i = 0; i < a.rows_; ++i)
                for (std::size_t k = 0; k < a.cols_; ++k)
                {
                    const auto aik = a(i, k);
                    for (std::size_t j = 0; j < b.cols_; ++j)
                        out(i, j) += aik * b(k, j);
                }
            return out;
        }

        friend CMatrix operator-(const CMatrix &a, const CMatrix &b)
        {
            CMatrix out = a;
            for (std::size_t i = 0; i < out.data_.size(); ++i)
                out.data_[i] -= b.data_[i];
            return out;
        }

    private:
        std::size_t rows_ = 0, cols_ = 0;
        std::vector<value_type> data_;
    };

    // Largest |M - M^H| entry relative to the largest |M| entry
    inline double hermitian_defect(const CMatrix &m)
    {
        double dev = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j)
            {
                dev = std::max(dev, std::abs(m(i, j) - std::conj(m(j, i))));
                scale = std::max(scale, std::abs(m(i, j)));
            }
        return scale > 0.0 ? dev / scale : 0.0;
    }

    struct HermitianEigen
    {
        std::vector<double> values; // descending
        CMatrix vectors;            // column i belongs to values[i]
    };

    // Cyclic Jacobi rotations on a Hermitian matrix
    inline HermitianEigen hermitian_eig(const CMatrix &m, double hermitian_tol = 1e-10)
    {
        const std::size_t n = m.rows();
        if (m.cols() != n)
            throw DomainError("hermitian_eig: matrix must be square");
        if (hermitian_defect(m) > hermitian_tol)
            throw DomainError("hermitian_eig: matrix is not Hermitian");

        CMatrix a = m;
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t j = i + 1; j < n; ++j)
                a(j, i) = std::conj(a(i, j));
            a(i, i) = a(i, i).real();
        }
        CMatrix v = CMatrix::identity(n);
        const double scale = m.frobenius_norm();

        for (int sweep = 0; sweep < 100; ++sweep)
        {
            double off = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t q = 0; q < n; ++q)
                    if (p != q)
                        off += std::norm(a(p, q));
            if (std::sqrt(off) <= 1e-13 * scale || off == 0.0)
                break;

            for (std::size_t p = 0; p + 1 < n; ++p)
                for (std::size_t q = p + 1; q < n; ++q)
                {
                    const double g = std::abs(a(p, q));
                    if (g == 0.0)
                        continue;
                    // Phase-align a(p, q) to a real value, then apply a real rotation
                    const std::complex<double> ph = a(p, q) / g;
                    const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * g);
                    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double s = t * c;
                    const std::complex<double> gpp = c, gpq = s;
                    const std::complex<double> gqp = -s * std::conj(ph), gqq = c * std::conj(ph);

                    for (std::size_t i = 0; i < n; ++i)
                    {
                        const auto aip = a(i, p), aiq = a(i, q);
                        a(i, p) = aip * gpp + aiq * gqp;
                        a(i, q) = aip * gpq + aiq * gqq;
                    }
                    for (std::size_t j = 0; j < n; ++j)
                    {
                        const auto apj = a(p, j), aqj = a(q, j);
                        a(p, j) = std::conj(gpp) * apj + std::conj(gqp) * aqj;
                        a(q, j) = std::conj(gpq) * apj + std::conj(gqq) * aqj;
                    }
                    a(p, q) = a(q, p) = 0.0;
                    a(p, p) = a(p, p).real();
                    a(q, q) = a(q, q).real();
                    for (std::size_t i = 0; i < n; ++i)
                    {
                        const auto vip = v(i, p), viq = v(i, q);
                        v(i, p) = vip * gpp + viq * gqp;
                        v(i, q) = vip * gpq + viq * gqq;
                    }
                }
        }

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return a(x, x).real() > a(y, y).real(); });
        HermitianEigen out{std::vector<double>(n), CMatrix(n, n)};
        for (std::size_t k = 0; k < n; ++k)
        {
            out.values[k] = a(order[k], order[k]).real();
            for (std::size_t i = 0; i < n; ++i)
                out.vectors(i, k) = v(i, order[k]);
        }
        return out;
    }

    struct RankDet
    {
        std::size_t rank = 0;
        double pseudo_det = 1.0;
        bool degenerate = false; // all eigenvalues numerically zero; pseudo_det is then 1 by convention
    };

    // Numerical rank (eigenvalues above rel_tol * lambda_max) and the product of those eigenvalues
    inline RankDet pseudo_rank_det(const std::vector<double> &eigenvalues, double rel_tol = 1e-10)
    {
        RankDet out;
        if (eigenvalues.empty() || !(eigenvalues.front() > 0.0))
        {
            out.degenerate = true;
            return out;
        }
        const double cut = rel_tol * eigenvalues.front();
        for (double l : eigenvalues)
            if (l > cut)
            {
                ++out.rank;
                out.pseudo_det *= l;
            }
        return out;
    }
}
