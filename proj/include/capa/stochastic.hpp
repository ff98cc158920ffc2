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
#include "capa/geometry.hpp"
#include "capa/linalg.hpp"
#include "capa/los.hpp"
#include "capa/nlos.hpp"
#include "capa/parallel.hpp"
#include "capa/quadrature.hpp"
#include "capa/random.hpp"
#include "capa/selection.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

namespace capa
{
    namespace detail
    {
        // e^{-j k0 d} / (sqrt(4 pi) d) * sqrt(y / d) for the scatterer at s seen from array point (x, z)
        inline cdouble scatterer_wave(double x, double z, const Vec3 &s, double k0)
        {
            const double q = (x - s.x) * (x - s.x) + s.y * s.y + (z - s.z) * (z - s.z);
            const double d = std::sqrt(q);
            if (!(d > 0.0))
                throw SingularityError("scatterer_wave: scatterer lies on the aperture");
            return std::polar(std::sqrt(s.y / d) / (2.0 * std::sqrt(std::numbers::pi) * d), -k0 * d);
        }

        // sigma_n * g(s_n, s_u) with sigma_n^2 the reflection variance
        inline std::vector<cdouble> scatterer_weights(const ScattererSet &sc, const UserGeometry &g,
                                                      const ChannelParams &params)
        {
            const Vec3 su = g.position();
            std::vector<cdouble> w(sc.size());
            for (std::size_t n = 0; n < sc.size(); ++n)
                w[n] = std::sqrt(sc.variances()[n]) * free_space_green(sc.positions()[n], su, params);
            return w;
        }
    }

    // E[h(r1) h*(r2)] over the reflection coefficients, in gamma_bar units
    inline cdouble correlation_kernel(const ArrayPoint &r1, const ArrayPoint &r2, const ScattererSet &sc,
                                      const UserGeometry &g, const ChannelParams &params)
    {
        const auto w = detail::scatterer_weights(sc, g, params);
        const double k0 = params.k0();
        cdouble s = 0.0;
        for (std::size_t n = 0; n < sc.size(); ++n)
        {
            const Vec3 &p = sc.positions()[n];
            s += std::norm(w[n]) * detail::scatterer_wave(r1.x, r1.z, p, k0) *
                 std::conj(detail::scatterer_wave(r2.x, r2.z, p, k0));
        }
        return s;
    }

    // K x N_s matrix B with B(k, n) = sigma_n g(s_n, s_u) * integral over segment k of the scatterer wave.
    // The coherent segment response is h = B a with a ~ CN(0, I), so the segment correlation is B B^H.
    inline CMatrix segment_response_matrix(const SegmentSet &segments, const ScattererSet &sc, const UserGeometry &g,
                                           const ChannelParams &params, const GlOptions &opt = {})
    {
        const std::size_t K = segments.size(), N = sc.size();
        const auto w = detail::scatterer_weights(sc, g, params);
        const auto rule = gauss_legendre_rule(opt.order);
        const double k0 = params.k0();
        CMatrix B(K, N);
        for (std::size_t k = 0; k < K; ++k)
        {
            const RectAperture &rect = segments.segments[k];
            for (std::size_t n = 0; n < N; ++n)
            {
                const Vec3 &s = sc.positions()[n];
                const Vec3 one[1] = {s};
                const auto pc = resolve_panels(rect, one, params, opt, 1);
                const cdouble c = quad2d_rect([&](double x, double z) { return detail::scatterer_wave(x, z, s, k0); },
                                              rect, rule, pc.x, pc.z);
                B(k, n) = w[n] * c;
            }
        }
        return B;
    }

    // Hermitian PSD segment correlation matrix, validated and decomposed once
    class CorrelationMatrix
    {
    public:
        static constexpr double negative_tol = 1e-10;
        static constexpr double rank_tol = 1e-10;

        explicit CorrelationMatrix(const CMatrix &R)
        {
            const std::size_t K = R.rows();
            if (R.cols() != K || K == 0)
                throw DomainError("CorrelationMatrix: matrix must be square and non-empty");
            if (hermitian_defect(R) > 1e-12)
                throw ModelError("CorrelationMatrix: matrix is not Hermitian");
            R_ = CMatrix(K, K);
            for (std::size_t i = 0; i < K; ++i)
            {
                R_(i, i) = R(i, i).real();
                for (std::size_t j = i + 1; j < K; ++j)
                {
                    R_(i, j) = R(i, j);
                    R_(j, i) = std::conj(R(i, j));
                }
            }
            eig_ = hermitian_eig(R_);
            const double lmax = std::max(eig_.values.front(), 0.0);
            for (double &l : eig_.values)
            {
                if (l < -negative_tol * lmax)
                    throw ModelError("CorrelationMatrix: significant negative eigenvalue");
                l = std::max(l, 0.0);
            }
            rd_ = pseudo_rank_det(eig_.values, rank_tol);

            sqrt_ = CMatrix(K, K);
            for (std::size_t i = 0; i < K; ++i)
                for (std::size_t j = 0; j < K; ++j)
                {
                    cdouble s = 0.0;
                    for (std::size_t m = 0; m < K; ++m)
                        s += eig_.vectors(i, m) * std::sqrt(eig_.values[m]) * std::conj(eig_.vectors(j, m));
                    sqrt_(i, j) = s;
                }
        }

        std::size_t size() const { return R_.rows(); }
        const CMatrix &matrix() const { return R_; }
        const std::vector<double> &eigenvalues() const { return eig_.values; }
        const CMatrix &eigenvectors() const { return eig_.vectors; }
        std::size_t rank() const { return rd_.rank; }
        double pseudo_det() const { return rd_.pseudo_det; }
        bool degenerate() const { return rd_.degenerate; }
        const CMatrix &sqrt() const { return sqrt_; }

    private:
        CMatrix R_, sqrt_;
        HermitianEigen eig_;
        RankDet rd_;
    };

    // R(k, k') = double integral of the correlation kernel over segment k x segment k'
    inline CorrelationMatrix correlation_matrix(const SegmentSet &segments, const ScattererSet &sc,
                                                const UserGeometry &g, const ChannelParams &params,
                                                const GlOptions &opt = {})
    {
        const CMatrix B = segment_response_matrix(segments, sc, g, params, opt);
        const std::size_t K = B.rows();
        CMatrix R(K, K);
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = i; j < K; ++j)
            {
                cdouble s = 0.0;
                for (std::size_t n = 0; n < B.cols(); ++n)
                    s += B(i, n) * std::conj(B(j, n));
                R(i, j) = s;
                R(j, i) = std::conj(s);
            }
        return CorrelationMatrix(R);
    }

    namespace detail
    {
        inline void correlated_draw(const CMatrix &S, RandomStream &rs, std::vector<cdouble> &white,
                                    std::vector<cdouble> &h)
        {
            const std::size_t K = S.rows();
            for (auto &v : white)
                v = rs.complex_normal();
            for (std::size_t i = 0; i < K; ++i)
            {
                cdouble s = 0.0;
                for (std::size_t j = 0; j < K; ++j)
                    s += S(i, j) * white[j];
                h[i] = s;
            }
        }

        inline constexpr std::size_t trials_per_block = 1 << 16;
    }

    // h = R^{1/2} w with w ~ CN(0, I); trial i always uses the stream (seed, i)
    inline std::vector<std::vector<cdouble>> sample_correlated_gains(const CorrelationMatrix &R, std::size_t n,
                                                                     std::uint64_t seed)
    {
        const std::size_t K = R.size();
        std::vector<std::vector<cdouble>> out(n, std::vector<cdouble>(K));
        std::vector<cdouble> white(K);
        for (std::size_t t = 0; t < n; ++t)
        {
            RandomStream rs(seed, stream_domain::trials + t);
            detail::correlated_draw(R.sqrt(), rs, white, out[t]);
        }
        return out;
    }

    // Half-width of the 95% Wilson score interval for `events` successes in `trials`
    inline double wilson_half_width(std::uint64_t events, std::uint64_t trials)
    {
        if (trials == 0)
            throw DomainError("wilson_half_width: zero trials");
        const double z = 1.959963984540054;
        const double n = static_cast<double>(trials);
        const double p = static_cast<double>(events) / n;
        return z / (1.0 + z * z / n) * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
    }

    struct OutageEstimate
    {
        double op = 0.0;
        double half_width = 0.0;
        std::uint64_t events = 0;
        std::uint64_t trials = 0;
    };

    struct OutagePoint
    {
        double gamma_bar_db = 0.0;
        double op = 0.0;
        double half_width = 0.0;
        double asymptote = 0.0; // NaN when the matrix has rank zero
        std::uint64_t events = 0;
    };

    struct OutageCurve
    {
        std::vector<OutagePoint> points;
        std::uint64_t trials = 0;
    };

    // gamma_bar^{-r} gamma_th^r / det*(R)
    inline double outage_asymptote(const CorrelationMatrix &R, double gamma_bar, double gamma_th)
    {
        if (R.rank() == 0)
            throw DomainError("outage_asymptote: correlation matrix has rank zero");
        return std::pow(gamma_th / gamma_bar, static_cast<double>(R.rank())) / R.pseudo_det();
    }

    namespace detail
    {
        // Counts, for every threshold, the trials whose best segment gain falls below it.
        // The best gain max_k |h_k|^2 is drawn once per trial and shared by all thresholds.
        template <typename Draw>
        std::vector<std::uint64_t> count_below(std::size_t K, const std::vector<double> &thresholds,
                                               std::uint64_t trials, std::uint64_t seed, unsigned threads,
                                               Draw &&draw_best)
        {
            const std::size_t T = thresholds.size();
            std::vector<std::size_t> order(T);
            for (std::size_t i = 0; i < T; ++i)
                order[i] = i;
            std::sort(order.begin(), order.end(), [&](auto a, auto b) { return thresholds[a] < thresholds[b]; });
            std::vector<double> sorted(T);
            for (std::size_t i = 0; i < T; ++i)
                sorted[i] = thresholds[order[i]];

            const std::size_t blocks = (trials + trials_per_block - 1) / trials_per_block;
            // hist[b][i]: trials in block b whose best gain is below sorted[i] but not below sorted[i-1]
            std::vector<std::vector<std::uint64_t>> hist(blocks, std::vector<std::uint64_t>(T + 1, 0));
            for_each_block(blocks, threads, [&](std::size_t b) {
                std::vector<cdouble> white(K), h(K);
                const std::uint64_t t0 = b * trials_per_block;
                const std::uint64_t t1 = std::min<std::uint64_t>(trials, t0 + trials_per_block);
                auto &hb = hist[b];
                for (std::uint64_t t = t0; t < t1; ++t)
                {
                    RandomStream rs(seed, stream_domain::trials + t);
                    const double best = draw_best(rs, white, h);
                    const auto pos = std::upper_bound(sorted.begin(), sorted.end(), best) - sorted.begin();
                    ++hb[pos];
                }
            });

            std::vector<std::uint64_t> cum(T + 1, 0);
            for (const auto &hb : hist)
                for (std::size_t i = 0; i <= T; ++i)
                    cum[i] += hb[i];
            std::vector<std::uint64_t> out(T);
            std::uint64_t run = 0;
            for (std::size_t i = 0; i < T; ++i)
            {
                run += cum[i];
                out[order[i]] = run;
            }
            return out;
        }

        inline double best_gain(const std::vector<cdouble> &h)
        {
            double best = 0.0;
            for (const auto &v : h)
                best = std::max(best, std::norm(v));
            return best;
        }
    }

    // Outage of selection over correlated segments for several gamma_bar values at once.
    // Every gamma_bar sees the same draws, so the curve is monotone by construction.
    inline OutageCurve outage_curve_mc(const CorrelationMatrix &R, const std::vector<double> &gamma_bar_db,
                                       double gamma_th, std::uint64_t trials, std::uint64_t seed, unsigned threads = 1)
    {
        if (trials == 0)
            throw DomainError("outage_curve_mc: zero trials");
        if (!(gamma_th > 0.0))
            throw DomainError("outage_curve_mc: gamma_th must be positive");
        std::vector<double> thr;
        for (double db : gamma_bar_db)
            thr.push_back(gamma_th / from_db(db));
        const CMatrix &S = R.sqrt();
        const auto counts = detail::count_below(R.size(), thr, trials, seed, threads,
                                                [&](RandomStream &rs, std::vector<cdouble> &w, std::vector<cdouble> &h) {
                                                    detail::correlated_draw(S, rs, w, h);
                                                    return detail::best_gain(h);
                                                });
        OutageCurve out;
        out.trials = trials;
        for (std::size_t i = 0; i < gamma_bar_db.size(); ++i)
        {
            OutagePoint p;
            p.gamma_bar_db = gamma_bar_db[i];
            p.events = counts[i];
            p.op = static_cast<double>(counts[i]) / static_cast<double>(trials);
            p.half_width = wilson_half_width(counts[i], trials);
            p.asymptote = R.rank() > 0 ? outage_asymptote(R, from_db(gamma_bar_db[i]), gamma_th)
                                       : std::numeric_limits<double>::quiet_NaN();
            out.points.push_back(p);
        }
        return out;
    }

    // Fraction of trials with gamma_bar * max_k |h_k|^2 < gamma_th
    inline OutageEstimate outage_probability_mc(const CorrelationMatrix &R, double gamma_bar, double gamma_th,
                                                std::uint64_t trials, std::uint64_t seed, unsigned threads = 1)
    {
        if (!(gamma_bar > 0.0))
            throw DomainError("outage_probability_mc: gamma_bar must be positive");
        const auto c = outage_curve_mc(R, {to_db(gamma_bar)}, gamma_th, trials, seed, threads);
        return {c.points[0].op, c.points[0].half_width, c.points[0].events, trials};
    }

    // Outage when each segment's SNR is the captured energy gamma_bar * a^H M_k a, a_n ~ CN(0, sigma_n^2),
    // with M_k the NLoS gain matrix of segment k. This is the quadratic-form model the
    // correlated-Gaussian model approximates; it is exponential only when M_k has rank one.
    inline OutageCurve outage_curve_energy_mc(const std::vector<CMatrix> &gain_matrices,
                                              const std::vector<double> &variances,
                                              const std::vector<double> &gamma_bar_db, double gamma_th,
                                              std::uint64_t trials, std::uint64_t seed, unsigned threads = 1)
    {
        if (trials == 0)
            throw DomainError("outage_curve_energy_mc: zero trials");
        const std::size_t N = variances.size();
        for (const auto &M : gain_matrices)
            if (M.rows() != N || M.cols() != N)
                throw DomainError("outage_curve_energy_mc: gain matrix size does not match the scatterer count");
        std::vector<double> thr;
        for (double db : gamma_bar_db)
            thr.push_back(gamma_th / from_db(db));
        std::vector<double> sd(N);
        for (std::size_t n = 0; n < N; ++n)
            sd[n] = std::sqrt(variances[n]);
        const auto counts = detail::count_below(N, thr, trials, seed, threads,
                                                [&](RandomStream &rs, std::vector<cdouble> &a, std::vector<cdouble> &) {
                                                    for (std::size_t n = 0; n < N; ++n)
                                                        a[n] = sd[n] * rs.complex_normal();
                                                    double best = 0.0;
                                                    for (const auto &M : gain_matrices)
                                                        best = std::max(best, quadratic_form(M, a).real());
                                                    return best;
                                                });
        OutageCurve out;
        out.trials = trials;
        for (std::size_t i = 0; i < gamma_bar_db.size(); ++i)
        {
            OutagePoint p;
            p.gamma_bar_db = gamma_bar_db[i];
            p.events = counts[i];
            p.op = static_cast<double>(counts[i]) / static_cast<double>(trials);
            p.half_width = wilson_half_width(counts[i], trials);
            p.asymptote = std::numeric_limits<double>::quiet_NaN();
            out.points.push_back(p);
        }
        return out;
    }

    namespace detail
    {
        inline double fit_slope(const std::vector<double> &x, const std::vector<double> &y)
        {
            const double n = static_cast<double>(x.size());
            double mx = 0.0, my = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                mx += x[i], my += y[i];
            mx /= n, my /= n;
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                sxy += (x[i] - mx) * (y[i] - my);
                sxx += (x[i] - mx) * (x[i] - mx);
            }
            if (!(sxx > 0.0))
                throw DomainError("fit_diversity_order: points share one gamma_bar");
            return sxy / sxx;
        }
    }

    enum class CurveColumn
    {
        monte_carlo,
        asymptote
    };

    // Negated least-squares slope of log10 OP against log10 gamma_bar over [lo_db, hi_db].
    // Points with fewer than min_events outage events are left out of the Monte-Carlo fit.
    inline double fit_diversity_order(const OutageCurve &curve, double lo_db, double hi_db,
                                      std::uint64_t min_events = 1, CurveColumn column = CurveColumn::monte_carlo)
    {
        std::vector<double> x, y;
        for (const auto &p : curve.points)
        {
            if (p.gamma_bar_db < lo_db || p.gamma_bar_db > hi_db)
                continue;
            const double v = column == CurveColumn::monte_carlo ? p.op : p.asymptote;
            if (!(v > 0.0) || !std::isfinite(v))
                continue;
            if (column == CurveColumn::monte_carlo && p.events < min_events)
                continue;
            x.push_back(p.gamma_bar_db / 10.0);
            y.push_back(std::log10(v));
        }
        if (x.size() < 3)
            throw DomainError("fit_diversity_order: fewer than three usable points in the window");
        return -detail::fit_slope(x, y);
    }

    struct MatchedFilterEstimate
    {
        double noise_variance = 0.0;        // sample variance of the combined noise term
        double noise_variance_target = 0.0; // sigma^2 times the discretized channel gain
        double channel_gain = 0.0;          // sum over cells of |h|^2 dA
        double snr = 0.0;                   // |sample mean|^2 / sample variance of the combiner output
        double snr_target = 0.0;            // |signal|^2 * channel gain / sigma^2
    };

    // Matched-filter combining on an m x n cell discretization of the aperture. Cell noise is
    // CN(0, sigma^2 / dA), so the cell-integrated noise N dA has variance sigma^2 dA, the
    // discrete stand-in for spatially white noise of spectral density sigma^2.
    template <typename Channel>
    MatchedFilterEstimate simulate_matched_filter_mc(Channel &&channel, const RectAperture &rect, double sigma2,
                                                     cdouble signal, int m, int n, std::uint64_t trials,
                                                     std::uint64_t seed, unsigned threads = 1)
    {
        if (m < 16 || n < 16)
            throw DomainError("simulate_matched_filter_mc: grid must be at least 16 x 16");
        if (trials < 2)
            throw DomainError("simulate_matched_filter_mc: need at least two trials");
        if (!(sigma2 > 0.0))
            throw DomainError("simulate_matched_filter_mc: noise variance must be positive");

        const double hx = rect.Ax / m, hz = rect.Az / n, dA = hx * hz;
        const std::size_t cells = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
        std::vector<cdouble> hconj(cells);
        double gain = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i)
            {
                const double x = rect.rx - 0.5 * rect.Ax + (i + 0.5) * hx;
                const double z = rect.rz - 0.5 * rect.Az + (j + 0.5) * hz;
                const cdouble h = channel(x, z);
                hconj[static_cast<std::size_t>(j) * m + i] = std::conj(h);
                gain += std::norm(h) * dA;
            }
        const cdouble clean = signal * gain;
        const double cell_sd = std::sqrt(sigma2 / dA);

        // Per-block sums of the noise term and its squared magnitude, reduced in block order
        const std::size_t per_block = 1024;
        const std::size_t blocks = (trials + per_block - 1) / per_block;
        std::vector<cdouble> sum(blocks);
        std::vector<double> sum_sq(blocks);
        for_each_block(blocks, threads, [&](std::size_t b) {
            const std::uint64_t t0 = b * per_block;
            const std::uint64_t t1 = std::min<std::uint64_t>(trials, t0 + per_block);
            cdouble s = 0.0;
            double s2 = 0.0;
            for (std::uint64_t t = t0; t < t1; ++t)
            {
                RandomStream rs(seed, stream_domain::trials + t);
                cdouble acc = 0.0;
                for (std::size_t c = 0; c < cells; ++c)
                    acc += hconj[c] * rs.complex_normal();
                const cdouble noise = acc * (cell_sd * dA);
                s += noise;
                s2 += std::norm(noise);
            }
            sum[b] = s;
            sum_sq[b] = s2;
        });
        cdouble s = 0.0;
        double s2 = 0.0;
        for (std::size_t b = 0; b < blocks; ++b)
            s += sum[b], s2 += sum_sq[b];

        const double nt = static_cast<double>(trials);
        const cdouble mean_noise = s / nt;
        const double var = (s2 - nt * std::norm(mean_noise)) / (nt - 1.0);

        MatchedFilterEstimate out;
        out.channel_gain = gain;
        out.noise_variance = var;
        out.noise_variance_target = sigma2 * gain;
        out.snr = std::norm(clean + mean_noise) / var;
        out.snr_target = std::norm(signal) * gain / sigma2;
        return out;
    }

    // LoS fixture: channel from the user, signal J * A_S, noise level from params
    inline MatchedFilterEstimate simulate_matched_filter_mc(const RectAperture &rect, const UserGeometry &g,
                                                            const ChannelParams &params, int m, int n,
                                                            std::uint64_t trials, std::uint64_t seed,
                                                            unsigned threads = 1)
    {
        const Vec3 su = g.position();
        return simulate_matched_filter_mc([&](double x, double z) { return los_channel({x, z}, su, params); }, rect,
                                          params.sigma2(), cdouble(params.J_mag() * params.source_aperture()), m, n,
                                          trials, seed, threads);
    }
}
