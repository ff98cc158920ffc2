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
#include "capa/quadrature.hpp"
#include "capa/random.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace capa
{
    // Point scatterers in front of the array, each with a Swerling-I reflection variance
    // and optionally one realization of the reflection coefficients.
    class ScattererSet
    {
    public:
        ScattererSet() = default;

        ScattererSet(std::vector<Vec3> positions, std::vector<double> variances)
            : positions_(std::move(positions)), variances_(std::move(variances))
        {
            if (positions_.size() != variances_.size())
                throw DomainError("ScattererSet: one variance per scatterer is required");
            for (const auto &p : positions_)
                if (!(p.y > 0.0))
                    throw DomainError("ScattererSet: scatterers must lie in front of the array (y > 0)");
            for (double v : variances_)
                if (!(v >= 0.0))
                    throw DomainError("ScattererSet: reflection variances must be non-negative");
        }

        std::size_t size() const { return positions_.size(); }
        const std::vector<Vec3> &positions() const { return positions_; }
        const std::vector<double> &variances() const { return variances_; }

        bool has_realization() const { return alpha_.has_value(); }
        const std::vector<cdouble> &realization() const
        {
            if (!alpha_)
                throw DomainError("ScattererSet: no reflection realization attached");
            return *alpha_;
        }

        ScattererSet with_realization(std::vector<cdouble> alpha) const
        {
            if (alpha.size() != positions_.size())
                throw DomainError("ScattererSet: realization size does not match the scatterer count");
            ScattererSet out = *this;
            out.alpha_ = std::move(alpha);
            return out;
        }

    private:
        std::vector<Vec3> positions_;
        std::vector<double> variances_;
        std::optional<std::vector<cdouble>> alpha_;
    };

    struct ScattererBox
    {
        Interval x{-5.0, 5.0}, y{1.0, 10.0}, z{-5.0, 5.0};
    };

    // Reflection variance that makes sigma_n^2 |g|^2 dimensionless in gamma_bar units
    inline double reference_reflection_variance(const ChannelParams &params) { return params.gain_normalization(); }

    inline std::vector<Vec3> sample_scatterer_positions(const ScattererBox &box, std::size_t count, std::uint64_t seed)
    {
        if (!(box.y.lo > 0.0) || box.x.lo > box.x.hi || box.y.lo > box.y.hi || box.z.lo > box.z.hi)
            throw DomainError("sample_scatterer_positions: invalid box (y must be positive)");
        RandomStream rs(seed, stream_domain::scatterers);
        std::vector<Vec3> out(count);
        for (auto &p : out)
        {
            p.x = rs.uniform(box.x.lo, box.x.hi);
            p.y = rs.uniform(box.y.lo, box.y.hi);
            p.z = rs.uniform(box.z.lo, box.z.hi);
        }
        return out;
    }

    // alpha_n ~ CN(0, sigma_n^2)
    inline std::vector<cdouble> draw_reflections(const std::vector<double> &variances, RandomStream &rs)
    {
        std::vector<cdouble> a(variances.size());
        for (std::size_t n = 0; n < a.size(); ++n)
            a[n] = std::sqrt(variances[n]) * rs.complex_normal();
        return a;
    }

    // h(p) = sum_n alpha_n g_LoS(p, s_n) g(s_n, s_u)
    inline cdouble nlos_response(const ArrayPoint &p, const UserGeometry &g, const ScattererSet &sc,
                                 const ChannelParams &params)
    {
        const auto &alpha = sc.realization();
        const Vec3 su = g.position();
        cdouble h = 0.0;
        for (std::size_t n = 0; n < sc.size(); ++n)
        {
            const Vec3 &s = sc.positions()[n];
            h += alpha[n] * los_channel(p, s, params) * free_space_green(s, su, params);
        }
        return h;
    }

    // (1/4pi) * integral over rect of y_n / d_n^3: the LoS gain with the scatterer as source
    inline double a_los_scatterer(const RectAperture &rect, const Vec3 &s) { return projected_solid_angle(rect, s); }

    // Gauss-Legendre order per panel; zero panel counts select them from the phase-rate bound
    struct GlOptions
    {
        int order = 30;
        int panels_x = 0;
        int panels_z = 0;
    };

    struct PanelCounts
    {
        int x = 1, z = 1;
    };

    namespace detail
    {
        // Largest in-plane sine of the direction from any point of rect to s; bounds |grad d| on the plane
        inline double max_in_plane_sine(const RectAperture &rect, const Vec3 &s)
        {
            const auto xr = rect.x_range();
            const auto zr = rect.z_range();
            const double fx = std::max(std::abs(s.x - xr.lo), std::abs(s.x - xr.hi));
            const double fz = std::max(std::abs(s.z - zr.lo), std::abs(s.z - zr.hi));
            const double rho = std::hypot(fx, fz);
            return rho / std::hypot(rho, s.y);
        }

        // Each panel keeps (phase rate) * (panel half-width) <= 0.75 * order, where the
        // Gauss-Legendre error on oscillatory integrands is far below double precision.
        inline int panels_for(double phase_rate, double length, int order)
        {
            const double need = phase_rate * length / (2.0 * 0.75 * order);
            return std::clamp(static_cast<int>(std::ceil(need)), 1, 4096);
        }
    }

    // Panel counts for integrating products of the phases e^{-j k0 d_n} over rect.
    // `phase_terms` is how many phase factors multiply in the integrand (1 for a single
    // source, 2 for a cross-correlation).
    inline PanelCounts resolve_panels(const RectAperture &rect, std::span<const Vec3> sources,
                                      const ChannelParams &params, const GlOptions &opt, int phase_terms = 2)
    {
        PanelCounts pc{opt.panels_x, opt.panels_z};
        if (pc.x > 0 && pc.z > 0)
            return pc;
        std::vector<double> sines;
        for (const auto &s : sources)
            sines.push_back(detail::max_in_plane_sine(rect, s));
        std::sort(sines.rbegin(), sines.rend());
        double total = 0.0;
        for (int i = 0; i < phase_terms && i < static_cast<int>(sines.size()); ++i)
            total += sines[i];
        const double rate = params.k0() * total;
        if (pc.x <= 0)
            pc.x = detail::panels_for(rate, rect.Ax, opt.order);
        if (pc.z <= 0)
            pc.z = detail::panels_for(rate, rect.Az, opt.order);
        return pc;
    }

    // rho_{n,n'} = (1/4pi) * integral over rect of e^{j k0 (d_n' - d_n)} / (d_n d_n')^{3/2}
    inline cdouble rho_cross(const RectAperture &rect, const Vec3 &sn, const Vec3 &sm, const ChannelParams &params,
                             const GlOptions &opt = {})
    {
        if (!(sn.y > 0.0) || !(sm.y > 0.0))
            throw DomainError("rho_cross: scatterers must satisfy y > 0");
        const Vec3 both[2] = {sn, sm};
        const auto pc = resolve_panels(rect, both, params, opt);
        const auto rule = gauss_legendre_rule(opt.order);
        const double k0 = params.k0();
        auto f = [&](double x, double z) {
            const double qn = (x - sn.x) * (x - sn.x) + sn.y * sn.y + (z - sn.z) * (z - sn.z);
            const double qm = (x - sm.x) * (x - sm.x) + sm.y * sm.y + (z - sm.z) * (z - sm.z);
            const double dn = std::sqrt(qn), dm = std::sqrt(qm);
            return std::polar(1.0 / std::pow(qn * qm, 0.75), k0 * (dm - dn));
        };
        return quad2d_rect(f, rect, rule, pc.x, pc.z) / (4.0 * std::numbers::pi);
    }

    // Hermitian N x N matrix G with gamma_NLoS = gamma_bar * sum_{n,m} alpha_n conj(alpha_m) G(n, m).
    // Diagonal entries use the closed-form LoS gain; off-diagonal entries use one shared
    // Gauss-Legendre grid for every scatterer pair.
    inline CMatrix nlos_gain_matrix(const RectAperture &rect, const UserGeometry &g, std::span<const Vec3> scatterers,
                                    const ChannelParams &params, const GlOptions &opt = {})
    {
        const std::size_t N = scatterers.size();
        CMatrix G(N, N);
        if (N == 0)
            return G;
        const Vec3 su = g.position();
        std::vector<cdouble> gu(N);
        for (std::size_t n = 0; n < N; ++n)
        {
            if (!(scatterers[n].y > 0.0))
                throw DomainError("nlos_gain_matrix: scatterers must satisfy y > 0");
            gu[n] = free_space_green(scatterers[n], su, params);
            G(n, n) = std::norm(gu[n]) * a_los_scatterer(rect, scatterers[n]);
        }
        if (N == 1)
            return G;

        const auto pc = resolve_panels(rect, scatterers, params, opt);
        const auto rule = gauss_legendre_rule(opt.order);
        const int T = rule.order;
        const double k0 = params.k0();
        const double hx = rect.Ax / pc.x, hz = rect.Az / pc.z;
        const double x0 = rect.rx - 0.5 * rect.Ax, z0 = rect.rz - 0.5 * rect.Az;

        std::vector<cdouble> u(N), acc(N * N, 0.0);
        for (int a = 0; a < pc.z; ++a)
            for (int b = 0; b < pc.x; ++b)
            {
                const double cz = z0 + (a + 0.5) * hz, cx = x0 + (b + 0.5) * hx;
                for (int i = 0; i < T; ++i)
                {
                    const double z = 0.5 * hz * rule.nodes[i] + cz;
                    for (int j = 0; j < T; ++j)
                    {
                        const double x = 0.5 * hx * rule.nodes[j] + cx;
                        const double w = rule.weights[i] * rule.weights[j];
                        for (std::size_t n = 0; n < N; ++n)
                        {
                            const Vec3 &s = scatterers[n];
                            const double q = (x - s.x) * (x - s.x) + s.y * s.y + (z - s.z) * (z - s.z);
                            const double d = std::sqrt(q);
                            u[n] = std::polar(1.0 / (d * std::sqrt(d)), -k0 * d);
                        }
                        for (std::size_t n = 0; n < N; ++n)
                            for (std::size_t m = n + 1; m < N; ++m)
                                acc[n * N + m] += w * u[n] * std::conj(u[m]);
                    }
                }
            }
        // Scaling hx*hz/4 is the same for every panel
        const double jac = 0.25 * hx * hz / (4.0 * std::numbers::pi);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t m = n + 1; m < N; ++m)
            {
                const cdouble rho = jac * acc[n * N + m];
                const cdouble v = gu[n] * std::conj(gu[m]) * std::sqrt(scatterers[n].y * scatterers[m].y) * rho;
                G(n, m) = v;
                G(m, n) = std::conj(v);
            }
        return G;
    }

    // sum_{n,m} alpha_n conj(alpha_m) G(n, m)
    inline cdouble quadratic_form(const CMatrix &G, std::span<const cdouble> alpha)
    {
        cdouble s = 0.0;
        for (std::size_t n = 0; n < alpha.size(); ++n)
            for (std::size_t m = 0; m < alpha.size(); ++m)
                s += alpha[n] * std::conj(alpha[m]) * G(n, m);
        return s;
    }

    struct NlosSnrTerms
    {
        std::vector<double> diagonal; // |alpha_n|^2 |g(s_n, s_u)|^2 a_LoS^(n)
        CMatrix cross;                // alpha_n conj(alpha_n') g_n conj(g_n') sqrt(y_n y_n') rho_{n,n'}, zero diagonal
        double total = 0.0;           // gamma_bar times the sum of every term
        double imag_residue = 0.0;    // |Im(sum)| / |sum| before it was discarded
    };

    inline NlosSnrTerms nlos_snr(const RectAperture &rect, const UserGeometry &g, const ScattererSet &sc,
                                 const ChannelParams &params, const GlOptions &opt = {})
    {
        const auto &alpha = sc.realization();
        const std::size_t N = sc.size();
        const CMatrix G = nlos_gain_matrix(rect, g, sc.positions(), params, opt);

        NlosSnrTerms out;
        out.diagonal.resize(N);
        out.cross = CMatrix(N, N);
        cdouble sum = 0.0;
        for (std::size_t n = 0; n < N; ++n)
        {
            out.diagonal[n] = std::norm(alpha[n]) * G(n, n).real();
            sum += out.diagonal[n];
        }
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t m = 0; m < N; ++m)
                if (n != m)
                {
                    out.cross(n, m) = alpha[n] * std::conj(alpha[m]) * G(n, m);
                    sum += out.cross(n, m);
                }
        const double mag = std::abs(sum);
        out.imag_residue = mag > 0.0 ? std::abs(sum.imag()) / mag : 0.0;
        if (out.imag_residue > 1e-9)
            throw NumericalError("nlos_snr: quadratic form has a significant imaginary part");
        out.total = params.gamma_bar() * sum.real();
        return out;
    }

    // gamma_bar * 4pi/(k0^2 eta^2) * integral of |h|^2 over rect, by adaptive cubature
    inline double nlos_snr_numeric(const RectAperture &rect, const UserGeometry &g, const ScattererSet &sc,
                                   const ChannelParams &params, double tol = 1e-8)
    {
        const auto &alpha = sc.realization();
        const std::size_t N = sc.size();
        if (N == 0)
            return 0.0;
        const Vec3 su = g.position();
        std::vector<cdouble> coef(N);
        for (std::size_t n = 0; n < N; ++n)
            coef[n] = alpha[n] * free_space_green(sc.positions()[n], su, params);
        bool all_zero = std::all_of(coef.begin(), coef.end(), [](cdouble c) { return c == 0.0; });
        if (all_zero)
            return 0.0;
        auto integrand = [&](double x, double z) {
            cdouble h = 0.0;
            for (std::size_t n = 0; n < N; ++n)
                h += coef[n] * los_channel({x, z}, sc.positions()[n], params);
            return std::norm(h);
        };
        const auto res = quad2d_adaptive(integrand, rect, tol);
        return params.gamma_bar() * params.gain_normalization() * res.value;
    }
}
