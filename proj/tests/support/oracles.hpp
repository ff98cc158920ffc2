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

// Independent reference computations shared by the unit and acceptance tests. Nothing here
// reuses the factorized or closed-form paths of the library; each routine evaluates the
// defining integral or expectation directly.

#pragma once

#include "capa/capa.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace capa::testing
{
    inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

    // Wave from scatterer s seen at (x, 0, z): e^{-j k0 d} / (sqrt(4 pi) d) * sqrt(y / d)
    inline cdouble reference_wave(double x, double z, const Vec3 &s, double k0)
    {
        const double dx = x - s.x, dz = z - s.z;
        const double d = std::sqrt(dx * dx + s.y * s.y + dz * dz);
        const cdouble phase = std::exp(cdouble(0.0, -k0 * d));
        return phase / (std::sqrt(4.0 * std::numbers::pi) * d) * std::sqrt(s.y / d);
    }

    // Coherent segment integral of one scatterer's wave by adaptive cubature
    inline cdouble segment_wave_integral(const RectAperture &rect, const Vec3 &s, const ChannelParams &params,
                                         double tol = 1e-9)
    {
        const double k0 = params.k0();
        return quad2d_adaptive([&](double x, double z) { return reference_wave(x, z, s, k0); }, rect, tol).value;
    }

    // Segment correlation by the literal four-fold integral of the correlation kernel,
    // composite Gauss-Legendre with `panels` x `panels` panels of order T per segment
    inline CMatrix correlation_matrix_4d(const SegmentSet &segs, const ScattererSet &sc, const UserGeometry &g,
                                         const ChannelParams &params, int T, int panels)
    {
        const auto rule = gauss_legendre_rule(T);
        struct Node
        {
            double x, z, w;
        };
        std::vector<std::vector<Node>> nodes(segs.size());
        for (std::size_t k = 0; k < segs.size(); ++k)
        {
            const auto &r = segs.segments[k];
            const double hx = r.Ax / panels, hz = r.Az / panels;
            for (int a = 0; a < panels; ++a)
                for (int b = 0; b < panels; ++b)
                    for (int i = 0; i < T; ++i)
                        for (int j = 0; j < T; ++j)
                            nodes[k].push_back({r.rx - 0.5 * r.Ax + (b + 0.5 + 0.5 * rule.nodes[j]) * hx,
                                                r.rz - 0.5 * r.Az + (a + 0.5 + 0.5 * rule.nodes[i]) * hz,
                                                0.25 * hx * hz * rule.weights[i] * rule.weights[j]});
        }
        CMatrix R(segs.size(), segs.size());
        for (std::size_t k = 0; k < segs.size(); ++k)
            for (std::size_t l = 0; l < segs.size(); ++l)
            {
                cdouble s = 0.0;
                for (const auto &p : nodes[k])
                    for (const auto &q : nodes[l])
                        s += p.w * q.w * correlation_kernel({p.x, p.z}, {q.x, q.z}, sc, g, params);
                R(k, l) = s;
            }
        return R;
    }

    // Mean of |integral over each segment of h|^2, gamma_bar-normalized, over sampled reflection draws.
    // Segment integrals of each scatterer's wave come from adaptive cubature.
    inline std::vector<double> sampled_segment_gain_means(const SegmentSet &segs, const ScattererSet &sc,
                                                          const UserGeometry &g, const ChannelParams &params,
                                                          std::size_t draws, std::uint64_t seed)
    {
        const std::size_t K = segs.size(), N = sc.size();
        const Vec3 su = g.position();
        // h(r) sqrt(4pi / (k0^2 eta^2)) = sum_n alpha_n g(s_n, s_u) * wave_n(r)
        std::vector<std::vector<cdouble>> coef(K, std::vector<cdouble>(N));
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t n = 0; n < N; ++n)
                coef[k][n] = free_space_green(sc.positions()[n], su, params) *
                             segment_wave_integral(segs.segments[k], sc.positions()[n], params);
        std::vector<double> mean(K, 0.0);
        for (std::size_t t = 0; t < draws; ++t)
        {
            RandomStream rs(seed, t);
            const auto alpha = draw_reflections(sc.variances(), rs);
            for (std::size_t k = 0; k < K; ++k)
            {
                cdouble h = 0.0;
                for (std::size_t n = 0; n < N; ++n)
                    h += alpha[n] * coef[k][n];
                mean[k] += std::norm(h);
            }
        }
        for (auto &m : mean)
            m /= static_cast<double>(draws);
        return mean;
    }

    // Captured energy gamma_bar-normalized: 4pi/(k0^2 eta^2) * integral of |h|^2, one draw
    inline double energy_gain_numeric(const RectAperture &rect, const UserGeometry &g, const ScattererSet &sc,
                                      const ChannelParams &params, double tol = 1e-8)
    {
        const auto unit = ChannelParams::from_gamma_bar(params.lambda(), 1.0);
        return nlos_snr_numeric(rect, g, sc, unit, tol);
    }

    // Reference scatterer set with the reference reflection variance
    inline ScattererSet reference_scatterers(std::size_t count, std::uint64_t seed, const ChannelParams &params,
                                             const ScattererBox &box = {})
    {
        auto pos = sample_scatterer_positions(box, count, seed);
        std::vector<double> var(pos.size(), reference_reflection_variance(params));
        return ScattererSet(std::move(pos), std::move(var));
    }

    inline UserGeometry reference_user() { return UserGeometry(10.0, std::numbers::pi / 6.0, std::numbers::pi / 3.0); }
}
