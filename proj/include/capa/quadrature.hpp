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

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <type_traits>
#include <vector>

namespace capa
{
    // Gauss-Legendre rule on [-1, 1]: nodes ascending, weights positive
    struct QuadratureRule
    {
        int order = 0;
        std::vector<double> nodes;
        std::vector<double> weights;
    };

    // Nodes are the roots of P_T, found by Newton iteration from the usual cosine guesses.
    inline QuadratureRule gauss_legendre_rule(int T)
    {
        if (T < 1)
            throw DomainError("gauss_legendre_rule: order must be >= 1");

        QuadratureRule rule;
        rule.order = T;
        rule.nodes.assign(T, 0.0);
        rule.weights.assign(T, 0.0);

        const int half = (T + 1) / 2;
        for (int i = 0; i < half; ++i)
        {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (T + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter)
            {
                // Three-term recurrence for P_T(x) and its derivative
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= T; ++k)
                {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                const double pT = (T == 1) ? x : p1;
                const double pTm1 = (T == 1) ? 1.0 : p0;
                dp = T * (x * pT - pTm1) / (x * x - 1.0);
                const double dx = pT / dp;
                x -= dx;
                if (std::abs(dx) <= 1e-15)
                    break;
            }
            // Recompute the derivative at the converged node for the weight
            {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= T; ++k)
                {
                    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                const double pT = (T == 1) ? x : p1;
                const double pTm1 = (T == 1) ? 1.0 : p0;
                dp = T * (x * pT - pTm1) / (x * x - 1.0);
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            // i counts from the largest root down; mirror to keep exact symmetry
            rule.nodes[T - 1 - i] = x;
            rule.nodes[i] = -x;
            rule.weights[T - 1 - i] = w;
            rule.weights[i] = w;
        }
        if (T % 2 == 1)
            rule.nodes[T / 2] = 0.0;
        return rule;
    }

    namespace detail
    {
        template <typename V>
        bool is_finite_value(const V &v)
        {
            if constexpr (std::is_floating_point_v<V>)
                return std::isfinite(v);
            else
                return std::isfinite(v.real()) && std::isfinite(v.imag());
        }

        [[noreturn]] inline void throw_non_finite(double x, double z)
        {
            std::ostringstream os;
            os.precision(17);
            os << "non-finite integrand sample at (x, z) = (" << x << ", " << z << ")";
            throw NumericalError(os.str());
        }

        [[noreturn]] inline void throw_non_finite(double x)
        {
            std::ostringstream os;
            os.precision(17);
            os << "non-finite integrand sample at x = " << x;
            throw NumericalError(os.str());
        }
    }

    // Tensor-product Gauss-Legendre estimate of the integral of f(x, z) over rect,
    // with px x pz equal panels each carrying the full rule (px = pz = 1 is the plain tensor rule).
    template <typename F>
    auto quad2d_rect(F &&f, const RectAperture &rect, const QuadratureRule &rule, int px = 1, int pz = 1)
    {
        using V = std::decay_t<std::invoke_result_t<F &, double, double>>;
        if (px < 1 || pz < 1)
            throw DomainError("quad2d_rect: panel counts must be >= 1");

        const double hx = rect.Ax / px, hz = rect.Az / pz;
        const double x0 = rect.rx - 0.5 * rect.Ax, z0 = rect.rz - 0.5 * rect.Az;
        const double jac = 0.25 * hx * hz;
        const int T = rule.order;

        V total{};
        for (int a = 0; a < pz; ++a)
        {
            const double cz = z0 + (a + 0.5) * hz;
            for (int b = 0; b < px; ++b)
            {
                const double cx = x0 + (b + 0.5) * hx;
                V panel{};
                for (int i = 0; i < T; ++i)
                {
                    const double z = 0.5 * hz * rule.nodes[i] + cz;
                    V row{};
                    for (int j = 0; j < T; ++j)
                    {
                        const double x = 0.5 * hx * rule.nodes[j] + cx;
                        const V v = f(x, z);
                        if (!detail::is_finite_value(v))
                            detail::throw_non_finite(x, z);
                        row += rule.weights[j] * v;
                    }
                    panel += rule.weights[i] * row;
                }
                total += jac * panel;
            }
        }
        return total;
    }

    template <typename V>
    struct AdaptiveResult
    {
        V value{};
        double error = 0.0;
        std::size_t panels = 0;
    };

    struct AdaptiveOptions
    {
        double tol = 1e-8; // relative tolerance on |value|
        int max_depth = 20;
        std::size_t max_panels = 4'000'000;
    };

    namespace detail
    {
        // 15-point Kronrod extension of the 7-point Gauss rule (nodes >= 0, descending).
        // Odd entries of xgk are the Gauss nodes; wg holds their Gauss weights.
        inline constexpr std::array<double, 8> xgk = {
            0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
        inline constexpr std::array<double, 8> wgk = {
            0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
        inline constexpr std::array<double, 4> wg = {
            0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

        // Full 15-node layout on [-1, 1] with matching Kronrod and Gauss weights (0 for Kronrod-only nodes)
        struct Kronrod15
        {
            std::array<double, 15> t{}, wk{}, wg{};

            constexpr Kronrod15()
            {
                for (int i = 0; i < 7; ++i)
                {
                    t[i] = -xgk[i];
                    t[14 - i] = xgk[i];
                    wk[i] = wk[14 - i] = wgk[i];
                    const double g = (i % 2 == 1) ? detail::wg[i / 2] : 0.0;
                    this->wg[i] = this->wg[14 - i] = g;
                }
                t[7] = 0.0;
                wk[7] = wgk[7];
                this->wg[7] = detail::wg[3];
            }
        };

        inline constexpr Kronrod15 k15{};

        template <typename V>
        struct Panel2
        {
            double x0, x1, z0, z1;
            V value;
            double err, resabs;
            int depth;
        };

        template <typename V, typename F>
        Panel2<V> eval_panel(F &f, double x0, double x1, double z0, double z1, int depth)
        {
            const double cx = 0.5 * (x0 + x1), hx = 0.5 * (x1 - x0);
            const double cz = 0.5 * (z0 + z1), hz = 0.5 * (z1 - z0);
            V vk{}, vg{};
            double rabs = 0.0;
            for (int i = 0; i < 15; ++i)
            {
                const double z = cz + hz * k15.t[i];
                V rk{}, rg{};
                double ra = 0.0;
                for (int j = 0; j < 15; ++j)
                {
                    const double x = cx + hx * k15.t[j];
                    const V v = f(x, z);
                    if (!is_finite_value(v))
                        throw_non_finite(x, z);
                    rk += k15.wk[j] * v;
                    rg += k15.wg[j] * v;
                    ra += k15.wk[j] * std::abs(v);
                }
                vk += k15.wk[i] * rk;
                vg += k15.wg[i] * rg;
                rabs += k15.wk[i] * ra;
            }
            const double jac = hx * hz;
            return {x0, x1, z0, z1, jac * vk, std::abs(jac * (vk - vg)), jac * rabs, depth};
        }

        template <typename V>
        struct Panel1
        {
            double a, b;
            V value;
            double err, resabs;
            int depth;
        };

        template <typename V, typename F>
        Panel1<V> eval_panel1(F &f, double a, double b, int depth)
        {
            const double c = 0.5 * (a + b), h = 0.5 * (b - a);
            V vk{}, vg{};
            double rabs = 0.0;
            for (int i = 0; i < 15; ++i)
            {
                const double x = c + h * k15.t[i];
                const V v = f(x);
                if (!is_finite_value(v))
                    throw_non_finite(x);
                vk += k15.wk[i] * v;
                vg += k15.wg[i] * v;
                rabs += k15.wk[i] * std::abs(v);
            }
            return {a, b, h * vk, std::abs(h * (vk - vg)), h * rabs, depth};
        }

        inline double noise_floor(double resabs)
        {
            return 50.0 * std::numeric_limits<double>::epsilon() * resabs;
        }
    }

    // Globally adaptive cubature over the box [x0, x1] x [z0, z1]. The panel with the largest
    // |K15 - G7| estimate is split into four until the summed estimate drops below tol * |value|.
    template <typename F>
    auto quad2d_adaptive(F &&f, double x0, double x1, double z0, double z1, const AdaptiveOptions &opt = {})
    {
        using V = std::decay_t<std::invoke_result_t<F &, double, double>>;
        using P = detail::Panel2<V>;
        if (!(opt.tol > 0.0))
            throw DomainError("quad2d_adaptive: tolerance must be positive");

        auto by_err = [](const P &a, const P &b) { return a.err < b.err; };
        std::vector<P> heap;
        heap.push_back(detail::eval_panel<V>(f, x0, x1, z0, z1, 0));
        V total = heap.front().value;
        double err = heap.front().err, resabs = heap.front().resabs;

        auto sorted_sum = [&]() {
            std::sort(heap.begin(), heap.end(), [](const P &a, const P &b) {
                return a.x0 < b.x0 || (a.x0 == b.x0 && a.z0 < b.z0);
            });
            AdaptiveResult<V> res;
            for (const auto &p : heap)
            {
                res.value += p.value;
                res.error += p.err;
            }
            res.panels = heap.size();
            return res;
        };

        while (err > std::max(opt.tol * std::abs(total), detail::noise_floor(resabs)))
        {
            std::pop_heap(heap.begin(), heap.end(), by_err);
            const P worst = heap.back();
            if (worst.depth >= opt.max_depth || heap.size() + 3 > opt.max_panels)
            {
                // pop_heap left the worst panel at the back, so the partial sum still covers it
                const auto partial = sorted_sum();
                throw ConvergenceError("quad2d_adaptive: tolerance not met at maximum subdivision",
                                       std::abs(partial.value), partial.error);
            }
            heap.pop_back();
            total -= worst.value;
            err -= worst.err;
            resabs -= worst.resabs;
            const double xm = 0.5 * (worst.x0 + worst.x1), zm = 0.5 * (worst.z0 + worst.z1);
            const P kids[4] = {
                detail::eval_panel<V>(f, worst.x0, xm, worst.z0, zm, worst.depth + 1),
                detail::eval_panel<V>(f, xm, worst.x1, worst.z0, zm, worst.depth + 1),
                detail::eval_panel<V>(f, worst.x0, xm, zm, worst.z1, worst.depth + 1),
                detail::eval_panel<V>(f, xm, worst.x1, zm, worst.z1, worst.depth + 1)};
            for (const auto &k : kids)
            {
                total += k.value;
                err += k.err;
                resabs += k.resabs;
                heap.push_back(k);
                std::push_heap(heap.begin(), heap.end(), by_err);
            }
            err = std::max(err, 0.0);
        }
        return sorted_sum();
    }

    template <typename F>
    auto quad2d_adaptive(F &&f, const RectAperture &rect, const AdaptiveOptions &opt = {})
    {
        const auto xr = rect.x_range();
        const auto zr = rect.z_range();
        return quad2d_adaptive(std::forward<F>(f), xr.lo, xr.hi, zr.lo, zr.hi, opt);
    }

    template <typename F>
    auto quad2d_adaptive(F &&f, const RectAperture &rect, double tol)
    {
        AdaptiveOptions opt;
        opt.tol = tol;
        return quad2d_adaptive(std::forward<F>(f), rect, opt);
    }

    // One-dimensional counterpart with bisection, used for radial and line-integral oracles
    template <typename F>
    auto quad1d_adaptive(F &&f, double a, double b, const AdaptiveOptions &opt = {})
    {
        using V = std::decay_t<std::invoke_result_t<F &, double>>;
        using P = detail::Panel1<V>;
        if (!(opt.tol > 0.0))
            throw DomainError("quad1d_adaptive: tolerance must be positive");

        auto by_err = [](const P &x, const P &y) { return x.err < y.err; };
        std::vector<P> heap;
        heap.push_back(detail::eval_panel1<V>(f, a, b, 0));
        V total = heap.front().value;
        double err = heap.front().err, resabs = heap.front().resabs;

        auto sorted_sum = [&]() {
            std::sort(heap.begin(), heap.end(), [](const P &x, const P &y) { return x.a < y.a; });
            AdaptiveResult<V> res;
            for (const auto &p : heap)
            {
                res.value += p.value;
                res.error += p.err;
            }
            res.panels = heap.size();
            return res;
        };

        const int max_depth = std::max(opt.max_depth, 50);
        while (err > std::max(opt.tol * std::abs(total), detail::noise_floor(resabs)))
        {
            std::pop_heap(heap.begin(), heap.end(), by_err);
            const P worst = heap.back();
            if (worst.depth >= max_depth || heap.size() + 1 > opt.max_panels)
            {
                // pop_heap left the worst panel at the back, so the partial sum still covers it
                const auto partial = sorted_sum();
                throw ConvergenceError("quad1d_adaptive: tolerance not met at maximum subdivision",
                                       std::abs(partial.value), partial.error);
            }
            heap.pop_back();
            total -= worst.value;
            err -= worst.err;
            resabs -= worst.resabs;
            const double m = 0.5 * (worst.a + worst.b);
            for (const auto &k : {detail::eval_panel1<V>(f, worst.a, m, worst.depth + 1),
                                  detail::eval_panel1<V>(f, m, worst.b, worst.depth + 1)})
            {
                total += k.value;
                err += k.err;
                resabs += k.resabs;
                heap.push_back(k);
                std::push_heap(heap.begin(), heap.end(), by_err);
            }
            err = std::max(err, 0.0);
        }
        return sorted_sum();
    }

    template <typename F>
    auto quad1d_adaptive(F &&f, double a, double b, double tol)
    {
        AdaptiveOptions opt;
        opt.tol = tol;
        return quad1d_adaptive(std::forward<F>(f), a, b, opt);
    }
}
