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

#include "capa/config.hpp"
#include "capa/error.hpp"
#include "capa/geometry.hpp"
#include "capa/los.hpp"
#include "capa/nlos.hpp"
#include "capa/parallel.hpp"
#include "capa/quadrature.hpp"
#include "capa/random.hpp"
#include "capa/selection.hpp"
#include "capa/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace capa
{
    // One experiment's output: free-form notes, column names and pre-formatted cells
    struct CsvTable
    {
        std::vector<std::string> notes;
        std::vector<std::string> columns;
        std::vector<std::vector<std::string>> rows;
        bool ok = true; // false when a verification check failed
    };

    inline std::string format_value(double v)
    {
        if (!std::isfinite(v))
            throw NumericalError("non-finite value in experiment output");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.15g", v);
        return buf;
    }

    inline void write_csv(std::ostream &os, const std::string &experiment, const ExperimentConfig &cfg,
                          const CsvTable &t)
    {
        os << "# capa " << experiment << "\n";
        for (const auto &line : echo_config(cfg))
            os << "# " << line << "\n";
        for (const auto &n : t.notes)
            os << "# " << n << "\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            os << (i ? "," : "") << t.columns[i];
        os << "\n";
        for (const auto &row : t.rows)
        {
            for (std::size_t i = 0; i < row.size(); ++i)
                os << (i ? "," : "") << row[i];
            os << "\n";
        }
    }

    inline std::vector<double> log_grid(double lo, double hi, int n)
    {
        if (n == 1)
            return {lo};
        std::vector<double> g(n);
        const double a = std::log10(lo), b = std::log10(hi);
        for (int i = 0; i < n; ++i)
            g[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
        g.front() = lo;
        g.back() = hi;
        return g;
    }

    inline std::vector<double> linear_grid(double lo, double hi, int n)
    {
        if (n == 1)
            return {lo};
        std::vector<double> g(n);
        for (int i = 0; i < n; ++i)
            g[i] = lo + (hi - lo) * i / (n - 1);
        g.back() = hi;
        return g;
    }

    namespace experiments
    {
        inline ChannelParams make_params(const ExperimentConfig &c)
        {
            return ChannelParams::from_gamma_bar(c.lambda, from_db(c.gamma_bar_db));
        }

        inline UserGeometry make_user(const ExperimentConfig &c) { return UserGeometry(c.r, c.phi, c.theta); }

        // Frame of the given area keeping the configured Lx : Lz aspect ratio
        inline ArrayFrame frame_with_area(const ExperimentConfig &c, double area)
        {
            const double lx = std::sqrt(area * c.Lx / c.Lz);
            return ArrayFrame(lx, area / lx);
        }

        inline ScattererSet make_scatterers(const ExperimentConfig &c, const ChannelParams &params)
        {
            if (c.scatterer_count < 1)
                throw ConfigError("NLoS experiments need scatterer_count >= 1");
            auto pos = sample_scatterer_positions(c.box, static_cast<std::size_t>(c.scatterer_count), c.seed);
            std::vector<double> var(pos.size(), reference_reflection_variance(params));
            return ScattererSet(std::move(pos), std::move(var));
        }

        inline std::string describe(const Vec3 &p)
        {
            return "(" + format_value(p.x) + ", " + format_value(p.y) + ", " + format_value(p.z) + ")";
        }

        inline CsvTable fig2a(const ExperimentConfig &c)
        {
            const auto params = make_params(c);
            const auto g = make_user(c);
            CsvTable t;
            t.notes.push_back("active square side Ax = Az = Lx / 8; frame keeps the Lx : Lz aspect ratio");
            t.notes.push_back("no selection keeps the square at the frame center");
            t.columns = {"aperture_area_m2", "snr_db_optimal", "snr_db_segmented_five_point", "snr_db_noselect"};
            for (double area : log_grid(c.area_min, c.area_max, c.area_points))
            {
                const ArrayFrame frame = frame_with_area(c, area);
                const double a = frame.Lx / 8.0;
                const ArrayPoint best = optimal_center_rect(g, frame, a, a);
                const double opt = snr_rect_closed_form(g, RectAperture(best.x, best.z, a, a), params).snr;
                const auto segs = make_segments(frame, scheme::FivePoint{a, a});
                const double seg = select_best_segment(segs, [&](const RectAperture &r) {
                                       return snr_rect_closed_form(g, r, params).snr;
                                   }).value;
                const double none = snr_rect_closed_form(g, RectAperture(0.0, 0.0, a, a), params).snr;
                t.rows.push_back({format_value(area), format_value(to_db(opt)), format_value(to_db(seg)),
                                  format_value(to_db(none))});
            }
            return t;
        }

        inline CsvTable fig2b(const ExperimentConfig &c)
        {
            const auto params = make_params(c);
            const ArrayFrame frame(c.Lx, c.Lz);
            CsvTable t;
            t.notes.push_back("active region keeps the frame aspect ratio and is placed by the nearest-neighbour rule");
            t.columns = {"area_fraction", "snr_ratio", "r_m"};
            const auto fractions = linear_grid(1.0 / c.fraction_points, 1.0, c.fraction_points);
            for (double r : c.fig2b_ranges)
            {
                const UserGeometry g(r, c.phi, c.theta);
                const double full = snr_nearest_fraction(g, frame, params, 1.0);
                for (double f : fractions)
                    t.rows.push_back({format_value(f), format_value(snr_nearest_fraction(g, frame, params, f) / full),
                                      format_value(r)});
            }
            return t;
        }

        inline CsvTable fig3a(const ExperimentConfig &c)
        {
            const auto unit = ChannelParams::from_gamma_bar(c.lambda, 1.0);
            CsvTable t;
            t.notes.push_back("all SNR columns are divided by gamma_bar");
            t.columns = {"tau", "square_exact", "circle_exact", "square_far", "square_near", "circle_far", "circle_near"};
            using S = ApertureShape;
            using F = FieldRegime;
            for (double tau : log_grid(c.tau_min, c.tau_max, c.tau_points))
                t.rows.push_back({format_value(tau), format_value(snr_aligned_square(tau, unit)),
                                  format_value(snr_aligned_circle(tau, unit)),
                                  format_value(snr_asymptotic(S::square, F::far, tau, unit)),
                                  format_value(snr_asymptotic(S::square, F::near, tau, unit)),
                                  format_value(snr_asymptotic(S::circle, F::far, tau, unit)),
                                  format_value(snr_asymptotic(S::circle, F::near, tau, unit))});
            return t;
        }

        inline CsvTable fig3b(const ExperimentConfig &c)
        {
            const auto unit = ChannelParams::from_gamma_bar(c.lambda, 1.0);
            CsvTable t;
            t.columns = {"tau", "snr_ratio_circle_over_square"};
            for (double tau : log_grid(c.tau_min, c.tau_max, c.tau_points))
                t.rows.push_back(
                    {format_value(tau), format_value(snr_aligned_circle(tau, unit) / snr_aligned_square(tau, unit))});
            return t;
        }

        inline CsvTable fig4a(const ExperimentConfig &c)
        {
            const auto params = make_params(c);
            const auto g = make_user(c);
            const auto sc = make_scatterers(c, params);
            const GlOptions gl{c.quad_order, 0, 0};

            std::vector<std::vector<cdouble>> alphas(c.realizations);
            for (std::uint64_t j = 0; j < c.realizations; ++j)
            {
                RandomStream rs(c.seed, stream_domain::reflections + j);
                alphas[j] = draw_reflections(sc.variances(), rs);
            }

            CsvTable t;
            t.notes.push_back("active square side Ax = Az = Lx / 2; frame keeps the Lx : Lz aspect ratio");
            t.notes.push_back("SNR averaged over " + std::to_string(c.realizations) +
                              " reflection draws, selection repeated for every draw");
            t.notes.push_back("brute force searches a " + std::to_string(c.search_grid) + " x " +
                              std::to_string(c.search_grid) + " grid of centers plus the five segment centers");
            for (std::size_t n = 0; n < sc.size(); ++n)
                t.notes.push_back("scatterer " + std::to_string(n) + " at " + describe(sc.positions()[n]));
            t.columns = {"aperture_area_m2", "snr_db_bruteforce", "snr_db_segmented", "snr_db_noselect"};

            for (double area : log_grid(c.area_min, c.area_max, c.area_points))
            {
                const ArrayFrame frame = frame_with_area(c, area);
                const double a = frame.Lx / 2.0;
                const auto segs = make_segments(frame, scheme::FivePoint{a, a});
                // Candidates: the five segments first (index 0 is the centered one), then the grid
                std::vector<RectAperture> cand = segs.segments;
                const auto b = feasible_center_bounds(frame, a, a);
                for (int j = 0; j < c.search_grid; ++j)
                    for (int i = 0; i < c.search_grid; ++i)
                        cand.emplace_back(grid_coordinate(b.x, i, c.search_grid),
                                          grid_coordinate(b.z, j, c.search_grid), a, a);

                std::vector<CMatrix> G(cand.size());
                for_each_block(cand.size(), c.threads, [&](std::size_t k) {
                    G[k] = nlos_gain_matrix(cand[k], g, sc.positions(), params, gl);
                });

                double sum_brute = 0.0, sum_seg = 0.0, sum_none = 0.0;
                std::vector<double> vals(cand.size());
                for (const auto &alpha : alphas)
                {
                    for (std::size_t k = 0; k < cand.size(); ++k)
                        vals[k] = params.gamma_bar() * quadratic_form(G[k], alpha).real();
                    sum_none += vals[0];
                    sum_seg += *std::max_element(vals.begin(), vals.begin() + segs.size());
                    sum_brute += *std::max_element(vals.begin(), vals.end());
                }
                const double n = static_cast<double>(alphas.size());
                t.rows.push_back({format_value(area), format_value(to_db(sum_brute / n)),
                                  format_value(to_db(sum_seg / n)), format_value(to_db(sum_none / n))});
            }
            return t;
        }

        // K distinct indices out of `pool`, drawn by a partial Fisher-Yates shuffle
        inline std::vector<std::size_t> random_subset(std::size_t pool, std::size_t K, std::uint64_t seed)
        {
            std::vector<std::size_t> idx(pool);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            RandomStream rs(seed, stream_domain::subsets + K);
            for (std::size_t i = 0; i < K; ++i)
            {
                const std::size_t j = i + static_cast<std::size_t>(rs.uniform() * static_cast<double>(pool - i));
                std::swap(idx[i], idx[std::min(j, pool - 1)]);
            }
            idx.resize(K);
            return idx;
        }

        inline CsvTable fig4b(const ExperimentConfig &c)
        {
            const auto params = make_params(c);
            const auto g = make_user(c);
            const auto sc = make_scatterers(c, params);
            const GlOptions gl{c.quad_order, 0, 0};
            const ArrayFrame frame(c.Lx, c.Lz);
            const auto pool = make_segments(frame, parse_segmentation(c.segmentation, c.Ax, c.Az));
            const double gamma_th = from_db(c.gamma_th_db);
            const auto grid = linear_grid(c.gamma_bar_db_min, c.gamma_bar_db_max, c.gamma_bar_db_points);

            CsvTable t;
            t.notes.push_back("gamma_bar_db in the config is unused here; gamma_bar is swept");
            for (std::size_t n = 0; n < sc.size(); ++n)
                t.notes.push_back("scatterer " + std::to_string(n) + " at " + describe(sc.positions()[n]));
            t.columns = {"gamma_bar_db", "op_mc", "op_ci_halfwidth", "op_asymptote", "K"};
            for (int K : c.fig4b_segments)
            {
                if (static_cast<std::size_t>(K) > pool.size())
                    throw ConfigError("fig4b_segments entry " + std::to_string(K) + " exceeds the " +
                                      std::to_string(pool.size()) + " available segments");
                const auto subset = pool.subset(random_subset(pool.size(), static_cast<std::size_t>(K), c.seed));
                const auto R = correlation_matrix(subset, sc, g, params, gl);
                if (R.rank() == 0)
                    throw NumericalError("fig4b: correlation matrix for K = " + std::to_string(K) + " has rank zero");
                std::string labels;
                for (const auto &l : subset.labels)
                    labels += (labels.empty() ? "" : " ") + l;
                t.notes.push_back("K = " + std::to_string(K) + ": segments {" + labels + "}, rank " +
                                  std::to_string(R.rank()) + ", pseudo-determinant " + format_value(R.pseudo_det()));
                const auto curve = outage_curve_mc(R, grid, gamma_th, c.trials, c.seed, c.threads);
                for (const auto &p : curve.points)
                    t.rows.push_back({format_value(p.gamma_bar_db), format_value(p.op), format_value(p.half_width),
                                      format_value(p.asymptote), std::to_string(K)});
            }
            return t;
        }

        struct CheckResult
        {
            std::string name;
            int cases = 0;
            double max_error = 0.0;
            double tolerance = 0.0;
        };

        // Random user with Psi >= 0.1 and an aperture inside the frame
        inline std::pair<UserGeometry, RectAperture> random_los_case(RandomStream &rs, const ArrayFrame &frame)
        {
            while (true)
            {
                const double r = rs.uniform(1.0, 50.0);
                const double phi = rs.uniform(0.0, std::numbers::pi), theta = rs.uniform(0.0, std::numbers::pi);
                if (std::sin(phi) * std::sin(theta) < 0.1)
                    continue;
                const double ax = rs.uniform(0.05, frame.Lx), az = rs.uniform(0.05, frame.Lz);
                const auto b = feasible_center_bounds(frame, ax, az);
                return {UserGeometry(r, phi, theta),
                        RectAperture(rs.uniform(b.x.lo, b.x.hi), rs.uniform(b.z.lo, b.z.hi), ax, az)};
            }
        }

        inline CsvTable verify(const ExperimentConfig &c)
        {
            const auto params = make_params(c);
            const auto unit = ChannelParams::from_gamma_bar(c.lambda, 1.0);
            const ArrayFrame frame(c.Lx, c.Lz);
            std::vector<CheckResult> checks;
            auto stream = [&](std::uint64_t id) { return RandomStream(c.seed, stream_domain::fixtures + id); };

            {
                CheckResult r{"los_closed_form_vs_cubature", 20, 0.0, 1e-6};
                auto rs = stream(1);
                for (int i = 0; i < r.cases; ++i)
                {
                    const auto [g, rect] = random_los_case(rs, frame);
                    const double a = snr_rect_closed_form(g, rect, params).snr;
                    const double b = snr_rect_numeric(g, rect, params).snr;
                    r.max_error = std::max(r.max_error, std::abs(a - b) / a);
                }
                checks.push_back(r);
            }
            {
                CheckResult r{"aligned_reduction", 100, 0.0, 1e-12};
                auto rs = stream(2);
                for (int i = 0; i < r.cases; ++i)
                {
                    const auto [g, rect] = random_los_case(rs, frame);
                    const auto p = projection_onto_array(g);
                    const double a = snr_rect_closed_form(g, RectAperture(p.x, p.z, rect.Ax, rect.Az), params).snr;
                    const double b = snr_aligned_rect(g, rect.Ax, rect.Az, params);
                    r.max_error = std::max(r.max_error, std::abs(a - b) / b);
                }
                checks.push_back(r);
            }
            {
                // Largest gain excess of any grid center over the nearest-neighbour center, in gamma_bar units
                CheckResult r{"nearest_neighbour_vs_grid", 10, 0.0, 1e-12};
                auto rs = stream(3);
                for (int i = 0; i < r.cases; ++i)
                {
                    const auto [g, rect] = random_los_case(rs, frame);
                    const auto best = optimal_center_rect(g, frame, rect.Ax, rect.Az);
                    auto gain = [&](const RectAperture &q) { return snr_rect_closed_form(g, q, unit).snr; };
                    const double ref = gain(RectAperture(best.x, best.z, rect.Ax, rect.Az));
                    const auto res = brute_force_center_search(frame, rect.Ax, rect.Az, gain, 41, 41, c.threads);
                    r.max_error = std::max(r.max_error, res.value - ref);
                }
                checks.push_back(r);
            }
            {
                // Distance of the near-field deficit ratio from [0.96, 1.00], negative circle advantage counted too
                CheckResult r{"shape_deficit_ratio_outside_band", 1, 0.0, 0.0};
                const double sq = snr_aligned_square(1e4, unit), ci = snr_aligned_circle(1e4, unit);
                const double ratio = (0.5 - ci) / (0.5 - sq);
                r.max_error = std::max({0.0, 0.96 - ratio, ratio - 1.0, sq - ci});
                checks.push_back(r);
            }
            {
                CheckResult r{"nlos_structured_vs_cubature", 3, 0.0, 1e-4};
                CheckResult d{"scatterer_diagonal_identity", 3, 0.0, 1e-6};
                for (int i = 0; i < r.cases; ++i)
                {
                    auto rs = stream(100 + i);
                    auto pos = sample_scatterer_positions(c.box, 4, c.seed + 1000 + i);
                    std::vector<double> var(pos.size(), reference_reflection_variance(params));
                    ScattererSet sc(pos, var);
                    sc = sc.with_realization(draw_reflections(sc.variances(), rs));
                    const auto g = make_user(c);
                    const RectAperture rect(0.0, 0.0, 0.5, 0.5);
                    const double a = nlos_snr(rect, g, sc, params, GlOptions{40, 0, 0}).total;
                    const double b = nlos_snr_numeric(rect, g, sc, params, 1e-7);
                    r.max_error = std::max(r.max_error, std::abs(a - b) / b);
                    const auto rho = rho_cross(rect, pos[0], pos[0], params, GlOptions{40, 0, 0});
                    const double lhs = pos[0].y * rho.real();
                    const double rhs = a_los_scatterer(rect, pos[0]);
                    d.max_error = std::max(d.max_error, std::abs(lhs - rhs) / rhs);
                }
                checks.push_back(r);
                checks.push_back(d);
            }
            {
                // Single segment, unit correlation: OP = 1 - exp(-gamma_th / gamma_bar); error in half-widths
                CheckResult r{"outage_exponential_in_half_widths", 3, 0.0, 3.0};
                CMatrix one(1, 1);
                one(0, 0) = 1.0;
                const CorrelationMatrix R(one);
                const std::vector<double> gb = {0.0, 10.0, 20.0};
                const auto curve = outage_curve_mc(R, gb, 1.0, 100000, c.seed, c.threads);
                for (const auto &p : curve.points)
                {
                    const double exact = -std::expm1(-1.0 / from_db(p.gamma_bar_db));
                    r.max_error = std::max(r.max_error, std::abs(p.op - exact) / p.half_width);
                }
                checks.push_back(r);
            }

            CsvTable t;
            t.columns = {"check", "cases", "max_error", "tolerance", "pass"};
            for (const auto &ch : checks)
            {
                const bool pass = ch.max_error <= ch.tolerance;
                t.ok = t.ok && pass;
                t.rows.push_back({ch.name, std::to_string(ch.cases), format_value(ch.max_error),
                                  format_value(ch.tolerance), pass ? "1" : "0"});
            }
            return t;
        }
    }

    inline const std::vector<std::string> &experiment_names()
    {
        static const std::vector<std::string> names = {"fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "verify"};
        return names;
    }

    inline CsvTable run_experiment(const std::string &name, const ExperimentConfig &c)
    {
        if (name == "fig2a")
            return experiments::fig2a(c);
        if (name == "fig2b")
            return experiments::fig2b(c);
        if (name == "fig3a")
            return experiments::fig3a(c);
        if (name == "fig3b")
            return experiments::fig3b(c);
        if (name == "fig4a")
            return experiments::fig4a(c);
        if (name == "fig4b")
            return experiments::fig4b(c);
        if (name == "verify")
            return experiments::verify(c);
        throw ConfigError("unknown experiment '" + name + "'");
    }
}
