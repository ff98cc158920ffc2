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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: capa_acceptance <capa binary> <config> <run dir> [criterion ids, e.g. 8,10]

#include "capa/capa.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace capa;
namespace fs = std::filesystem;
using capa::testing::rel_err;

namespace
{
    const double pi = std::numbers::pi;
    const ChannelParams unit = ChannelParams::from_gamma_bar(0.0107, 1.0);

    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    std::string fmt(const char *f, double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return buf;
    }

    // Random user with Psi >= 0.1 and an aperture inside the 2 x 2 frame
    std::pair<UserGeometry, RectAperture> random_case(RandomStream &rs, const ArrayFrame &frame)
    {
        return experiments::random_los_case(rs, frame);
    }

    Outcome closed_form_vs_cubature()
    {
        RandomStream rs(101, stream_domain::fixtures);
        const ArrayFrame frame(2, 2);
        double worst = 0;
        for (int i = 0; i < 100; ++i)
        {
            const auto [g, rect] = random_case(rs, frame);
            const double a = snr_rect_closed_form(g, rect, unit).snr;
            const double b = snr_rect_numeric(g, rect, unit).snr;
            worst = std::max(worst, std::abs(a - b) / a);
        }
        return {worst <= 1e-6, "max rel err " + fmt("%.3e", worst) + " (tol 1e-6, 100 cases)"};
    }

    Outcome nearest_neighbour_optimality()
    {
        RandomStream rs(102, stream_domain::fixtures);
        const ArrayFrame frame(2, 2);
        double excess = 0, step_ratio = 0;
        for (int i = 0; i < 50; ++i)
        {
            const auto [g, rect] = random_case(rs, frame);
            const auto c = optimal_center_rect(g, frame, rect.Ax, rect.Az);
            auto gain = [&](const RectAperture &q) { return snr_rect_closed_form(g, q, unit).snr; };
            const double ref = gain(RectAperture(c.x, c.z, rect.Ax, rect.Az));
            const auto res = brute_force_center_search(frame, rect.Ax, rect.Az, gain, 201, 201);
            const auto b = feasible_center_bounds(frame, rect.Ax, rect.Az);
            const double sx = b.x.width() / 200, sz = b.z.width() / 200;
            excess = std::max(excess, res.value - ref);
            if (sx > 0)
                step_ratio = std::max(step_ratio, std::abs(res.rx - c.x) / sx);
            if (sz > 0)
                step_ratio = std::max(step_ratio, std::abs(res.rz - c.z) / sz);
        }
        return {excess <= 1e-12 && step_ratio <= 1.0 + 1e-9,
                "max distance " + fmt("%.3f", step_ratio) + " grid steps (tol 1), max gain excess " +
                    fmt("%.3e", excess) + " (tol 1e-12)"};
    }

    Outcome aligned_reduction()
    {
        RandomStream rs(103, stream_domain::fixtures);
        const ArrayFrame frame(2, 2);
        double worst = 0;
        for (int i = 0; i < 100; ++i)
        {
            const auto [g, rect] = random_case(rs, frame);
            const auto p = projection_onto_array(g);
            const double a = snr_rect_closed_form(g, RectAperture(p.x, p.z, rect.Ax, rect.Az), unit).snr;
            const double b = snr_aligned_rect(g, rect.Ax, rect.Az, unit);
            worst = std::max(worst, std::abs(a - b) / b);
        }
        return {worst <= 1e-12, "max rel err " + fmt("%.3e", worst) + " (tol 1e-12)"};
    }

    Outcome shape_asymptotics()
    {
        const double sq = snr_aligned_square(1e4, unit), ci = snr_aligned_circle(1e4, unit);
        const double ratio = (0.5 - ci) / (0.5 - sq);
        const double sq0 = snr_aligned_square(1e-3, unit), ci0 = snr_aligned_circle(1e-3, unit);
        const double far = std::abs(ci0 - sq0) / sq0;
        return {ratio >= 0.96 && ratio <= 1.0 && ci > sq && far <= 1e-2,
                "deficit ratio " + fmt("%.6f", ratio) + " in [0.96, 1], circle - square " + fmt("%.3e", ci - sq) +
                    ", far-field gap " + fmt("%.3e", far) + " (tol 1e-2)"};
    }

    Outcome pareto_fraction()
    {
        const ArrayFrame frame(2, 2);
        const double near = aperture_fraction_for_target(UserGeometry(2.0, pi / 6, pi / 3), frame, unit, 0.6);
        // Far field: tau of the full aperture at most 1e-3
        const UserGeometry far_user(100.0, pi / 6, pi / 3);
        const double tau = normalized_area(frame.area(), far_user);
        double worst = 0;
        bool inside = tau <= 1e-3;
        for (double beta : {0.2, 0.5, 0.8})
        {
            const double f = aperture_fraction_for_target(far_user, frame, unit, beta);
            inside = inside && f >= beta - 0.01 && f <= beta;
            worst = std::max(worst, beta - f);
        }
        return {near < 0.4 && inside, "fraction(0.6) at r = 2 m: " + fmt("%.4f", near) + " (< 0.4); far field tau " +
                                          fmt("%.2e", tau) + ", largest beta - fraction " + fmt("%.2e", worst) +
                                          " (in [0, 0.01])"};
    }

    ScattererSet reference_fixture(std::uint64_t seed, const ChannelParams &params)
    {
        auto sc = capa::testing::reference_scatterers(4, seed, params);
        RandomStream rs(seed, stream_domain::reflections);
        return sc.with_realization(draw_reflections(sc.variances(), rs));
    }

    Outcome nlos_structured_vs_direct()
    {
        const auto params = ChannelParams::from_gamma_bar(0.0107, 1e4);
        RandomStream rs(106, stream_domain::fixtures);
        const ArrayFrame frame(2, 2);
        double worst = 0;
        for (int i = 0; i < 20; ++i)
        {
            const auto sc = reference_fixture(600 + i, params);
            const auto [g, rect0] = random_case(rs, frame);
            // Sides up to 1 m keep the direct cubature affordable
            const double ax = rs.uniform(0.1, 1.0), az = rs.uniform(0.1, 1.0);
            const auto b = feasible_center_bounds(frame, ax, az);
            const RectAperture rect(rs.uniform(b.x.lo, b.x.hi), rs.uniform(b.z.lo, b.z.hi), ax, az);
            const double a = nlos_snr(rect, g, sc, params, GlOptions{40, 0, 0}).total;
            const double d = nlos_snr_numeric(rect, g, sc, params, 1e-8);
            worst = std::max(worst, std::abs(a - d) / d);
        }
        return {worst <= 1e-4, "max rel err " + fmt("%.3e", worst) + " (tol 1e-4, 20 fixtures)"};
    }

    Outcome diagonal_identity()
    {
        const auto params = ChannelParams::from_gamma_bar(0.0107, 1e4);
        RandomStream rs(107, stream_domain::fixtures);
        const ArrayFrame frame(2, 2);
        double worst = 0;
        for (int i = 0; i < 20; ++i)
        {
            const auto sc = reference_fixture(700 + i, params);
            const auto rect = random_case(rs, frame).second;
            for (const auto &s : sc.positions())
            {
                const double lhs = std::sqrt(s.y * s.y) * rho_cross(rect, s, s, params, GlOptions{40, 0, 0}).real();
                worst = std::max(worst, rel_err(lhs, a_los_scatterer(rect, s)));
            }
        }
        return {worst <= 1e-6, "max rel err " + fmt("%.3e", worst) + " (tol 1e-6, 20 fixtures x 4 scatterers)"};
    }

    Outcome correlation_fidelity()
    {
        const auto params = ChannelParams::from_gamma_bar(0.0107, 1.0);
        const auto g = capa::testing::reference_user();
        const ArrayFrame frame(2, 2);
        const std::size_t draws = 100000;
        double worst_diag = 0, worst_cov = 0;
        bool rank_ok = true;
        struct Fixture
        {
            SegmentationScheme scheme;
            std::uint64_t seed;
        };
        const std::vector<Fixture> fixtures = {{scheme::FivePoint{0.5, 0.5}, 801},
                                               {scheme::Quadrants{}, 802},
                                               {scheme::Grid{3, 2}, 803}};
        for (const auto &f : fixtures)
        {
            const auto sc = capa::testing::reference_scatterers(4, f.seed, params);
            const auto segs = make_segments(frame, f.scheme);
            const auto R = correlation_matrix(segs, sc, g, params);
            const std::size_t K = segs.size(), N = sc.size();
            rank_ok = rank_ok && R.rank() <= std::min(K, N);

            // Independent path: adaptive segment integrals of each wave, reflections drawn per trial
            const Vec3 su = g.position();
            std::vector<std::vector<cdouble>> coef(K, std::vector<cdouble>(N));
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t n = 0; n < N; ++n)
                    coef[k][n] = free_space_green(sc.positions()[n], su, params) *
                                 capa::testing::segment_wave_integral(segs.segments[k], sc.positions()[n], params, 1e-7);
            CMatrix C(K, K);
            std::vector<cdouble> h(K);
            for (std::size_t t = 0; t < draws; ++t)
            {
                RandomStream rs(f.seed, stream_domain::trials + t);
                const auto alpha = draw_reflections(sc.variances(), rs);
                for (std::size_t k = 0; k < K; ++k)
                {
                    h[k] = 0.0;
                    for (std::size_t n = 0; n < N; ++n)
                        h[k] += alpha[n] * coef[k][n];
                }
                for (std::size_t i = 0; i < K; ++i)
                    for (std::size_t j = 0; j < K; ++j)
                        C(i, j) += h[i] * std::conj(h[j]);
            }
            CMatrix diff(K, K);
            for (std::size_t i = 0; i < K; ++i)
            {
                for (std::size_t j = 0; j < K; ++j)
                {
                    C(i, j) /= static_cast<double>(draws);
                    diff(i, j) = C(i, j) - R.matrix()(i, j);
                }
                worst_diag = std::max(worst_diag, rel_err(C(i, i).real(), R.matrix()(i, i).real()));
            }
            worst_cov = std::max(worst_cov, diff.frobenius_norm() / R.matrix().frobenius_norm());
        }
        return {worst_diag <= 0.02 && worst_cov <= 0.05 && rank_ok,
                "max diagonal rel err " + fmt("%.4f", worst_diag) + " (tol 0.02), covariance Frobenius rel err " +
                    fmt("%.4f", worst_cov) + " (tol 0.05), rank bound " + (rank_ok ? "holds" : "violated")};
    }

    Outcome diversity_order()
    {
        // Quadrant segments with one scatterer in front of each, so R has full rank K and moderate conditioning.
        const auto params = ChannelParams::from_gamma_bar(0.0107, 1.0);
        const auto g = capa::testing::reference_user();
        const std::vector<Vec3> pos = {{0.5, 2.0, 0.5}, {-0.5, 2.5, 0.5}, {-0.5, 3.0, -0.5}, {0.5, 3.5, -0.5}};
        const auto quads = make_segments(ArrayFrame(2, 2), scheme::Quadrants{});
        const double gamma_th = from_db(-30.0);
        std::vector<double> grid;
        for (int d = 50; d <= 70; ++d)
            grid.push_back(d);

        bool pass = true;
        std::string detail;
        for (std::size_t r = 1; r <= 3; ++r)
        {
            std::vector<std::size_t> idx(r);
            for (std::size_t k = 0; k < r; ++k)
                idx[k] = k;
            const auto segs = quads.subset(idx);
            const double v0 = reference_reflection_variance(params);
            const auto R0 = correlation_matrix(segs, ScattererSet(pos, std::vector<double>(4, v0)), g, params);
            // Scale the reflection variance so gamma_th / lambda_min is 0.1 at 50 dB
            const double scale = 1e-8 / (0.1 * R0.eigenvalues().back());
            const auto R = correlation_matrix(segs, ScattererSet(pos, std::vector<double>(4, v0 * scale)), g, params);
            const auto curve = outage_curve_mc(R, grid, gamma_th, 10000000, 7);
            const double mc = fit_diversity_order(curve, 50, 70, 10);
            const double asym = fit_diversity_order(curve, 50, 70, 1, CurveColumn::asymptote);
            const bool ok = R.rank() == r && std::abs(mc - double(r)) <= 0.3 && std::abs(mc - asym) <= 0.3;
            pass = pass && ok;
            detail += (r > 1 ? "; " : "") + std::string("rank ") + std::to_string(R.rank()) + ": slope " +
                      fmt("%.3f", -mc) + ", asymptote " + fmt("%.3f", -asym);
        }
        return {pass, detail + " (tol 0.3)"};
    }

    Outcome matched_filter()
    {
        RandomStream rs(110, stream_domain::fixtures);
        const ArrayFrame frame(2, 2);
        double worst_var = 0, worst_snr = 0;
        for (int i = 0; i < 5; ++i)
        {
            const auto [g, rect] = random_case(rs, frame);
            // |mean|^2 / variance has relative spread 2 / sqrt(trials * SNR), so each fixture
            // runs at a 10 dB target SNR rather than at whatever a fixed gamma_bar gives
            const double per_unit = snr_rect_closed_form(g, rect, unit).snr;
            const auto params = ChannelParams::from_gamma_bar(0.0107, 10.0 / per_unit);
            const auto est = simulate_matched_filter_mc(rect, g, params, 64, 64, 100000, 1000 + i);
            const double snr = snr_rect_closed_form(g, rect, params).snr;
            const double js = params.J_mag() * params.source_aperture();
            // sigma^2 * integral of |h|^2, with the integral taken from the closed form
            const double target = params.sigma2() * snr * params.sigma2() / (js * js);
            worst_var = std::max(worst_var, rel_err(est.noise_variance, target));
            worst_snr = std::max(worst_snr, rel_err(est.snr, snr));
        }
        return {worst_var <= 0.02 && worst_snr <= 0.05, "max noise variance rel err " + fmt("%.4f", worst_var) +
                                                            " (tol 0.02), max SNR rel err " + fmt("%.4f", worst_snr) +
                                                            " (tol 0.05), 10 dB target SNR"};
    }

    struct Csv
    {
        std::vector<std::string> columns;
        std::vector<std::vector<double>> rows;
    };

    Csv read_csv(const fs::path &p)
    {
        std::ifstream in(p);
        Csv out;
        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty() || line[0] == '#')
                continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                cells.push_back(cell);
            if (out.columns.empty())
                out.columns = cells;
            else
            {
                std::vector<double> v;
                for (const auto &c : cells)
                    v.push_back(std::stod(c));
                out.rows.push_back(v);
            }
        }
        return out;
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    int run_cli(const std::string &bin, const std::string &exp, const std::string &cfg, const fs::path &out,
                int threads)
    {
        const std::string cmd = "\"" + bin + "\" " + exp + " --config \"" + cfg + "\" --out \"" + out.string() +
                                "\" --threads " + std::to_string(threads) + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    }

    Outcome ordering(const fs::path &dir)
    {
        std::size_t rows = 0, bad = 0;
        for (const char *exp : {"fig2a", "fig4a"})
        {
            const auto csv = read_csv(dir / (std::string(exp) + ".csv"));
            if (csv.columns.size() != 4 || csv.rows.empty())
                return {false, std::string(exp) + ".csv missing or malformed"};
            for (const auto &row : csv.rows)
            {
                ++rows;
                // Segment values come from the same closed form as the optimum, so allow rounding in dB
                if (!(row[1] >= row[2] - 1e-12 && row[2] >= row[3]))
                    ++bad;
            }
        }
        return {rows > 0 && bad == 0, std::to_string(bad) + " of " + std::to_string(rows) + " rows out of order"};
    }

    Outcome determinism(const std::string &bin, const std::string &cfg, const fs::path &root)
    {
        std::size_t mismatches = 0, failures = 0;
        for (const auto &exp : experiment_names())
        {
            const int threads[3] = {1, 1, 3};
            std::string first;
            for (int i = 0; i < 3; ++i)
            {
                const fs::path dir = root / ("run" + std::to_string(i));
                if (run_cli(bin, exp, cfg, dir, threads[i]) != 0)
                {
                    ++failures;
                    continue;
                }
                const auto text = slurp(dir / (exp + ".csv"));
                if (i == 0)
                    first = text;
                else if (text != first)
                    ++mismatches;
            }
        }
        return {failures == 0 && mismatches == 0,
                std::to_string(experiment_names().size()) + " experiments x 3 runs (threads 1, 1, 3): " +
                    std::to_string(mismatches) + " mismatches, " + std::to_string(failures) + " failed runs"};
    }
}

int main(int argc, char **argv)
{
    if (argc != 4 && argc != 5)
    {
        std::fprintf(stderr, "usage: %s <capa binary> <config> <run dir> [criterion ids]\n", argv[0]);
        return 2;
    }
    std::vector<bool> selected(13, argc == 4);
    if (argc == 5)
    {
        std::stringstream ids(argv[4]);
        std::string id;
        while (std::getline(ids, id, ','))
            selected.at(std::stoi(id)) = true;
    }
    const std::string bin = argv[1], cfg = argv[2];
    const fs::path root = argv[3];
    fs::remove_all(root);
    fs::create_directories(root);

    int failed = 0, ran = 0;
    auto report = [&](int id, const char *name, const std::function<Outcome()> &f) {
        if (!selected[id])
            return;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = f();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %-34s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    };

    report(1, "closed_form_vs_cubature", closed_form_vs_cubature);
    report(2, "nearest_neighbour_optimality", nearest_neighbour_optimality);
    report(3, "aligned_reduction", aligned_reduction);
    report(4, "shape_asymptotics", shape_asymptotics);
    report(5, "pareto_fraction", pareto_fraction);
    report(6, "nlos_structured_vs_direct", nlos_structured_vs_direct);
    report(7, "scatterer_diagonal_identity", diagonal_identity);
    report(8, "correlation_matrix_fidelity", correlation_fidelity);
    report(9, "diversity_order", diversity_order);
    report(10, "matched_filter_noise", matched_filter);

    // 12 produces the CSVs that 11 inspects
    Outcome det;
    const auto t0 = std::chrono::steady_clock::now();
    if (selected[11] || selected[12])
    {
        try
        {
            det = determinism(bin, cfg, root);
        }
        catch (const std::exception &e)
        {
            det = {false, std::string("exception: ") + e.what()};
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(11, "ordering_invariants", [&] { return ordering(root / "run0"); });
    report(12, "determinism", [&] {
        det.detail += " [" + fmt("%.1f", secs) + " s for all runs]";
        return det;
    });

    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
