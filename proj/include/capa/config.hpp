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
#include "capa/nlos.hpp"
#include "capa/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace capa
{
    // Every tunable of the experiment runner. Defaults reproduce the reference scenario.
    struct ExperimentConfig
    {
        // Physical scenario
        double lambda = 0.0107;
        double r = 10.0;
        double theta = std::numbers::pi / 3.0;
        double phi = std::numbers::pi / 6.0;
        double gamma_bar_db = 40.0;
        double Lx = 2.0, Lz = 2.0;
        double Ax = 1.0, Az = 1.0;

        // Numerics and Monte Carlo
        int quad_order = 30;
        std::uint64_t trials = 1000000;     // outage Monte-Carlo trials
        std::uint64_t realizations = 1000;  // reflection draws averaged in the NLoS SNR sweep
        std::uint64_t seed = 1;
        unsigned threads = 1;

        // Scatterers
        int scatterer_count = 4;
        ScattererBox box;

        // Selection
        double gamma_th_db = -30.0;
        std::string segmentation = "five_point";
        int search_grid = 5;

        // Sweeps
        double area_min = 0.04, area_max = 4.0;
        int area_points = 40;
        double tau_min = 1e-3, tau_max = 1e4;
        int tau_points = 40;
        int fraction_points = 40;
        std::vector<double> fig2b_ranges = {2.0, 5.0, 10.0, 20.0};
        std::vector<int> fig4b_segments = {1, 2, 3, 4};
        double gamma_bar_db_min = 60.0, gamma_bar_db_max = 160.0;
        int gamma_bar_db_points = 51;

        std::string output = "results";
    };

    namespace detail
    {
        inline std::string_view trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        }

        inline std::string format_double(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        template <typename T>
        T parse_number(std::string_view text, const std::string &key, int line)
        {
            T v{};
            const char *b = text.data(), *e = text.data() + text.size();
            const auto res = std::from_chars(b, e, v);
            if (res.ec != std::errc() || res.ptr != e)
                throw ConfigError("cannot parse value '" + std::string(text) + "' for key '" + key + "'", line);
            if constexpr (std::is_floating_point_v<T>)
                if (!std::isfinite(v))
                    throw ConfigError("non-finite value for key '" + key + "'", line);
            return v;
        }

        template <typename T>
        std::vector<T> parse_list(std::string_view text, const std::string &key, int line)
        {
            std::vector<T> out;
            while (true)
            {
                const auto comma = text.find(',');
                const auto item = trim(text.substr(0, comma));
                if (item.empty())
                    throw ConfigError("empty list entry for key '" + key + "'", line);
                out.push_back(parse_number<T>(item, key, line));
                if (comma == std::string_view::npos)
                    break;
                text = text.substr(comma + 1);
            }
            return out;
        }

        template <typename T>
        std::string join(const std::vector<T> &v)
        {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                if (i)
                    s += ",";
                if constexpr (std::is_floating_point_v<T>)
                    s += format_double(v[i]);
                else
                    s += std::to_string(v[i]);
            }
            return s;
        }

        struct ConfigKey
        {
            std::function<void(ExperimentConfig &, std::string_view, const std::string &, int)> set;
            std::function<std::string(const ExperimentConfig &)> get;
        };

        template <typename T>
        ConfigKey number_key(T ExperimentConfig::*field)
        {
            return {[field](ExperimentConfig &c, std::string_view v, const std::string &k, int line) {
                        c.*field = parse_number<T>(v, k, line);
                    },
                    [field](const ExperimentConfig &c) {
                        if constexpr (std::is_floating_point_v<T>)
                            return format_double(c.*field);
                        else
                            return std::to_string(c.*field);
                    }};
        }

        inline ConfigKey box_key(Interval ScattererBox::*axis, bool upper)
        {
            return {[axis, upper](ExperimentConfig &c, std::string_view v, const std::string &k, int line) {
                        double &d = upper ? (c.box.*axis).hi : (c.box.*axis).lo;
                        d = parse_number<double>(v, k, line);
                    },
                    [axis, upper](const ExperimentConfig &c) {
                        return format_double(upper ? (c.box.*axis).hi : (c.box.*axis).lo);
                    }};
        }

        // Key table in echo order
        inline const std::vector<std::pair<std::string, ConfigKey>> &config_keys()
        {
            using C = ExperimentConfig;
            static const std::vector<std::pair<std::string, ConfigKey>> keys = {
                {"lambda", number_key(&C::lambda)},
                {"r", number_key(&C::r)},
                {"theta", number_key(&C::theta)},
                {"phi", number_key(&C::phi)},
                {"gamma_bar_db", number_key(&C::gamma_bar_db)},
                {"Lx", number_key(&C::Lx)},
                {"Lz", number_key(&C::Lz)},
                {"Ax", number_key(&C::Ax)},
                {"Az", number_key(&C::Az)},
                {"quad_order", number_key(&C::quad_order)},
                {"trials", number_key(&C::trials)},
                {"realizations", number_key(&C::realizations)},
                {"seed", number_key(&C::seed)},
                {"threads", number_key(&C::threads)},
                {"scatterer_count", number_key(&C::scatterer_count)},
                {"scatterer_x_min", box_key(&ScattererBox::x, false)},
                {"scatterer_x_max", box_key(&ScattererBox::x, true)},
                {"scatterer_y_min", box_key(&ScattererBox::y, false)},
                {"scatterer_y_max", box_key(&ScattererBox::y, true)},
                {"scatterer_z_min", box_key(&ScattererBox::z, false)},
                {"scatterer_z_max", box_key(&ScattererBox::z, true)},
                {"gamma_th_db", number_key(&C::gamma_th_db)},
                {"segmentation",
                 {[](C &c, std::string_view v, const std::string &, int) { c.segmentation = std::string(v); },
                  [](const C &c) { return c.segmentation; }}},
                {"search_grid", number_key(&C::search_grid)},
                {"area_min", number_key(&C::area_min)},
                {"area_max", number_key(&C::area_max)},
                {"area_points", number_key(&C::area_points)},
                {"tau_min", number_key(&C::tau_min)},
                {"tau_max", number_key(&C::tau_max)},
                {"tau_points", number_key(&C::tau_points)},
                {"fraction_points", number_key(&C::fraction_points)},
                {"fig2b_ranges",
                 {[](C &c, std::string_view v, const std::string &k, int line) {
                      c.fig2b_ranges = parse_list<double>(v, k, line);
                  },
                  [](const C &c) { return join(c.fig2b_ranges); }}},
                {"fig4b_segments",
                 {[](C &c, std::string_view v, const std::string &k, int line) {
                      c.fig4b_segments = parse_list<int>(v, k, line);
                  },
                  [](const C &c) { return join(c.fig4b_segments); }}},
                {"gamma_bar_db_min", number_key(&C::gamma_bar_db_min)},
                {"gamma_bar_db_max", number_key(&C::gamma_bar_db_max)},
                {"gamma_bar_db_points", number_key(&C::gamma_bar_db_points)},
                {"output",
                 {[](C &c, std::string_view v, const std::string &, int) { c.output = std::string(v); },
                  [](const C &c) { return c.output; }}},
            };
            return keys;
        }
    }

    // "five_point", "quadrants" or "grid:MxN"
    inline SegmentationScheme parse_segmentation(const std::string &name, double Ax, double Az)
    {
        if (name == "five_point")
            return scheme::FivePoint{Ax, Az};
        if (name == "quadrants")
            return scheme::Quadrants{};
        if (name.rfind("grid:", 0) == 0)
        {
            const auto dims = std::string_view(name).substr(5);
            const auto x = dims.find('x');
            if (x != std::string_view::npos)
            {
                int m = 0, n = 0;
                const auto a = std::from_chars(dims.data(), dims.data() + x, m);
                const auto b = std::from_chars(dims.data() + x + 1, dims.data() + dims.size(), n);
                if (a.ec == std::errc() && a.ptr == dims.data() + x && b.ec == std::errc() &&
                    b.ptr == dims.data() + dims.size() && m >= 1 && n >= 1)
                    return scheme::Grid{m, n};
            }
        }
        throw ConfigError("unknown segmentation '" + name + "' (expected five_point, quadrants or grid:MxN)");
    }

    // Domain checks that need the whole config; errors carry no line number
    inline void validate_config(const ExperimentConfig &c)
    {
        auto need = [](bool ok, const std::string &what) {
            if (!ok)
                throw ConfigError(what);
        };
        need(c.lambda > 0.0 && std::isfinite(c.lambda), "lambda must be positive");
        need(c.r > 0.0 && std::isfinite(c.r), "r must be positive");
        need(c.theta >= 0.0 && c.theta <= std::numbers::pi, "theta must lie in [0, pi]");
        need(c.phi >= 0.0 && c.phi <= std::numbers::pi, "phi must lie in [0, pi]");
        need(std::sin(c.phi) * std::sin(c.theta) > UserGeometry::min_psi,
             "phi and theta must place the user in front of the array");
        need(std::isfinite(c.gamma_bar_db), "gamma_bar_db must be finite");
        need(c.Lx > 0.0 && c.Lz > 0.0, "Lx and Lz must be positive");
        need(c.Ax > 0.0 && c.Az > 0.0, "Ax and Az must be positive");
        need(c.Ax <= c.Lx && c.Az <= c.Lz, "Ax x Az must fit inside Lx x Lz");
        need(c.quad_order >= 1, "quad_order must be >= 1");
        need(c.trials >= 1, "trials must be >= 1");
        need(c.realizations >= 1, "realizations must be >= 1");
        need(c.threads >= 1, "threads must be >= 1");
        need(c.scatterer_count >= 0, "scatterer_count must be >= 0");
        need(c.box.y.lo > 0.0, "scatterer_y_min must be positive");
        need(c.box.x.lo <= c.box.x.hi && c.box.y.lo <= c.box.y.hi && c.box.z.lo <= c.box.z.hi,
             "scatterer box bounds must satisfy min <= max");
        need(std::isfinite(c.gamma_th_db), "gamma_th_db must be finite");
        parse_segmentation(c.segmentation, c.Ax, c.Az);
        need(c.search_grid >= 2, "search_grid must be >= 2");
        need(c.area_min > 0.0 && c.area_min <= c.area_max, "area range must satisfy 0 < area_min <= area_max");
        need(c.area_points >= 1, "area_points must be >= 1");
        need(c.tau_min > 0.0 && c.tau_min <= c.tau_max, "tau range must satisfy 0 < tau_min <= tau_max");
        need(c.tau_points >= 1, "tau_points must be >= 1");
        need(c.fraction_points >= 1, "fraction_points must be >= 1");
        need(!c.fig2b_ranges.empty(), "fig2b_ranges must not be empty");
        for (double r : c.fig2b_ranges)
            need(r > 0.0 && std::isfinite(r), "fig2b_ranges entries must be positive");
        need(!c.fig4b_segments.empty(), "fig4b_segments must not be empty");
        for (int k : c.fig4b_segments)
            need(k >= 1, "fig4b_segments entries must be >= 1");
        need(c.gamma_bar_db_min <= c.gamma_bar_db_max, "gamma_bar_db_min must not exceed gamma_bar_db_max");
        need(c.gamma_bar_db_points >= 1, "gamma_bar_db_points must be >= 1");
        need(!c.output.empty(), "output must not be empty");
    }

    // One `key = value` per line; `#` starts a comment. Missing keys keep their defaults.
    inline ExperimentConfig parse_config(std::string_view text)
    {
        ExperimentConfig c;
        const auto &keys = detail::config_keys();
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size())
        {
            const auto nl = text.find('\n', pos);
            std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;

            if (const auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("expected 'key = value'", line_no);
            const std::string key(detail::trim(line.substr(0, eq)));
            const auto value = detail::trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError("missing key before '='", line_no);
            if (value.empty())
                throw ConfigError("missing value for key '" + key + "'", line_no);

            const auto it = std::find_if(keys.begin(), keys.end(), [&](const auto &kv) { return kv.first == key; });
            if (it == keys.end())
                throw ConfigError("unknown key '" + key + "'", line_no);
            it->second.set(c, value, key, line_no);
        }
        validate_config(c);
        return c;
    }

    // `key = value` lines in a fixed order. Execution settings (threads, output) are left out so
    // results do not depend on where or how parallel a run was.
    inline std::vector<std::string> echo_config(const ExperimentConfig &c)
    {
        std::vector<std::string> out;
        for (const auto &[k, v] : detail::config_keys())
            if (k != "threads" && k != "output")
                out.push_back(k + " = " + v.get(c));
        return out;
    }
}
