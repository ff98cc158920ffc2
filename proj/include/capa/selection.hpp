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
#include "capa/parallel.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace capa
{
    // Nearest-neighbour placement: the feasible center closest to the user's projection.
    inline ArrayPoint optimal_center_rect(const UserGeometry &g, const ArrayFrame &frame, double Ax, double Az)
    {
        const auto b = feasible_center_bounds(frame, Ax, Az);
        const ArrayPoint p = projection_onto_array(g);
        return {clamp_to_interval(p.x, b.x.lo, b.x.hi), clamp_to_interval(p.z, b.z.lo, b.z.hi)};
    }

    inline double optimal_center_linear(const UserGeometry &g, double Lx, double Ax)
    {
        if (!(Ax > 0.0) || !(Lx > 0.0))
            throw DomainError("optimal_center_linear: lengths must be positive");
        if (Ax > Lx)
            throw ApertureTooLarge("optimal_center_linear: interval longer than the array");
        const double h = 0.5 * (Lx - Ax);
        return clamp_to_interval(g.r() * g.Phi(), -h, h);
    }

    // Candidate apertures for discrete selection, all inside one frame
    struct SegmentSet
    {
        ArrayFrame frame;
        std::vector<RectAperture> segments;
        std::vector<std::string> labels;
        std::vector<ArrayPoint> nominal_centers; // before any clipping into the frame

        std::size_t size() const { return segments.size(); }

        // Keeps the listed segments, in the given order
        SegmentSet subset(const std::vector<std::size_t> &indices) const
        {
            SegmentSet out{frame, {}, {}, {}};
            for (auto i : indices)
            {
                out.segments.push_back(segments.at(i));
                out.labels.push_back(labels.at(i));
                out.nominal_centers.push_back(nominal_centers.at(i));
            }
            return out;
        }
    };

    namespace scheme
    {
        // Four disjoint quadrants of size Lx/2 x Lz/2
        struct Quadrants
        {
        };

        // Ax x Az squares at the origin and near the four corners
        struct FivePoint
        {
            double Ax, Az;
        };

        // m x n uniform tiling (m along x, n along z)
        struct Grid
        {
            int m, n;
        };
    }

    using SegmentationScheme = std::variant<scheme::Quadrants, scheme::FivePoint, scheme::Grid>;

    inline SegmentSet make_segments(const ArrayFrame &frame, const SegmentationScheme &s)
    {
        SegmentSet out{frame, {}, {}, {}};
        auto add = [&](const RectAperture &r, std::string label, ArrayPoint nominal) {
            if (!r.fits(frame))
                throw DomainError("make_segments: segment '" + label + "' does not fit the frame");
            out.segments.push_back(r);
            out.labels.push_back(std::move(label));
            out.nominal_centers.push_back(nominal);
        };

        if (std::holds_alternative<scheme::Quadrants>(s))
        {
            const double qx = 0.25 * frame.Lx, qz = 0.25 * frame.Lz;
            const double ax = 0.5 * frame.Lx, az = 0.5 * frame.Lz;
            add({qx, qz, ax, az}, "q1", {qx, qz});
            add({-qx, qz, ax, az}, "q2", {-qx, qz});
            add({-qx, -qz, ax, az}, "q3", {-qx, -qz});
            add({qx, -qz, ax, az}, "q4", {qx, -qz});
        }
        else if (const auto *fp = std::get_if<scheme::FivePoint>(&s))
        {
            // Nominal corner centers sit on the frame boundary; clip them into the feasible set
            const auto b = feasible_center_bounds(frame, fp->Ax, fp->Az);
            const double hx = 0.5 * frame.Lx, hz = 0.5 * frame.Lz;
            const ArrayPoint nominal[5] = {{0.0, 0.0}, {hx, hz}, {-hx, hz}, {-hx, -hz}, {hx, -hz}};
            const char *names[5] = {"center", "+x+z", "-x+z", "-x-z", "+x-z"};
            for (int i = 0; i < 5; ++i)
            {
                const double cx = clamp_to_interval(nominal[i].x, b.x.lo, b.x.hi);
                const double cz = clamp_to_interval(nominal[i].z, b.z.lo, b.z.hi);
                add({cx, cz, fp->Ax, fp->Az}, names[i], nominal[i]);
            }
        }
        else
        {
            const auto &gr = std::get<scheme::Grid>(s);
            if (gr.m < 1 || gr.n < 1)
                throw DomainError("make_segments: grid dimensions must be >= 1");
            const double ax = frame.Lx / gr.m, az = frame.Lz / gr.n;
            for (int j = 0; j < gr.n; ++j)
                for (int i = 0; i < gr.m; ++i)
                {
                    const double cx = -0.5 * frame.Lx + (i + 0.5) * ax;
                    const double cz = -0.5 * frame.Lz + (j + 0.5) * az;
                    add({cx, cz, ax, az}, "g" + std::to_string(i) + "_" + std::to_string(j), {cx, cz});
                }
        }
        return out;
    }

    struct SegmentChoice
    {
        std::size_t index;
        double value;
    };

    // argmax over the candidate set; ties go to the lowest index
    template <typename Gain>
    SegmentChoice select_best_segment(const SegmentSet &set, Gain &&gain)
    {
        if (set.segments.empty())
            throw DomainError("select_best_segment: empty candidate set");
        SegmentChoice best{0, -std::numeric_limits<double>::infinity()};
        for (std::size_t k = 0; k < set.segments.size(); ++k)
        {
            const double v = gain(set.segments[k]);
            if (!std::isfinite(v))
                throw NumericalError("select_best_segment: non-finite gain for segment " + set.labels[k]);
            if (v > best.value)
                best = {k, v};
        }
        return best;
    }

    // i-th of m equally spaced points on [lo, hi]; endpoints and the midpoint are exact
    inline double grid_coordinate(const Interval &iv, int i, int m)
    {
        if (m == 1)
            return 0.5 * (iv.lo + iv.hi);
        if (i == m - 1)
            return iv.hi;
        return iv.lo + iv.width() * (static_cast<double>(i) / static_cast<double>(m - 1));
    }

    struct GridSearchResult
    {
        double rx, rz, value;
        int ix, iz;
    };

    // Exhaustive search of an m x n grid over the feasible centers of an Ax x Az rectangle.
    // Rows are scanned in order of increasing z, x fastest; the first maximum wins.
    template <typename Gain>
    GridSearchResult brute_force_center_search(const ArrayFrame &frame, double Ax, double Az, Gain &&gain,
                                               int m, int n, unsigned threads = 1)
    {
        if (m < 2 || n < 2)
            throw DomainError("brute_force_center_search: grid must be at least 2 x 2");
        const auto b = feasible_center_bounds(frame, Ax, Az);

        std::vector<GridSearchResult> row_best(n);
        for_each_block(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
            const int j = static_cast<int>(row);
            const double z = grid_coordinate(b.z, j, n);
            GridSearchResult best{0.0, z, -std::numeric_limits<double>::infinity(), -1, j};
            for (int i = 0; i < m; ++i)
            {
                const double x = grid_coordinate(b.x, i, m);
                double v;
                try
                {
                    v = gain(RectAperture(x, z, Ax, Az));
                }
                catch (const NumericalError &e)
                {
                    std::ostringstream os;
                    os.precision(17);
                    os << e.what() << " [grid point (" << x << ", " << z << ")]";
                    throw NumericalError(os.str());
                }
                if (!std::isfinite(v))
                {
                    std::ostringstream os;
                    os.precision(17);
                    os << "brute_force_center_search: non-finite gain at (" << x << ", " << z << ")";
                    throw NumericalError(os.str());
                }
                if (v > best.value)
                    best = {x, z, v, i, j};
            }
            row_best[row] = best;
        });

        GridSearchResult best = row_best[0];
        for (int j = 1; j < n; ++j)
            if (row_best[j].value > best.value)
                best = row_best[j];
        return best;
    }
}
