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

// Coordinate conventions: the array lies in the x-z plane, centered at the origin,
// with its normal along +y. Lengths are in meters and angles in radians throughout.

#include "capa/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace capa
{
    struct Vec3
    {
        double x = 0.0, y = 0.0, z = 0.0;

        friend Vec3 operator-(const Vec3 &a, const Vec3 &b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
        double norm() const { return std::sqrt(x * x + y * y + z * z); }
    };

    // A point (x, 0, z) on the array plane
    struct ArrayPoint
    {
        double x = 0.0, z = 0.0;

        Vec3 position() const { return {x, 0.0, z}; }
    };

    struct DirectionCosines
    {
        double Phi, Psi, Theta;
    };

    struct Interval
    {
        double lo, hi;

        double width() const { return hi - lo; }
        bool contains(double v) const { return v >= lo && v <= hi; }
    };

    struct CenterBounds
    {
        Interval x, z;
    };

    // Direction cosines of azimuth phi and elevation theta, both in [0, pi]
    inline DirectionCosines direction_cosines(double phi, double theta)
    {
        constexpr double pi = std::numbers::pi;
        if (!(phi >= 0.0 && phi <= pi) || !(theta >= 0.0 && theta <= pi))
            throw DomainError("direction_cosines: angles must lie in [0, pi]");
        return {std::cos(phi) * std::sin(theta), std::sin(phi) * std::sin(theta), std::cos(theta)};
    }

    // User location in spherical coordinates relative to the array center.
    // Only users strictly in front of the array (Psi > 0) are representable, since the
    // LoS formulas divide by Psi.
    class UserGeometry
    {
    public:
        // Psi at or below this value is treated as lying in the array plane
        static constexpr double min_psi = 1e-12;

        UserGeometry(double r, double phi, double theta)
            : r_(r), phi_(phi), theta_(theta)
        {
            if (!(r > 0.0) || !std::isfinite(r))
                throw DomainError("UserGeometry: range must be positive and finite");
            const auto dc = direction_cosines(phi, theta);
            if (!(dc.Psi > min_psi))
                throw DomainError("UserGeometry: user must be strictly in front of the array (Psi > 0)");
            cos_ = dc;
        }

        double r() const { return r_; }
        double phi() const { return phi_; }
        double theta() const { return theta_; }
        double Phi() const { return cos_.Phi; }
        double Psi() const { return cos_.Psi; }
        double Theta() const { return cos_.Theta; }
        DirectionCosines cosines() const { return cos_; }

        Vec3 position() const { return {r_ * cos_.Phi, r_ * cos_.Psi, r_ * cos_.Theta}; }

    private:
        double r_, phi_, theta_;
        DirectionCosines cos_;
    };

    // Full receive aperture [-Lx/2, Lx/2] x [-Lz/2, Lz/2]
    struct ArrayFrame
    {
        double Lx, Lz;

        ArrayFrame(double lx, double lz) : Lx(lx), Lz(lz)
        {
            if (!(lx > 0.0) || !(lz > 0.0))
                throw DomainError("ArrayFrame: dimensions must be positive");
        }

        double area() const { return Lx * Lz; }
    };

    // Activated rectangle of size Ax x Az centered at (rx, 0, rz)
    struct RectAperture
    {
        double rx, rz, Ax, Az;

        RectAperture(double cx, double cz, double ax, double az) : rx(cx), rz(cz), Ax(ax), Az(az)
        {
            if (!(ax > 0.0) || !(az > 0.0))
                throw DomainError("RectAperture: side lengths must be positive");
        }

        double area() const { return Ax * Az; }
        Interval x_range() const { return {rx - 0.5 * Ax, rx + 0.5 * Ax}; }
        Interval z_range() const { return {rz - 0.5 * Az, rz + 0.5 * Az}; }

        // Containment is checked against a frame on demand, so apertures can exist before a frame is chosen
        bool fits(const ArrayFrame &frame, double slack = 1e-12) const
        {
            return Ax <= frame.Lx + slack && Az <= frame.Lz + slack &&
                   std::abs(rx) <= 0.5 * (frame.Lx - Ax) + slack &&
                   std::abs(rz) <= 0.5 * (frame.Lz - Az) + slack;
        }
    };

    struct CircleAperture
    {
        double rx, rz, radius;

        CircleAperture(double cx, double cz, double rc) : rx(cx), rz(cz), radius(rc)
        {
            if (!(rc > 0.0))
                throw DomainError("CircleAperture: radius must be positive");
        }

        double area() const { return std::numbers::pi * radius * radius; }
    };

    // Segment [rx - Ax/2, rx + Ax/2] of a linear array whose strip height is Az
    struct IntervalAperture
    {
        double rx, Ax, Az;

        IntervalAperture(double cx, double ax, double az) : rx(cx), Ax(ax), Az(az)
        {
            if (!(ax >= 0.0) || !(az > 0.0))
                throw DomainError("IntervalAperture: length must be non-negative and strip height positive");
        }
    };

    // Projection (r*Phi, r*Theta) of the user onto the array plane
    inline ArrayPoint projection_onto_array(const UserGeometry &g)
    {
        return {g.r() * g.Phi(), g.r() * g.Theta()};
    }

    // argmin_{x in [a, b]} |c - x|
    inline double clamp_to_interval(double c, double a, double b)
    {
        if (!(a <= b))
            throw DomainError("clamp_to_interval: requires a <= b");
        if (c < a)
            return a;
        if (c > b)
            return b;
        return c;
    }

    // Feasible set of centers for an Ax x Az rectangle inside the frame
    inline CenterBounds feasible_center_bounds(const ArrayFrame &frame, double Ax, double Az)
    {
        if (!(Ax > 0.0) || !(Az > 0.0))
            throw DomainError("feasible_center_bounds: aperture sides must be positive");
        if (Ax > frame.Lx || Az > frame.Lz)
            throw ApertureTooLarge("feasible_center_bounds: aperture " + std::to_string(Ax) + " x " +
                                   std::to_string(Az) + " exceeds frame " + std::to_string(frame.Lx) +
                                   " x " + std::to_string(frame.Lz));
        const double hx = 0.5 * (frame.Lx - Ax);
        const double hz = 0.5 * (frame.Lz - Az);
        return {{-hx, hx}, {-hz, hz}};
    }
}
