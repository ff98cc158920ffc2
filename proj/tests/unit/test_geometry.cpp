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

#include "capa/geometry.hpp"
#include "capa/random.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace capa;
using Catch::Approx;
using std::numbers::pi;

TEST_CASE("direction cosines of standard angles", "[geometry]")
{
    const auto a = direction_cosines(pi / 6, pi / 3);
    CHECK(a.Phi == Approx(0.75).margin(1e-15));
    CHECK(a.Psi == Approx(0.4330127018922193).margin(1e-15));
    CHECK(a.Theta == Approx(0.5).margin(1e-15));

    const auto b = direction_cosines(pi / 2, pi / 2);
    CHECK(b.Phi == Approx(0.0).margin(1e-15));
    CHECK(b.Psi == Approx(1.0).margin(1e-15));
    CHECK(b.Theta == Approx(0.0).margin(1e-15));

    const auto c = direction_cosines(0.0, pi / 2);
    CHECK(c.Phi == Approx(1.0).margin(1e-15));
    CHECK(c.Psi == 0.0);
    CHECK_THROWS_AS(UserGeometry(1.0, 0.0, pi / 2), DomainError);
}

TEST_CASE("angles outside [0, pi] are rejected", "[geometry]")
{
    CHECK_THROWS_AS(direction_cosines(-0.1, 1.0), DomainError);
    CHECK_THROWS_AS(direction_cosines(1.0, pi + 1e-9), DomainError);
    CHECK_THROWS_AS(UserGeometry(-1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(UserGeometry(1.0, pi, pi / 2), DomainError); // sin(pi) rounds to 1.2e-16
}

TEST_CASE("direction cosines have unit norm", "[geometry]")
{
    RandomStream rs(11, 0);
    for (int i = 0; i < 1000; ++i)
    {
        const auto d = direction_cosines(rs.uniform(0.0, pi), rs.uniform(0.0, pi));
        CHECK(std::abs(d.Phi * d.Phi + d.Psi * d.Psi + d.Theta * d.Theta - 1.0) <= 1e-12);
    }
}

TEST_CASE("user position and its projection onto the array", "[geometry]")
{
    const UserGeometry g(10.0, pi / 6, pi / 3);
    const auto p = projection_onto_array(g);
    CHECK(p.x == Approx(7.5).epsilon(1e-14));
    CHECK(p.z == Approx(5.0).epsilon(1e-14));
    CHECK(g.position().y == Approx(10.0 * 0.4330127018922193).epsilon(1e-14));

    const auto b = projection_onto_array(UserGeometry(5.0, pi / 2, pi / 2));
    CHECK(b.x == Approx(0.0).margin(1e-14));
    CHECK(b.z == Approx(0.0).margin(1e-14));

    // theta = 0 puts the user on the z axis, which the half-space check rejects
    const auto top = direction_cosines(pi / 2, 0.0);
    CHECK(top.Theta == 1.0);
    CHECK_THROWS_AS(UserGeometry(1.0, pi / 2, 0.0), DomainError);
}

TEST_CASE("clamp to interval", "[geometry]")
{
    CHECK(clamp_to_interval(5, -1, 1) == 1);
    CHECK(clamp_to_interval(0, -1, 1) == 0);
    CHECK(clamp_to_interval(-3, -1, 1) == -1);
    CHECK_THROWS_AS(clamp_to_interval(0, 1, -1), DomainError);

    RandomStream rs(12, 0);
    for (int i = 0; i < 1000; ++i)
    {
        const double a = rs.uniform(-5, 5), b = a + rs.uniform(0, 3), c = rs.uniform(-10, 10);
        const double once = clamp_to_interval(c, a, b);
        CHECK(once >= a);
        CHECK(once <= b);
        CHECK(clamp_to_interval(once, a, b) == once);
    }
}

TEST_CASE("feasible center bounds", "[geometry]")
{
    const ArrayFrame f(2.0, 2.0);
    const auto b = feasible_center_bounds(f, 1.0, 1.0);
    CHECK(b.x.lo == -0.5);
    CHECK(b.x.hi == 0.5);
    CHECK(b.z.lo == -0.5);
    CHECK(b.z.hi == 0.5);

    const auto full = feasible_center_bounds(f, 2.0, 1.0);
    CHECK(full.x.lo == 0.0);
    CHECK(full.x.hi == 0.0);

    CHECK_THROWS_AS(feasible_center_bounds(f, 3.0, 1.0), ApertureTooLarge);
    CHECK_THROWS_AS(feasible_center_bounds(f, 1.0, 2.5), ApertureTooLarge);
}

TEST_CASE("feasible bounds are symmetric and shrink as the aperture grows", "[geometry]")
{
    const ArrayFrame f(3.0, 1.5);
    double prev_x = 1e9, prev_z = 1e9;
    for (int i = 1; i <= 30; ++i)
    {
        const double ax = 3.0 * i / 30.0, az = 1.5 * i / 30.0;
        const auto b = feasible_center_bounds(f, ax, az);
        CHECK(b.x.lo == -b.x.hi);
        CHECK(b.z.lo == -b.z.hi);
        CHECK(b.x.width() <= prev_x);
        CHECK(b.z.width() <= prev_z);
        prev_x = b.x.width();
        prev_z = b.z.width();
    }
}

TEST_CASE("aperture descriptors validate their dimensions", "[geometry]")
{
    CHECK_THROWS_AS(RectAperture(0, 0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(CircleAperture(0, 0, 0.0), DomainError);
    CHECK_THROWS_AS(IntervalAperture(0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(ArrayFrame(0.0, 1.0), DomainError);

    const ArrayFrame f(2.0, 2.0);
    CHECK(RectAperture(0.5, -0.5, 1.0, 1.0).fits(f));
    CHECK_FALSE(RectAperture(0.6, 0.0, 1.0, 1.0).fits(f));
    CHECK(RectAperture(0.5, 0.5, 1.0, 1.0).area() == 1.0);
}
