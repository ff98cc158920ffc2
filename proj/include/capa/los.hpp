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
#include "capa/quadrature.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace capa
{
    using cdouble = std::complex<double>;

    // Free-space impedance in ohms
    inline constexpr double free_space_impedance = 120.0 * std::numbers::pi;

    // Wavelength-derived constants plus the composite SNR scale
    //     gamma_bar = |J|^2 |A_S|^2 k0^2 eta^2 / (4 pi sigma^2)
    class ChannelParams
    {
    public:
        static ChannelParams physical(double lambda, double sigma2, double J_mag)
        {
            return ChannelParams(lambda, sigma2, J_mag);
        }

        // Picks the source-current magnitude that yields the requested gamma_bar
        static ChannelParams from_gamma_bar(double lambda, double gamma_bar, double sigma2 = 1.0)
        {
            if (!(gamma_bar > 0.0) || !std::isfinite(gamma_bar))
                throw DomainError("ChannelParams: gamma_bar must be positive and finite");
            if (!(lambda > 0.0))
                throw DomainError("ChannelParams: wavelength must be positive");
            const double k0 = 2.0 * std::numbers::pi / lambda;
            const double as = lambda * lambda / (4.0 * std::numbers::pi);
            const double eta = free_space_impedance;
            const double J = std::sqrt(gamma_bar * 4.0 * std::numbers::pi * sigma2 / (as * as * k0 * k0 * eta * eta));
            return ChannelParams(lambda, sigma2, J);
        }

        double lambda() const { return lambda_; }
        double k0() const { return k0_; }
        double eta() const { return free_space_impedance; }
        double source_aperture() const { return as_; } // |A_S| = lambda^2 / (4 pi)
        double sigma2() const { return sigma2_; }
        double J_mag() const { return J_; }
        double gamma_bar() const { return gamma_bar_; }

        // gamma_bar evaluated afresh from the physical constants
        double gamma_bar_recomputed() const
        {
            return J_ * J_ * as_ * as_ * k0_ * k0_ * eta() * eta() / (4.0 * std::numbers::pi * sigma2_);
        }

        // 4 pi / (k0^2 eta^2): converts a channel gain a_R into a multiple of gamma_bar
        double gain_normalization() const { return 4.0 * std::numbers::pi / (k0_ * k0_ * eta() * eta()); }

    private:
        ChannelParams(double lambda, double sigma2, double J)
            : lambda_(lambda), sigma2_(sigma2), J_(J)
        {
            if (!(lambda > 0.0) || !(sigma2 > 0.0) || !(J > 0.0))
                throw DomainError("ChannelParams: lambda, sigma2 and |J| must be positive");
            k0_ = 2.0 * std::numbers::pi / lambda;
            as_ = lambda * lambda / (4.0 * std::numbers::pi);
            gamma_bar_ = gamma_bar_recomputed();
        }

        double lambda_, sigma2_, J_;
        double k0_ = 0.0, as_ = 0.0, gamma_bar_ = 0.0;
    };

    inline double to_db(double linear) { return 10.0 * std::log10(linear); }
    inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

    struct SnrBreakdown
    {
        double a_R = 0.0;    // captured channel gain, integral of |h|^2 over the active aperture
        double snr = 0.0;    // linear SNR |J|^2 |A_S|^2 a_R / sigma^2
        double snr_db = 0.0;
    };

    inline SnrBreakdown make_breakdown(double a_R, const ChannelParams &params)
    {
        const double snr = params.J_mag() * params.J_mag() * params.source_aperture() * params.source_aperture() * a_R / params.sigma2();
        return {a_R, snr, to_db(snr)};
    }

    // Scalar Green's function j k0 eta e^{-j k0 d} / (4 pi d)
    inline cdouble free_space_green(double d, const ChannelParams &params)
    {
        if (!(d > 0.0))
            throw SingularityError("free_space_green: zero distance between source and observation point");
        const double k0 = params.k0();
        const double amp = k0 * params.eta() / (4.0 * std::numbers::pi * d);
        return cdouble(0.0, amp) * std::polar(1.0, -k0 * d);
    }

    inline cdouble free_space_green(const Vec3 &a, const Vec3 &b, const ChannelParams &params)
    {
        return free_space_green((a - b).norm(), params);
    }

    // LoS response from a source at s to the array point p, including the projected-aperture factor
    inline cdouble los_channel(const ArrayPoint &p, const Vec3 &s, const ChannelParams &params)
    {
        const Vec3 diff = s - p.position();
        const double d = diff.norm();
        if (!(d > 0.0))
            throw SingularityError("los_channel: source lies on the aperture");
        if (!(s.y > 0.0))
            throw DomainError("los_channel: source must be in front of the array");
        return free_space_green(d, params) * std::sqrt(s.y / d);
    }

    inline cdouble los_response(const ArrayPoint &p, const UserGeometry &g, const ChannelParams &params)
    {
        return los_channel(p, g.position(), params);
    }

    // (1/4pi) * integral over rect of y dx dz / ((x - sx)^2 + y^2 + (z - sz)^2)^{3/2}
    // for a source at s = (sx, y, sz), y > 0; the four-corner arctan antiderivative.
    inline double projected_solid_angle(const RectAperture &rect, const Vec3 &s)
    {
        if (!(s.y > 0.0))
            throw DomainError("projected_solid_angle: source must satisfy y > 0");
        const double y = s.y;
        const double dx = s.x - rect.rx, dz = s.z - rect.rz;
        const double xs[2] = {0.5 * rect.Ax + dx, 0.5 * rect.Ax - dx};
        const double zs[2] = {0.5 * rect.Az + dz, 0.5 * rect.Az - dz};
        double sum = 0.0;
        for (double x : xs)
            for (double z : zs)
                sum += std::atan(x * z / (y * std::sqrt(y * y + x * x + z * z)));
        return sum / (4.0 * std::numbers::pi);
    }

    // Closed-form SNR of an Ax x Az rectangle centered at (rx, 0, rz):
    //     gamma = gamma_bar/(4 pi) * sum_{x in X} sum_{z in Z} atan(x z / (Psi sqrt(Psi^2 + x^2 + z^2)))
    // with X = {Ax/2r +- (Phi - rx/r)} and Z = {Az/2r +- (Theta - rz/r)}; all four sign pairs are summed.
    inline SnrBreakdown snr_rect_closed_form(const UserGeometry &g, const RectAperture &rect, const ChannelParams &params)
    {
        const double r = g.r(), psi = g.Psi();
        const double ox = g.Phi() - rect.rx / r, oz = g.Theta() - rect.rz / r;
        const double xs[2] = {rect.Ax / (2.0 * r) + ox, rect.Ax / (2.0 * r) - ox};
        const double zs[2] = {rect.Az / (2.0 * r) + oz, rect.Az / (2.0 * r) - oz};
        double sum = 0.0;
        for (double x : xs)
            for (double z : zs)
                sum += std::atan(x * z / (psi * std::sqrt(psi * psi + x * x + z * z)));
        const double k0 = params.k0(), eta = params.eta();
        const double a_R = k0 * k0 * eta * eta / (16.0 * std::numbers::pi * std::numbers::pi) * sum;
        SnrBreakdown out;
        out.a_R = a_R;
        out.snr = params.gamma_bar() / (4.0 * std::numbers::pi) * sum;
        out.snr_db = to_db(out.snr);
        return out;
    }

    // Direct cubature of |h|^2 over the rectangle; the reference the closed form is checked against.
    inline SnrBreakdown snr_rect_numeric(const UserGeometry &g, const RectAperture &rect, const ChannelParams &params,
                                         double tol = 1e-9)
    {
        const double k0 = params.k0(), eta = params.eta();
        const double c = k0 * k0 * eta * eta / (16.0 * std::numbers::pi * std::numbers::pi);
        const double ux = g.r() * g.Phi(), uy = g.r() * g.Psi(), uz = g.r() * g.Theta();
        auto integrand = [&](double x, double z) {
            const double q = (x - ux) * (x - ux) + uy * uy + (z - uz) * (z - uz);
            return c * uy / (q * std::sqrt(q));
        };
        const auto res = quad2d_adaptive(integrand, rect, tol);
        return make_breakdown(res.value, params);
    }

    // SNR of an Ax x Az rectangle centered on the user's projection
    inline double snr_aligned_rect(const UserGeometry &g, double Ax, double Az, const ChannelParams &params)
    {
        if (!(Ax >= 0.0) || !(Az >= 0.0))
            throw DomainError("snr_aligned_rect: side lengths must be non-negative");
        const double rp = g.r() * g.Psi();
        return params.gamma_bar() / std::numbers::pi *
               std::atan(Ax * Az / (2.0 * rp * std::sqrt(4.0 * rp * rp + Ax * Ax + Az * Az)));
    }

    // tau = |S| / (4 r^2 Psi^2)
    inline double normalized_area(double area, const UserGeometry &g)
    {
        const double rp = g.r() * g.Psi();
        return area / (4.0 * rp * rp);
    }

    inline double snr_aligned_square(double tau, const ChannelParams &params)
    {
        if (!(tau >= 0.0))
            throw DomainError("snr_aligned_square: tau must be non-negative");
        return params.gamma_bar() / std::numbers::pi * std::atan(tau / std::sqrt(1.0 + 2.0 * tau));
    }

    // Side-length form of the aligned square; a thin wrapper over the tau form
    inline double snr_aligned_square_side(const UserGeometry &g, double side, const ChannelParams &params)
    {
        return snr_aligned_square(normalized_area(side * side, g), params);
    }

    inline double snr_aligned_circle(double tau, const ChannelParams &params)
    {
        if (!(tau >= 0.0))
            throw DomainError("snr_aligned_circle: tau must be non-negative");
        // 1 - (1 + u)^{-1/2} written to avoid cancellation for small u
        const double u = 4.0 * tau / std::numbers::pi;
        const double s = std::sqrt(1.0 + u);
        return 0.5 * params.gamma_bar() * (u / (s * (1.0 + s)));
    }

    enum class ApertureShape
    {
        square,
        circle
    };

    enum class FieldRegime
    {
        far,
        near
    };

    inline double snr_asymptotic(ApertureShape shape, FieldRegime regime, double tau, const ChannelParams &params)
    {
        if (!(tau > 0.0))
            throw DomainError("snr_asymptotic: tau must be positive");
        const double gb = params.gamma_bar();
        if (regime == FieldRegime::far)
            return gb / std::numbers::pi * tau;
        const double deficit = (shape == ApertureShape::circle)
                                   ? 0.5 * std::sqrt(std::numbers::pi)
                                   : 2.0 * std::numbers::sqrt2 / std::numbers::pi;
        return 0.5 * gb * (1.0 - deficit / std::sqrt(tau));
    }

    // SNR of the interval [rx - Ax/2, rx + Ax/2] of a linear array with strip height Az
    inline double snr_linear_interval(const UserGeometry &g, const IntervalAperture &iv, const ChannelParams &params)
    {
        const double r = g.r();
        const double c2 = r * r * g.Psi() * g.Psi() + r * r * g.Theta() * g.Theta();
        if (!(c2 > 0.0))
            throw SingularityError("snr_linear_interval: user lies on the array axis");
        const double off = r * g.Phi() - iv.rx;
        auto F = [&](double x) {
            const double u = x - off;
            return u / std::sqrt(u * u + c2);
        };
        const double pref = params.gamma_bar() * iv.Az / (4.0 * std::numbers::pi) * r * g.Psi() / c2;
        return pref * (F(0.5 * iv.Ax) - F(-0.5 * iv.Ax));
    }

    // SNR of an active region covering `fraction` of the frame, with the frame's aspect ratio,
    // placed by the nearest-neighbour rule
    inline double snr_nearest_fraction(const UserGeometry &g, const ArrayFrame &frame, const ChannelParams &params,
                                       double fraction)
    {
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw DomainError("snr_nearest_fraction: fraction must lie in (0, 1]");
        const ArrayPoint proj = projection_onto_array(g);
        const double s = std::sqrt(fraction);
        const double ax = std::min(s * frame.Lx, frame.Lx), az = std::min(s * frame.Lz, frame.Lz);
        const auto b = feasible_center_bounds(frame, ax, az);
        const RectAperture rect(clamp_to_interval(proj.x, b.x.lo, b.x.hi), clamp_to_interval(proj.z, b.z.lo, b.z.hi),
                                ax, az);
        return snr_rect_closed_form(g, rect, params).snr;
    }

    // Smallest active fraction, placed as above, that reaches beta times the full-aperture SNR
    inline double aperture_fraction_for_target(const UserGeometry &g, const ArrayFrame &frame,
                                               const ChannelParams &params, double beta)
    {
        if (!(beta > 0.0 && beta < 1.0))
            throw DomainError("aperture_fraction_for_target: beta must lie in (0, 1)");

        const double target = beta * snr_nearest_fraction(g, frame, params, 1.0);
        double lo = 1e-15, hi = 1.0;
        while (hi - lo > 1e-10)
        {
            const double mid = 0.5 * (lo + hi);
            if (snr_nearest_fraction(g, frame, params, mid) < target)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }
}
