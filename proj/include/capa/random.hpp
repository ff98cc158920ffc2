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

// Counter-derived random streams: stream (seed, id) is fully determined by its two keys,
// so Monte-Carlo trials can run in any order or on any thread and still reproduce.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace capa
{
    inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // SplitMix64 generator keyed by (seed, stream id)
    class RandomStream
    {
    public:
        using result_type = std::uint64_t;

        RandomStream(std::uint64_t seed, std::uint64_t stream_id)
            : state_(splitmix64_mix(seed ^ 0x243f6a8885a308d3ULL) ^ splitmix64_mix(stream_id + 0x9e3779b97f4a7c15ULL))
        {
        }

        static constexpr result_type min() { return 0; }
        static constexpr result_type max() { return ~result_type(0); }

        result_type operator()()
        {
            state_ += 0x9e3779b97f4a7c15ULL;
            return splitmix64_mix(state_);
        }

        // Uniform on the open interval (0, 1)
        double uniform()
        {
            return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
        }

        double uniform(double a, double b) { return a + (b - a) * uniform(); }

        // Circularly-symmetric complex Gaussian with E|z|^2 = 1 (Box-Muller)
        std::complex<double> complex_normal()
        {
            const double rad = std::sqrt(-std::log(uniform()));
            const double ang = 2.0 * std::numbers::pi * uniform();
            return {rad * std::cos(ang), rad * std::sin(ang)};
        }

    private:
        std::uint64_t state_;
    };

    // Stream id namespaces so independent uses of one seed never share a stream
    namespace stream_domain
    {
        inline constexpr std::uint64_t trials = 0;
        inline constexpr std::uint64_t scatterers = 1ULL << 60;
        inline constexpr std::uint64_t reflections = 2ULL << 60;
        inline constexpr std::uint64_t subsets = 3ULL << 60;
        inline constexpr std::uint64_t fixtures = 4ULL << 60;
    }
}
