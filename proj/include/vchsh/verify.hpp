// Copyright 2026 The vchsh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

#include "vchsh/analytic.hpp"
#include "vchsh/model.hpp"
#include "vchsh/nelder_mead.hpp"
#include "vchsh/oracle.hpp"

namespace vchsh {

struct EquivalenceReport {
    std::size_t trials = 0;
    /// max |oracle - closed form| over random sphere settings.
    double max_general_gap = 0.0;
    /// max |in-plane form - general form at phi = 0|.
    double max_inplane_gap = 0.0;
};

/// Cross-checks the closed forms against the density-matrix oracle on seeded
/// random (q, r, angles) with p = 0 and ideal detectors.
inline EquivalenceReport oracle_analytic_equivalence(std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * HaltonSequence::unit_double(gen()); };
    EquivalenceReport rep;
    rep.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const double q = uniform(0, 1);
        const double r = uniform(-1, 1);
        AngleQuad thetas, phis;
        for (auto &x : thetas) {
            x = uniform(0, kTwoPi);
        }
        for (auto &x : phis) {
            x = uniform(0, kTwoPi);
        }
        const SettingsQuad quad{Polar{thetas[0], phis[0]}, Polar{thetas[1], phis[1]}, Polar{thetas[2], phis[2]},
                                Polar{thetas[3], phis[3]}};
        const double oracle = chsh_S(build_density({0.0, q, r}), quad, {});
        rep.max_general_gap = std::max(rep.max_general_gap, std::abs(oracle - s_prime_general(q, r, thetas, phis)));
        rep.max_inplane_gap = std::max(rep.max_inplane_gap, std::abs(s_prime_inplane(q, r, thetas) -
                                                                     s_prime_general(q, r, thetas, {0, 0, 0, 0})));
    }
    return rep;
}

}  // namespace vchsh
