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

// Closed-form CHSH values for ideal detection and |+>|+> circuit input.
// Angle arrays are ordered (a, a', b, b').

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vchsh/model.hpp"

namespace vchsh {

using AngleQuad = std::array<double, 4>;

namespace detail {

inline void check_qr(double q, double r) {
    if (!(q >= 0 && q <= 1)) {
        throw std::invalid_argument("q must lie in [0, 1], got " + std::to_string(q));
    }
    if (!(r >= -1 && r <= 1)) {
        throw std::invalid_argument("r must lie in [-1, 1], got " + std::to_string(r));
    }
}

// Twice the dot product of two Bloch directions given in polar form.
inline double dot_term(double ta, double pa, double tb, double pb) {
    const double c = std::cos(pa - pb);
    return std::cos(ta - tb) * (1 + c) + std::cos(ta + tb) * (1 - c);
}

}  // namespace detail

/// Probability of the separable component of a mixture.
struct BoundInput {
    double alpha = 0.0;

    static BoundInput from_state(const StateParams &s) { return {s.separable_fraction()}; }
};

/// CHSH value conditioned on at least one particle, for settings anywhere on the sphere.
inline double s_prime_general(double q, double r, const AngleQuad &thetas, const AngleQuad &phis) {
    detail::check_qr(q, r);
    const auto [ta, tap, tb, tbp] = thetas;
    const auto [pa, pap, pb, pbp] = phis;
    const double lone = q * ((r - 1) * std::cos(ta) - (r + 1) * std::cos(pb) * std::sin(tb));
    const double pair = detail::dot_term(ta, pa, tb, pb) + detail::dot_term(ta, pa, tbp, pbp) +
                        detail::dot_term(tap, pap, tb, pb) - detail::dot_term(tap, pap, tbp, pbp);
    return lone + 0.5 * (q - 1) * pair;
}

/// The phi = 0 restriction of s_prime_general.
inline double s_prime_inplane(double q, double r, const AngleQuad &chis) {
    detail::check_qr(q, r);
    const auto [a, ap, b, bp] = chis;
    return q * ((r - 1) * std::cos(a) - (r + 1) * std::sin(b)) +
           (q - 1) * (std::cos(a - b) + std::cos(a - bp) + std::cos(ap - b) - std::cos(ap - bp));
}

/// Folds the always-classical both-vacant sector back in.
inline double compose_S(double p, double s_prime) {
    if (!(p >= 0 && p <= 1)) {
        throw std::invalid_argument("p must lie in [0, 1], got " + std::to_string(p));
    }
    return 2 * p + (1 - p) * s_prime;
}

/// Largest CHSH value for a mixture with separable weight alpha.
inline double upper_bound(double alpha) {
    if (!(alpha >= 0 && alpha <= 1)) {
        throw std::invalid_argument("alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
    return 2 * alpha + kTsirelson * (1 - alpha);
}

inline double upper_bound(const BoundInput &in) { return upper_bound(in.alpha); }

}  // namespace vchsh
