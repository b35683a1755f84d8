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

// Brute-force Born-rule evaluation of the incomplete measurement on the full
// two-site density matrix. This is the reference path; it handles detector
// errors, which the closed forms in analytic.hpp do not.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vchsh/model.hpp"

namespace vchsh {

/// Two-outcome POVM on one site. `plus` fires on +1, `minus` on -1.
struct SitePovm {
    SiteMatrix plus;
    SiteMatrix minus;
};

struct JointOutcomeTable {
    double p_pp = 0.0;
    double p_pm = 0.0;
    double p_mp = 0.0;
    double p_mm = 0.0;

    double total() const { return p_pp + p_pm + p_mp + p_mm; }

    /// Copy with every entry clamped to [0, 1], for display only.
    JointOutcomeTable clamped() const {
        auto c = [](double x) { return std::clamp(x, 0.0, 1.0); };
        return {c(p_pp), c(p_pm), c(p_mp), c(p_mm)};
    }
};

/// Projector onto the logical state along `m`, zero on |v>.
inline SiteMatrix logical_projector(const Bloch &m) {
    SiteMatrix pi = SiteMatrix::Zero();
    pi(kZero, kZero) = 0.5 * (1 + m.z());
    pi(kOne, kOne) = 0.5 * (1 - m.z());
    pi(kZero, kOne) = 0.5 * cd(m.x(), -m.y());
    pi(kOne, kZero) = 0.5 * cd(m.x(), m.y());
    return pi;
}

inline SitePovm povm_for_setting(const Bloch &m, const ErrorParams &e) {
    if (std::abs(m.norm() - 1) > 1e-9) {
        throw std::invalid_argument("povm_for_setting: direction is not a unit vector");
    }
    e.validate();
    const SiteMatrix pi = logical_projector(m);
    const SiteMatrix rest = SiteMatrix::Identity() - pi;
    return {e.eta * pi + e.epsilon * rest, (1 - e.eta) * pi + (1 - e.epsilon) * rest};
}

/// Tr[rho (A (x) B)] summed directly over the 81 index pairs.
inline double born_value(const DensityMatrix &rho, const SiteMatrix &a, const SiteMatrix &b) {
    cd acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
            for (int j = 0; j < 3; ++j) {
                for (int l = 0; l < 3; ++l) {
                    acc += rho(pair_index(i, k), pair_index(j, l)) * a(j, i) * b(l, k);
                }
            }
        }
    }
    return acc.real();
}

inline JointOutcomeTable joint_table(const DensityMatrix &rho, const SitePovm &alice, const SitePovm &bob) {
    return {born_value(rho, alice.plus, bob.plus), born_value(rho, alice.plus, bob.minus),
            born_value(rho, alice.minus, bob.plus), born_value(rho, alice.minus, bob.minus)};
}

inline JointOutcomeTable joint_table(const DensityMatrix &rho, const MeasurementSetting &alice,
                                     const MeasurementSetting &bob, const ErrorParams &e) {
    return joint_table(rho, povm_for_setting(resolve_direction(alice), e), povm_for_setting(resolve_direction(bob), e));
}

inline double correlation(const JointOutcomeTable &t) { return t.p_pp + t.p_mm - t.p_pm - t.p_mp; }

/// CHSH combination E(a,b) + E(a,b') + E(a',b) - E(a',b') by the Born rule.
inline double chsh_S(const DensityMatrix &rho, const SettingsQuad &s, const ErrorParams &e) {
    const SitePovm a = povm_for_setting(resolve_direction(s.a), e);
    const SitePovm ap = povm_for_setting(resolve_direction(s.a_prime), e);
    const SitePovm b = povm_for_setting(resolve_direction(s.b), e);
    const SitePovm bp = povm_for_setting(resolve_direction(s.b_prime), e);
    return correlation(joint_table(rho, a, b)) + correlation(joint_table(rho, a, bp)) +
           correlation(joint_table(rho, ap, b)) - correlation(joint_table(rho, ap, bp));
}

inline double chsh_S(const StateParams &state, const SettingsQuad &s, const ErrorParams &e) {
    return chsh_S(build_density(state), s, e);
}

}  // namespace vchsh
