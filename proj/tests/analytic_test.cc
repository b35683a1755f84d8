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

#include "vchsh/analytic.hpp"

#include "gtest/gtest.h"
#include "test_util.h"
#include "vchsh/optimizer.hpp"
#include "vchsh/oracle.hpp"
#include "vchsh/verify.hpp"

using namespace vchsh;
using vchsh::testing::Rng;

TEST(s_prime_general, singlet_at_conventional_angles) {
    EXPECT_NEAR(s_prime_general(0.0, 0.0, kConventionalAngles, {0, 0, 0, 0}), kTsirelson, 1e-12);
}

TEST(s_prime_general, classical_maximum_of_lone_term) {
    // q = 1, r = 0 leaves -cos(theta_a) - sin(theta_b).
    EXPECT_NEAR(s_prime_general(1.0, 0.0, {kPi, 0.3, 1.5 * kPi, 2.2}, {0, 0, 0, 0}), 2.0, 1e-12);
}

TEST(s_prime_general, matches_oracle) {
    const EquivalenceReport rep = oracle_analytic_equivalence(1000, 42);
    EXPECT_LT(rep.max_general_gap, 1e-10);
    EXPECT_LT(rep.max_inplane_gap, 1e-12);
}

TEST(s_prime_general, rejects_bad_domain) {
    EXPECT_THROW(s_prime_general(1.5, 0, {}, {}), std::invalid_argument);
    EXPECT_THROW(s_prime_inplane(0.5, -2, {}), std::invalid_argument);
}

TEST(s_prime_inplane, conventional_values) {
    EXPECT_NEAR(s_prime_inplane(0.0, 0.0, kConventionalAngles), kTsirelson, 1e-12);
    // At q = 2/3 the lone term is -q(1 - 1/sqrt2) and the pair term (1 - q) 2 sqrt2.
    const double q = 2.0 / 3.0;
    const double expected = -q * (1 - 1 / kSqrt2) + (1 - q) * kTsirelson;
    const double v = s_prime_inplane(q, 0.0, kConventionalAngles);
    EXPECT_NEAR(v, expected, 1e-12);
    EXPECT_LT(v, 2.0);
}

TEST(s_prime_inplane, agrees_with_oracle_at_conventional) {
    const StateParams s{0.0, 0.3, -0.4};
    EXPECT_NEAR(s_prime_inplane(s.q, s.r, kConventionalAngles), chsh_S(build_density(s), conventional_quad(), {}),
                1e-12);
}

TEST(s_prime_inplane, bilocal_rotation_invariance_of_singlet) {
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        const AngleQuad chi{rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi),
                            rng.uniform(0, kTwoPi)};
        const double d = rng.uniform(-10, 10), r = rng.uniform(-1, 1);
        const AngleQuad shifted{chi[0] + d, chi[1] + d, chi[2] + d, chi[3] + d};
        EXPECT_NEAR(s_prime_inplane(0.0, r, shifted), s_prime_inplane(0.0, r, chi), 1e-10);
    }
}

TEST(s_prime_inplane, restriction_of_general) {
    Rng rng(10);
    for (int i = 0; i < 1000; ++i) {
        const AngleQuad chi{rng.uniform(-7, 7), rng.uniform(-7, 7), rng.uniform(-7, 7), rng.uniform(-7, 7)};
        const double q = rng.uniform(0, 1), r = rng.uniform(-1, 1);
        EXPECT_NEAR(s_prime_inplane(q, r, chi), s_prime_general(q, r, chi, {0, 0, 0, 0}), 1e-12);
    }
}

TEST(compose_S, examples) {
    EXPECT_DOUBLE_EQ(compose_S(0.0, 2.5), 2.5);
    EXPECT_DOUBLE_EQ(compose_S(1.0, 1.234), 2.0);
    EXPECT_NEAR(compose_S(0.5, kTsirelson), 1 + kSqrt2, 1e-15);
    EXPECT_THROW(compose_S(-0.1, 2.0), std::invalid_argument);
}

TEST(upper_bound, examples) {
    EXPECT_NEAR(upper_bound(0.0), kTsirelson, 1e-15);
    EXPECT_DOUBLE_EQ(upper_bound(1.0), 2.0);
    EXPECT_NEAR(upper_bound(0.5), 1 + kSqrt2, 1e-15);
    EXPECT_NEAR(upper_bound(BoundInput::from_state({0.25, 0.5, 0.0})), upper_bound(0.625), 1e-15);
    EXPECT_THROW(upper_bound(1.5), std::invalid_argument);
}

TEST(upper_bound, dominates_optimized_values) {
    for (double pv : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
        const StateParams s = vacancy_model_map({pv});
        const OptResult r = optimize(Stage::FreeInPlane, s, {});
        EXPECT_LE(compose_S(s.p, r.s_prime_value), upper_bound(s.separable_fraction()) + 1e-9) << pv;
    }
}

TEST(s_prime_general, plane_suffices) {
    for (double q : {0.2, 0.5, 0.8}) {
        for (double r : {-0.5, 0.0, 0.7}) {
            const StateParams s{0.0, q, r};
            const double sphere = optimize(Stage::FreeSphere, s, {}).s_value;
            const double plane = optimize(Stage::FreeInPlane, s, {}).s_value;
            EXPECT_NEAR(sphere, plane, 1e-7) << q << " " << r;
        }
    }
}
