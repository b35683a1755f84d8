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

#include <cstdint>
#include <random>

#include "vchsh/model.hpp"

namespace vchsh::testing {

/// Seeded uniform generator for hand-rolled property tests.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

  private:
    std::mt19937_64 gen_;
};

inline StateParams random_state(Rng &rng, bool random_tau = false) {
    StateParams s{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(-1, 1)};
    if (random_tau) {
        s.tau = rng.uniform(0, kTwoPi);
    }
    return s;
}

inline SettingsQuad random_quad(Rng &rng) {
    auto one = [&]() -> MeasurementSetting { return Polar{rng.uniform(0, kTwoPi), rng.uniform(0, kTwoPi)}; };
    return {one(), one(), one(), one()};
}

}  // namespace vchsh::testing
