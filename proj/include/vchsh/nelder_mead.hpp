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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace vchsh {

struct SimplexOptions {
    double initial_step = 0.5;
    /// Stop once the spread of simplex values and the simplex diameter both fall below these.
    double f_tol = 1e-14;
    double x_tol = 1e-10;
    std::size_t max_evaluations = 20000;
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Minimizes `f` from `start` with the Nelder-Mead simplex method
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
template <class F>
SimplexResult nelder_mead_minimize(F &&f, std::span<const double> start, const SimplexOptions &opts = {}) {
    const std::size_t n = start.size();
    SimplexResult res;
    if (n == 0) {
        res.value = f(std::span<const double>{});
        res.evaluations = 1;
        res.converged = true;
        return res;
    }

    std::vector<std::vector<double>> pts(n + 1, std::vector<double>(start.begin(), start.end()));
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += opts.initial_step;
    }
    std::size_t evals = 0;
    auto eval = [&](const std::vector<double> &x) {
        ++evals;
        return f(std::span<const double>(x));
    };
    for (std::size_t i = 0; i <= n; ++i) {
        vals[i] = eval(pts[i]);
    }

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto blend = [&](std::vector<double> &out, double t) {
        // out = centroid + t * (centroid - worst)
        const auto &w = pts[order[n]];
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = centroid[j] + t * (centroid[j] - w[j]);
        }
    };

    while (true) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });

        const double f_spread = vals[order[n]] - vals[order[0]];
        double diameter = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                diameter = std::max(diameter, std::abs(pts[order[i]][j] - pts[order[0]][j]));
            }
        }
        if (f_spread <= opts.f_tol && diameter <= opts.x_tol) {
            res.converged = true;
            break;
        }
        if (evals >= opts.max_evaluations) {
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                centroid[j] += pts[order[i]][j];
            }
        }
        for (double &c : centroid) {
            c /= static_cast<double>(n);
        }

        const std::size_t best = order[0], worst = order[n], second = order[n - 1];
        blend(trial, 1.0);
        const double f_r = eval(trial);
        if (f_r < vals[best]) {
            blend(trial2, 2.0);
            const double f_e = eval(trial2);
            if (f_e < f_r) {
                pts[worst] = trial2;
                vals[worst] = f_e;
            } else {
                pts[worst] = trial;
                vals[worst] = f_r;
            }
            continue;
        }
        if (f_r < vals[second]) {
            pts[worst] = trial;
            vals[worst] = f_r;
            continue;
        }
        if (f_r < vals[worst]) {
            blend(trial2, 0.5);
            const double f_c = eval(trial2);
            if (f_c <= f_r) {
                pts[worst] = trial2;
                vals[worst] = f_c;
                continue;
            }
        } else {
            blend(trial2, -0.5);
            const double f_c = eval(trial2);
            if (f_c < vals[worst]) {
                pts[worst] = trial2;
                vals[worst] = f_c;
                continue;
            }
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) {
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
            }
            vals[i] = eval(pts[i]);
        }
    }

    res.x = pts[order[0]];
    res.value = vals[order[0]];
    res.evaluations = evals;
    return res;
}

/// Scrambled Halton points in [0,1)^dim. Each coordinate gets a seeded
/// Cranley-Patterson shift, so the point set is a pure function of the seed.
class HaltonSequence {
  public:
    static constexpr std::array<unsigned, 12> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

    HaltonSequence(std::size_t dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
        if (dim > kPrimes.size()) {
            throw std::invalid_argument("HaltonSequence: dimension too large");
        }
        std::mt19937_64 gen(seed);
        for (double &s : shift_) {
            s = unit_double(gen());
        }
    }

    std::vector<double> point(std::size_t index) const {
        std::vector<double> x(dim_);
        for (std::size_t d = 0; d < dim_; ++d) {
            double v = radical_inverse(index + 1, kPrimes[d]) + shift_[d];
            x[d] = v >= 1.0 ? v - 1.0 : v;
        }
        return x;
    }

    /// Top 53 bits of a 64-bit word mapped onto [0, 1).
    static double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

  private:
    static double radical_inverse(std::size_t i, unsigned base) {
        double inv = 1.0 / base, f = inv, r = 0.0;
        while (i > 0) {
            r += f * static_cast<double>(i % base);
            i /= base;
            f *= inv;
        }
        return r;
    }

    std::size_t dim_;
    std::vector<double> shift_;
};

}  // namespace vchsh
