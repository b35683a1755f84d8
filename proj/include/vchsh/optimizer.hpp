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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "vchsh/analytic.hpp"
#include "vchsh/model.hpp"
#include "vchsh/nelder_mead.hpp"
#include "vchsh/oracle.hpp"

namespace vchsh {

/// Nested parameterizations of the measurement settings, from none to fully free.
enum class Stage {
    Conventional,         // 0 parameters
    GlobalShift,          // 1: common shift of all four in-plane angles
    PairShifts,           // 2: one shift for Alice's pair, one for Bob's
    FreeInPlane,          // 4: independent in-plane angles
    FreeSphere,           // 8: independent (theta, phi) per setting
    FreeSphereWithInput,  // 9: FreeSphere plus the input angle tau
};

inline constexpr std::array<Stage, 6> kAllStages{Stage::Conventional, Stage::GlobalShift, Stage::PairShifts,
                                                 Stage::FreeInPlane,  Stage::FreeSphere,  Stage::FreeSphereWithInput};

constexpr std::size_t parameter_count(Stage s) {
    switch (s) {
    case Stage::Conventional:
        return 0;
    case Stage::GlobalShift:
        return 1;
    case Stage::PairShifts:
        return 2;
    case Stage::FreeInPlane:
        return 4;
    case Stage::FreeSphere:
        return 8;
    case Stage::FreeSphereWithInput:
        return 9;
    }
    return 0;
}

constexpr std::string_view stage_name(Stage s) {
    switch (s) {
    case Stage::Conventional:
        return "conventional";
    case Stage::GlobalShift:
        return "global-shift";
    case Stage::PairShifts:
        return "pair-shifts";
    case Stage::FreeInPlane:
        return "free-in-plane";
    case Stage::FreeSphere:
        return "free-sphere";
    case Stage::FreeSphereWithInput:
        return "free-sphere-input";
    }
    return "";
}

inline Stage parse_stage(std::string_view name) {
    for (Stage s : kAllStages) {
        if (stage_name(s) == name) {
            return s;
        }
    }
    throw std::invalid_argument("unknown stage '" + std::string(name) + "'");
}

/// In-plane angles (a, a', b, b') of the textbook singlet CHSH settings.
inline constexpr AngleQuad kConventionalAngles{0.0, kPi / 2, 5 * kPi / 4, 3 * kPi / 4};

inline SettingsQuad conventional_quad() {
    return {InPlane{kConventionalAngles[0]}, InPlane{kConventionalAngles[1]}, InPlane{kConventionalAngles[2]},
            InPlane{kConventionalAngles[3]}};
}

/// Settings and input angle selected by a stage parameter vector.
struct StagePoint {
    SettingsQuad settings;
    std::optional<double> tau;  // set only by FreeSphereWithInput
};

inline StagePoint stage_point(Stage stage, std::span<const double> x) {
    if (x.size() != parameter_count(stage)) {
        throw std::invalid_argument("stage " + std::string(stage_name(stage)) + " expects " +
                                    std::to_string(parameter_count(stage)) + " parameters, got " +
                                    std::to_string(x.size()));
    }
    const auto &c = kConventionalAngles;
    auto planar = [](double a, double ap, double b, double bp) {
        return StagePoint{{InPlane{a}, InPlane{ap}, InPlane{b}, InPlane{bp}}, std::nullopt};
    };
    switch (stage) {
    case Stage::Conventional:
        return planar(c[0], c[1], c[2], c[3]);
    case Stage::GlobalShift:
        return planar(c[0] + x[0], c[1] + x[0], c[2] + x[0], c[3] + x[0]);
    case Stage::PairShifts:
        return planar(c[0] + x[0], c[1] + x[0], c[2] + x[1], c[3] + x[1]);
    case Stage::FreeInPlane:
        return planar(x[0], x[1], x[2], x[3]);
    case Stage::FreeSphere:
    case Stage::FreeSphereWithInput: {
        StagePoint pt{{Polar{x[0], x[1]}, Polar{x[2], x[3]}, Polar{x[4], x[5]}, Polar{x[6], x[7]}}, std::nullopt};
        if (stage == Stage::FreeSphereWithInput) {
            pt.tau = x[8];
        }
        return pt;
    }
    }
    throw std::logic_error("unreachable");
}

/// Stage parameters that reproduce the conventional settings (and tau = pi/4).
inline std::vector<double> conventional_parameters(Stage stage) {
    const auto &c = kConventionalAngles;
    switch (stage) {
    case Stage::Conventional:
        return {};
    case Stage::GlobalShift:
        return {0.0};
    case Stage::PairShifts:
        return {0.0, 0.0};
    case Stage::FreeInPlane:
        return {c[0], c[1], c[2], c[3]};
    case Stage::FreeSphere:
        return {c[0], 0.0, c[1], 0.0, c[2], 0.0, c[3], 0.0};
    case Stage::FreeSphereWithInput:
        return {c[0], 0.0, c[1], 0.0, c[2], 0.0, c[3], 0.0, kPi / 4};
    }
    return {};
}

/// Evaluates S for one stage parameter vector. Uses the closed form when the
/// detectors are ideal and the input is |+>|+>, the density-matrix oracle otherwise.
class StageObjective {
  public:
    StageObjective(Stage stage, const StateParams &state, const ErrorParams &errors)
        : stage_(stage), state_(state), errors_(errors) {
        state_.validate();
        errors_.validate();
        const bool free_tau = stage == Stage::FreeSphereWithInput;
        analytic_ = errors_.ideal() && !free_tau && state_.tau == kPi / 4;
        if (!free_tau) {
            rho_ = build_density(state_);
        }
    }

    Stage stage() const { return stage_; }
    bool uses_analytic() const { return analytic_; }

    double operator()(std::span<const double> x) const {
        if (analytic_) {
            return compose_S(state_.p, analytic_s_prime(x));
        }
        const StagePoint pt = stage_point(stage_, x);
        if (pt.tau) {
            StateParams s = state_;
            s.tau = *pt.tau;
            return chsh_S(build_density(s), pt.settings, errors_);
        }
        return chsh_S(rho_, pt.settings, errors_);
    }

  private:
    double analytic_s_prime(std::span<const double> x) const {
        if (x.size() != parameter_count(stage_)) {
            stage_point(stage_, x);  // throws the length error
        }
        const auto &c = kConventionalAngles;
        const double q = state_.q, r = state_.r;
        switch (stage_) {
        case Stage::Conventional:
            return s_prime_inplane(q, r, c);
        case Stage::GlobalShift:
            return s_prime_inplane(q, r, {c[0] + x[0], c[1] + x[0], c[2] + x[0], c[3] + x[0]});
        case Stage::PairShifts:
            return s_prime_inplane(q, r, {c[0] + x[0], c[1] + x[0], c[2] + x[1], c[3] + x[1]});
        case Stage::FreeInPlane:
            return s_prime_inplane(q, r, {x[0], x[1], x[2], x[3]});
        case Stage::FreeSphere:
            return s_prime_general(q, r, {x[0], x[2], x[4], x[6]}, {x[1], x[3], x[5], x[7]});
        case Stage::FreeSphereWithInput:
            break;
        }
        throw std::logic_error("analytic path not available for this stage");
    }

    Stage stage_;
    StateParams state_;
    ErrorParams errors_;
    bool analytic_ = false;
    DensityMatrix rho_;
};

inline double evaluate_stage_objective(Stage stage, std::span<const double> x, const StateParams &state,
                                       const ErrorParams &errors) {
    return StageObjective(stage, state, errors)(x);
}

struct OptOptions {
    std::uint64_t seed = 0;
    std::size_t restarts = 64;
    SimplexOptions simplex{};
    /// Re-runs of the simplex from its own optimum, to shake it out of false convergence.
    std::size_t polish_rounds = 2;
    /// Best two restarts must agree this closely for the result to count as converged.
    double agreement_tol = 1e-7;
    /// Worker threads; restarts are processed in fixed batches so the result does not depend on scheduling.
    std::size_t threads = 1;
    /// When set, stop after the first batch whose best value exceeds this.
    std::optional<double> stop_above;
};

struct OptResult {
    Stage stage = Stage::Conventional;
    std::vector<double> parameters;
    SettingsQuad settings;
    std::optional<double> tau;
    double s_value = 0.0;
    double s_prime_value = 0.0;
    std::size_t n_restarts_used = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    bool stopped_early = false;
};

namespace detail {

inline Polar canonical_polar(double theta, double phi) {
    theta = wrap_angle(theta);
    if (theta > kPi) {
        theta = kTwoPi - theta;
        phi += kPi;
    }
    return {theta, wrap_angle(phi)};
}

// Wraps angles without changing any resolved direction or the input state.
inline std::vector<double> canonical_parameters(Stage stage, std::vector<double> x) {
    if (stage == Stage::FreeSphere || stage == Stage::FreeSphereWithInput) {
        for (std::size_t i = 0; i < 8; i += 2) {
            const Polar p = canonical_polar(x[i], x[i + 1]);
            x[i] = p.theta;
            x[i + 1] = p.phi;
        }
        if (stage == Stage::FreeSphereWithInput) {
            x[8] = wrap_angle(x[8]);
        }
    } else {
        for (double &v : x) {
            v = wrap_angle(v);
        }
    }
    return x;
}

// Box that initial points are drawn from, as (low, width) per parameter.
inline std::vector<std::pair<double, double>> start_box(Stage stage) {
    std::vector<std::pair<double, double>> box;
    if (stage == Stage::FreeSphere || stage == Stage::FreeSphereWithInput) {
        for (int i = 0; i < 4; ++i) {
            box.push_back({0.0, kPi});
            box.push_back({0.0, kTwoPi});
        }
        if (stage == Stage::FreeSphereWithInput) {
            box.push_back({0.0, kPi});
        }
    } else {
        box.assign(parameter_count(stage), {0.0, kTwoPi});
    }
    return box;
}

struct RestartOutcome {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
};

inline RestartOutcome run_restart(const StageObjective &objective, std::vector<double> start,
                                  const OptOptions &opts) {
    auto neg = [&](std::span<const double> x) { return -objective(x); };
    SimplexResult best = nelder_mead_minimize(neg, start, opts.simplex);
    std::size_t evals = best.evaluations;
    for (std::size_t round = 0; round < opts.polish_rounds; ++round) {
        SimplexResult again = nelder_mead_minimize(neg, best.x, opts.simplex);
        evals += again.evaluations;
        const bool improved = again.value < best.value - 1e-15;
        if (again.value <= best.value) {
            best = std::move(again);
        }
        if (!improved) {
            break;
        }
    }
    return {std::move(best.x), -best.value, evals};
}

}  // namespace detail

/// Deterministic list of starting points: the conventional embedding first,
/// then shifted Halton points over the stage's parameter box.
inline std::vector<std::vector<double>> restart_points(Stage stage, std::size_t restarts, std::uint64_t seed) {
    std::vector<std::vector<double>> starts;
    const std::size_t n = parameter_count(stage);
    if (n == 0) {
        starts.emplace_back();
        return starts;
    }
    starts.push_back(conventional_parameters(stage));
    const auto box = detail::start_box(stage);
    HaltonSequence halton(n, seed);
    for (std::size_t i = 1; i < restarts; ++i) {
        std::vector<double> u = halton.point(i - 1);
        for (std::size_t d = 0; d < n; ++d) {
            u[d] = box[d].first + box[d].second * u[d];
        }
        starts.push_back(std::move(u));
    }
    return starts;
}

inline OptResult optimize(Stage stage, const StateParams &state, const ErrorParams &errors,
                          const OptOptions &opts = {}) {
    if (opts.restarts == 0) {
        throw std::invalid_argument("optimize: restarts must be positive");
    }
    const StageObjective objective(stage, state, errors);
    const auto starts = restart_points(stage, opts.restarts, opts.seed);

    std::vector<detail::RestartOutcome> outcomes(starts.size());
    const std::size_t batch = std::max<std::size_t>(1, opts.threads);
    bool stopped = false;
    std::size_t used = 0;
    for (std::size_t lo = 0; lo < starts.size() && !stopped; lo += batch) {
        const std::size_t hi = std::min(starts.size(), lo + batch);
        if (hi - lo == 1) {
            outcomes[lo] = detail::run_restart(objective, starts[lo], opts);
        } else {
            std::vector<std::jthread> workers;
            for (std::size_t i = lo; i < hi; ++i) {
                workers.emplace_back([&, i] { outcomes[i] = detail::run_restart(objective, starts[i], opts); });
            }
        }
        for (std::size_t i = lo; i < hi; ++i) {
            if (opts.stop_above && outcomes[i].value > *opts.stop_above) {
                stopped = true;
            }
        }
        used = hi;
    }

    // Highest value wins; ties go to the lowest restart index.
    std::size_t best = 0;
    std::vector<double> values;
    std::size_t evaluations = 0;
    for (std::size_t i = 0; i < used; ++i) {
        evaluations += outcomes[i].evaluations;
        values.push_back(outcomes[i].value);
        if (outcomes[i].value > outcomes[best].value) {
            best = i;
        }
    }
    std::sort(values.begin(), values.end(), std::greater<>());

    OptResult res;
    res.stage = stage;
    res.parameters = detail::canonical_parameters(stage, outcomes[best].x);
    const StagePoint pt = stage_point(stage, res.parameters);
    res.settings = pt.settings;
    res.tau = pt.tau;
    res.s_value = objective(res.parameters);
    StateParams conditioned = state;
    conditioned.p = 0.0;
    res.s_prime_value = StageObjective(stage, conditioned, errors)(res.parameters);
    res.n_restarts_used = used;
    res.evaluations = evaluations;
    res.stopped_early = stopped && used < starts.size();
    res.converged = parameter_count(stage) == 0 || (values.size() >= 2 && values[0] - values[1] <= opts.agreement_tol);
    return res;
}

}  // namespace vchsh
