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
#include <functional>
#include <locale>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "vchsh/analytic.hpp"
#include "vchsh/model.hpp"
#include "vchsh/optimizer.hpp"

namespace vchsh {

/// S must exceed 2 by more than this to count as a violation. Roundoff guard only.
inline constexpr double kViolationMargin = 1e-12;

/// Column-named numeric table, written as CSV with 12 significant digits.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) {
            throw std::out_of_range("no column '" + std::string(name) + "'");
        }
        return static_cast<std::size_t>(it - columns.begin());
    }

    void write_csv(std::ostream &out) const {
        std::ostringstream s;
        s.imbue(std::locale::classic());
        s.precision(12);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            s << (i ? "," : "") << columns[i];
        }
        s << '\n';
        for (const auto &row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                s << (i ? "," : "") << row[i];
            }
            s << '\n';
        }
        out << s.str();
    }

    std::string csv() const {
        std::ostringstream s;
        write_csv(s);
        return s.str();
    }
};

/// Label used for a number inside a column name, e.g. "q=0.25".
inline std::string format_label(double x) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s.precision(6);
    s << x;
    return s.str();
}

/// start, start+step, ... up to stop inclusive (within 1e-9 of a step).
inline std::vector<double> inclusive_grid(double start, double stop, double step) {
    if (!(step > 0) || !(stop >= start)) {
        throw std::invalid_argument("grid needs step > 0 and stop >= start");
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> g;
    for (std::size_t i = 0; i <= n; ++i) {
        g.push_back(start + static_cast<double>(i) * step);
    }
    return g;
}

/// P_v grid standing in for "every vacancy rate below 1": 0.01, 0.02, ..., 0.99.
inline std::vector<double> full_range_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 99; ++i) {
        g.push_back(i / 100.0);
    }
    return g;
}

namespace detail {

// Runs fn(i) for i in [0, n); results land in slot i, so the output is
// independent of thread scheduling.
template <class T, class F>
std::vector<T> indexed_map(std::size_t n, std::size_t threads, F &&fn) {
    std::vector<T> out(n);
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = fn(i);
        }
        return out;
    }
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) {
                out[i] = fn(i);
            }
        });
    }
    workers.clear();
    return out;
}

inline OptOptions single_threaded(OptOptions o) {
    o.threads = 1;
    return o;
}

}  // namespace detail

inline double s_opt(Stage stage, const StateParams &state, const ErrorParams &errors, const OptOptions &opts) {
    return optimize(stage, state, errors, opts).s_value;
}

/// True when some settings of the stage push S above 2. Stops at the first restart that does.
inline bool violates(Stage stage, const StateParams &state, const ErrorParams &errors, OptOptions opts) {
    opts.stop_above = 2.0 + kViolationMargin;
    return optimize(stage, state, errors, opts).s_value > 2.0 + kViolationMargin;
}

enum class ThresholdStatus {
    Crossing,             // predicate flips inside the searched interval
    NoViolation,          // predicate false already at the favourable end
    ViolationEverywhere,  // predicate true across the whole interval
};

constexpr std::string_view status_name(ThresholdStatus s) {
    switch (s) {
    case ThresholdStatus::Crossing:
        return "crossing";
    case ThresholdStatus::NoViolation:
        return "no-violation";
    case ThresholdStatus::ViolationEverywhere:
        return "violation-everywhere";
    }
    return "";
}

struct ThresholdResult {
    ThresholdStatus status = ThresholdStatus::Crossing;
    /// Midpoint of the final bracket, or the last point searched when there is no crossing.
    double value = 0.0;
    /// Last parameter where the predicate held, and first where it failed.
    double good = 0.0;
    double bad = 0.0;
    std::size_t predicate_calls = 0;
};

/// Walks `scan` (ordered from the favourable end) to the first point where
/// `pred` fails, then bisects between it and its predecessor down to `tol`.
inline ThresholdResult scan_then_bisect(const std::function<bool(double)> &pred, const std::vector<double> &scan,
                                        double tol) {
    if (scan.empty() || !(tol > 0)) {
        throw std::invalid_argument("threshold search needs a non-empty scan and tol > 0");
    }
    ThresholdResult res;
    auto call = [&](double x) {
        ++res.predicate_calls;
        return pred(x);
    };
    if (!call(scan.front())) {
        res.status = ThresholdStatus::NoViolation;
        res.value = res.bad = scan.front();
        return res;
    }
    double good = scan.front();
    std::size_t i = 1;
    for (; i < scan.size(); ++i) {
        if (!call(scan[i])) {
            break;
        }
        good = scan[i];
    }
    if (i == scan.size()) {
        res.status = ThresholdStatus::ViolationEverywhere;
        res.value = res.good = good;
        return res;
    }
    double bad = scan[i];
    while (std::abs(bad - good) > tol) {
        const double mid = 0.5 * (good + bad);
        (call(mid) ? good : bad) = mid;
    }
    res.status = ThresholdStatus::Crossing;
    res.good = good;
    res.bad = bad;
    res.value = 0.5 * (good + bad);
    return res;
}

/// Largest equal-and-independent vacancy rate at which the stage still violates.
inline ThresholdResult critical_vacancy(Stage stage, const ErrorParams &errors, const OptOptions &opts = {},
                                        double tol = 1e-4, double scan_step = 0.01) {
    std::vector<double> scan = inclusive_grid(0.0, 1.0 - tol, scan_step);
    if (scan.back() < 1.0 - tol) {
        scan.push_back(1.0 - tol);
    }
    auto pred = [&](double pv) { return violates(stage, vacancy_model_map({pv}), errors, opts); };
    return scan_then_bisect(pred, scan, tol);
}

enum class EtaKind {
    FullRange,  // violation at every P_v of full_range_grid()
    Any,        // violation at P_v = 0
};

/// Smallest detection efficiency that still yields a violation.
inline ThresholdResult eta_threshold(EtaKind kind, Stage stage, const OptOptions &opts = {}, double tol = 1e-4,
                                     double scan_step = 0.05) {
    if (stage != Stage::FreeInPlane && stage != Stage::FreeSphere && stage != Stage::FreeSphereWithInput) {
        throw std::invalid_argument("eta_threshold: stage must be free-in-plane, free-sphere or free-sphere-input");
    }
    std::vector<double> scan = inclusive_grid(0.0, 1.0, scan_step);
    if (scan.back() < 1.0) {
        scan.push_back(1.0);
    }
    std::reverse(scan.begin(), scan.end());
    const std::vector<double> pvs = kind == EtaKind::Any ? std::vector<double>{0.0} : full_range_grid();
    auto pred = [&](double eta) {
        // Highest vacancy first: that is where a failure usually shows up.
        for (auto it = pvs.rbegin(); it != pvs.rend(); ++it) {
            if (!violates(stage, vacancy_model_map({*it}), {eta, 0.0}, opts)) {
                return false;
            }
        }
        return true;
    };
    return scan_then_bisect(pred, scan, tol);
}

enum class EpsilonKind {
    Any,           // fixed |+>|+> input
    AnyWithInput,  // input angle optimized too
};

/// Largest dark-count rate that still yields a violation at P_v = 0.
inline ThresholdResult epsilon_threshold(EpsilonKind kind, const OptOptions &opts = {}, double tol = 1e-4,
                                         double scan_step = 0.05) {
    const Stage stage = kind == EpsilonKind::Any ? Stage::FreeSphere : Stage::FreeSphereWithInput;
    std::vector<double> scan = inclusive_grid(0.0, 1.0, scan_step);
    if (scan.back() < 1.0) {
        scan.push_back(1.0);
    }
    auto pred = [&](double eps) { return violates(stage, StateParams{}, {1.0, eps}, opts); };
    return scan_then_bisect(pred, scan, tol);
}

/// S'_opt (free in-plane settings, p = 0) per r, one column per q.
inline Table r_sweep(const std::vector<double> &q_values, const std::vector<double> &r_grid,
                     const OptOptions &opts = {}) {
    Table t;
    t.columns.push_back("r");
    for (double q : q_values) {
        t.columns.push_back("q=" + format_label(q));
    }
    t.rows = detail::indexed_map<std::vector<double>>(r_grid.size(), opts.threads, [&](std::size_t i) {
        std::vector<double> row{r_grid[i]};
        for (double q : q_values) {
            row.push_back(s_opt(Stage::FreeInPlane, {0.0, q, r_grid[i]}, {}, detail::single_threaded(opts)));
        }
        return row;
    });
    return t;
}

/// S'(q) with settings frozen at the optimum for an assumed q', r = 0. The
/// last column is the optimum at the true q for comparison.
inline Table robustness_q(const std::vector<double> &q_primes, const std::vector<double> &q_grid,
                          const OptOptions &opts = {}) {
    for (double x : q_primes) {
        if (!(x >= 0 && x < 1)) {
            throw std::invalid_argument("robustness_q: q' must lie in [0, 1)");
        }
    }
    const OptOptions inner = detail::single_threaded(opts);
    const auto frozen = detail::indexed_map<std::vector<double>>(q_primes.size(), opts.threads, [&](std::size_t i) {
        return optimize(Stage::FreeInPlane, {0.0, q_primes[i], 0.0}, {}, inner).parameters;
    });
    Table t;
    t.columns.push_back("q");
    for (double x : q_primes) {
        t.columns.push_back("q'=" + format_label(x));
    }
    t.columns.push_back("optimal");
    t.rows = detail::indexed_map<std::vector<double>>(q_grid.size(), opts.threads, [&](std::size_t i) {
        const StateParams s{0.0, q_grid[i], 0.0};
        std::vector<double> row{q_grid[i]};
        for (const auto &x : frozen) {
            row.push_back(evaluate_stage_objective(Stage::FreeInPlane, x, s, {}));
        }
        row.push_back(s_opt(Stage::FreeInPlane, s, {}, inner));
        return row;
    });
    return t;
}

/// One curve of a vacancy-rate sweep.
struct Series {
    std::string name;
    Stage stage = Stage::FreeInPlane;
    ErrorParams errors{};
};

/// S_opt against P_v for each series, plus the mixture upper bound.
inline Table pv_sweep(const std::vector<Series> &series, const std::vector<double> &pv_grid,
                      const OptOptions &opts = {}) {
    Table t;
    t.columns.push_back("P_v");
    for (const auto &s : series) {
        t.columns.push_back(s.name);
    }
    t.columns.push_back("upper_bound");
    const OptOptions inner = detail::single_threaded(opts);
    t.rows = detail::indexed_map<std::vector<double>>(pv_grid.size(), opts.threads, [&](std::size_t i) {
        const StateParams state = vacancy_model_map({pv_grid[i]});
        std::vector<double> row{pv_grid[i]};
        for (const auto &s : series) {
            row.push_back(s_opt(s.stage, state, s.errors, inner));
        }
        row.push_back(upper_bound(state.separable_fraction()));
        return row;
    });
    return t;
}

enum class SweepVariable { VacancyRate, Q, R, Eta, Epsilon };

inline constexpr std::string_view variable_name(SweepVariable v) {
    switch (v) {
    case SweepVariable::VacancyRate:
        return "P_v";
    case SweepVariable::Q:
        return "q";
    case SweepVariable::R:
        return "r";
    case SweepVariable::Eta:
        return "eta";
    case SweepVariable::Epsilon:
        return "epsilon";
    }
    return "";
}

inline SweepVariable parse_variable(std::string_view s) {
    for (auto v : {SweepVariable::VacancyRate, SweepVariable::Q, SweepVariable::R, SweepVariable::Eta,
                   SweepVariable::Epsilon}) {
        if (variable_name(v) == s) {
            return v;
        }
    }
    if (s == "pv") {
        return SweepVariable::VacancyRate;
    }
    throw std::invalid_argument("unknown sweep variable '" + std::string(s) + "'");
}

struct SweepSpec {
    SweepVariable variable = SweepVariable::VacancyRate;
    std::vector<double> grid;
    StateParams fixed_state{};
    ErrorParams fixed_errors{};
    std::vector<Stage> stages{Stage::FreeInPlane};
    OptOptions opts{};
};

/// General one-variable sweep. Columns: the variable, one per stage, then the
/// mixture upper bound when the variable changes the state.
inline Table sweep(const SweepSpec &spec) {
    if (spec.grid.empty() || spec.stages.empty()) {
        throw std::invalid_argument("sweep needs a grid and at least one stage");
    }
    const bool state_var = spec.variable == SweepVariable::VacancyRate || spec.variable == SweepVariable::Q ||
                           spec.variable == SweepVariable::R;
    auto point = [&](double x) {
        StateParams s = spec.fixed_state;
        ErrorParams e = spec.fixed_errors;
        switch (spec.variable) {
        case SweepVariable::VacancyRate: {
            const double tau = s.tau;
            s = vacancy_model_map({x});
            s.tau = tau;
            break;
        }
        case SweepVariable::Q:
            s.q = x;
            break;
        case SweepVariable::R:
            s.r = x;
            break;
        case SweepVariable::Eta:
            e.eta = x;
            break;
        case SweepVariable::Epsilon:
            e.epsilon = x;
            break;
        }
        s.validate();
        e.validate();
        return std::pair{s, e};
    };
    for (double x : spec.grid) {
        point(x);  // reject out-of-domain grids before any work
    }

    Table t;
    t.columns.push_back(std::string(variable_name(spec.variable)));
    for (Stage st : spec.stages) {
        t.columns.push_back(std::string(stage_name(st)));
    }
    if (state_var) {
        t.columns.push_back("upper_bound");
    }
    const OptOptions inner = detail::single_threaded(spec.opts);
    t.rows = detail::indexed_map<std::vector<double>>(spec.grid.size(), spec.opts.threads, [&](std::size_t i) {
        const auto [s, e] = point(spec.grid[i]);
        std::vector<double> row{spec.grid[i]};
        for (Stage st : spec.stages) {
            row.push_back(s_opt(st, s, e, inner));
        }
        if (state_var) {
            row.push_back(upper_bound(s.separable_fraction()));
        }
        return row;
    });
    return t;
}

}  // namespace vchsh
