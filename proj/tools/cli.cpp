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

#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <sstream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "vchsh/experiments.hpp"
#include "vchsh/verify.hpp"

namespace vchsh::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char *const kCommands[] = {"eval", "optimize", "sweep", "threshold", "verify", "reproduce"};

std::string fmt12(double x) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s.precision(12);
    s << x;
    return s.str();
}

std::string fixed4(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

// Bracket ends that a search never reached are left blank.
std::string bracket_good(const ThresholdResult &r) {
    return r.status == ThresholdStatus::NoViolation ? "" : fmt12(r.good);
}
std::string bracket_bad(const ThresholdResult &r) {
    return r.status == ThresholdStatus::ViolationEverywhere ? "" : fmt12(r.bad);
}
json bracket_json(const ThresholdResult &r) {
    json g = r.status == ThresholdStatus::NoViolation ? json(nullptr) : json(r.good);
    json b = r.status == ThresholdStatus::ViolationEverywhere ? json(nullptr) : json(r.bad);
    return json::array({g, b});
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        parts.push_back(cur);
    }
    return parts;
}

double parse_number(const std::string &key, const std::string &text) {
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    double v;
    in >> v;
    if (!in || !(in >> std::ws).eof()) {
        throw ConfigError(key, "'" + text + "' is not a number");
    }
    return v;
}

/// "start:stop:step" or "x1,x2,...".
std::vector<double> parse_grid(const std::string &text) {
    const auto colon = split(text, ':');
    if (colon.size() == 3) {
        try {
            return inclusive_grid(parse_number("grid", colon[0]), parse_number("grid", colon[1]),
                                  parse_number("grid", colon[2]));
        } catch (const std::invalid_argument &e) {
            throw ConfigError("grid", e.what());
        }
    }
    if (colon.size() != 1) {
        throw ConfigError("grid", "expected start:stop:step or a comma list");
    }
    std::vector<double> g;
    for (const auto &s : split(text, ',')) {
        g.push_back(parse_number("grid", s));
    }
    if (g.empty()) {
        throw ConfigError("grid", "empty grid");
    }
    return g;
}

std::vector<Stage> parse_stages(const std::string &text) {
    std::vector<Stage> out;
    for (const auto &s : split(text, ',')) {
        try {
            out.push_back(parse_stage(s));
        } catch (const std::invalid_argument &e) {
            throw ConfigError("stage", e.what());
        }
    }
    if (out.empty()) {
        throw ConfigError("stage", "no stage given");
    }
    return out;
}

Stage single_stage(const RunConfig &c, Stage fallback) {
    if (!c.stage) {
        return fallback;
    }
    const auto stages = parse_stages(*c.stage);
    if (stages.size() != 1) {
        throw ConfigError("stage", "this command takes a single stage");
    }
    return stages.front();
}

void check_range(const std::string &key, const std::optional<double> &v, double lo, double hi, bool open_hi = false) {
    if (!v) {
        return;
    }
    const bool ok = std::isfinite(*v) && *v >= lo && (open_hi ? *v < hi : *v <= hi);
    if (!ok) {
        std::ostringstream s;
        s << "value " << *v << " outside [" << lo << ", " << hi << (open_hi ? ")" : "]");
        throw ConfigError(key, s.str());
    }
}

StateParams resolve_state(const RunConfig &c) {
    check_range("p", c.p, 0, 1);
    check_range("q", c.q, 0, 1);
    check_range("r", c.r, -1, 1);
    check_range("pv", c.pv, 0, 1, true);
    if (c.tau && !std::isfinite(*c.tau)) {
        throw ConfigError("tau", "must be finite");
    }
    StateParams s;
    if (c.pv) {
        if (c.p || c.q || c.r) {
            throw ConfigError("pv", "cannot be combined with --p, --q or --r");
        }
        s = vacancy_model_map({*c.pv});
    } else {
        s.p = c.p.value_or(0.0);
        s.q = c.q.value_or(0.0);
        s.r = c.r.value_or(0.0);
    }
    s.tau = c.tau.value_or(kPi / 4);
    return s;
}

ErrorParams resolve_errors(const RunConfig &c) {
    check_range("eta", c.eta, 0, 1);
    check_range("epsilon", c.epsilon, 0, 1);
    return {c.eta.value_or(1.0), c.epsilon.value_or(0.0)};
}

OptOptions resolve_opts(const RunConfig &c) {
    OptOptions o;
    o.seed = c.seed.value_or(0);
    o.restarts = c.restarts.value_or(64);
    if (o.restarts == 0) {
        throw ConfigError("restarts", "must be positive");
    }
    o.threads = c.threads.value_or(1);
    if (o.threads == 0) {
        throw ConfigError("threads", "must be positive");
    }
    return o;
}

double resolve_tol(const RunConfig &c) {
    const double tol = c.tol.value_or(1e-4);
    if (!(tol > 0 && tol < 0.5)) {
        throw ConfigError("tol", "must lie in (0, 0.5)");
    }
    return tol;
}

std::string resolve_format(const RunConfig &c, const std::string &fallback) {
    const std::string f = c.format.value_or(fallback);
    if (f != "csv" && f != "json" && f != "text") {
        throw ConfigError("format", "expected csv, json or text, got '" + f + "'");
    }
    return f;
}

json setting_json(const char *name, const MeasurementSetting &s) {
    json j;
    j["name"] = name;
    std::visit(
        [&](const auto &v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, InPlane>) {
                j["type"] = "in-plane";
                j["chi"] = v.chi;
            } else if constexpr (std::is_same_v<T, Polar>) {
                j["type"] = "polar";
                j["theta"] = v.theta;
                j["phi"] = v.phi;
            } else {
                j["type"] = "axis-angle";
                j["alpha"] = v.alpha;
                j["axis_theta"] = v.axis_theta;
                j["axis_phi"] = v.axis_phi;
            }
        },
        s);
    const Bloch b = resolve_direction(s);
    j["bloch"] = {b.x(), b.y(), b.z()};
    return j;
}

json settings_json(const SettingsQuad &q) {
    return json::array({setting_json("a", q.a), setting_json("a_prime", q.a_prime), setting_json("b", q.b),
                        setting_json("b_prime", q.b_prime)});
}

std::string setting_text(const MeasurementSetting &s) {
    return std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, InPlane>) {
                return "chi=" + fmt12(v.chi);
            } else if constexpr (std::is_same_v<T, Polar>) {
                return "theta=" + fmt12(v.theta) + " phi=" + fmt12(v.phi);
            } else {
                return "alpha=" + fmt12(v.alpha) + " axis=(" + fmt12(v.axis_theta) + ", " + fmt12(v.axis_phi) + ")";
            }
        },
        s);
}

std::string settings_text(const SettingsQuad &q) {
    return "a: " + setting_text(q.a) + "\na': " + setting_text(q.a_prime) + "\nb: " + setting_text(q.b) +
           "\nb': " + setting_text(q.b_prime) + "\n";
}

/// Writes to --out when given, stdout otherwise.
void emit(const RunConfig &c, std::ostream &out, const std::string &text) {
    if (c.out) {
        std::ofstream f(*c.out, std::ios::binary);
        if (!f) {
            throw ConfigError("out", "cannot open '" + *c.out + "' for writing");
        }
        f << text;
    } else {
        out << text;
    }
}

std::string table_text(const Table &t, const std::string &format) {
    if (format == "json") {
        json j;
        j["columns"] = t.columns;
        j["rows"] = t.rows;
        return j.dump(2) + "\n";
    }
    return t.csv();
}

SettingsQuad parse_settings(const std::string &text) {
    if (text == "conventional") {
        return conventional_quad();
    }
    std::vector<double> v;
    for (const auto &s : split(text, ',')) {
        v.push_back(parse_number("settings", s));
    }
    if (v.size() == 4) {
        return {InPlane{v[0]}, InPlane{v[1]}, InPlane{v[2]}, InPlane{v[3]}};
    }
    if (v.size() == 8) {
        return {Polar{v[0], v[1]}, Polar{v[2], v[3]}, Polar{v[4], v[5]}, Polar{v[6], v[7]}};
    }
    throw ConfigError("settings", "expected 'conventional', 4 in-plane angles or 8 polar angles");
}

int cmd_eval(const RunConfig &c, std::ostream &out) {
    const StateParams state = resolve_state(c);
    const ErrorParams errors = resolve_errors(c);
    const SettingsQuad quad = parse_settings(c.settings.value_or("conventional"));
    const double s = chsh_S(build_density(state), quad, errors);
    StateParams conditioned = state;
    conditioned.p = 0.0;
    const double sp = chsh_S(build_density(conditioned), quad, errors);
    const std::string format = resolve_format(c, "text");
    if (format == "json") {
        json j{{"value", s}, {"s_prime", sp}, {"settings", settings_json(quad)}, {"tau", state.tau}};
        emit(c, out, j.dump(2) + "\n");
    } else if (format == "csv") {
        emit(c, out, "S,S_prime\n" + fmt12(s) + "," + fmt12(sp) + "\n");
    } else {
        emit(c, out, "S = " + fmt12(s) + "\nS' = " + fmt12(sp) + "\n");
    }
    return kExitOk;
}

int cmd_optimize(const RunConfig &c, std::ostream &out, std::ostream &err) {
    const Stage stage = single_stage(c, Stage::FreeInPlane);
    const StateParams state = resolve_state(c);
    const ErrorParams errors = resolve_errors(c);
    const OptOptions opts = resolve_opts(c);
    const OptResult r = optimize(stage, state, errors, opts);
    const double tau = r.tau.value_or(state.tau);
    const std::string format = resolve_format(c, "text");
    if (format == "json") {
        json j{{"value", r.s_value},
               {"s_prime", r.s_prime_value},
               {"stage", stage_name(stage)},
               {"settings", settings_json(r.settings)},
               {"parameters", r.parameters},
               {"tau", tau},
               {"seed", opts.seed},
               {"restarts", r.n_restarts_used},
               {"converged", r.converged}};
        emit(c, out, j.dump(2) + "\n");
    } else if (format == "csv") {
        std::string head = "value,s_prime,tau,converged";
        std::string row = fmt12(r.s_value) + "," + fmt12(r.s_prime_value) + "," + fmt12(tau) + "," +
                          (r.converged ? "1" : "0");
        for (std::size_t i = 0; i < r.parameters.size(); ++i) {
            head += ",param_" + std::to_string(i);
            row += "," + fmt12(r.parameters[i]);
        }
        emit(c, out, head + "\n" + row + "\n");
    } else {
        emit(c, out,
             "stage = " + std::string(stage_name(stage)) + "\nS = " + fmt12(r.s_value) + "\nS' = " +
                 fmt12(r.s_prime_value) + "\ntau = " + fmt12(tau) + "\n" + settings_text(r.settings) +
                 "converged = " + (r.converged ? "true" : "false") + "\n");
    }
    if (!r.converged) {
        err << "optimize: not converged for stage " << stage_name(stage) << " after " << r.n_restarts_used
            << " restarts (best two restarts differ by more than " << opts.agreement_tol << ")\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int cmd_sweep(const RunConfig &c, std::ostream &out) {
    if (!c.grid) {
        throw ConfigError("grid", "sweep requires a grid");
    }
    SweepSpec spec;
    try {
        spec.variable = parse_variable(c.variable.value_or("P_v"));
    } catch (const std::invalid_argument &e) {
        throw ConfigError("variable", e.what());
    }
    spec.grid = parse_grid(*c.grid);
    if (spec.variable == SweepVariable::VacancyRate) {
        if (c.pv) {
            throw ConfigError("pv", "is the swept variable; drop it");
        }
        RunConfig rest = c;
        rest.p.reset();
        rest.q.reset();
        rest.r.reset();
        spec.fixed_state = resolve_state(rest);
    } else {
        spec.fixed_state = resolve_state(c);
    }
    spec.fixed_errors = resolve_errors(c);
    spec.stages = c.stage ? parse_stages(*c.stage) : std::vector<Stage>{Stage::FreeInPlane};
    spec.opts = resolve_opts(c);
    Table t;
    try {
        t = sweep(spec);
    } catch (const std::invalid_argument &e) {
        throw ConfigError("grid", e.what());
    }
    emit(c, out, table_text(t, resolve_format(c, "csv")));
    return kExitOk;
}

struct ThresholdRun {
    std::string kind;
    Stage stage;
    ThresholdResult result;
    OptResult at_good;
};

ThresholdRun run_threshold(const std::string &kind, std::optional<Stage> stage_arg, const ErrorParams &errors,
                           const OptOptions &opts, double tol) {
    ThresholdRun run{kind, Stage::Conventional, {}, {}};
    if (kind == "critical-vacancy") {
        run.stage = stage_arg.value_or(Stage::Conventional);
        run.result = critical_vacancy(run.stage, errors, opts, tol);
        run.at_good = optimize(run.stage, vacancy_model_map({run.result.good}), errors, opts);
    } else if (kind == "eta-full-range" || kind == "eta-any") {
        run.stage = stage_arg.value_or(Stage::FreeSphere);
        const bool full = kind == "eta-full-range";
        try {
            run.result = eta_threshold(full ? EtaKind::FullRange : EtaKind::Any, run.stage, opts, tol);
        } catch (const std::invalid_argument &e) {
            throw ConfigError("stage", e.what());
        }
        const double pv = full ? full_range_grid().back() : 0.0;
        run.at_good = optimize(run.stage, vacancy_model_map({pv}), {run.result.good, 0.0}, opts);
    } else if (kind == "epsilon-any" || kind == "epsilon-any-with-input") {
        const bool with_input = kind == "epsilon-any-with-input";
        run.stage = with_input ? Stage::FreeSphereWithInput : Stage::FreeSphere;
        if (stage_arg && *stage_arg != run.stage) {
            throw ConfigError("stage", "kind " + kind + " always uses stage " + std::string(stage_name(run.stage)));
        }
        run.result = epsilon_threshold(with_input ? EpsilonKind::AnyWithInput : EpsilonKind::Any, opts, tol);
        run.at_good = optimize(run.stage, StateParams{}, {1.0, run.result.good}, opts);
    } else {
        throw ConfigError("kind", "expected critical-vacancy, eta-full-range, eta-any, epsilon-any or "
                                  "epsilon-any-with-input, got '" + kind + "'");
    }
    return run;
}

int cmd_threshold(const RunConfig &c, std::ostream &out) {
    if (!c.kind) {
        throw ConfigError("kind", "threshold requires --kind");
    }
    std::optional<Stage> stage;
    if (c.stage) {
        stage = single_stage(c, Stage::Conventional);
    }
    const OptOptions opts = resolve_opts(c);
    const ThresholdRun run = run_threshold(*c.kind, stage, resolve_errors(c), opts, resolve_tol(c));
    const auto &r = run.result;
    const std::string format = resolve_format(c, "text");
    if (format == "json") {
        json j{{"value", round4(r.value)},
               {"kind", run.kind},
               {"stage", stage_name(run.stage)},
               {"status", status_name(r.status)},
               {"bracket", bracket_json(r)},
               {"settings", settings_json(run.at_good.settings)},
               {"tau", run.at_good.tau.value_or(kPi / 4)},
               {"seed", opts.seed},
               {"converged", run.at_good.converged}};
        emit(c, out, j.dump(2) + "\n");
    } else if (format == "csv") {
        emit(c, out, "kind,stage,status,value,bracket_good,bracket_bad\n" + run.kind + "," +
                         std::string(stage_name(run.stage)) + "," + std::string(status_name(r.status)) + "," +
                         fixed4(r.value) + "," + bracket_good(r) + "," + bracket_bad(r) + "\n");
    } else {
        emit(c, out, run.kind + " (" + std::string(stage_name(run.stage)) + "): " + fixed4(r.value) + " [" +
                         std::string(status_name(r.status)) + ", bracket " + bracket_good(r) + " .. " + bracket_bad(r) +
                         "]\n");
    }
    return kExitOk;
}

int cmd_verify(const RunConfig &c, std::ostream &out) {
    const std::size_t trials = c.trials.value_or(1000);
    if (trials == 0) {
        throw ConfigError("trials", "must be positive");
    }
    const auto rep = oracle_analytic_equivalence(trials, c.seed.value_or(0));
    const bool ok = rep.max_general_gap < 1e-10 && rep.max_inplane_gap < 1e-12;
    const std::string format = resolve_format(c, "text");
    if (format == "json") {
        json j{{"trials", trials},
               {"seed", c.seed.value_or(0)},
               {"max_oracle_gap", rep.max_general_gap},
               {"max_inplane_gap", rep.max_inplane_gap},
               {"pass", ok}};
        emit(c, out, j.dump(2) + "\n");
    } else if (format == "csv") {
        emit(c, out, "trials,max_oracle_gap,max_inplane_gap,pass\n" + std::to_string(trials) + "," +
                         fmt12(rep.max_general_gap) + "," + fmt12(rep.max_inplane_gap) + "," + (ok ? "1" : "0") +
                         "\n");
    } else {
        emit(c, out, "trials = " + std::to_string(trials) + "\nmax |S_oracle - S_analytic| = " +
                         fmt12(rep.max_general_gap) + "\nmax |in-plane - general| = " + fmt12(rep.max_inplane_gap) +
                         "\n" + (ok ? "PASS" : "FAIL") + "\n");
    }
    return ok ? kExitOk : kExitNotConverged;
}

void write_file(const fs::path &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("out", "cannot write '" + path.string() + "'");
    }
    f << text;
}

int cmd_reproduce(const RunConfig &c, std::ostream &out) {
    if (!c.out) {
        throw ConfigError("out", "reproduce requires an output directory");
    }
    const OptOptions opts = resolve_opts(c);
    const double tol = resolve_tol(c);
    const fs::path dir(*c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("out", "cannot create '" + dir.string() + "': " + ec.message());
    }

    json manifest;
    manifest["tool"] = "vchsh reproduce";
    manifest["version"] = "0.1.0";
    manifest["seed"] = opts.seed;
    manifest["restarts"] = opts.restarts;
    manifest["threshold_tolerance"] = tol;
    manifest["violation_margin"] = kViolationMargin;
    manifest["convergence_agreement"] = opts.agreement_tol;
    json files = json::array();
    auto save = [&](const std::string &name, const std::string &text, const std::string &what) {
        write_file(dir / name, text);
        files.push_back({{"file", name}, {"content", what}});
        out << "wrote " << (dir / name).string() << "\n";
    };

    const auto pv_fine = inclusive_grid(0.0, 0.99, 0.01);
    const auto pv_coarse = inclusive_grid(0.0, 0.95, 0.05);

    save("fig3.csv",
         pv_sweep({{"conventional", Stage::Conventional, {}},
                   {"global-shift", Stage::GlobalShift, {}},
                   {"pair-shifts", Stage::PairShifts, {}},
                   {"free-in-plane", Stage::FreeInPlane, {}}},
                  pv_fine, opts)
             .csv(),
         "S_opt vs P_v per optimization stage, ideal detection");

    save("fig5.csv", r_sweep({0.25, 0.5, 0.75}, inclusive_grid(-1.0, 1.0, 0.05), opts).csv(),
         "S'_opt (free-in-plane) vs r at fixed q");

    save("fig6.csv", robustness_q({0.2, 0.4, 0.6, 0.8, 0.99}, pv_fine, opts).csv(),
         "S'(q) with settings frozen at the optimum for q'");

    std::vector<Series> fig7;
    for (double eta : {1.0, 0.95, 0.9, 0.869, 0.85}) {
        fig7.push_back({"eta=" + format_label(eta), Stage::FreeSphere, {eta, 0.0}});
    }
    fig7.push_back({"eta=0.68 input-optimized", Stage::FreeSphereWithInput, {0.68, 0.0}});
    save("fig7.csv", pv_sweep(fig7, pv_coarse, opts).csv(), "S_opt vs P_v under detector inefficiency");

    SweepSpec fig8;
    fig8.variable = SweepVariable::Eta;
    fig8.grid = inclusive_grid(0.6, 1.0, 0.01);
    fig8.stages = {Stage::FreeSphere, Stage::FreeSphereWithInput};
    fig8.opts = opts;
    save("fig8.csv", sweep(fig8).csv(), "S_opt vs eta at P_v = 0, fixed and optimized input");

    std::vector<Series> fig9;
    for (double eps : {0.0, 0.01, 0.05, 0.1, 0.17}) {
        fig9.push_back({"epsilon=" + format_label(eps), Stage::FreeSphere, {1.0, eps}});
    }
    fig9.push_back({"epsilon=0.32 input-optimized", Stage::FreeSphereWithInput, {1.0, 0.32}});
    save("fig9.csv", pv_sweep(fig9, pv_coarse, opts).csv(), "S_opt vs P_v under dark counts");

    std::ostringstream th;
    th.imbue(std::locale::classic());
    th << "quantity,stage,status,value,bracket_good,bracket_bad,reference\n";
    auto row = [&](const std::string &kind, std::optional<Stage> stage, const ErrorParams &e, const char *ref) {
        const ThresholdRun run = run_threshold(kind, stage, e, opts, tol);
        th << kind << "," << stage_name(run.stage) << "," << status_name(run.result.status) << ","
           << fixed4(run.result.value) << "," << bracket_good(run.result) << "," << bracket_bad(run.result) << "," << ref
           << "\n";
    };
    row("critical-vacancy", Stage::Conventional, {}, "0.153");
    row("critical-vacancy", Stage::GlobalShift, {}, "0.251");
    row("critical-vacancy", Stage::PairShifts, {}, "0.269");
    row("critical-vacancy", Stage::FreeInPlane, {}, "<1");
    row("eta-full-range", Stage::FreeSphere, {}, "0.869");
    row("eta-any", Stage::FreeSphere, {}, "0.8284");
    row("eta-any", Stage::FreeSphereWithInput, {}, "0.68");
    row("epsilon-any", std::nullopt, {}, "0.1716");
    row("epsilon-any-with-input", std::nullopt, {}, "0.32");
    const OptResult shift = optimize(Stage::GlobalShift, vacancy_model_map({0.2}), {}, opts);
    th << "global-shift-angle,global-shift,optimum," << fixed4(shift.parameters[0]) << ","
       << fmt12(shift.parameters[0]) << "," << fmt12(shift.parameters[0]) << ",1.9635\n";
    save("thresholds.csv", th.str(), "threshold searches with the published reference values");

    manifest["files"] = files;
    manifest["grids"] = {{"fig3_pv", "0:0.99:0.01"},  {"fig5_r", "-1:1:0.05"},      {"fig6_q", "0:0.99:0.01"},
                         {"fig7_pv", "0:0.95:0.05"},  {"fig8_eta", "0.6:1:0.01"},    {"fig9_pv", "0:0.95:0.05"},
                         {"full_range_pv", "0.01:0.99:0.01"}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    out << "wrote " << (dir / "manifest.json").string() << "\n";
    return kExitOk;
}

struct HelpRequested {
    std::string text;
};

template <class T>
void flag(CLI::App &app, const std::string &name, std::optional<T> &slot, const std::string &desc) {
    app.add_option_function<T>("--" + name, [&slot](const T &v) { slot = v; }, desc);
}

}  // namespace

const std::vector<std::string> &config_keys() {
    static const std::vector<std::string> keys{"p",        "q",     "r",      "tau",    "pv",     "eta",
                                               "epsilon",  "stage", "seed",   "restarts", "tol",  "grid",
                                               "out",      "format", "settings", "kind", "trials", "variable",
                                               "threads"};
    return keys;
}

RunConfig parse_flags(const std::vector<std::string> &args) {
    RunConfig c;
    CLI::App app{"CHSH values with vacancies and incomplete measurements", "vchsh"};
    app.fallthrough();
    app.require_subcommand(1, 1);

    flag(app, "p", c.p, "probability that both sites are vacant");
    flag(app, "q", c.q, "one-particle probability given at least one particle");
    flag(app, "r", c.r, "one-particle asymmetry in [-1, 1]");
    flag(app, "tau", c.tau, "input-state angle in radians (default pi/4)");
    flag(app, "pv", c.pv, "equal and independent per-site vacancy probability");
    flag(app, "eta", c.eta, "detection efficiency P(+1 | |0>)");
    flag(app, "epsilon", c.epsilon, "dark-count probability P(+1 | |1> or |v>)");
    flag(app, "stage", c.stage, "optimization stage, or a comma list for sweep");
    flag(app, "seed", c.seed, "seed for optimizer restarts");
    flag(app, "restarts", c.restarts, "multi-start restart count (default 64)");
    flag(app, "tol", c.tol, "threshold tolerance (default 1e-4)");
    flag(app, "grid", c.grid, "start:stop:step or comma list");
    flag(app, "out", c.out, "output file (directory for reproduce)");
    flag(app, "format", c.format, "csv, json or text");
    flag(app, "config", c.config, "flat JSON config file; flags win over it");
    flag(app, "settings", c.settings, "eval settings: conventional, 4 in-plane or 8 polar angles");
    flag(app, "kind", c.kind, "threshold kind");
    flag(app, "trials", c.trials, "verify trial count");
    flag(app, "variable", c.variable, "sweep variable: P_v, q, r, eta, epsilon");
    flag(app, "threads", c.threads, "worker threads (results do not depend on it)");

    app.add_subcommand("eval", "evaluate S for given settings");
    app.add_subcommand("optimize", "maximize S over a stage's parameters");
    app.add_subcommand("sweep", "optimize S along a one-variable grid");
    app.add_subcommand("threshold", "locate a critical vacancy rate or detector-error threshold");
    app.add_subcommand("verify", "cross-check the closed form against the density-matrix oracle");
    app.add_subcommand("reproduce", "write every figure table and threshold into --out");

    std::vector<const char *> argv;
    argv.push_back("vchsh");
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        throw HelpRequested{app.help()};
    }
    for (const char *name : kCommands) {
        if (app.got_subcommand(name)) {
            c.command = name;
        }
    }
    return c;
}

RunConfig merge_config(RunConfig c, const std::string &json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config", "expected a flat JSON object");
    }
    const auto &keys = config_keys();
    for (const auto &[key, value] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError(key, "unknown config key");
        }
    }
    auto number = [&](const char *key, std::optional<double> &slot) {
        if (!j.contains(key) || slot) {
            return;
        }
        if (!j[key].is_number()) {
            throw ConfigError(key, "expected a number");
        }
        slot = j[key].get<double>();
    };
    auto count = [&](const char *key, auto &slot) {
        if (!j.contains(key) || slot) {
            return;
        }
        if (!j[key].is_number_unsigned()) {
            throw ConfigError(key, "expected a non-negative integer");
        }
        slot = j[key].get<std::uint64_t>();
    };
    auto text = [&](const char *key, std::optional<std::string> &slot) {
        if (!j.contains(key) || slot) {
            return;
        }
        const json &v = j[key];
        if (v.is_string()) {
            slot = v.get<std::string>();
        } else if (v.is_array()) {
            // lists are accepted for grid and stage and joined with commas
            std::string joined;
            for (const auto &e : v) {
                if (e.is_string()) {
                    joined += (joined.empty() ? "" : ",") + e.get<std::string>();
                } else if (e.is_number()) {
                    std::ostringstream s;
                    s.imbue(std::locale::classic());
                    s.precision(17);
                    s << e.get<double>();
                    joined += (joined.empty() ? "" : ",") + s.str();
                } else {
                    throw ConfigError(key, "list entries must be strings or numbers");
                }
            }
            slot = joined;
        } else {
            throw ConfigError(key, "expected a string");
        }
    };
    number("p", c.p);
    number("q", c.q);
    number("r", c.r);
    number("tau", c.tau);
    number("pv", c.pv);
    number("eta", c.eta);
    number("epsilon", c.epsilon);
    number("tol", c.tol);
    count("seed", c.seed);
    count("restarts", c.restarts);
    count("trials", c.trials);
    count("threads", c.threads);
    text("stage", c.stage);
    text("grid", c.grid);
    text("out", c.out);
    text("format", c.format);
    text("settings", c.settings);
    text("kind", c.kind);
    text("variable", c.variable);
    return c;
}

int run(const RunConfig &c, std::ostream &out, std::ostream &err) {
    if (c.command == "eval") {
        return cmd_eval(c, out);
    }
    if (c.command == "optimize") {
        return cmd_optimize(c, out, err);
    }
    if (c.command == "sweep") {
        return cmd_sweep(c, out);
    }
    if (c.command == "threshold") {
        return cmd_threshold(c, out);
    }
    if (c.command == "verify") {
        return cmd_verify(c, out);
    }
    if (c.command == "reproduce") {
        return cmd_reproduce(c, out);
    }
    throw ConfigError("command", "unknown command '" + c.command + "'");
}

int main_entry(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    try {
        RunConfig c = parse_flags(args);
        if (c.config) {
            std::ifstream f(*c.config, std::ios::binary);
            if (!f) {
                throw ConfigError("config", "cannot read '" + *c.config + "'");
            }
            std::stringstream buf;
            buf << f.rdbuf();
            c = merge_config(std::move(c), buf.str());
        }
        return run(c, out, err);
    } catch (const HelpRequested &h) {
        out << h.text;
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace vchsh::cli
