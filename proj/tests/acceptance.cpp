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

// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "vchsh/analytic.hpp"
#include "vchsh/experiments.hpp"
#include "vchsh/verify.hpp"

#ifndef VCHSH_TOOL_PATH
#error "VCHSH_TOOL_PATH must name the command-line binary"
#endif

using namespace vchsh;

namespace {

int failures = 0;

void report(int number, bool ok, const std::string &detail) {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number << ": " << detail << std::endl;
    failures += ok ? 0 : 1;
}

std::string num(double x, int digits = 6) {
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }

void criterion_1() {
    const double analytic = s_prime_inplane(0.0, 0.0, kConventionalAngles);
    const double oracle = chsh_S(build_density({0.0, 0.0, 0.0}), conventional_quad(), {});
    report(1, within(analytic, kTsirelson, 1e-9) && within(oracle, kTsirelson, 1e-9),
           "Tsirelson point analytic=" + num(analytic, 15) + " oracle=" + num(oracle, 15));
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    const EquivalenceReport rep = oracle_analytic_equivalence(1000, 0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(2, rep.max_general_gap < 1e-10 && secs < 30,
           "oracle vs closed form over " + std::to_string(rep.trials) + " trials, max gap " +
               num(rep.max_general_gap, 3) + " in " + num(secs, 3) + " s");
}

void criterion_3() {
    const ThresholdResult c0 = critical_vacancy(Stage::Conventional, {});
    const ThresholdResult c1 = critical_vacancy(Stage::GlobalShift, {});
    const ThresholdResult c2 = critical_vacancy(Stage::PairShifts, {});
    double worst_shift = 0.0;
    for (double pv : {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9}) {
        const OptResult r = optimize(Stage::GlobalShift, vacancy_model_map({pv}), {});
        worst_shift = std::max(worst_shift, std::abs(r.parameters[0] - 5 * kPi / 8));
    }
    std::vector<double> grid = full_range_grid();
    grid.push_back(0.999);
    bool all_violate = true;
    double weakest = 1e9;
    for (double pv : grid) {
        const double s = s_opt(Stage::FreeInPlane, vacancy_model_map({pv}), {}, {});
        weakest = std::min(weakest, s);
        all_violate = all_violate && s > 2.0;
    }
    const bool ok = c0.status == ThresholdStatus::Crossing && within(c0.value, 0.153, 0.002) &&
                    within(c1.value, 0.251, 0.002) && worst_shift <= 1e-3 && within(c2.value, 0.269, 0.002) &&
                    all_violate;
    report(3, ok,
           "critical P_v conventional=" + num(c0.value, 4) + " global-shift=" + num(c1.value, 4) +
               " (max |delta-5pi/8|=" + num(worst_shift, 2) + ") pair-shifts=" + num(c2.value, 4) +
               " free-in-plane min S_opt over P_v<=0.999 = " + num(weakest, 8));
}

void criterion_4() {
    const OptResult r = optimize(Stage::FreeInPlane, vacancy_model_map({0.999}), {});
    const double separable = chsh_S(build_density({0.0, 1.0, 0.0}), r.settings, {});
    std::string angles;
    for (double x : r.parameters) {
        angles += (angles.empty() ? "" : ", ") + num(x, 4);
    }
    report(4, separable >= 1.99 && separable <= 2.0 + 1e-12,
           "separable part at P_v=0.999 gives " + num(separable, 10) + "; angles (" + angles +
               ") vs published (3.139, 1.048, 4.715, 0.523), informational only");
}

void criterion_5() {
    const std::vector<double> qs{0.1, 0.3, 0.5, 0.7, 0.9};
    const Table t = r_sweep(qs, {-1.0, 0.0, 1.0});
    double worst = 0.0, min_dip = 1e9;
    for (std::size_t j = 0; j < qs.size(); ++j) {
        const double bound = 2 * qs[j] + kTsirelson * (1 - qs[j]);
        worst = std::max({worst, std::abs(t.rows[0][j + 1] - bound), std::abs(t.rows[2][j + 1] - bound)});
        min_dip = std::min(min_dip, bound - t.rows[1][j + 1]);
    }
    report(5, worst < 1e-5 && min_dip > 0,
           "max |S'_opt(r=+-1) - bound| = " + num(worst, 3) + ", smallest gap below bound at r=0 = " + num(min_dip, 4));
}

void criterion_6() {
    const ThresholdResult full = eta_threshold(EtaKind::FullRange, Stage::FreeSphere);
    const ThresholdResult any = eta_threshold(EtaKind::Any, Stage::FreeSphere);
    const double at_068 = s_opt(Stage::FreeSphereWithInput, {}, {0.68, 0.0}, {});
    const ThresholdResult input = eta_threshold(EtaKind::Any, Stage::FreeSphereWithInput);
    const bool ok = within(full.value, 0.869, 0.003) && within(any.value, 2 * (kSqrt2 - 1), 0.002) &&
                    at_068 > 2.0 && within(input.value, 0.68, 0.01);
    report(6, ok,
           "eta full-range=" + num(full.value, 4) + " any=" + num(any.value, 4) + " S_opt(eta=0.68, input)=" +
               num(at_068, 8) + " any with input=" + num(input.value, 4) + " (target 0.68 +- 0.01)");
}

void criterion_7() {
    const ThresholdResult any = epsilon_threshold(EpsilonKind::Any);
    const ThresholdResult input = epsilon_threshold(EpsilonKind::AnyWithInput);
    double sector_gap = 0.0;
    bool no_full_range = true;
    for (double eps : {0.005, 0.01, 0.05, 0.1, 0.2}) {
        const double vacant = chsh_S(build_density({1.0, 0.0, 0.0}), conventional_quad(), {1.0, eps});
        sector_gap = std::max(sector_gap, std::abs(vacant - 2 * (1 - 2 * eps) * (1 - 2 * eps)));
        no_full_range = no_full_range && s_opt(Stage::FreeSphere, vacancy_model_map({0.99}), {1.0, eps}, {}) < 2.0 &&
                        s_opt(Stage::FreeSphereWithInput, vacancy_model_map({0.99}), {1.0, eps}, {}) < 2.0;
    }
    const bool ok = within(any.value, 1 - 2 * (kSqrt2 - 1), 0.002) && within(input.value, 0.32, 0.01) &&
                    sector_gap < 1e-12 && no_full_range;
    report(7, ok,
           "epsilon any=" + num(any.value, 4) + " any with input=" + num(input.value, 4) +
               " (target 0.32 +- 0.01); vacant-sector identity gap " + num(sector_gap, 2) +
               "; no violation at P_v=0.99 for eps>=0.005: " + (no_full_range ? "yes" : "no"));
}

void criterion_8() {
    double worst = 0.0;
    for (double x : {0.7, 0.8, 0.9}) {
        const double a = s_opt(Stage::FreeSphereWithInput, {}, {x, 0.0}, {});
        const double b = s_opt(Stage::FreeSphereWithInput, {}, {1.0, 1 - x}, {});
        worst = std::max(worst, std::abs(a - b));
    }
    report(8, worst < 1e-4, "max |S_opt(eta=x) - S_opt(eps=1-x)| = " + num(worst, 3));
}

void criterion_9() {
    const Table t = robustness_q({0.99}, inclusive_grid(0.0, 0.99, 0.01));
    double lowest = 1e9;
    for (const auto &row : t.rows) {
        lowest = std::min(lowest, row[1]);
    }
    report(9, lowest > 2.0, "settings frozen at q'=0.99: min S' over q in [0, 0.99] = " + num(lowest, 8));
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

void criterion_10() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "vchsh_acceptance";
    fs::remove_all(root);
    const fs::path a = root / "a", b = root / "b";
    bool ran = true;
    for (const fs::path &dir : {a, b}) {
        const std::string cmd = std::string("\"") + VCHSH_TOOL_PATH + "\" reproduce --seed 0 --out \"" +
                                dir.string() + "\" > \"" + (root / "log.txt").string() + "\" 2>&1";
        fs::create_directories(root);
        ran = ran && std::system(cmd.c_str()) == 0;
    }
    std::size_t files = 0;
    bool identical = ran;
    if (ran) {
        for (const auto &entry : fs::directory_iterator(a)) {
            ++files;
            const fs::path other = b / entry.path().filename();
            identical = identical && fs::exists(other) && slurp(entry.path()) == slurp(other);
        }
        for (const auto &entry : fs::directory_iterator(b)) {
            identical = identical && fs::exists(a / entry.path().filename());
        }
    }
    report(10, identical && files > 0,
           std::string("reproduce --seed 0 twice: ") + (ran ? "" : "command failed; ") + std::to_string(files) +
               " files, " + (identical ? "byte-identical" : "differ"));
    fs::remove_all(root);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
