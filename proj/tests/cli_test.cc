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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "nlohmann/json.hpp"

using namespace vchsh::cli;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(const std::vector<std::string> &args) {
    std::ostringstream out, err;
    const int code = main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string &name) {
    return std::filesystem::path(::testing::TempDir()) / ("vchsh_cli_test_" + name);
}

}  // namespace

TEST(cli, eval_tsirelson) {
    const Outcome o = invoke({"eval", "--p", "0", "--q", "0", "--settings", "conventional"});
    EXPECT_EQ(o.code, kExitOk);
    EXPECT_NE(o.out.find("S = 2.82842712475"), std::string::npos) << o.out;
}

TEST(cli, eval_json_and_csv) {
    const Outcome j = invoke({"eval", "--pv", "0.2", "--format", "json"});
    ASSERT_EQ(j.code, kExitOk);
    const auto parsed = nlohmann::json::parse(j.out);
    EXPECT_LT(parsed["value"].get<double>(), 2.0);
    EXPECT_EQ(parsed["settings"].size(), 4u);

    const Outcome c = invoke({"eval", "--q", "0.5", "--r", "1", "--settings", "0,1.5707963267948966,1,2",
                              "--format", "csv"});
    ASSERT_EQ(c.code, kExitOk);
    EXPECT_EQ(c.out.rfind("S,S_prime\n", 0), 0u);
}

TEST(cli, threshold_critical_vacancy) {
    const Outcome o = invoke({"threshold", "--kind", "critical-vacancy", "--stage", "conventional", "--format", "json"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    const auto j = nlohmann::json::parse(o.out);
    EXPECT_NEAR(j["value"].get<double>(), 0.153, 0.002);
    EXPECT_EQ(j["status"], "crossing");
    for (const char *key : {"settings", "tau", "seed", "converged"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
}

TEST(cli, threshold_everywhere_leaves_bad_bracket_blank) {
    const Outcome o =
        invoke({"threshold", "--kind", "critical-vacancy", "--stage", "free-in-plane", "--format", "csv"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    EXPECT_NE(o.out.find("violation-everywhere,0.9999,0.9999,\n"), std::string::npos) << o.out;
}

TEST(cli, verify_passes) {
    const Outcome o = invoke({"verify", "--trials", "1000", "--seed", "7"});
    EXPECT_EQ(o.code, kExitOk) << o.out << o.err;
}

TEST(cli, optimize_json_schema) {
    const Outcome o = invoke({"optimize", "--pv", "0.2", "--stage", "global-shift", "--format", "json"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    const auto j = nlohmann::json::parse(o.out);
    for (const char *key : {"value", "settings", "tau", "seed", "converged"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_NEAR(j["parameters"][0].get<double>(), 1.9634954, 1e-3);
}

TEST(cli, optimize_not_converged_exit_code) {
    // A single restart cannot confirm agreement between the best two.
    const Outcome o = invoke({"optimize", "--pv", "0.3", "--stage", "free-in-plane", "--restarts", "1"});
    EXPECT_EQ(o.code, kExitNotConverged);
    EXPECT_NE(o.err.find("free-in-plane"), std::string::npos);
    EXPECT_NE(o.err.find("1 restarts"), std::string::npos) << o.err;
}

TEST(cli, sweep_csv_header) {
    const Outcome o = invoke({"sweep", "--stage", "conventional,global-shift", "--grid", "0:0.2:0.1"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    std::istringstream lines(o.out);
    std::string header;
    std::getline(lines, header);
    EXPECT_EQ(header, "P_v,conventional,global-shift,upper_bound");
    std::size_t rows = 0;
    for (std::string line; std::getline(lines, line);) {
        ++rows;
    }
    EXPECT_EQ(rows, 3u);
}

TEST(cli, config_errors_name_the_key) {
    struct Case {
        std::vector<std::string> args;
        std::string key;
    };
    const std::vector<Case> cases{
        {{"eval", "--p", "1.5"}, "--p"},
        {{"eval", "--eta", "-0.1"}, "--eta"},
        {{"optimize", "--stage", "step-9"}, "--stage"},
        {{"sweep", "--grid", "0:1"}, "--grid"},
        {{"threshold", "--kind", "bogus"}, "--kind"},
        {{"eval", "--pv", "0.1", "--q", "0.2"}, "--pv"},
        {{"eval", "--format", "xml"}, "--format"},
        {{"eval", "--p", "abc"}, "--p"},
    };
    for (const auto &c : cases) {
        const Outcome o = invoke(c.args);
        EXPECT_EQ(o.code, kExitConfig) << c.args[1];
        EXPECT_NE(o.err.find(c.key), std::string::npos) << o.err;
    }
}

TEST(cli, config_file_merge_and_override) {
    const auto path = temp_path("merge.json");
    std::ofstream(path) << R"({"p": 0.0, "q": 0.5, "r": 1.0, "format": "csv"})";
    const Outcome from_file = invoke({"eval", "--config", path.string()});
    ASSERT_EQ(from_file.code, kExitOk) << from_file.err;
    const Outcome overridden = invoke({"eval", "--config", path.string(), "--q", "0"});
    ASSERT_EQ(overridden.code, kExitOk);
    EXPECT_NE(overridden.out.find("2.82842712475"), std::string::npos) << overridden.out;
    EXPECT_NE(from_file.out, overridden.out);
    EXPECT_EQ(from_file.out.rfind("S,S_prime", 0), 0u);
}

TEST(cli, config_file_unknown_key) {
    const auto path = temp_path("unknown.json");
    std::ofstream(path) << R"({"q": 0.5, "colour": "blue"})";
    const Outcome o = invoke({"eval", "--config", path.string()});
    EXPECT_EQ(o.code, kExitConfig);
    EXPECT_NE(o.err.find("colour"), std::string::npos) << o.err;
}

TEST(cli, merge_config_direct) {
    RunConfig flags = parse_flags({"optimize", "--seed", "5"});
    const RunConfig merged = merge_config(flags, R"({"seed": 9, "restarts": 8, "stage": "pair-shifts"})");
    EXPECT_EQ(merged.seed, 5u);
    EXPECT_EQ(merged.restarts, 8u);
    EXPECT_EQ(merged.stage, "pair-shifts");
    EXPECT_THROW(merge_config(flags, "[1, 2]"), ConfigError);
    EXPECT_THROW(merge_config(flags, R"({"q": "high"})"), ConfigError);
}

TEST(cli, unknown_flag_and_missing_command) {
    EXPECT_EQ(invoke({"eval", "--frobnicate", "1"}).code, kExitConfig);
    EXPECT_EQ(invoke({}).code, kExitConfig);
}

TEST(cli, output_file_is_deterministic) {
    const auto a = temp_path("a.csv"), b = temp_path("b.csv");
    for (const auto &path : {a, b}) {
        ASSERT_EQ(invoke({"sweep", "--stage", "free-in-plane", "--grid", "0.1,0.5", "--seed", "3", "--out",
                          path.string()})
                      .code,
                  kExitOk);
    }
    std::ifstream fa(a), fb(b);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_FALSE(sa.str().empty());
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(cli, help_exits_zero) {
    const Outcome o = invoke({"--help"});
    EXPECT_EQ(o.code, kExitOk);
    EXPECT_NE(o.out.find("reproduce"), std::string::npos);
}
