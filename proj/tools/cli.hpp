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
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vchsh::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 1;
inline constexpr int kExitConfig = 2;

/// Bad configuration; `key` names the offending flag or config-file key.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string key, const std::string &what)
        : std::runtime_error("--" + key + ": " + what), key_(std::move(key)) {}
    const std::string &key() const { return key_; }

  private:
    std::string key_;
};

/// Everything a single invocation can be told. Unset fields fall back to the
/// config file, then to per-command defaults.
struct RunConfig {
    std::string command;
    std::optional<double> p, q, r, tau, pv, eta, epsilon, tol;
    std::optional<std::string> stage, grid, out, format, settings, kind, variable, config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> restarts, trials, threads;
};

/// Keys accepted in a config file; the same names as the long flags.
const std::vector<std::string> &config_keys();

/// Parses flags only (no config file). Throws ConfigError.
RunConfig parse_flags(const std::vector<std::string> &args);

/// Fills every field still unset in `flags` from a flat JSON object.
RunConfig merge_config(RunConfig flags, const std::string &json_text);

/// Executes a fully parsed configuration. Throws ConfigError on bad values.
int run(const RunConfig &config, std::ostream &out, std::ostream &err);

/// argv-level entry point used by main(): parse, merge, run, map errors to exit codes.
int main_entry(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace vchsh::cli
