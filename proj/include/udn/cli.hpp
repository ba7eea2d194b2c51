#ifndef UDN_CLI_HPP
#define UDN_CLI_HPP

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "udn/sim.hpp"

namespace udn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitFailureRate = 4;

struct RunOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> overrides;  // KEY=VAL, applied in order
    std::optional<int> snapshots;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool full = false;
};

/// Schema-checked campaign config. Unknown keys, type mismatches, and
/// singleton/grid conflicts throw ConfigError.
Campaign parse_campaign(const nlohmann::json& doc);

/// Canonical resolved form: every default filled in, all sweep axes explicit.
/// parse_campaign(resolved_config(c)) reproduces c.
nlohmann::json resolved_config(const Campaign& campaign);

/// Runs a campaign from a config file; writes results.csv, results.json and
/// resolved-config.json into out_dir.
int cmd_run(const RunOptions& options);

/// Pre-baked grids: proportionate, densification, ue-density.
int cmd_study(const std::string& study_name, const RunOptions& options);

/// Oracle suite with a printed pass/fail table; writes verify-report.txt.
/// inject_epsilon > 0 deliberately degrades the max-min bisection (as a
/// fraction of its bracket) so the dominance oracle must catch it.
int cmd_verify(const std::string& out_dir, double inject_epsilon = 0.0);

} // namespace udn::cli

#endif
