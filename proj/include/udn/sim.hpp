#ifndef UDN_SIM_HPP
#define UDN_SIM_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "udn/strategies.hpp"
#include "udn/topology.hpp"

namespace udn {

/// Monte-Carlo sweep: the base scenario crossed with the (K, M), SNR and
/// strategy axes. Empty axes fall back to the base scenario's values.
struct Campaign {
    Scenario base;
    std::vector<std::pair<int, int>> km_grid;
    std::vector<double> snr_grid_db;
    std::vector<Strategy> strategies;
    int n_snapshots = 250;
    std::uint64_t master_seed = 0;
    bool retain_snapshots = false;

    std::vector<std::pair<int, int>> resolved_km() const;
    std::vector<double> resolved_snr() const;
    std::vector<Strategy> resolved_strategies() const;

    /// Throws ConfigError when any grid cell violates scenario invariants.
    void validate() const;
};

struct CellStats {
    int K = 0;
    int M = 0;
    int L = 0;
    double snr_ref_db = 0.0;
    Strategy strategy = Strategy::Local;
    int n_ok = 0;
    int n_fail = 0;
    double mean_worse_rate = 0.0;
    double se_worse_rate = 0.0;
    double mean_sum_rate = 0.0;
    double se_sum_rate = 0.0;
    std::vector<double> worse_rates;  // per successful snapshot, when retained
    std::vector<double> sum_rates;
};

struct CampaignResult {
    std::vector<CellStats> cells;
    std::int64_t snapshots_run = 0;  // strategy solves attempted
    std::int64_t failures = 0;
    std::vector<std::string> failure_sample;  // first few messages
    double wall_seconds = 0.0;

    double failure_rate() const {
        return snapshots_run == 0 ? 0.0
                                  : static_cast<double>(failures) /
                                        static_cast<double>(snapshots_run);
    }
};

/// One deterministic snapshot of the base scenario: topology and fading are
/// functions of (scenario.seed, snapshot_index) alone, so SNR and strategy
/// changes reuse the same draws.
StrategyOutcome run_snapshot(const Scenario& scenario, int snapshot_index);

/// Serial reference: one snapshot at a time, slots aggregated in index order.
CampaignResult run_campaign_serial(const Campaign& campaign);

/// OpenMP path over (cell, snapshot) work items. Snapshot slots are
/// pre-indexed and reduced in the same fixed order as the serial reference,
/// so the result is bitwise identical for any thread count.
CampaignResult run_campaign(const Campaign& campaign, int n_threads = 1);

/// CSV with the fixed column order; leading comment lines carry the library
/// version and the resolved config. Shortest round-trip number formatting.
std::string campaign_csv(const CampaignResult& result, const std::string& config_json);

/// JSON document embedding the resolved config and per-cell statistics.
/// Timing diagnostics stay out so reruns are byte-identical.
std::string campaign_json(const CampaignResult& result, const std::string& config_json);

} // namespace udn

#endif
