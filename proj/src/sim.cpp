#include "udn/sim.hpp"

#include <chrono>
#include <cmath>
#include <json.hpp>
#include <string>

#include "udn/channel.hpp"
#include "udn/errors.hpp"
#include "udn/rng.hpp"
#include "udn/version.hpp"

namespace udn {

namespace {

struct Slot {
    bool ok = false;
    double worse_rate = 0.0;
    double sum_rate = 0.0;
    std::string error;
};

struct Layout {
    std::vector<std::pair<int, int>> km;
    std::vector<double> snr;
    std::vector<Strategy> strategies;
    int n_snapshots = 0;

    int groups() const { return static_cast<int>(km.size()); }
    int items() const { return groups() * n_snapshots; }
    size_t slot_index(int g, int i, int s, int t) const {
        return ((static_cast<size_t>(g) * n_snapshots + i) * snr.size() + s) *
                   strategies.size() +
               t;
    }
    size_t slots() const {
        return static_cast<size_t>(items()) * snr.size() * strategies.size();
    }
};

Scenario cell_scenario(const Campaign& campaign, const Layout& lay, int g) {
    Scenario sc = campaign.base;
    sc.num_ues = lay.km[static_cast<size_t>(g)].first;
    sc.num_ans = lay.km[static_cast<size_t>(g)].second;
    sc.n_snapshots = campaign.n_snapshots;
    sc.seed = campaign.master_seed;
    return sc;
}

/// One (group, snapshot) work item: a single topology and fading draw reused
/// across every SNR level and strategy, per the common-seed design.
void compute_item(const Campaign& campaign, const Layout& lay, int item,
                  std::vector<Slot>& slots) {
    const int g = item / lay.n_snapshots;
    const int i = item % lay.n_snapshots;
    Scenario sc = cell_scenario(campaign, lay, g);

    RandomStream topo_rng(derive_stream_seed(sc.seed, 2 * static_cast<std::uint64_t>(i)));
    RandomStream fade_rng(derive_stream_seed(sc.seed, 2 * static_cast<std::uint64_t>(i) + 1));
    const Topology topo = generate_topology(sc, topo_rng);
    const Eigen::MatrixXcd delta =
        draw_unit_fading(sc.num_ans, sc.antennas_per_an, sc.num_ues, fade_rng);

    for (size_t s = 0; s < lay.snr.size(); ++s) {
        sc.snr_ref_db = lay.snr[s];
        const ChannelRealization ch =
            assemble_channel(topo, delta, sc.snr_ref_db, sc.antennas_per_an);
        for (size_t t = 0; t < lay.strategies.size(); ++t) {
            sc.strategy = lay.strategies[t];
            Slot& slot = slots[lay.slot_index(g, i, static_cast<int>(s), static_cast<int>(t))];
            try {
                const StrategyOutcome out = run_strategy(ch, topo, sc);
                slot.ok = true;
                slot.worse_rate = out.worse_rate;
                slot.sum_rate = out.sum_rate;
            } catch (const std::exception& e) {
                slot.ok = false;
                slot.error = e.what();
            }
        }
    }
}

/// Fixed-order reduction over the pre-indexed slots; identical for serial and
/// parallel fills.
CampaignResult aggregate(const Campaign& campaign, const Layout& lay,
                         const std::vector<Slot>& slots) {
    CampaignResult result;
    for (int g = 0; g < lay.groups(); ++g) {
        const Scenario sc = cell_scenario(campaign, lay, g);
        for (size_t s = 0; s < lay.snr.size(); ++s) {
            for (size_t t = 0; t < lay.strategies.size(); ++t) {
                CellStats cell;
                cell.K = sc.num_ues;
                cell.M = sc.num_ans;
                cell.L = sc.antennas_per_an;
                cell.snr_ref_db = lay.snr[s];
                cell.strategy = lay.strategies[t];

                double sum_w = 0.0, sum_r = 0.0;
                std::vector<double> w, r;
                for (int i = 0; i < lay.n_snapshots; ++i) {
                    const Slot& slot =
                        slots[lay.slot_index(g, i, static_cast<int>(s), static_cast<int>(t))];
                    ++result.snapshots_run;
                    if (!slot.ok) {
                        ++cell.n_fail;
                        ++result.failures;
                        if (result.failure_sample.size() < 8) {
                            result.failure_sample.push_back(slot.error);
                        }
                        continue;
                    }
                    ++cell.n_ok;
                    sum_w += slot.worse_rate;
                    sum_r += slot.sum_rate;
                    w.push_back(slot.worse_rate);
                    r.push_back(slot.sum_rate);
                }
                if (cell.n_ok > 0) {
                    cell.mean_worse_rate = sum_w / cell.n_ok;
                    cell.mean_sum_rate = sum_r / cell.n_ok;
                }
                if (cell.n_ok > 1) {
                    double vw = 0.0, vr = 0.0;
                    for (const double x : w) vw += (x - cell.mean_worse_rate) * (x - cell.mean_worse_rate);
                    for (const double x : r) vr += (x - cell.mean_sum_rate) * (x - cell.mean_sum_rate);
                    const double n = cell.n_ok;
                    cell.se_worse_rate = std::sqrt(vw / (n - 1.0) / n);
                    cell.se_sum_rate = std::sqrt(vr / (n - 1.0) / n);
                }
                if (campaign.retain_snapshots) {
                    cell.worse_rates = std::move(w);
                    cell.sum_rates = std::move(r);
                }
                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

Layout make_layout(const Campaign& campaign) {
    Layout lay;
    lay.km = campaign.resolved_km();
    lay.snr = campaign.resolved_snr();
    lay.strategies = campaign.resolved_strategies();
    lay.n_snapshots = campaign.n_snapshots;
    return lay;
}

std::string format_number(double x) { return nlohmann::json(x).dump(); }

}  // namespace

std::vector<std::pair<int, int>> Campaign::resolved_km() const {
    if (!km_grid.empty()) return km_grid;
    return {{base.num_ues, base.num_ans}};
}

std::vector<double> Campaign::resolved_snr() const {
    if (!snr_grid_db.empty()) return snr_grid_db;
    return {base.snr_ref_db};
}

std::vector<Strategy> Campaign::resolved_strategies() const {
    if (!strategies.empty()) return strategies;
    return {base.strategy};
}

void Campaign::validate() const {
    if (n_snapshots < 1) throw ConfigError("campaign needs n_snapshots >= 1");
    const Layout lay = make_layout(*this);
    for (int g = 0; g < lay.groups(); ++g) cell_scenario(*this, lay, g).validate();
}

StrategyOutcome run_snapshot(const Scenario& scenario, int snapshot_index) {
    scenario.validate();
    if (snapshot_index < 0) throw ConfigError("snapshot_index must be nonnegative");
    const std::uint64_t i = static_cast<std::uint64_t>(snapshot_index);
    RandomStream topo_rng(derive_stream_seed(scenario.seed, 2 * i));
    RandomStream fade_rng(derive_stream_seed(scenario.seed, 2 * i + 1));
    const Topology topo = generate_topology(scenario, topo_rng);
    const ChannelRealization ch = draw_fading(topo, scenario, fade_rng);
    return run_strategy(ch, topo, scenario);
}

CampaignResult run_campaign_serial(const Campaign& campaign) {
    campaign.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Layout lay = make_layout(campaign);
    std::vector<Slot> slots(lay.slots());
    for (int item = 0; item < lay.items(); ++item) compute_item(campaign, lay, item, slots);
    CampaignResult result = aggregate(campaign, lay, slots);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

CampaignResult run_campaign(const Campaign& campaign, int n_threads) {
    if (n_threads <= 1) return run_campaign_serial(campaign);
    campaign.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Layout lay = make_layout(campaign);
    std::vector<Slot> slots(lay.slots());
    const int total = lay.items();
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
    for (int item = 0; item < total; ++item) {
        compute_item(campaign, lay, item, slots);
    }
    CampaignResult result = aggregate(campaign, lay, slots);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::string campaign_csv(const CampaignResult& result, const std::string& config_json) {
    std::string out;
    out += "# version: ";
    out += kVersion;
    out += "\n# config: ";
    out += config_json;
    out +=
        "\nK,M,L,snr_ref_db,strategy,n_ok,n_fail,mean_worse_rate,se_worse_rate,"
        "mean_sum_rate,se_sum_rate\n";
    for (const CellStats& c : result.cells) {
        out += std::to_string(c.K) + "," + std::to_string(c.M) + "," + std::to_string(c.L) +
               "," + format_number(c.snr_ref_db) + "," + to_string(c.strategy) + "," +
               std::to_string(c.n_ok) + "," + std::to_string(c.n_fail) + "," +
               format_number(c.mean_worse_rate) + "," + format_number(c.se_worse_rate) + "," +
               format_number(c.mean_sum_rate) + "," + format_number(c.se_sum_rate) + "\n";
    }
    return out;
}

std::string campaign_json(const CampaignResult& result, const std::string& config_json) {
    nlohmann::json doc;
    doc["version"] = kVersion;
    doc["config"] = nlohmann::json::parse(config_json);
    doc["snapshots_run"] = result.snapshots_run;
    doc["failures"] = result.failures;
    nlohmann::json cells = nlohmann::json::array();
    for (const CellStats& c : result.cells) {
        nlohmann::json cell;
        cell["K"] = c.K;
        cell["M"] = c.M;
        cell["L"] = c.L;
        cell["snr_ref_db"] = c.snr_ref_db;
        cell["strategy"] = to_string(c.strategy);
        cell["n_ok"] = c.n_ok;
        cell["n_fail"] = c.n_fail;
        cell["mean_worse_rate"] = c.mean_worse_rate;
        cell["se_worse_rate"] = c.se_worse_rate;
        cell["mean_sum_rate"] = c.mean_sum_rate;
        cell["se_sum_rate"] = c.se_sum_rate;
        if (!c.worse_rates.empty()) cell["worse_rates"] = c.worse_rates;
        if (!c.sum_rates.empty()) cell["sum_rates"] = c.sum_rates;
        cells.push_back(std::move(cell));
    }
    doc["cells"] = std::move(cells);
    return doc.dump(2) + "\n";
}

} // namespace udn
