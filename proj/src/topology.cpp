#include "udn/topology.hpp"

#include <cmath>

#include "udn/errors.hpp"

namespace udn {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Local: return "Local";
        case Strategy::CoordPr: return "CoordPr";
        case Strategy::LocalPowCoord: return "LocalPowCoord";
        case Strategy::JPcon: return "JPcon";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "Local") return Strategy::Local;
    if (name == "CoordPr") return Strategy::CoordPr;
    if (name == "LocalPowCoord") return Strategy::LocalPowCoord;
    if (name == "JPcon") return Strategy::JPcon;
    throw ConfigError("unknown strategy: " + name);
}

void Scenario::validate() const {
    if (num_ues < 1) throw ConfigError("K must be >= 1");
    if (num_ans < 1) throw ConfigError("M must be >= 1");
    if (antennas_per_an < 1) throw ConfigError("L must be >= 1");
    if (u_max < 1 || u_max > antennas_per_an)
        throw ConfigError("u_max must lie in [1, L]");
    if (num_ans < min_active_ans())
        throw ConfigError("M must be >= ceil(K/L) so every UE gets a spatial degree of freedom");
    if (alpha_pl <= 0.0) throw ConfigError("alpha_pl must be > 0");
    if (area_side <= 0.0) throw ConfigError("area_side must be > 0");
    if (n_snapshots < 1) throw ConfigError("n_snapshots must be >= 1");
}

double edge_distance(double area_side, EdgeConvention convention) {
    // Worst case for a user served from the area center: the corner.
    return convention == EdgeConvention::Corner ? area_side * std::sqrt(2.0) / 2.0
                                                : area_side / 2.0;
}

Topology generate_topology(const Scenario& scenario, RandomStream& rng) {
    Topology topo;
    topo.area_side = scenario.area_side;
    topo.d_edge = edge_distance(scenario.area_side, scenario.edge_convention);
    topo.alpha_pl = scenario.alpha_pl;
    topo.an_positions.reserve(scenario.num_ans);
    for (int m = 0; m < scenario.num_ans; ++m)
        topo.an_positions.push_back({rng.uniform(0.0, topo.area_side), rng.uniform(0.0, topo.area_side)});
    topo.ue_positions.reserve(scenario.num_ues);
    for (int k = 0; k < scenario.num_ues; ++k)
        topo.ue_positions.push_back({rng.uniform(0.0, topo.area_side), rng.uniform(0.0, topo.area_side)});
    return topo;
}

double normalized_gain(double d, const Topology& topology) {
    const double dc = std::max(d, kMinLinkDistance);
    return std::pow(dc / topology.d_edge, -topology.alpha_pl);
}

Eigen::MatrixXd link_distances(const Topology& topology) {
    const int K = topology.num_ues();
    const int M = topology.num_ans();
    Eigen::MatrixXd d(K, M);
    for (int k = 0; k < K; ++k) {
        for (int m = 0; m < M; ++m) {
            const double dx = topology.ue_positions[k].x - topology.an_positions[m].x;
            const double dy = topology.ue_positions[k].y - topology.an_positions[m].y;
            d(k, m) = std::max(std::hypot(dx, dy), kMinLinkDistance);
        }
    }
    return d;
}

} // namespace udn
