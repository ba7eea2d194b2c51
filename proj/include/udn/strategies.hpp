#ifndef UDN_STRATEGIES_HPP
#define UDN_STRATEGIES_HPP

#include "udn/channel.hpp"
#include "udn/pairing.hpp"
#include "udn/precoding.hpp"
#include "udn/topology.hpp"

namespace udn {

struct StrategyDiagnostics {
    double pairing_seconds = 0.0;
    double precoding_seconds = 0.0;
    int bisection_probes = 0;
    int ipm_iterations = 0;
    int active_count = 0;
};

struct StrategyOutcome {
    Strategy strategy = Strategy::Local;
    PairingSolution pairing;
    PrecodingMatrix precoder;
    double worse_rate = 0.0;  // bit/s/Hz
    double sum_rate = 0.0;
    StrategyDiagnostics diagnostics;
};

/// Pairing budget per strategy: K (no AN limit) for the three per-AN-serving
/// schemes, ceil(K/L) for joint processing.
int pairing_budget(Strategy strategy, const Scenario& scenario);

/// Runs one strategy on one snapshot: pairing, then the strategy's precoder.
/// Local: per-AN zero-forcing, equal powers. CoordPr: max-min SOCP bisection
/// restricted to serving ANs. LocalPowCoord: zero-forcing directions with
/// coordinated per-UE powers. JPcon: pairing capped at ceil(K/L) active ANs,
/// max-min bisection over all of them jointly.
StrategyOutcome run_strategy(const ChannelRealization& channel, const Topology& topology,
                             const Scenario& scenario);

} // namespace udn

#endif
