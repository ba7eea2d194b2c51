#include "udn/strategies.hpp"

#include <chrono>
#include <string>

#include "udn/errors.hpp"

namespace udn {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Unit-norm beam directions from a zero-forcing precoder (zero columns stay zero).
PrecodingMatrix directions_of(const PrecodingMatrix& precoder) {
    PrecodingMatrix dirs = precoder;
    for (int k = 0; k < dirs.W.cols(); ++k) {
        const double nrm = dirs.W.col(k).norm();
        if (nrm > 0.0) dirs.W.col(k) /= nrm;
    }
    return dirs;
}

}  // namespace

int pairing_budget(Strategy strategy, const Scenario& scenario) {
    return strategy == Strategy::JPcon ? scenario.min_active_ans() : scenario.num_ues;
}

StrategyOutcome run_strategy(const ChannelRealization& channel, const Topology& topology,
                             const Scenario& scenario) {
    scenario.validate();
    if (channel.K != scenario.num_ues || channel.M != scenario.num_ans ||
        channel.L != scenario.antennas_per_an) {
        throw ConfigError("channel dimensions do not match the scenario");
    }

    StrategyOutcome out;
    out.strategy = scenario.strategy;
    const double p_budget = scenario.power_budget();

    try {
        const auto t_pair = std::chrono::steady_clock::now();
        PairingProblem problem;
        problem.costs = build_costs(topology);
        problem.b_max = pairing_budget(scenario.strategy, scenario);
        problem.u_max = scenario.u_max;
        out.pairing = solve_pairing(problem);
        out.diagnostics.pairing_seconds = seconds_since(t_pair);
        out.diagnostics.active_count = static_cast<int>(out.pairing.active_set.size());

        const auto t_prec = std::chrono::steady_clock::now();
        switch (scenario.strategy) {
            case Strategy::Local: {
                out.precoder = zf_local(channel, out.pairing, p_budget);
                break;
            }
            case Strategy::CoordPr: {
                BisectionResult r = bisection_max_min_sinr(
                    channel, out.pairing, SupportCase::CaseI_SingleServing, p_budget, 1e-3,
                    scenario.power_form);
                out.precoder = std::move(r.precoder);
                out.diagnostics.bisection_probes = r.probes;
                out.diagnostics.ipm_iterations = r.ipm_iterations;
                break;
            }
            case Strategy::LocalPowCoord: {
                const PrecodingMatrix dirs =
                    directions_of(zf_local(channel, out.pairing, p_budget));
                const Eigen::VectorXd powers = power_coordination(
                    effective_gains(channel, dirs), out.pairing, p_budget);
                out.precoder = dirs;
                for (int k = 0; k < channel.K; ++k) {
                    out.precoder.W.col(k) *= std::sqrt(powers(k));
                }
                break;
            }
            case Strategy::JPcon: {
                BisectionResult r = bisection_max_min_sinr(
                    channel, out.pairing, SupportCase::CaseII_JointActive, p_budget, 1e-3,
                    scenario.power_form);
                out.precoder = std::move(r.precoder);
                out.diagnostics.bisection_probes = r.probes;
                out.diagnostics.ipm_iterations = r.ipm_iterations;
                break;
            }
        }
        out.diagnostics.precoding_seconds = seconds_since(t_prec);
    } catch (const SolverNumericalFailure& e) {
        throw SolverNumericalFailure(to_string(scenario.strategy) + ": " + e.what());
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(to_string(scenario.strategy) + ": " + e.what());
    }

    const Eigen::VectorXd r = rates(channel, out.precoder);
    out.worse_rate = worse_rate(r);
    out.sum_rate = sum_rate(r);
    return out;
}

} // namespace udn
