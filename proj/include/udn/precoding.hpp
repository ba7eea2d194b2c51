#ifndef UDN_PRECODING_HPP
#define UDN_PRECODING_HPP

#include <Eigen/Dense>

#include "udn/channel.hpp"
#include "udn/pairing.hpp"
#include "udn/topology.hpp"

namespace udn {

/// Bracket and stopping rule for the max-min SINR bisection (linear SINR).
struct BisectionConfig {
    double theta_lb = 0.0;  // must be feasible; 0 always is, via W = 0
    double theta_ub = 0.0;  // must be infeasible, else BracketError
    double epsilon = 1e-3;  // bracket width at exit
    int max_iters = 200;
};

struct BisectionResult {
    double theta_star = 0.0;
    PrecodingMatrix precoder;  // witness of the last feasible probe
    int probes = 0;
    int ipm_iterations = 0;  // summed over probes
};

/// Per-AN zero-forcing from local CSI only: each active AN's beams are the
/// normalized columns of the pseudo-inverse of its served UEs' local channels,
/// and the per-AN cap p_budget/|A| is split equally across them. Throws
/// RankDeficientLocalChannelError when a local block is numerically singular.
PrecodingMatrix zf_local(const ChannelRealization& channel, const PairingSolution& pairing,
                         double p_budget);

/// Max-min SINR precoder via bisection over the conic feasibility oracle.
/// Propagates SolverNumericalFailure from unusable probes.
BisectionResult bisection_max_min_sinr(
    const ChannelRealization& channel, const PairingSolution& pairing, SupportCase support_case,
    double p_budget, const BisectionConfig& config,
    PowerConstraintForm power_form = PowerConstraintForm::SumSquaredNorms);

/// Bracket-free wrapper: starts from the interference-free upper bound
/// max_k p_budget * ||h_k||^2 and doubles it while the top probe is feasible.
BisectionResult bisection_max_min_sinr(
    const ChannelRealization& channel, const PairingSolution& pairing, SupportCase support_case,
    double p_budget, double epsilon = 1e-3,
    PowerConstraintForm power_form = PowerConstraintForm::SumSquaredNorms);

/// Max-min power coordination over fixed unit-norm beams. eff_gains(k, i) is
/// the gain of beam i at UE k; the returned per-UE powers keep each active
/// AN's served sum within p_budget/|A| and never do worse than the equal
/// split. Bisection on the common SINR with an exact minimal-power inner
/// check (least fixed point of the affine interference map).
Eigen::VectorXd power_coordination(const Eigen::MatrixXd& eff_gains,
                                   const PairingSolution& pairing, double p_budget,
                                   double epsilon = 1e-3);

} // namespace udn

#endif
