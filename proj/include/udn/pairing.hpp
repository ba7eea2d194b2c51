#ifndef UDN_PAIRING_HPP
#define UDN_PAIRING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "udn/topology.hpp"

namespace udn {

enum class PairingObjective { SumCost, MinMaxCost };

/// Instance of the binary pairing program: assign every UE one serving AN,
/// activating at most b_max ANs, at most u_max UEs per AN, minimum total cost.
struct PairingProblem {
    Eigen::MatrixXd costs;  // K x M, nonnegative
    int b_max = 0;
    int u_max = 0;
    PairingObjective objective = PairingObjective::SumCost;

    int num_ues() const { return static_cast<int>(costs.rows()); }
    int num_ans() const { return static_cast<int>(costs.cols()); }
    void validate() const;
};

struct PairingSolution {
    std::vector<int> serving;             // S_k: serving AN per UE
    std::vector<std::vector<int>> served; // U_m: UEs per AN, ascending
    std::vector<int> active_set;          // A, ascending
    std::vector<uint8_t> alpha;           // M, 1 iff active
    double objective = 0.0;               // sum of c(k, S_k) in UE order

    bool rho(int k, int m) const { return serving[k] == m; }
};

/// c_km = normalized_gain(d_km)^(-1) = (d_km/d_edge)^alpha.
Eigen::MatrixXd build_costs(const Topology& topology);

/// Exact optimum via branch-and-bound over active-AN sets with a min-cost-flow
/// assignment relaxation. Throws InfeasibleError when no assignment covers all
/// UEs. Deterministic: ties resolve by a fixed exploration order.
PairingSolution solve_pairing(const PairingProblem& problem);

/// Exact optimum by complete enumeration of all M^K assignments with
/// feasibility filtering. Test oracle; throws InstanceTooLargeError above cap.
PairingSolution enumerate_pairing_oracle(const PairingProblem& problem,
                                         std::uint64_t enumeration_cap = 10'000'000);

} // namespace udn

#endif
