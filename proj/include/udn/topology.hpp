#ifndef UDN_TOPOLOGY_HPP
#define UDN_TOPOLOGY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "udn/rng.hpp"

namespace udn {

enum class Strategy { Local, CoordPr, LocalPowCoord, JPcon };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// Which point of the square defines the reference edge distance d_edge.
enum class EdgeConvention { Corner, Midpoint };

/// Per-AN power constraint form used by the cone programs. SumSquaredNorms is
/// the standard per-antenna-group power cap; SumNorms is the stricter
/// sum-of-norms variant, selectable for comparison.
enum class PowerConstraintForm { SumSquaredNorms, SumNorms };

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Deployment snapshot geometry: planar AN/UE drops plus the path-loss
/// normalization anchor d_edge.
struct Topology {
    std::vector<Point> an_positions;
    std::vector<Point> ue_positions;
    double area_side = 0.0;
    double d_edge = 0.0;
    double alpha_pl = 0.0;

    int num_ans() const { return static_cast<int>(an_positions.size()); }
    int num_ues() const { return static_cast<int>(ue_positions.size()); }
};

/// Minimum AN-UE distance; prevents unbounded gain for coincident drops.
inline constexpr double kMinLinkDistance = 1.0;

struct Scenario {
    int num_ues = 0;           // K
    int num_ans = 0;           // M
    int antennas_per_an = 4;   // L
    double snr_ref_db = 10.0;
    double alpha_pl = 4.0;
    double area_side = 1000.0;
    int u_max = 4;
    Strategy strategy = Strategy::Local;
    int n_snapshots = 250;
    std::uint64_t seed = 0;
    EdgeConvention edge_convention = EdgeConvention::Corner;
    PowerConstraintForm power_form = PowerConstraintForm::SumSquaredNorms;

    /// Total network power budget, normalized so that a single full-budget
    /// transmitter at the area center gives SNR_ref at distance d_edge.
    double power_budget() const { return 1.0; }
    double snr_ref_linear() const { return std::pow(10.0, snr_ref_db / 10.0); }
    int min_active_ans() const { return (num_ues + antennas_per_an - 1) / antennas_per_an; }

    /// Throws ConfigError when a type invariant is violated.
    void validate() const;
};

double edge_distance(double area_side, EdgeConvention convention);

/// K UE and M AN positions drawn independently and uniformly over the square.
Topology generate_topology(const Scenario& scenario, RandomStream& rng);

/// (d / d_edge)^(-alpha); the large-scale gain up to a constant that cancels
/// under the SNR_ref normalization. d is clamped below by kMinLinkDistance.
double normalized_gain(double d, const Topology& topology);

/// K x M Euclidean distances, clamped below by kMinLinkDistance.
Eigen::MatrixXd link_distances(const Topology& topology);

} // namespace udn

#endif
