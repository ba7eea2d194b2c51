#ifndef UDN_CONIC_HPP
#define UDN_CONIC_HPP

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "udn/channel.hpp"
#include "udn/pairing.hpp"
#include "udn/topology.hpp"

namespace udn::conic {

/// One row of a constraint matrix, kept sparse so the normal-equations
/// assembly can exploit the block structure of the beamforming program.
struct SparseRow {
    std::vector<int> idx;
    std::vector<double> val;

    void add(int i, double v) {
        idx.push_back(i);
        val.push_back(v);
    }
    int nnz() const { return static_cast<int>(idx.size()); }
};

/// Cone K = R_+^lp_dim x SOC(d_1) x ... x SOC(d_q), in row order.
struct ConeSpec {
    int lp_dim = 0;
    std::vector<int> soc_dims;

    int dim() const;
    /// Barrier order: one per LP coordinate, one per second-order cone.
    int order() const { return lp_dim + static_cast<int>(soc_dims.size()); }
};

/// Conic LP in inequality form:
///   minimize    c'x
///   subject to  eq_rows x = b,   cone_rows x + s = h,   s in K.
struct Program {
    int n = 0;
    Eigen::VectorXd c;
    std::vector<SparseRow> eq_rows;
    Eigen::VectorXd b;
    std::vector<SparseRow> cone_rows;
    Eigen::VectorXd h;
    ConeSpec cones;

    void validate() const;
};

enum class SolveStatus {
    Optimal,       // residuals and gap below tolerance
    Inaccurate,    // stalled, best iterate still within the loose tolerance
    PrimalTarget,  // stopped early: primal objective below requested target
    DualTarget,    // stopped early: dual objective above requested target
    Stalled,       // no usable iterate
    MaxIterations,
};

struct SolverOptions {
    double feastol = 1e-7;
    double abstol = 1e-7;
    double reltol = 1e-7;
    /// Accept the best iterate at this accuracy when the endgame stalls.
    double loose_tol = 1e-5;
    int max_iterations = 100;
    /// Stop once c'x <= primal_target with primal residual below feastol.
    double primal_target = -std::numeric_limits<double>::infinity();
    /// Stop once the dual objective >= dual_target with dual residual below
    /// feastol; by weak duality every primal point then exceeds the target.
    double dual_target = std::numeric_limits<double>::infinity();
};

struct Solution {
    SolveStatus status = SolveStatus::Stalled;
    Eigen::VectorXd x, y, z, s;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;

    bool usable() const {
        return status == SolveStatus::Optimal || status == SolveStatus::Inaccurate ||
               status == SolveStatus::PrimalTarget || status == SolveStatus::DualTarget;
    }
};

/// Primal-dual interior-point method with Nesterov-Todd scaling and a
/// Mehrotra predictor-corrector step.
Solution solve(const Program& program, const SolverOptions& options = {});

enum class Feasibility { Feasible, Infeasible, NumericalFailure };

struct FeasibilityOptions {
    /// Declare the target SINR feasible when the optimal uniform cone
    /// violation is at most this.
    double feas_tol = 1e-7;
    /// Witness acceptance: min SINR >= theta * (1 - tol_sinr).
    double tol_sinr = 1e-4;
    /// Witness acceptance: per-AN power <= cap * (1 + tol_pow).
    double tol_pow = 1e-6;
    /// Exit probes early once feasibility is certain either way.
    bool early_exit = true;
    SolverOptions solver;
};

/// Fixed-target SINR feasibility check for one snapshot.
struct FeasibilityInstance {
    const ChannelRealization* channel = nullptr;
    const PairingSolution* pairing = nullptr;
    SupportCase support_case = SupportCase::CaseI_SingleServing;
    double theta = 0.0;
    double p_budget = 1.0;
    PowerConstraintForm power_form = PowerConstraintForm::SumSquaredNorms;
};

struct FeasibilityReport {
    Feasibility status = Feasibility::NumericalFailure;
    /// Witness precoder, populated iff status == Feasible.
    PrecodingMatrix precoder;
    /// Optimal uniform SINR-cone violation (negative = strict margin).
    double slack = 0.0;
    /// Witness min SINR recomputed from the unscaled channel.
    double min_sinr = 0.0;
    int ipm_iterations = 0;
};

/// Decides whether every UE can reach SINR >= theta under per-AN power caps
/// p_budget/|A| with precoders restricted to the pairing's support pattern.
/// The program minimizes one shared relaxation variable on the SINR cones;
/// power limits are kept hard, so any witness respects the caps.
FeasibilityReport check_sinr_feasibility(const FeasibilityInstance& instance,
                                         const FeasibilityOptions& options = {});

}  // namespace udn::conic

#endif
