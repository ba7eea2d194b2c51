#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "udn/channel.hpp"
#include "udn/conic.hpp"
#include "udn/errors.hpp"
#include "udn/pairing.hpp"
#include "udn/rng.hpp"

using namespace udn;
using namespace udn::conic;

namespace {

Program dense_program(Eigen::VectorXd c, Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::MatrixXd G,
                      Eigen::VectorXd h, ConeSpec cones) {
    Program p;
    p.n = static_cast<int>(c.size());
    p.c = std::move(c);
    for (int i = 0; i < A.rows(); ++i) {
        SparseRow row;
        for (int j = 0; j < A.cols(); ++j) {
            if (A(i, j) != 0.0) row.add(j, A(i, j));
        }
        p.eq_rows.push_back(std::move(row));
    }
    p.b = std::move(b);
    for (int i = 0; i < G.rows(); ++i) {
        SparseRow row;
        for (int j = 0; j < G.cols(); ++j) {
            if (G(i, j) != 0.0) row.add(j, G(i, j));
        }
        p.cone_rows.push_back(std::move(row));
    }
    p.h = std::move(h);
    p.cones = std::move(cones);
    return p;
}

ChannelRealization make_channel(Eigen::MatrixXcd H, int L, int M, int K) {
    ChannelRealization ch;
    ch.H = std::move(H);
    ch.L = L;
    ch.M = M;
    ch.K = K;
    return ch;
}

PairingSolution make_pairing(std::vector<int> serving, int M) {
    PairingSolution s;
    s.serving = std::move(serving);
    s.served.assign(static_cast<size_t>(M), {});
    s.alpha.assign(static_cast<size_t>(M), 0);
    for (int k = 0; k < static_cast<int>(s.serving.size()); ++k) {
        const int m = s.serving[static_cast<size_t>(k)];
        s.served[static_cast<size_t>(m)].push_back(k);
        if (s.alpha[static_cast<size_t>(m)] == 0) {
            s.alpha[static_cast<size_t>(m)] = 1;
            s.active_set.push_back(m);
        }
    }
    std::sort(s.active_set.begin(), s.active_set.end());
    return s;
}

/// In-test bisection over the feasibility oracle, DERIVED from nothing but
/// repeated calls; used to compare against closed forms.
double bisect_theta(const ChannelRealization& ch, const PairingSolution& pairing,
                    SupportCase support, double p_budget, double ub,
                    PowerConstraintForm form = PowerConstraintForm::SumSquaredNorms,
                    double eps = 1e-4) {
    double lb = 0.0;
    while (ub - lb > eps) {
        const double mid = 0.5 * (lb + ub);
        const FeasibilityReport r = check_sinr_feasibility(
            {&ch, &pairing, support, mid, p_budget, form});
        REQUIRE(r.status != Feasibility::NumericalFailure);
        if (r.status == Feasibility::Feasible) {
            lb = mid;
        } else {
            ub = mid;
        }
    }
    return lb;
}

}  // namespace

TEST_CASE("solver: projection onto a ball") {
    // min t  s.t. ||x - p|| <= t
    Eigen::VectorXd c(4);
    c << 1, 0, 0, 0;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(4, 4);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(4);
    G(0, 0) = -1;
    G(1, 1) = G(2, 2) = G(3, 3) = -1;
    h.tail(3) << -1.0, 2.0, -0.5;  // h_tail = -p, so p = (1, -2, 0.5)
    ConeSpec cones;
    cones.soc_dims = {4};
    const Solution s =
        solve(dense_program(c, Eigen::MatrixXd(0, 4), Eigen::VectorXd(0), G, h, cones));
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.primal_objective == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(s.x(1) == doctest::Approx(1.0));
    CHECK(s.x(2) == doctest::Approx(-2.0));
    CHECK(s.x(3) == doctest::Approx(0.5));
}

TEST_CASE("solver: norm minimization with an equality") {
    // min t  s.t. ||x|| <= t, sum(x) = 1, x in R^4  ->  t* = 1/2
    const int n = 5;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c(0) = 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, n);
    A.row(0).tail(4).setOnes();
    Eigen::VectorXd b(1);
    b << 1.0;
    Eigen::MatrixXd G = -Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    ConeSpec cones;
    cones.soc_dims = {5};
    const Solution s = solve(dense_program(c, A, b, G, h, cones));
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.primal_objective == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.dual_objective == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("solver: LP corner") {
    // min -x1 - 2 x2  s.t. x1 + x2 <= 1, x >= 0  ->  -2 at (0, 1)
    Eigen::VectorXd c(2);
    c << -1, -2;
    Eigen::MatrixXd G(3, 2);
    G << 1, 1, -1, 0, 0, -1;
    Eigen::VectorXd h(3);
    h << 1, 0, 0;
    ConeSpec cones;
    cones.lp_dim = 3;
    const Solution s =
        solve(dense_program(c, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), G, h, cones));
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.primal_objective == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(s.x(1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("solver: mixed LP and SOC blocks with an equality") {
    // min x1  s.t. x1 >= 0, ||(x2, x3)|| <= x1 + 1, x2 + x3 = 2 -> sqrt(2) - 1
    Eigen::VectorXd c(3);
    c << 1, 0, 0;
    Eigen::MatrixXd A(1, 3);
    A << 0, 1, 1;
    Eigen::VectorXd b(1);
    b << 2;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(4, 3);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(4);
    G(0, 0) = -1;
    G(1, 0) = -1;
    h(1) = 1;
    G(2, 1) = -1;
    G(3, 2) = -1;
    ConeSpec cones;
    cones.lp_dim = 1;
    cones.soc_dims = {3};
    const Solution s = solve(dense_program(c, A, b, G, h, cones));
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.primal_objective == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-6));
}

TEST_CASE("solver: early exit on a primal target") {
    Eigen::VectorXd c(2);
    c << -1, -2;
    Eigen::MatrixXd G(3, 2);
    G << 1, 1, -1, 0, 0, -1;
    Eigen::VectorXd h(3);
    h << 1, 0, 0;
    ConeSpec cones;
    cones.lp_dim = 3;
    SolverOptions opts;
    opts.primal_target = -1.0;
    const Solution s =
        solve(dense_program(c, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0), G, h, cones), opts);
    REQUIRE(s.usable());
    CHECK(s.primal_objective <= -1.0);
}

TEST_CASE("solver: rejects malformed programs") {
    Program p;
    p.n = 2;
    p.c = Eigen::VectorXd::Zero(2);
    p.h = Eigen::VectorXd::Zero(1);
    p.cone_rows.emplace_back();
    p.cones.soc_dims = {1};  // SOC must have dim >= 2
    CHECK_THROWS_AS(solve(p), ConfigError);
}

TEST_CASE("feasibility: single UE boundary is p * ||h||^2") {
    RandomStream rng(17);
    Eigen::MatrixXcd H(2, 1);
    H << rng.cnormal(), rng.cnormal();
    const ChannelRealization ch = make_channel(H, 2, 1, 1);
    const PairingSolution pairing = make_pairing({0}, 1);
    const double p_budget = 1.7;
    const double boundary = p_budget * H.squaredNorm();

    const FeasibilityReport in = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, 0.9 * boundary, p_budget,
         PowerConstraintForm::SumSquaredNorms});
    REQUIRE(in.status == Feasibility::Feasible);
    CHECK(in.min_sinr >= 0.9 * boundary * (1.0 - 1e-4));

    const FeasibilityReport out = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, 1.1 * boundary, p_budget,
         PowerConstraintForm::SumSquaredNorms});
    CHECK(out.status == Feasibility::Infeasible);

    const double theta_star =
        bisect_theta(ch, pairing, SupportCase::CaseI_SingleServing, p_budget, 2.0 * boundary);
    CHECK(theta_star == doctest::Approx(boundary).epsilon(1e-3));
}

TEST_CASE("feasibility: two orthogonal UEs on one AN match the closed form") {
    const double a = 1.3, bb = 0.8, p_budget = 1.0;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(2, 2);
    H(0, 0) = a;
    H(1, 1) = bb;
    const ChannelRealization ch = make_channel(H, 2, 1, 2);
    const PairingSolution pairing = make_pairing({0, 0}, 1);

    // orthogonal channels: theta* = P a^2 b^2 / (a^2 + b^2)
    const double expect = p_budget * a * a * bb * bb / (a * a + bb * bb);
    const double theta_star =
        bisect_theta(ch, pairing, SupportCase::CaseII_JointActive, p_budget, 4.0);
    CHECK(theta_star == doctest::Approx(expect).epsilon(2e-3));
}

TEST_CASE("feasibility: witness respects support, power caps and target SINR") {
    RandomStream rng(23);
    const int L = 2, M = 2, K = 2;
    const Eigen::MatrixXcd delta = draw_unit_fading(M, L, K, rng);
    const ChannelRealization ch = make_channel(delta, L, M, K);
    const PairingSolution pairing = make_pairing({0, 1}, M);
    const double p_budget = 1.0;

    const double theta_star = bisect_theta(ch, pairing, SupportCase::CaseI_SingleServing,
                                           p_budget, 50.0);
    REQUIRE(theta_star > 0.0);
    const FeasibilityReport r = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, theta_star, p_budget,
         PowerConstraintForm::SumSquaredNorms});
    REQUIRE(r.status == Feasibility::Feasible);

    // support exactness: only the serving AN's block may be nonzero
    CHECK(r.precoder.W.block(L, 0, L, 1).norm() == 0.0);
    CHECK(r.precoder.W.block(0, 1, L, 1).norm() == 0.0);

    // hard caps: per-AN power within budget/|A|
    const double cap = p_budget / 2.0;
    CHECK(r.precoder.W.block(0, 0, L, K).squaredNorm() <= cap * (1.0 + 1e-6));
    CHECK(r.precoder.W.block(L, 0, L, K).squaredNorm() <= cap * (1.0 + 1e-6));

    // achieved SINRs meet the target within tolerance
    for (int k = 0; k < K; ++k) {
        CHECK(sinr(ch, r.precoder, k) >= theta_star * (1.0 - 1e-4));
    }
    CHECK(r.min_sinr == doctest::Approx(std::min(sinr(ch, r.precoder, 0),
                                                 sinr(ch, r.precoder, 1))));

    // just above the boundary the oracle flips to infeasible
    const FeasibilityReport above = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, 1.1 * (theta_star + 1e-4), p_budget,
         PowerConstraintForm::SumSquaredNorms});
    CHECK(above.status == Feasibility::Infeasible);
}

TEST_CASE("feasibility: monotone in theta and joint processing dominates") {
    RandomStream rng(31);
    const int L = 2, M = 2, K = 3;
    const Eigen::MatrixXcd delta = draw_unit_fading(M, L, K, rng);
    const ChannelRealization ch = make_channel(2.0 * delta, L, M, K);
    const PairingSolution pairing = make_pairing({0, 1, 0}, M);

    const double theta1 = bisect_theta(ch, pairing, SupportCase::CaseI_SingleServing, 1.0, 80.0);
    const FeasibilityReport half = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, theta1 / 2.0, 1.0,
         PowerConstraintForm::SumSquaredNorms});
    CHECK(half.status == Feasibility::Feasible);

    const double theta2 = bisect_theta(ch, pairing, SupportCase::CaseII_JointActive, 1.0, 80.0);
    CHECK(theta2 >= theta1 - 1e-3);
}

TEST_CASE("feasibility: sum-of-norms power form is the stricter constraint") {
    RandomStream rng(41);
    const int L = 2, M = 2, K = 2;
    const Eigen::MatrixXcd delta = draw_unit_fading(M, L, K, rng);
    const ChannelRealization ch = make_channel(delta, L, M, K);
    const PairingSolution pairing = make_pairing({0, 1}, M);

    const double theta_default = bisect_theta(ch, pairing, SupportCase::CaseII_JointActive, 1.0,
                                              50.0, PowerConstraintForm::SumSquaredNorms);
    const double theta_literal = bisect_theta(ch, pairing, SupportCase::CaseII_JointActive, 1.0,
                                              50.0, PowerConstraintForm::SumNorms);
    CHECK(theta_literal <= theta_default + 1e-3);

    // single UE: both forms reduce to the same per-AN cap
    Eigen::MatrixXcd h1(2, 1);
    h1 << cxd(0.9, 0.4), cxd(-0.2, 1.1);
    const ChannelRealization single = make_channel(h1, 2, 1, 1);
    const PairingSolution sp = make_pairing({0}, 1);
    const double ub = 3.0 * single.H.squaredNorm();
    const double t_a =
        bisect_theta(single, sp, SupportCase::CaseI_SingleServing, 1.0, ub,
                     PowerConstraintForm::SumSquaredNorms);
    const double t_b = bisect_theta(single, sp, SupportCase::CaseI_SingleServing, 1.0, ub,
                                    PowerConstraintForm::SumNorms);
    CHECK(t_a == doctest::Approx(t_b).epsilon(1e-3));
}

TEST_CASE("feasibility: obviously unreachable target is certified quickly") {
    RandomStream rng(53);
    const Eigen::MatrixXcd delta = draw_unit_fading(1, 2, 2, rng);
    const ChannelRealization ch = make_channel(delta, 2, 1, 2);
    const PairingSolution pairing = make_pairing({0, 0}, 1);

    const FeasibilityReport r = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, 1e6, 1.0,
         PowerConstraintForm::SumSquaredNorms});
    CHECK(r.status == Feasibility::Infeasible);

    FeasibilityOptions no_early;
    no_early.early_exit = false;
    const FeasibilityReport full = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, 1e6, 1.0,
         PowerConstraintForm::SumSquaredNorms},
        no_early);
    CHECK(full.status == Feasibility::Infeasible);
    CHECK(r.ipm_iterations <= full.ipm_iterations);
}

TEST_CASE("feasibility: argument validation") {
    RandomStream rng(61);
    const Eigen::MatrixXcd delta = draw_unit_fading(1, 2, 1, rng);
    const ChannelRealization ch = make_channel(delta, 2, 1, 1);
    const PairingSolution pairing = make_pairing({0}, 1);

    CHECK_THROWS_AS(check_sinr_feasibility({nullptr, &pairing,
                                            SupportCase::CaseI_SingleServing, 1.0, 1.0,
                                            PowerConstraintForm::SumSquaredNorms}),
                    ConfigError);
    CHECK_THROWS_AS(check_sinr_feasibility({&ch, &pairing, SupportCase::CaseI_SingleServing,
                                            -1.0, 1.0, PowerConstraintForm::SumSquaredNorms}),
                    ConfigError);
    CHECK_THROWS_AS(check_sinr_feasibility({&ch, &pairing, SupportCase::CaseI_SingleServing,
                                            1.0, 0.0, PowerConstraintForm::SumSquaredNorms}),
                    ConfigError);

    PairingSolution mismatched = make_pairing({0, 0}, 1);
    CHECK_THROWS_AS(check_sinr_feasibility({&ch, &mismatched,
                                            SupportCase::CaseI_SingleServing, 1.0, 1.0,
                                            PowerConstraintForm::SumSquaredNorms}),
                    ConfigError);
}

TEST_CASE("feasibility: zero channel cannot reach a positive target") {
    const ChannelRealization ch = make_channel(Eigen::MatrixXcd::Zero(2, 1), 2, 1, 1);
    const PairingSolution pairing = make_pairing({0}, 1);
    const FeasibilityReport r = check_sinr_feasibility(
        {&ch, &pairing, SupportCase::CaseI_SingleServing, 0.5, 1.0,
         PowerConstraintForm::SumSquaredNorms});
    CHECK(r.status == Feasibility::Infeasible);
}
