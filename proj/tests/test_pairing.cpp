#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "udn/errors.hpp"
#include "udn/pairing.hpp"
#include "udn/rng.hpp"
#include "udn/topology.hpp"

using namespace udn;

namespace {

PairingProblem make_problem(Eigen::MatrixXd costs, int b_max, int u_max,
                            PairingObjective obj = PairingObjective::SumCost) {
    PairingProblem p;
    p.costs = std::move(costs);
    p.b_max = b_max;
    p.u_max = u_max;
    p.objective = obj;
    return p;
}

void check_solution_feasible(const PairingProblem& p, const PairingSolution& s) {
    const int K = p.num_ues();
    const int M = p.num_ans();
    REQUIRE(static_cast<int>(s.serving.size()) == K);
    std::vector<int> load(static_cast<size_t>(M), 0);
    double obj = 0.0;
    for (int k = 0; k < K; ++k) {
        REQUIRE(s.serving[k] >= 0);
        REQUIRE(s.serving[k] < M);
        ++load[static_cast<size_t>(s.serving[k])];
        obj += p.costs(k, s.serving[k]);
    }
    int used = 0;
    for (int m = 0; m < M; ++m) {
        CHECK(load[static_cast<size_t>(m)] <= p.u_max);
        if (load[static_cast<size_t>(m)] > 0) ++used;
        CHECK((s.alpha[static_cast<size_t>(m)] == 1) ==
              (std::find(s.active_set.begin(), s.active_set.end(), m) != s.active_set.end()));
    }
    CHECK(used <= p.b_max);
    CHECK(static_cast<int>(s.active_set.size()) == used);
    if (p.objective == PairingObjective::SumCost) {
        CHECK(s.objective == doctest::Approx(obj).epsilon(1e-12));
    }
    for (int m : s.active_set) {
        CHECK(!s.served[static_cast<size_t>(m)].empty());
    }
    for (int k = 0; k < K; ++k) {
        const auto& u = s.served[static_cast<size_t>(s.serving[k])];
        CHECK(std::find(u.begin(), u.end(), k) != u.end());
    }
}

}  // namespace

TEST_CASE("two UEs, two ANs: budget drives the split") {
    Eigen::MatrixXd c(2, 2);
    c << 1.0, 10.0, 10.0, 1.0;

    const PairingSolution split = solve_pairing(make_problem(c, 2, 2));
    CHECK(split.serving == std::vector<int>{0, 1});
    CHECK(split.objective == doctest::Approx(2.0));

    const PairingSolution merged = solve_pairing(make_problem(c, 1, 2));
    CHECK(merged.objective == doctest::Approx(11.0));
    CHECK(merged.active_set.size() == 1);

    // u_max = 1 forces one UE per AN even with budget for one
    CHECK_THROWS_AS(solve_pairing(make_problem(c, 1, 1)), InfeasibleError);
}

TEST_CASE("u_max binds: cheap AN saturates and remainder spills over") {
    Eigen::MatrixXd c(3, 2);
    c << 1.0, 5.0, 1.0, 5.0, 1.0, 5.0;
    const PairingSolution s = solve_pairing(make_problem(c, 2, 2));
    // two UEs on AN0, one forced to AN1
    CHECK(s.objective == doctest::Approx(7.0));
    check_solution_feasible(make_problem(c, 2, 2), s);
}

TEST_CASE("single UE picks the argmin cost") {
    Eigen::MatrixXd c(1, 3);
    c << 3.0, 1.0, 2.0;
    const PairingSolution s = solve_pairing(make_problem(c, 1, 1));
    CHECK(s.serving == std::vector<int>{1});
    CHECK(s.objective == doctest::Approx(1.0));
    CHECK(s.active_set == std::vector<int>{1});
}

TEST_CASE("coverage shortfall throws") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 1);
    CHECK_THROWS_AS(solve_pairing(make_problem(c, 1, 1)), InfeasibleError);
    Eigen::MatrixXd c2 = Eigen::MatrixXd::Ones(5, 3);
    CHECK_THROWS_AS(solve_pairing(make_problem(c2, 2, 2)), InfeasibleError);
}

TEST_CASE("validation rejects malformed problems") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(solve_pairing(make_problem(c, 0, 2)), ConfigError);
    CHECK_THROWS_AS(solve_pairing(make_problem(c, 2, 0)), ConfigError);
    Eigen::MatrixXd neg(1, 1);
    neg << -1.0;
    CHECK_THROWS_AS(solve_pairing(make_problem(neg, 1, 1)), ConfigError);
}

TEST_CASE("exact solver matches exhaustive enumeration on random instances") {
    RandomStream rng(2024);
    int infeasible_seen = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int K = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
        const int M = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
        const int b_max = 1 + static_cast<int>(rng.uniform(0.0, static_cast<double>(M)));
        const int u_max = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        Eigen::MatrixXd c(K, M);
        for (int k = 0; k < K; ++k) {
            for (int m = 0; m < M; ++m) c(k, m) = rng.uniform(0.0, 100.0);
        }
        const PairingProblem prob = make_problem(c, std::min(b_max, M), u_max);
        if (std::min(prob.b_max, M) * u_max < K) {
            CHECK_THROWS_AS(solve_pairing(prob), InfeasibleError);
            CHECK_THROWS_AS(enumerate_pairing_oracle(prob), InfeasibleError);
            ++infeasible_seen;
            continue;
        }
        const PairingSolution fast = solve_pairing(prob);
        const PairingSolution slow = enumerate_pairing_oracle(prob);
        check_solution_feasible(prob, fast);
        CHECK(fast.objective == doctest::Approx(slow.objective).epsilon(1e-12));
        CHECK(fast.serving == slow.serving);
    }
    CHECK(infeasible_seen > 0);  // the parameter draw covers both regimes
}

TEST_CASE("min-max objective against enumeration and hand cases") {
    Eigen::MatrixXd c(2, 2);
    c << 5.0, 2.0, 2.0, 5.0;

    const PairingSolution one = solve_pairing(make_problem(c, 1, 2, PairingObjective::MinMaxCost));
    CHECK(one.objective == doctest::Approx(5.0));

    const PairingSolution two = solve_pairing(make_problem(c, 2, 2, PairingObjective::MinMaxCost));
    CHECK(two.objective == doctest::Approx(2.0));
    CHECK(two.serving == std::vector<int>{1, 0});

    RandomStream rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        const int K = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
        const int M = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
        const int b_max = 1 + static_cast<int>(rng.uniform(0.0, static_cast<double>(M)));
        const int u_max = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        if (std::min(b_max, M) * u_max < K) continue;
        Eigen::MatrixXd costs(K, M);
        for (int k = 0; k < K; ++k) {
            for (int m = 0; m < M; ++m) costs(k, m) = rng.uniform(0.0, 50.0);
        }
        const PairingProblem prob = make_problem(costs, b_max, u_max, PairingObjective::MinMaxCost);
        const PairingSolution fast = solve_pairing(prob);
        const PairingSolution slow = enumerate_pairing_oracle(prob);
        double fast_max = 0.0, slow_max = 0.0;
        for (int k = 0; k < K; ++k) {
            fast_max = std::max(fast_max, costs(k, fast.serving[k]));
            slow_max = std::max(slow_max, costs(k, slow.serving[k]));
        }
        CHECK(fast_max == doctest::Approx(slow_max).epsilon(1e-12));
    }
}

TEST_CASE("optimum improves weakly with larger budgets") {
    RandomStream rng(5);
    Eigen::MatrixXd c(5, 4);
    for (int k = 0; k < 5; ++k) {
        for (int m = 0; m < 4; ++m) c(k, m) = rng.uniform(0.0, 10.0);
    }
    double prev = 1e300;
    for (int b_max = 2; b_max <= 4; ++b_max) {
        const PairingSolution s = solve_pairing(make_problem(c, b_max, 3));
        CHECK(s.objective <= prev + 1e-12);
        prev = s.objective;
    }
    prev = 1e300;
    for (int u_max = 2; u_max <= 5; ++u_max) {
        const PairingSolution s = solve_pairing(make_problem(c, 3, u_max));
        CHECK(s.objective <= prev + 1e-12);
        prev = s.objective;
    }
}

TEST_CASE("enumeration oracle rejects oversized instances") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Ones(10, 10);
    CHECK_THROWS_AS(enumerate_pairing_oracle(make_problem(c, 10, 4), 1000),
                    InstanceTooLargeError);
}

TEST_CASE("cost matrix follows the inverse normalized gain") {
    Topology topo;
    topo.area_side = 1000.0;
    topo.d_edge = edge_distance(1000.0, EdgeConvention::Corner);
    topo.alpha_pl = 4.0;
    topo.an_positions = {{0.0, 0.0}, {500.0, 0.0}};
    topo.ue_positions = {{topo.d_edge, 0.0}, {topo.d_edge / 2.0, 0.0}};

    const Eigen::MatrixXd c = build_costs(topo);
    REQUIRE(c.rows() == 2);
    REQUIRE(c.cols() == 2);
    CHECK(c(0, 0) == doctest::Approx(1.0));         // at d_edge
    CHECK(c(1, 0) == doctest::Approx(1.0 / 16.0));  // half the distance
    for (int k = 0; k < 2; ++k) {
        for (int m = 0; m < 2; ++m) {
            CHECK(c(k, m) ==
                  doctest::Approx(1.0 / normalized_gain(link_distances(topo)(k, m), topo)));
        }
    }
}

TEST_CASE("larger pairing runs exactly and respects all caps") {
    RandomStream rng(99);
    const int K = 16, M = 24;
    Eigen::MatrixXd c(K, M);
    for (int k = 0; k < K; ++k) {
        for (int m = 0; m < M; ++m) c(k, m) = rng.uniform(0.0, 1000.0);
    }
    // b_max = ceil(K/L) with L = 4 mirrors the joint-processing budget
    const PairingProblem prob = make_problem(c, 4, 4);
    const PairingSolution s = solve_pairing(prob);
    check_solution_feasible(prob, s);
    CHECK(static_cast<int>(s.active_set.size()) <= 4);
}
