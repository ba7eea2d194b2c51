#include "udn/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>

#include "udn/errors.hpp"

namespace udn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Min-cost flow on the bipartite assignment graph: source -> UE (cap 1) ->
/// allowed AN (cap 1, cost c_km) -> sink (cap u_max). Successive shortest
/// paths with Johnson potentials; costs must be nonnegative.
class AssignmentSolver {
public:
    AssignmentSolver(const Eigen::MatrixXd& costs, int u_max)
        : costs_(costs), K_(static_cast<int>(costs.rows())), M_(static_cast<int>(costs.cols())),
          u_max_(u_max) {}

    struct Result {
        bool feasible = false;
        std::vector<int> serving;  // K, -1 when unassigned
        std::vector<int> load;     // M
        double flow_cost = 0.0;
        int used_count = 0;
    };

    Result solve(const std::vector<uint8_t>& allowed) {
        build(allowed);
        Result res;
        res.serving.assign(K_, -1);
        res.load.assign(M_, 0);
        for (int unit = 0; unit < K_; ++unit) {
            if (!augment()) return res;  // res.feasible stays false
        }
        for (int k = 0; k < K_; ++k) {
            for (int e : adj_[1 + k]) {
                if (edges_[e].flow > 0 && edges_[e].to != source()) {
                    res.serving[k] = edges_[e].to - an_base();
                    break;
                }
            }
        }
        for (int k = 0; k < K_; ++k) {
            res.flow_cost += costs_(k, res.serving[k]);
            if (res.load[res.serving[k]]++ == 0) ++res.used_count;
        }
        res.feasible = true;
        return res;
    }

private:
    struct Edge {
        int to;
        int cap;
        double cost;
        int flow = 0;
    };

    int source() const { return 0; }
    int an_base() const { return 1 + K_; }
    int sink() const { return 1 + K_ + M_; }
    int n_nodes() const { return 2 + K_ + M_; }

    void build(const std::vector<uint8_t>& allowed) {
        edges_.clear();
        adj_.assign(n_nodes(), {});
        for (int k = 0; k < K_; ++k) add_edge(source(), 1 + k, 1, 0.0);
        for (int k = 0; k < K_; ++k)
            for (int m = 0; m < M_; ++m)
                if (allowed[m]) add_edge(1 + k, an_base() + m, 1, costs_(k, m));
        for (int m = 0; m < M_; ++m)
            if (allowed[m]) add_edge(an_base() + m, sink(), u_max_, 0.0);
        potential_.assign(n_nodes(), 0.0);
    }

    void add_edge(int from, int to, int cap, double cost) {
        adj_[from].push_back(static_cast<int>(edges_.size()));
        edges_.push_back({to, cap, cost});
        adj_[to].push_back(static_cast<int>(edges_.size()));
        edges_.push_back({from, 0, -cost});
    }

    bool augment() {
        const int n = n_nodes();
        std::vector<double> dist(n, kInf);
        std::vector<int> prev_edge(n, -1);
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[source()] = 0.0;
        heap.push({0.0, source()});
        while (!heap.empty()) {
            auto [d, u] = heap.top();
            heap.pop();
            if (d > dist[u]) continue;
            for (int e : adj_[u]) {
                const Edge& ed = edges_[e];
                if (ed.cap - ed.flow <= 0) continue;
                // Reduced costs are nonnegative up to roundoff.
                const double rc = std::max(0.0, ed.cost + potential_[u] - potential_[ed.to]);
                if (d + rc < dist[ed.to]) {
                    dist[ed.to] = d + rc;
                    prev_edge[ed.to] = e;
                    heap.push({dist[ed.to], ed.to});
                }
            }
        }
        if (dist[sink()] == kInf) return false;
        for (int u = 0; u < n; ++u)
            if (dist[u] < kInf) potential_[u] += dist[u];
        for (int u = sink(); u != source();) {
            Edge& ed = edges_[prev_edge[u]];
            ed.flow += 1;
            edges_[prev_edge[u] ^ 1].flow -= 1;
            u = edges_[prev_edge[u] ^ 1].to;
        }
        return true;
    }

    const Eigen::MatrixXd& costs_;
    int K_, M_, u_max_;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> adj_;
    std::vector<double> potential_;
};

double exact_cost(const Eigen::MatrixXd& costs, const std::vector<int>& serving) {
    double c = 0.0;
    for (int k = 0; k < static_cast<int>(serving.size()); ++k) c += costs(k, serving[k]);
    return c;
}

double minmax_cost(const Eigen::MatrixXd& costs, const std::vector<int>& serving) {
    double c = 0.0;
    for (int k = 0; k < static_cast<int>(serving.size()); ++k) c = std::max(c, costs(k, serving[k]));
    return c;
}

PairingSolution make_solution(const Eigen::MatrixXd& costs, const std::vector<int>& serving,
                              PairingObjective objective) {
    const int K = static_cast<int>(costs.rows());
    const int M = static_cast<int>(costs.cols());
    PairingSolution sol;
    sol.serving = serving;
    sol.served.assign(M, {});
    sol.alpha.assign(M, 0);
    for (int k = 0; k < K; ++k) {
        sol.served[serving[k]].push_back(k);
        sol.alpha[serving[k]] = 1;
    }
    for (int m = 0; m < M; ++m)
        if (sol.alpha[m]) sol.active_set.push_back(m);
    sol.objective = objective == PairingObjective::SumCost ? exact_cost(costs, serving)
                                                           : minmax_cost(costs, serving);
    return sol;
}

/// Branch-and-bound over the active-AN set for the sum-cost objective.
class PairingSearch {
public:
    PairingSearch(const PairingProblem& p) : p_(p), flow_(p.costs, p.u_max) {}

    std::optional<std::vector<int>> run() {
        std::vector<uint8_t> allowed(p_.num_ans(), 1);
        seed_incumbent(allowed);
        explore(allowed, /*forced=*/std::vector<uint8_t>(p_.num_ans(), 0), 0, std::nullopt);
        if (best_cost_ == kInf) return std::nullopt;
        return best_serving_;
    }

private:
    void seed_incumbent(const std::vector<uint8_t>& allowed) {
        auto root = flow_.solve(allowed);
        if (!root.feasible) return;
        if (root.used_count <= p_.b_max) return;  // explore() closes at the root
        // Keep the b_max most loaded ANs of the relaxation.
        std::vector<int> used;
        for (int m = 0; m < p_.num_ans(); ++m)
            if (root.load[m] > 0) used.push_back(m);
        std::sort(used.begin(), used.end(), [&](int a, int b) {
            return root.load[a] != root.load[b] ? root.load[a] > root.load[b] : a < b;
        });
        std::vector<uint8_t> trimmed(p_.num_ans(), 0);
        for (int i = 0; i < p_.b_max && i < static_cast<int>(used.size()); ++i) trimmed[used[i]] = 1;
        auto res = flow_.solve(trimmed);
        if (res.feasible) {
            best_cost_ = exact_cost(p_.costs, res.serving);
            best_serving_ = res.serving;
        }
    }

    void explore(std::vector<uint8_t> allowed, std::vector<uint8_t> forced, int n_forced,
                 std::optional<AssignmentSolver::Result> precomputed) {
        int n_allowed = 0;
        for (uint8_t a : allowed) n_allowed += a;
        if (static_cast<long long>(std::min(n_allowed, p_.b_max)) * p_.u_max < p_.num_ues()) return;

        auto rel = precomputed ? std::move(*precomputed) : flow_.solve(allowed);
        if (!rel.feasible) return;
        if (rel.flow_cost >= best_cost_) return;

        if (rel.used_count <= p_.b_max) {
            const double exact = exact_cost(p_.costs, rel.serving);
            if (exact < best_cost_) {
                best_cost_ = exact;
                best_serving_ = rel.serving;
            }
            return;  // relaxation optimum is feasible: subtree closed
        }

        // Branch on a used, unforced AN: lightest load first, then index.
        int pick = -1;
        for (int m = 0; m < p_.num_ans(); ++m) {
            if (rel.load[m] > 0 && !forced[m]) {
                if (pick < 0 || rel.load[m] < rel.load[pick]) pick = m;
            }
        }
        if (pick < 0) return;  // all used ANs forced yet over budget: dead end

        // Child 1: exclude.
        {
            auto child_allowed = allowed;
            child_allowed[pick] = 0;
            explore(std::move(child_allowed), forced, n_forced, std::nullopt);
        }
        // Child 2: force active. Same relaxation remains valid.
        forced[pick] = 1;
        ++n_forced;
        if (n_forced == p_.b_max) {
            std::vector<uint8_t> collapsed = forced;
            explore(std::move(collapsed), forced, n_forced, std::nullopt);
        } else {
            explore(std::move(allowed), std::move(forced), n_forced, std::move(rel));
        }
    }

    const PairingProblem& p_;
    AssignmentSolver flow_;
    double best_cost_ = kInf;
    std::vector<int> best_serving_;
};

/// Min-max objective: binary search on the bottleneck cost over sum-cost
/// feasibility subproblems with thresholded edge sets.
PairingSolution solve_minmax(const PairingProblem& problem) {
    std::vector<double> values;
    values.reserve(problem.costs.size());
    for (int k = 0; k < problem.num_ues(); ++k)
        for (int m = 0; m < problem.num_ans(); ++m) values.push_back(problem.costs(k, m));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    auto feasible_at = [&](double threshold) -> std::optional<std::vector<int>> {
        PairingProblem sub;
        sub.costs = problem.costs;
        sub.b_max = problem.b_max;
        sub.u_max = problem.u_max;
        for (int k = 0; k < problem.num_ues(); ++k)
            for (int m = 0; m < problem.num_ans(); ++m)
                if (problem.costs(k, m) > threshold) sub.costs(k, m) = 1e30;
        PairingSearch search(sub);
        auto serving = search.run();
        if (!serving) return std::nullopt;
        if (minmax_cost(problem.costs, *serving) > threshold) return std::nullopt;
        return serving;
    };

    int lo = 0, hi = static_cast<int>(values.size()) - 1;
    if (!feasible_at(values[hi])) throw InfeasibleError("pairing: no feasible assignment");
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (feasible_at(values[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    auto serving = feasible_at(values[lo]);
    return make_solution(problem.costs, *serving, PairingObjective::MinMaxCost);
}

}  // namespace

void PairingProblem::validate() const {
    if (num_ues() < 1 || num_ans() < 1) throw ConfigError("pairing: empty instance");
    if (u_max < 1) throw ConfigError("pairing: u_max must be >= 1");
    if (b_max < 1) throw ConfigError("pairing: b_max must be >= 1");
    for (int k = 0; k < num_ues(); ++k)
        for (int m = 0; m < num_ans(); ++m)
            if (!std::isfinite(costs(k, m)) || costs(k, m) < 0.0)
                throw ConfigError("pairing: costs must be finite and nonnegative");
}

Eigen::MatrixXd build_costs(const Topology& topology) {
    const Eigen::MatrixXd dist = link_distances(topology);
    Eigen::MatrixXd costs(dist.rows(), dist.cols());
    for (int k = 0; k < dist.rows(); ++k)
        for (int m = 0; m < dist.cols(); ++m)
            costs(k, m) = std::pow(dist(k, m) / topology.d_edge, topology.alpha_pl);
    return costs;
}

PairingSolution solve_pairing(const PairingProblem& problem) {
    problem.validate();
    const long long cover =
        static_cast<long long>(std::min(problem.b_max, problem.num_ans())) * problem.u_max;
    if (cover < problem.num_ues())
        throw InfeasibleError("pairing: b_max * u_max cannot cover all UEs");

    if (problem.objective == PairingObjective::MinMaxCost) return solve_minmax(problem);

    PairingSearch search(problem);
    auto serving = search.run();
    if (!serving) throw InfeasibleError("pairing: no feasible assignment");
    return make_solution(problem.costs, *serving, PairingObjective::SumCost);
}

PairingSolution enumerate_pairing_oracle(const PairingProblem& problem, std::uint64_t enumeration_cap) {
    problem.validate();
    const int K = problem.num_ues();
    const int M = problem.num_ans();
    double combos = std::pow(static_cast<double>(M), static_cast<double>(K));
    if (combos > static_cast<double>(enumeration_cap))
        throw InstanceTooLargeError("pairing oracle: M^K exceeds the enumeration cap");

    std::vector<int> serving(K, 0);
    std::vector<int> load(M, 0);
    std::vector<int> best;
    double best_primary = kInf, best_secondary = kInf;
    const bool minmax = problem.objective == PairingObjective::MinMaxCost;

    while (true) {
        load.assign(M, 0);
        int used = 0;
        bool ok = true;
        for (int k = 0; k < K && ok; ++k) {
            const int m = serving[k];
            if (load[m]++ == 0) ++used;
            if (load[m] > problem.u_max || used > problem.b_max) ok = false;
        }
        if (ok) {
            const double sum = exact_cost(problem.costs, serving);
            const double primary = minmax ? minmax_cost(problem.costs, serving) : sum;
            const double secondary = minmax ? sum : 0.0;
            if (primary < best_primary ||
                (primary == best_primary && secondary < best_secondary)) {
                best_primary = primary;
                best_secondary = secondary;
                best = serving;
            }
        }
        int pos = K - 1;
        while (pos >= 0 && serving[pos] == M - 1) serving[pos--] = 0;
        if (pos < 0) break;
        ++serving[pos];
    }
    if (best.empty()) throw InfeasibleError("pairing oracle: no feasible assignment");
    return make_solution(problem.costs, best, problem.objective);
}

} // namespace udn
