#include "udn/precoding.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "udn/conic.hpp"
#include "udn/errors.hpp"

namespace udn {

namespace {

void validate_pair(const ChannelRealization& channel, const PairingSolution& pairing,
                   double p_budget) {
    if (channel.K != static_cast<int>(pairing.serving.size())) {
        throw ConfigError("pairing covers " + std::to_string(pairing.serving.size()) +
                          " UEs but the channel has " + std::to_string(channel.K));
    }
    if (pairing.active_set.empty()) throw ConfigError("pairing has no active ANs");
    if (!(p_budget > 0.0)) throw ConfigError("p_budget must be positive");
}

}  // namespace

PrecodingMatrix zf_local(const ChannelRealization& channel, const PairingSolution& pairing,
                         double p_budget) {
    validate_pair(channel, pairing, p_budget);
    const int L = channel.L;
    const double cap = p_budget / static_cast<double>(pairing.active_set.size());

    PrecodingMatrix out;
    out.W = Eigen::MatrixXcd::Zero(channel.H.rows(), channel.K);
    out.support_case = SupportCase::CaseI_SingleServing;

    for (const int m : pairing.active_set) {
        const auto& served = pairing.served[static_cast<size_t>(m)];
        const int u = static_cast<int>(served.size());
        if (u == 0) continue;
        if (u > L) {
            throw ConfigError("AN " + std::to_string(m) + " serves " + std::to_string(u) +
                              " UEs with only " + std::to_string(L) + " antennas");
        }
        Eigen::MatrixXcd local(L, u);
        for (int j = 0; j < u; ++j) local.col(j) = channel.block(m, served[static_cast<size_t>(j)]);

        // F = U S^-1 V^H solves local^H F = I, so intra-AN cross terms vanish.
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(local, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& sv = svd.singularValues();
        if (!(sv(0) > 0.0) || sv(u - 1) <= sv(0) * 1e-12) {
            throw RankDeficientLocalChannelError("AN " + std::to_string(m) +
                                                 ": local channel block is rank-deficient");
        }
        const Eigen::MatrixXcd zf =
            svd.matrixU() * sv.cwiseInverse().asDiagonal() * svd.matrixV().adjoint();
        const double amp = std::sqrt(cap / static_cast<double>(u));
        for (int j = 0; j < u; ++j) {
            out.W.col(served[static_cast<size_t>(j)]).segment(m * L, L) =
                (amp / zf.col(j).norm()) * zf.col(j);
        }
    }
    return out;
}

BisectionResult bisection_max_min_sinr(const ChannelRealization& channel,
                                       const PairingSolution& pairing, SupportCase support_case,
                                       double p_budget, const BisectionConfig& config,
                                       PowerConstraintForm power_form) {
    validate_pair(channel, pairing, p_budget);
    if (!(config.theta_lb >= 0.0) || !(config.theta_ub > config.theta_lb)) {
        throw ConfigError("bisection bracket must satisfy 0 <= theta_lb < theta_ub");
    }
    if (!(config.epsilon > 0.0) || config.max_iters <= 0) {
        throw ConfigError("bisection needs epsilon > 0 and max_iters > 0");
    }

    BisectionResult out;
    const auto probe = [&](double theta) {
        const conic::FeasibilityReport r = conic::check_sinr_feasibility(
            {&channel, &pairing, support_case, theta, p_budget, power_form});
        if (r.status == conic::Feasibility::NumericalFailure) {
            throw SolverNumericalFailure("feasibility probe unusable at theta = " +
                                         std::to_string(theta));
        }
        ++out.probes;
        out.ipm_iterations += r.ipm_iterations;
        return r;
    };

    out.precoder.W = Eigen::MatrixXcd::Zero(channel.H.rows(), channel.K);
    out.precoder.support_case = support_case;

    if (probe(config.theta_ub).status == conic::Feasibility::Feasible) {
        throw BracketError("theta_ub = " + std::to_string(config.theta_ub) + " is feasible");
    }
    double lb = config.theta_lb;
    double ub = config.theta_ub;
    if (lb > 0.0) {
        const conic::FeasibilityReport bottom = probe(lb);
        if (bottom.status != conic::Feasibility::Feasible) {
            throw BracketError("theta_lb = " + std::to_string(lb) + " is infeasible");
        }
        out.precoder = bottom.precoder;
    }
    for (int it = 0; it < config.max_iters && ub - lb > config.epsilon; ++it) {
        const double mid = 0.5 * (lb + ub);
        const conic::FeasibilityReport r = probe(mid);
        if (r.status == conic::Feasibility::Feasible) {
            lb = mid;
            out.precoder = r.precoder;
        } else {
            ub = mid;
        }
    }
    out.theta_star = lb;
    return out;
}

BisectionResult bisection_max_min_sinr(const ChannelRealization& channel,
                                       const PairingSolution& pairing, SupportCase support_case,
                                       double p_budget, double epsilon,
                                       PowerConstraintForm power_form) {
    validate_pair(channel, pairing, p_budget);
    double bound = 0.0;
    for (int k = 0; k < channel.K; ++k) {
        bound = std::max(bound, p_budget * channel.ue_channel(k).squaredNorm());
    }
    if (bound <= 0.0) {  // all-zero channel: only theta = 0 is reachable
        BisectionResult out;
        out.precoder.W = Eigen::MatrixXcd::Zero(channel.H.rows(), channel.K);
        out.precoder.support_case = support_case;
        return out;
    }
    BisectionConfig cfg;
    cfg.epsilon = epsilon;
    cfg.theta_ub = bound;
    for (int attempt = 0;; ++attempt) {
        try {
            return bisection_max_min_sinr(channel, pairing, support_case, p_budget, cfg,
                                          power_form);
        } catch (const BracketError&) {
            if (attempt >= 8) throw;
            cfg.theta_ub *= 2.0;  // boundary instances can pass the top probe
        }
    }
}

Eigen::VectorXd power_coordination(const Eigen::MatrixXd& eff_gains,
                                   const PairingSolution& pairing, double p_budget,
                                   double epsilon) {
    const int K = static_cast<int>(pairing.serving.size());
    if (eff_gains.rows() != K || eff_gains.cols() != K) {
        throw ConfigError("eff_gains must be K x K with K matching the pairing");
    }
    if (!(p_budget > 0.0) || !(epsilon > 0.0)) {
        throw ConfigError("power coordination needs p_budget > 0 and epsilon > 0");
    }
    if (pairing.active_set.empty()) throw ConfigError("pairing has no active ANs");
    for (int k = 0; k < K; ++k) {
        if (!(eff_gains(k, k) > 0.0)) {
            throw ConfigError("eff_gains diagonal must be positive (UE " + std::to_string(k) +
                              ")");
        }
        for (int i = 0; i < K; ++i) {
            if (!(eff_gains(k, i) >= 0.0)) throw ConfigError("eff_gains must be nonnegative");
        }
    }
    const double cap = p_budget / static_cast<double>(pairing.active_set.size());

    const auto caps_hold = [&](const Eigen::VectorXd& p) {
        for (const int m : pairing.active_set) {
            double sum = 0.0;
            for (const int k : pairing.served[static_cast<size_t>(m)]) sum += p(k);
            if (sum > cap * (1.0 + 1e-12)) return false;
        }
        return true;
    };

    // Normalized interference map p >= theta * (B p + d); the constraint set is
    // nonempty iff rho(theta B) < 1, and its least element is the fixed point
    // (I - theta B)^-1 theta d, which any feasible p dominates. Caps therefore
    // hold somewhere iff they hold at the fixed point.
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K, K);
    Eigen::VectorXd d(K);
    for (int k = 0; k < K; ++k) {
        d(k) = 1.0 / eff_gains(k, k);
        for (int i = 0; i < K; ++i) {
            if (i != k) B(k, i) = eff_gains(k, i) / eff_gains(k, k);
        }
    }
    double spectral = 0.0;
    if (K > 1) {
        spectral = Eigen::EigenSolver<Eigen::MatrixXd>(B, false).eigenvalues().cwiseAbs().maxCoeff();
    }

    Eigen::VectorXd trial(K);
    const auto feasible = [&](double theta, Eigen::VectorXd& p) {
        if (spectral * theta >= 1.0 - 1e-12) return false;
        trial = (Eigen::MatrixXd::Identity(K, K) - theta * B).partialPivLu().solve(theta * d);
        if (!caps_hold(trial)) return false;
        p = trial;
        return true;
    };

    // Equal split seeds the feasible end, so the result can never fall below it.
    Eigen::VectorXd best = Eigen::VectorXd::Zero(K);
    for (const int m : pairing.active_set) {
        const auto& served = pairing.served[static_cast<size_t>(m)];
        for (const int k : served) best(k) = cap / static_cast<double>(served.size());
    }
    double lb = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        double interf = 1.0;
        for (int i = 0; i < K; ++i) {
            if (i != k) interf += eff_gains(k, i) * best(i);
        }
        lb = std::min(lb, best(k) * eff_gains(k, k) / interf);
    }
    double ub = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) ub = std::min(ub, cap * eff_gains(k, k));
    ub = ub * (1.0 + 1e-9) + 1e-300;  // strictly above the single-link bound

    Eigen::VectorXd p(K);
    while (ub - lb > epsilon) {
        const double mid = 0.5 * (lb + ub);
        if (feasible(mid, p)) {
            lb = mid;
            best = p;
        } else {
            ub = mid;
        }
    }
    return best;
}

} // namespace udn
