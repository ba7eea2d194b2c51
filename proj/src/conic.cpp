#include "udn/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "udn/errors.hpp"

namespace udn::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConeView {
    int lp = 0;
    std::vector<int> off;
    std::vector<int> dim;
    int total = 0;
    int order = 0;

    explicit ConeView(const ConeSpec& spec) : lp(spec.lp_dim) {
        int at = lp;
        for (int d : spec.soc_dims) {
            off.push_back(at);
            dim.push_back(d);
            at += d;
        }
        total = at;
        order = spec.order();
    }
    int num_socs() const { return static_cast<int>(dim.size()); }
};

void unit_element(const ConeView& cv, VectorXd& e) {
    e.setZero(cv.total);
    e.head(cv.lp).setOnes();
    for (int c = 0; c < cv.num_socs(); ++c) e(cv.off[c]) = 1.0;
}

void jordan_product(const ConeView& cv, const VectorXd& u, const VectorXd& v, VectorXd& out) {
    out.resize(cv.total);
    out.head(cv.lp) = u.head(cv.lp).cwiseProduct(v.head(cv.lp));
    for (int c = 0; c < cv.num_socs(); ++c) {
        const int o = cv.off[c], d = cv.dim[c];
        const double u0 = u(o), v0 = v(o);
        out(o) = u0 * v0 + u.segment(o + 1, d - 1).dot(v.segment(o + 1, d - 1));
        out.segment(o + 1, d - 1) = u0 * v.segment(o + 1, d - 1) + v0 * u.segment(o + 1, d - 1);
    }
}

/// Solves lam o w = d for w; lam must be invertible in the Jordan algebra.
void jordan_solve(const ConeView& cv, const VectorXd& lam, const VectorXd& d, VectorXd& out) {
    out.resize(cv.total);
    out.head(cv.lp) = d.head(cv.lp).cwiseQuotient(lam.head(cv.lp));
    for (int c = 0; c < cv.num_socs(); ++c) {
        const int o = cv.off[c], dd = cv.dim[c];
        const auto l1 = lam.segment(o + 1, dd - 1);
        const double l0 = lam(o);
        const double det = l0 * l0 - l1.squaredNorm();
        const double w0 = (l0 * d(o) - l1.dot(d.segment(o + 1, dd - 1))) / det;
        out(o) = w0;
        out.segment(o + 1, dd - 1) = (d.segment(o + 1, dd - 1) - w0 * l1) / l0;
    }
}

/// Largest cone-wise violation; strictly interior iff negative.
double max_violation(const ConeView& cv, const VectorXd& u) {
    double worst = -kInf;
    for (int i = 0; i < cv.lp; ++i) worst = std::max(worst, -u(i));
    for (int c = 0; c < cv.num_socs(); ++c) {
        const int o = cv.off[c], d = cv.dim[c];
        worst = std::max(worst, u.segment(o + 1, d - 1).norm() - u(o));
    }
    return worst;
}

/// sup { a >= 0 : u + a du in K } for strictly interior u.
double max_step(const ConeView& cv, const VectorXd& u, const VectorXd& du) {
    double best = kInf;
    for (int i = 0; i < cv.lp; ++i) {
        if (du(i) < 0.0) best = std::min(best, -u(i) / du(i));
    }
    for (int cn = 0; cn < cv.num_socs(); ++cn) {
        const int o = cv.off[cn], d = cv.dim[cn];
        const auto u1 = u.segment(o + 1, d - 1);
        const auto d1 = du.segment(o + 1, d - 1);
        const double a = du(o) * du(o) - d1.squaredNorm();
        const double b = 2.0 * (u(o) * du(o) - u1.dot(d1));
        const double c = u(o) * u(o) - u1.squaredNorm();
        if (std::abs(a) < 1e-300) {
            if (b < 0.0) best = std::min(best, -c / b);
            continue;
        }
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) continue;
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        double smallest = kInf;
        if (const double r = q / a; r > 0.0) smallest = std::min(smallest, r);
        if (q != 0.0) {
            if (const double r = c / q; r > 0.0) smallest = std::min(smallest, r);
        }
        best = std::min(best, smallest);
    }
    return best;
}

/// Nesterov-Todd scaling W with W z = W^-1 s = lambda. Per second-order
/// cone W = eta P(v) where v is the Jordan square root of the scaling
/// point; P(v)x = 2 v (v'x) - Jx since det(v) = 1.
struct Scaling {
    VectorXd wl;
    std::vector<double> eta;
    std::vector<VectorXd> v, u, q, r;

    bool make(const ConeView& cv, const VectorXd& s, const VectorXd& z) {
        wl.resize(cv.lp);
        for (int i = 0; i < cv.lp; ++i) {
            if (!(s(i) > 0.0) || !(z(i) > 0.0)) return false;
            wl(i) = std::sqrt(s(i) / z(i));
        }
        const int ns = cv.num_socs();
        eta.assign(ns, 0.0);
        v.assign(ns, {});
        u.assign(ns, {});
        q.assign(ns, {});
        r.assign(ns, {});
        for (int c = 0; c < ns; ++c) {
            const int o = cv.off[c], d = cv.dim[c];
            const double ress = s(o) * s(o) - s.segment(o + 1, d - 1).squaredNorm();
            const double resz = z(o) * z(o) - z.segment(o + 1, d - 1).squaredNorm();
            if (!(ress > 0.0) || !(resz > 0.0) || !std::isfinite(ress) || !std::isfinite(resz)) {
                return false;
            }
            VectorXd sb = s.segment(o, d) / std::sqrt(ress);
            VectorXd zb = z.segment(o, d) / std::sqrt(resz);
            const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
            VectorXd wb = sb;
            wb(0) += zb(0);
            wb.tail(d - 1) -= zb.tail(d - 1);
            wb /= 2.0 * gamma;
            VectorXd vc = wb;
            vc(0) += 1.0;
            vc /= std::sqrt(2.0 * (wb(0) + 1.0));
            if (!vc.allFinite()) return false;
            eta[c] = std::pow(ress / resz, 0.25);
            v[c] = vc;
            VectorXd uc = vc;
            uc.tail(d - 1) = -uc.tail(d - 1);
            u[c] = uc;
            q[c] = square(uc);
            r[c] = square(vc);
        }
        return true;
    }

    static VectorXd square(const VectorXd& a) {
        VectorXd out(a.size());
        out(0) = a.squaredNorm();
        out.tail(a.size() - 1) = 2.0 * a(0) * a.tail(a.size() - 1);
        return out;
    }

    enum Op { W, Winv, Wsq, Winvsq };

    void apply(const ConeView& cv, Op op, const VectorXd& in, VectorXd& out) const {
        out.resize(cv.total);
        switch (op) {
            case W: out.head(cv.lp) = wl.cwiseProduct(in.head(cv.lp)); break;
            case Winv: out.head(cv.lp) = in.head(cv.lp).cwiseQuotient(wl); break;
            case Wsq: out.head(cv.lp) = wl.array().square() * in.head(cv.lp).array(); break;
            case Winvsq: out.head(cv.lp) = in.head(cv.lp).array() / wl.array().square(); break;
        }
        for (int c = 0; c < cv.num_socs(); ++c) {
            const int o = cv.off[c], d = cv.dim[c];
            const VectorXd* p = nullptr;
            double scale = 1.0;
            switch (op) {
                case W: p = &v[c]; scale = eta[c]; break;
                case Winv: p = &u[c]; scale = 1.0 / eta[c]; break;
                case Wsq: p = &r[c]; scale = eta[c] * eta[c]; break;
                case Winvsq: p = &q[c]; scale = 1.0 / (eta[c] * eta[c]); break;
            }
            const auto xin = in.segment(o, d);
            const double coef = 2.0 * p->dot(xin);
            out.segment(o, d) = coef * (*p);
            out(o) -= xin(0);
            out.segment(o + 1, d - 1) += xin.tail(d - 1);
            out.segment(o, d) *= scale;
        }
    }
};

void apply_rows(const std::vector<SparseRow>& rows, const VectorXd& x, VectorXd& out) {
    out.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t rIdx = 0; rIdx < rows.size(); ++rIdx) {
        const SparseRow& row = rows[rIdx];
        double acc = 0.0;
        for (int j = 0; j < row.nnz(); ++j) acc += row.val[j] * x(row.idx[j]);
        out(static_cast<Eigen::Index>(rIdx)) = acc;
    }
}

void apply_rows_transpose(const std::vector<SparseRow>& rows, const VectorXd& z, VectorXd& out,
                          int n) {
    out.setZero(n);
    for (size_t rIdx = 0; rIdx < rows.size(); ++rIdx) {
        const SparseRow& row = rows[rIdx];
        const double zr = z(static_cast<Eigen::Index>(rIdx));
        if (zr == 0.0) continue;
        for (int j = 0; j < row.nnz(); ++j) out(row.idx[j]) += row.val[j] * zr;
    }
}

/// Reduced KKT solver. Eliminating dz and ds from
///   [0 A' G'; A 0 0; G 0 -W^2] [dx dy dz] = [bx by bz]
/// leaves M dx + A'dy with M = G'W^-2 G, then a Schur system in dy.
/// M is assembled cone by cone: W^-2 = eta^-2 P(q) per second-order cone
/// gives a rank-one term plus signed outer products of the sparse rows.
class KktSolver {
 public:
    KktSolver(const Program& prog, const ConeView& cv)
        : prog_(prog), cv_(cv), n_(prog.n), p_(static_cast<int>(prog.eq_rows.size())) {
        ad_.setZero(p_, n_);
        for (int i = 0; i < p_; ++i) {
            const SparseRow& row = prog_.eq_rows[static_cast<size_t>(i)];
            for (int j = 0; j < row.nnz(); ++j) ad_(i, row.idx[j]) = row.val[j];
        }
        m_.resize(n_, n_);
        qcols_.resize(n_, cv_.num_socs());
    }

    bool factor(const Scaling* scal) {
        m_.setZero();
        qcols_.setZero();
        for (int i = 0; i < cv_.lp; ++i) {
            const double wgt = scal ? 1.0 / (scal->wl(i) * scal->wl(i)) : 1.0;
            scatter(prog_.cone_rows[static_cast<size_t>(i)], wgt);
        }
        for (int c = 0; c < cv_.num_socs(); ++c) {
            const int o = cv_.off[c], d = cv_.dim[c];
            if (scal == nullptr) {
                for (int rr = 0; rr < d; ++rr) {
                    scatter(prog_.cone_rows[static_cast<size_t>(o + rr)], 1.0);
                }
                continue;
            }
            const double inv2 = 1.0 / (scal->eta[c] * scal->eta[c]);
            const VectorXd& q = scal->q[c];
            VectorXd qt = VectorXd::Zero(n_);
            for (int rr = 0; rr < d; ++rr) {
                const SparseRow& row = prog_.cone_rows[static_cast<size_t>(o + rr)];
                const double qr = q(rr);
                if (qr == 0.0) continue;
                for (int j = 0; j < row.nnz(); ++j) qt(row.idx[j]) += qr * row.val[j];
            }
            qcols_.col(c) = std::sqrt(2.0 * inv2) * qt;
            scatter(prog_.cone_rows[static_cast<size_t>(o)], -inv2);
            for (int rr = 1; rr < d; ++rr) {
                scatter(prog_.cone_rows[static_cast<size_t>(o + rr)], inv2);
            }
        }
        if (scal != nullptr && cv_.num_socs() > 0) {
            m_.selfadjointView<Eigen::Lower>().rankUpdate(qcols_);
        }

        double reg = 1e-14 * std::max(1.0, m_.diagonal().maxCoeff());
        for (int attempt = 0; attempt < 4; ++attempt) {
            MatrixXd mreg = m_;
            mreg.diagonal().array() += reg;
            ldlt_m_.compute(mreg);
            if (ldlt_m_.info() == Eigen::Success && ldlt_m_.vectorD().minCoeff() > 0.0) {
                if (p_ == 0) return true;
                bmat_ = ldlt_m_.solve(ad_.transpose());
                MatrixXd schur = ad_ * bmat_;
                schur.diagonal().array() += 1e-14 * std::max(1.0, schur.diagonal().maxCoeff());
                ldlt_s_.compute(schur);
                if (ldlt_s_.info() == Eigen::Success) return true;
            }
            reg *= 1e4;
        }
        return false;
    }

    void solve(const Scaling* scal, const VectorXd& bx, const VectorXd& by, const VectorXd& bz,
               VectorXd& dx, VectorXd& dy, VectorXd& dz) const {
        solve_once(scal, bx, by, bz, dx, dy, dz);
        // one round of iterative refinement on the full 3x3 system
        VectorXd gx, gtz, e3w;
        apply_rows(prog_.cone_rows, dx, gx);
        apply_rows_transpose(prog_.cone_rows, dz, gtz, n_);
        VectorXd e1 = bx - gtz;
        if (p_ > 0) e1 -= ad_.transpose() * dy;
        VectorXd e2 = p_ > 0 ? VectorXd(by - ad_ * dx) : VectorXd();
        VectorXd wdz;
        if (scal) {
            scal->apply(cv_, Scaling::Wsq, dz, wdz);
        } else {
            wdz = dz;
        }
        VectorXd e3 = bz - (gx - wdz);
        VectorXd cx, cy, cz;
        solve_once(scal, e1, e2, e3, cx, cy, cz);
        dx += cx;
        dz += cz;
        if (p_ > 0) dy += cy;
    }

 private:
    void solve_once(const Scaling* scal, const VectorXd& bx, const VectorXd& by,
                    const VectorXd& bz, VectorXd& dx, VectorXd& dy, VectorXd& dz) const {
        VectorXd wbz;
        if (scal) {
            scal->apply(cv_, Scaling::Winvsq, bz, wbz);
        } else {
            wbz = bz;
        }
        VectorXd r1;
        apply_rows_transpose(prog_.cone_rows, wbz, r1, n_);
        r1 += bx;
        if (p_ > 0) {
            dy = ldlt_s_.solve(ad_ * ldlt_m_.solve(r1) - by);
            dx = ldlt_m_.solve(r1 - ad_.transpose() * dy);
        } else {
            dy.resize(0);
            dx = ldlt_m_.solve(r1);
        }
        VectorXd gx;
        apply_rows(prog_.cone_rows, dx, gx);
        gx -= bz;
        if (scal) {
            scal->apply(cv_, Scaling::Winvsq, gx, dz);
        } else {
            dz = gx;
        }
    }

    void scatter(const SparseRow& row, double weight) {
        for (int a = 0; a < row.nnz(); ++a) {
            const int ia = row.idx[a];
            const double va = weight * row.val[a];
            for (int b = 0; b <= a; ++b) {
                const int ib = row.idx[b];
                if (ia >= ib) {
                    m_(ia, ib) += va * row.val[b];
                } else {
                    m_(ib, ia) += va * row.val[b];
                }
            }
        }
    }

    const Program& prog_;
    const ConeView& cv_;
    int n_, p_;
    MatrixXd ad_, m_, qcols_, bmat_;
    Eigen::LDLT<MatrixXd, Eigen::Lower> ldlt_m_;
    Eigen::LDLT<MatrixXd> ldlt_s_;
};

struct Iterate {
    VectorXd x, y, z, s;
    double pobj = 0, dobj = 0, gap = 0, pres = 0, dres = 0, phi = kInf;
    int iter = 0;
};

}  // namespace

int ConeSpec::dim() const {
    return lp_dim + std::accumulate(soc_dims.begin(), soc_dims.end(), 0);
}

void Program::validate() const {
    if (n <= 0 || c.size() != n) throw ConfigError("conic: objective size mismatch");
    if (cones.lp_dim < 0) throw ConfigError("conic: negative lp dimension");
    for (int d : cones.soc_dims) {
        if (d < 2) throw ConfigError("conic: second-order cone dimension must be >= 2");
    }
    if (static_cast<int>(cone_rows.size()) != cones.dim() || h.size() != cones.dim()) {
        throw ConfigError("conic: cone row count mismatch");
    }
    if (static_cast<Eigen::Index>(eq_rows.size()) != b.size()) {
        throw ConfigError("conic: equality row count mismatch");
    }
    if (cones.dim() == 0) throw ConfigError("conic: empty cone");
}

Solution solve(const Program& program, const SolverOptions& options) {
    program.validate();
    const ConeView cv(program.cones);
    const int n = program.n;
    const int p = static_cast<int>(program.eq_rows.size());
    const int m = cv.total;

    Solution out;
    KktSolver kkt(program, cv);
    VectorXd e;
    unit_element(cv, e);

    if (!kkt.factor(nullptr)) return out;

    VectorXd x, y, z, s, tmp;
    {
        VectorXd zero_n = VectorXd::Zero(n);
        VectorXd dx, dy, dz;
        kkt.solve(nullptr, zero_n, program.b, program.h, dx, dy, dz);
        x = dx;
        apply_rows(program.cone_rows, x, tmp);
        s = program.h - tmp;
        const double viol = max_violation(cv, s);
        if (viol >= 0.0) s += (1.0 + viol) * e;

        kkt.solve(nullptr, VectorXd(-program.c), VectorXd::Zero(p), VectorXd::Zero(m), dx, dy, dz);
        y = dy;
        z = dz;
        const double dviol = max_violation(cv, z);
        if (dviol >= 0.0) z += (1.0 + dviol) * e;
    }

    const double bnorm = std::max(1.0, program.b.size() ? program.b.norm() : 0.0);
    const double hnorm = std::max(1.0, program.h.norm());
    const double cnorm = std::max(1.0, program.c.norm());

    Iterate best;
    auto finish = [&](SolveStatus status, const Iterate& it) {
        out.status = status;
        out.x = it.x;
        out.y = it.y;
        out.z = it.z;
        out.s = it.s;
        out.primal_objective = it.pobj;
        out.dual_objective = it.dobj;
        out.gap = it.gap;
        out.primal_residual = it.pres;
        out.dual_residual = it.dres;
        out.iterations = it.iter;
        return out;
    };
    auto fallback = [&]() {
        if (best.phi <= options.loose_tol) return finish(SolveStatus::Inaccurate, best);
        return finish(SolveStatus::Stalled, best);
    };

    Scaling scal;
    VectorXd rx, ry, rz, gx, gtz, aty;
    VectorXd lam, lamsq, dxa, dya, dza, dsa, dx, dy, dz, ds;
    VectorXd wds, wdz, corr, dvec, dtil, wdtil, bz;

    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        apply_rows_transpose(program.cone_rows, z, gtz, n);
        rx = gtz + program.c;
        if (p > 0) {
            apply_rows_transpose(program.eq_rows, y, aty, n);
            rx += aty;
        }
        if (p > 0) {
            apply_rows(program.eq_rows, x, ry);
            ry -= program.b;
        } else {
            ry.resize(0);
        }
        apply_rows(program.cone_rows, x, gx);
        rz = gx + s - program.h;

        const double gap = s.dot(z);
        const double pobj = program.c.dot(x);
        const double dobj = -program.h.dot(z) - (p > 0 ? program.b.dot(y) : 0.0);
        const double pres = std::max(p > 0 ? ry.norm() / bnorm : 0.0, rz.norm() / hnorm);
        const double dres = rx.norm() / cnorm;
        const double relgap = gap / std::max(1.0, std::abs(pobj));

        if (!std::isfinite(gap) || !std::isfinite(pres) || !std::isfinite(dres)) {
            return fallback();
        }
        Iterate cur{x, y, z, s, pobj, dobj, gap, pres, dres,
                    std::max({pres, dres, std::min(gap, relgap)}), iter};
        if (cur.phi < best.phi) best = cur;

        if (pres <= options.feastol && dres <= options.feastol &&
            (gap <= options.abstol || relgap <= options.reltol)) {
            return finish(SolveStatus::Optimal, cur);
        }
        if (pobj <= options.primal_target && pres <= options.feastol) {
            return finish(SolveStatus::PrimalTarget, cur);
        }
        if (dobj >= options.dual_target && dres <= options.feastol) {
            return finish(SolveStatus::DualTarget, cur);
        }
        if (iter == options.max_iterations) break;

        if (!scal.make(cv, s, z)) return fallback();
        if (!kkt.factor(&scal)) return fallback();
        scal.apply(cv, Scaling::W, z, lam);
        jordan_product(cv, lam, lam, lamsq);
        const double mu = gap / cv.order;

        // predictor
        kkt.solve(&scal, -rx, p > 0 ? VectorXd(-ry) : VectorXd(), VectorXd(-rz + s), dxa, dya,
                  dza);
        apply_rows(program.cone_rows, dxa, tmp);
        dsa = -rz - tmp;
        const double alpha_aff =
            std::min({1.0, max_step(cv, s, dsa), max_step(cv, z, dza)});
        const double gap_aff = (s + alpha_aff * dsa).dot(z + alpha_aff * dza);
        double sigma = std::clamp(gap_aff / gap, 0.0, 1.0);
        sigma = sigma * sigma * sigma;

        // corrector
        scal.apply(cv, Scaling::Winv, dsa, wds);
        scal.apply(cv, Scaling::W, dza, wdz);
        jordan_product(cv, wds, wdz, corr);
        dvec = sigma * mu * e - lamsq - corr;
        jordan_solve(cv, lam, dvec, dtil);
        scal.apply(cv, Scaling::W, dtil, wdtil);
        bz = -rz - wdtil;
        kkt.solve(&scal, -rx, p > 0 ? VectorXd(-ry) : VectorXd(), bz, dx, dy, dz);
        apply_rows(program.cone_rows, dx, tmp);
        ds = -rz - tmp;

        const double alpha =
            std::min(1.0, 0.99 * std::min(max_step(cv, s, ds), max_step(cv, z, dz)));
        if (!(alpha > 1e-11)) return fallback();
        x += alpha * dx;
        s += alpha * ds;
        z += alpha * dz;
        if (p > 0) y += alpha * dy;
    }
    if (best.phi <= options.loose_tol) return finish(SolveStatus::Inaccurate, best);
    return finish(SolveStatus::MaxIterations, best);
}

namespace {

/// Variable layout and scaling used to translate a feasibility instance
/// into a conic program and its witness back into a precoder.
struct FeasibilityEncoding {
    Program program;
    std::vector<std::vector<int>> supports;  // per UE, ascending AN ids
    std::vector<int> offs;                   // per UE first variable
    int slack_col = 0;
    double tau = 1.0;
    double cap = 0.0;  // per-AN budget, original units
};

std::vector<std::vector<int>> support_sets(const PairingSolution& pairing, SupportCase sc,
                                           int num_ues) {
    std::vector<std::vector<int>> supports(static_cast<size_t>(num_ues));
    for (int k = 0; k < num_ues; ++k) {
        if (sc == SupportCase::CaseI_SingleServing) {
            supports[static_cast<size_t>(k)] = {pairing.serving[static_cast<size_t>(k)]};
        } else {
            supports[static_cast<size_t>(k)] = pairing.active_set;
        }
    }
    return supports;
}

/// Real-valued row coefficients of h_k^H w_i over UE i's variable block,
/// split into the real and imaginary part of the product.
void product_coefficients(const ChannelRealization& chan, const std::vector<int>& supp_i,
                          double inv_tau, int k, std::vector<double>& re,
                          std::vector<double>& im) {
    const int L = chan.L;
    re.assign(supp_i.size() * 2 * static_cast<size_t>(L), 0.0);
    im.assign(supp_i.size() * 2 * static_cast<size_t>(L), 0.0);
    for (size_t j = 0; j < supp_i.size(); ++j) {
        const int m = supp_i[j];
        for (int l = 0; l < L; ++l) {
            const cxd hv = chan.H(m * L + l, k) * inv_tau;
            const size_t at = 2 * (j * static_cast<size_t>(L) + static_cast<size_t>(l));
            // conj(h) * (wr + i wi)
            re[at] = hv.real();
            re[at + 1] = hv.imag();
            im[at] = -hv.imag();
            im[at + 1] = hv.real();
        }
    }
}

FeasibilityEncoding build_feasibility_program(const FeasibilityInstance& inst) {
    const ChannelRealization& chan = *inst.channel;
    const PairingSolution& pairing = *inst.pairing;
    const int K = chan.K;
    const int L = chan.L;
    const std::vector<int>& active = pairing.active_set;
    const int na = static_cast<int>(active.size());

    FeasibilityEncoding enc;
    enc.supports = support_sets(pairing, inst.support_case, K);
    enc.cap = inst.p_budget / na;

    double tau = 0.0;
    for (int k = 0; k < K; ++k) {
        double nrm2 = 0.0;
        for (int m : enc.supports[static_cast<size_t>(k)]) {
            nrm2 += chan.H.block(m * L, k, L, 1).squaredNorm();
        }
        tau = std::max(tau, std::sqrt(nrm2));
    }
    enc.tau = tau;
    if (tau == 0.0) return enc;  // degenerate, caller rejects
    const double inv_tau = 1.0 / tau;
    const double cap_scaled = enc.cap * tau * tau;

    const bool literal = inst.power_form == PowerConstraintForm::SumNorms;
    // UEs drawing power from AN m
    std::vector<std::vector<int>> pow_ues(static_cast<size_t>(chan.M));
    int n = 0;
    enc.offs.resize(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) {
        enc.offs[static_cast<size_t>(k)] = n;
        n += 2 * L * static_cast<int>(enc.supports[static_cast<size_t>(k)].size());
        for (int m : enc.supports[static_cast<size_t>(k)]) {
            pow_ues[static_cast<size_t>(m)].push_back(k);
        }
    }
    std::vector<int> t_col(static_cast<size_t>(chan.M) * static_cast<size_t>(K), -1);
    if (literal) {
        for (int m : active) {
            for (int k : pow_ues[static_cast<size_t>(m)]) {
                t_col[static_cast<size_t>(m) * static_cast<size_t>(K) + static_cast<size_t>(k)] =
                    n++;
            }
        }
    }
    enc.slack_col = n++;

    Program& prog = enc.program;
    prog.n = n;
    prog.c = VectorXd::Zero(n);
    prog.c(enc.slack_col) = 1.0;

    const double beta = std::sqrt(1.0 + 1.0 / inst.theta);
    std::vector<double> re, im;
    std::vector<double> hvals;

    auto blank_row = [&]() -> SparseRow& {
        prog.cone_rows.emplace_back();
        hvals.push_back(0.0);
        return prog.cone_rows.back();
    };

    if (literal) {
        prog.cones.lp_dim = na;
        for (int m : active) {
            SparseRow& row = blank_row();
            for (int k : pow_ues[static_cast<size_t>(m)]) {
                row.add(t_col[static_cast<size_t>(m) * static_cast<size_t>(K) +
                              static_cast<size_t>(k)],
                        1.0);
            }
            hvals.back() = std::sqrt(cap_scaled);
        }
    }

    // SINR cones: || (1, h_k^H w_1, ..., h_k^H w_K) || <= beta Re{h_k^H w_k} + slack
    for (int k = 0; k < K; ++k) {
        const int off_k = enc.offs[static_cast<size_t>(k)];
        product_coefficients(chan, enc.supports[static_cast<size_t>(k)], inv_tau, k, re, im);
        SparseRow& head = blank_row();
        for (size_t j = 0; j < re.size(); ++j) {
            if (re[j] != 0.0) head.add(off_k + static_cast<int>(j), -beta * re[j]);
        }
        head.add(enc.slack_col, -1.0);
        blank_row();
        hvals.back() = 1.0;
        for (int i = 0; i < K; ++i) {
            product_coefficients(chan, enc.supports[static_cast<size_t>(i)], inv_tau, k, re, im);
            const int off_i = enc.offs[static_cast<size_t>(i)];
            SparseRow& rrow = blank_row();
            for (size_t j = 0; j < re.size(); ++j) {
                if (re[j] != 0.0) rrow.add(off_i + static_cast<int>(j), -re[j]);
            }
            SparseRow& irow = blank_row();
            for (size_t j = 0; j < im.size(); ++j) {
                if (im[j] != 0.0) irow.add(off_i + static_cast<int>(j), -im[j]);
            }
        }
        prog.cones.soc_dims.push_back(2 * K + 2);
    }

    // power constraints, hard (no slack)
    for (int m : active) {
        const std::vector<int>& ues = pow_ues[static_cast<size_t>(m)];
        if (literal) {
            // t_km >= || w_km ||
            for (int k : ues) {
                const auto& supp = enc.supports[static_cast<size_t>(k)];
                const int j = static_cast<int>(std::find(supp.begin(), supp.end(), m) -
                                               supp.begin());
                SparseRow& head = blank_row();
                head.add(t_col[static_cast<size_t>(m) * static_cast<size_t>(K) +
                               static_cast<size_t>(k)],
                         -1.0);
                for (int t = 0; t < 2 * L; ++t) {
                    SparseRow& row = blank_row();
                    row.add(enc.offs[static_cast<size_t>(k)] + 2 * L * j + t, -1.0);
                }
                prog.cones.soc_dims.push_back(2 * L + 1);
            }
        } else {
            // sqrt(cap) >= sqrt(sum_k ||w_km||^2)
            blank_row();
            hvals.back() = std::sqrt(cap_scaled);
            for (int k : ues) {
                const auto& supp = enc.supports[static_cast<size_t>(k)];
                const int j = static_cast<int>(std::find(supp.begin(), supp.end(), m) -
                                               supp.begin());
                for (int t = 0; t < 2 * L; ++t) {
                    SparseRow& row = blank_row();
                    row.add(enc.offs[static_cast<size_t>(k)] + 2 * L * j + t, -1.0);
                }
            }
            prog.cones.soc_dims.push_back(2 * L * static_cast<int>(ues.size()) + 1);
        }
    }

    prog.h = Eigen::Map<VectorXd>(hvals.data(), static_cast<Eigen::Index>(hvals.size()));

    // Im{h_k^H w_k} = 0
    prog.b = VectorXd::Zero(K);
    for (int k = 0; k < K; ++k) {
        product_coefficients(chan, enc.supports[static_cast<size_t>(k)], inv_tau, k, re, im);
        SparseRow row;
        for (size_t j = 0; j < im.size(); ++j) {
            if (im[j] != 0.0) {
                row.add(enc.offs[static_cast<size_t>(k)] + static_cast<int>(j), im[j]);
            }
        }
        prog.eq_rows.push_back(std::move(row));
    }

    // per-block equilibration: uniform scale inside each cone, per LP and
    // equality row, so magnitudes stay near one without moving the solution
    auto block_scale = [&](int row_begin, int count) {
        double mx = 1e-8;
        for (int r = row_begin; r < row_begin + count; ++r) {
            for (double vv : prog.cone_rows[static_cast<size_t>(r)].val) {
                mx = std::max(mx, std::abs(vv));
            }
            mx = std::max(mx, std::abs(prog.h(r)));
        }
        const double inv = 1.0 / mx;
        for (int r = row_begin; r < row_begin + count; ++r) {
            for (double& vv : prog.cone_rows[static_cast<size_t>(r)].val) vv *= inv;
            prog.h(r) *= inv;
        }
    };
    for (int i = 0; i < prog.cones.lp_dim; ++i) block_scale(i, 1);
    int at = prog.cones.lp_dim;
    for (int d : prog.cones.soc_dims) {
        block_scale(at, d);
        at += d;
    }
    for (SparseRow& row : prog.eq_rows) {
        double mx = 0.0;
        for (double vv : row.val) mx = std::max(mx, std::abs(vv));
        if (mx > 0.0) {
            for (double& vv : row.val) vv /= mx;
        }
    }
    return enc;
}

}  // namespace

FeasibilityReport check_sinr_feasibility(const FeasibilityInstance& instance,
                                         const FeasibilityOptions& options) {
    if (instance.channel == nullptr || instance.pairing == nullptr) {
        throw ConfigError("feasibility: channel and pairing are required");
    }
    const ChannelRealization& chan = *instance.channel;
    const PairingSolution& pairing = *instance.pairing;
    if (!(instance.theta > 0.0)) throw ConfigError("feasibility: theta must be positive");
    if (!(instance.p_budget > 0.0)) throw ConfigError("feasibility: p_budget must be positive");
    if (static_cast<int>(pairing.serving.size()) != chan.K) {
        throw ConfigError("feasibility: pairing does not match channel");
    }
    if (pairing.active_set.empty()) throw ConfigError("feasibility: no active ANs");
    for (int m : pairing.active_set) {
        if (m < 0 || m >= chan.M) throw ConfigError("feasibility: AN index out of range");
    }

    FeasibilityReport report;
    FeasibilityEncoding enc = build_feasibility_program(instance);
    if (enc.tau == 0.0) {
        // zero channel: no precoder reaches a positive SINR
        report.status = Feasibility::Infeasible;
        report.slack = 1.0;
        return report;
    }

    SolverOptions sopts = options.solver;
    if (options.early_exit) {
        if (sopts.primal_target == -kInf) sopts.primal_target = -1e-4;
        if (sopts.dual_target == kInf) sopts.dual_target = 1e-4;
    }
    const Solution sol = solve(enc.program, sopts);
    report.slack = sol.primal_objective;
    report.ipm_iterations = sol.iterations;

    if (!sol.usable()) return report;
    if (sol.status == SolveStatus::DualTarget) {
        report.status = Feasibility::Infeasible;
        report.slack = sol.dual_objective;  // certified lower bound on the violation
        return report;
    }
    if (sol.status != SolveStatus::PrimalTarget && sol.primal_objective > options.feas_tol) {
        report.status = Feasibility::Infeasible;
        return report;
    }

    // witness extraction and polish
    const int K = chan.K;
    const int L = chan.L;
    Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(chan.H.rows(), K);
    for (int k = 0; k < K; ++k) {
        const auto& supp = enc.supports[static_cast<size_t>(k)];
        int at = enc.offs[static_cast<size_t>(k)];
        for (size_t j = 0; j < supp.size(); ++j) {
            for (int l = 0; l < L; ++l) {
                W(supp[j] * L + l, k) = cxd(sol.x(at), sol.x(at + 1)) / enc.tau;
                at += 2;
            }
        }
    }
    double worst_ratio = 0.0;
    for (int m : pairing.active_set) {
        double q = 0.0;
        if (instance.power_form == PowerConstraintForm::SumSquaredNorms) {
            q = W.block(m * L, 0, L, K).squaredNorm();
        } else {
            double acc = 0.0;
            for (int k = 0; k < K; ++k) acc += W.block(m * L, k, L, 1).norm();
            q = acc * acc;
        }
        worst_ratio = std::max(worst_ratio, q / enc.cap);
    }
    if (worst_ratio > 1.0) W /= std::sqrt(worst_ratio);
    if (worst_ratio > 1.0 + options.tol_pow) {
        // power violation beyond tolerance before polish: distrust the iterate
        report.status = Feasibility::NumericalFailure;
        return report;
    }

    report.precoder =
        PrecodingMatrix{std::move(W), instance.support_case};
    double min_sinr = kInf;
    for (int k = 0; k < K; ++k) {
        min_sinr = std::min(min_sinr, sinr(chan, report.precoder, k));
    }
    report.min_sinr = min_sinr;
    if (min_sinr >= instance.theta * (1.0 - options.tol_sinr)) {
        report.status = Feasibility::Feasible;
    } else {
        report.status = Feasibility::NumericalFailure;
    }
    return report;
}

}  // namespace udn::conic
