#include "dpconic/solver.hpp"

#include "dpconic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace dpconic {

void SolverSettings::check() const {
    if (!(tol > 0.0 && tol < 1.0)) throw ValidationError("solver tol must lie in (0, 1)");
    if (max_iter < 1) throw ValidationError("solver max_iter must be >= 1");
    if (!(infeasibility_threshold > 0.0)) throw ValidationError("infeasibility_threshold must be positive");
    if (!(regularization >= 0.0)) throw ValidationError("regularization must be nonnegative");
    if (!(reduced_tol > 0.0)) throw ValidationError("reduced_tol must be positive");
    if (stall_iters < 1) throw ValidationError("stall_iters must be >= 1");
    if (equilibration_passes < 0) throw ValidationError("equilibration_passes must be >= 0");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class BlockKind { NonNeg, Soc };

struct Block {
    BlockKind kind;
    Index offset;
    Index dim;
};

// Nesterov-Todd scaling of one block. NonNeg: W = diag(w). Soc:
// W = eta * (2 v v' - J) with J = diag(1, -1, ..., -1) and v'Jv = 1
// (v is stored in wbar).
struct BlockScaling {
    Vector w;
    double eta = 1.0;
    Vector wbar;
};

class Cones {
public:
    Cones() = default;
    explicit Cones(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
        for (const auto& b : blocks_) {
            dim_ += b.dim;
            degree_ += (b.kind == BlockKind::NonNeg) ? b.dim : 1;
        }
    }

    Index dim() const { return dim_; }
    Index degree() const { return degree_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    Vector identity() const {
        Vector e = Vector::Zero(dim_);
        for (const auto& b : blocks_) {
            if (b.kind == BlockKind::NonNeg)
                e.segment(b.offset, b.dim).setOnes();
            else
                e(b.offset) = 1.0;
        }
        return e;
    }

    // Largest t with u - t e on the cone boundary, i.e. -lambda_min(u).
    double interior_deficit(const Vector& u) const {
        double worst = -kInf;
        for (const auto& b : blocks_) {
            auto ub = u.segment(b.offset, b.dim);
            if (b.kind == BlockKind::NonNeg)
                worst = std::max(worst, -ub.minCoeff());
            else
                worst = std::max(worst, ub.tail(b.dim - 1).norm() - ub(0));
        }
        return worst;
    }

    void shift_into_interior(Vector& u) const {
        if (blocks_.empty()) return;
        const double deficit = interior_deficit(u);
        if (deficit >= 0.0) u += (1.0 + deficit) * identity();
    }

    Vector circ(const Vector& u, const Vector& v) const {
        Vector out(dim_);
        for (const auto& b : blocks_) {
            auto ub = u.segment(b.offset, b.dim);
            auto vb = v.segment(b.offset, b.dim);
            auto ob = out.segment(b.offset, b.dim);
            if (b.kind == BlockKind::NonNeg) {
                ob = ub.cwiseProduct(vb);
            } else {
                ob(0) = ub.dot(vb);
                ob.tail(b.dim - 1) = ub(0) * vb.tail(b.dim - 1) + vb(0) * ub.tail(b.dim - 1);
            }
        }
        return out;
    }

    // Solves lambda o x = d.
    Vector inv_circ(const Vector& lambda, const Vector& d) const {
        Vector out(dim_);
        for (const auto& b : blocks_) {
            auto lb = lambda.segment(b.offset, b.dim);
            auto db = d.segment(b.offset, b.dim);
            auto ob = out.segment(b.offset, b.dim);
            if (b.kind == BlockKind::NonNeg) {
                ob = db.cwiseQuotient(lb);
            } else {
                const double l0 = lb(0);
                const auto l1 = lb.tail(b.dim - 1);
                const double det = l0 * l0 - l1.squaredNorm();
                const double x0 = (l0 * db(0) - l1.dot(db.tail(b.dim - 1))) / det;
                ob(0) = x0;
                ob.tail(b.dim - 1) = (db.tail(b.dim - 1) - x0 * l1) / l0;
            }
        }
        return out;
    }

    // Largest step t >= 0 keeping u + t d in the cone (infinity if unbounded).
    double max_step(const Vector& u, const Vector& d) const {
        double step = kInf;
        for (const auto& b : blocks_) {
            auto ub = u.segment(b.offset, b.dim);
            auto db = d.segment(b.offset, b.dim);
            if (b.kind == BlockKind::NonNeg) {
                for (Index i = 0; i < b.dim; ++i)
                    if (db(i) < 0.0) step = std::min(step, -ub(i) / db(i));
            } else {
                step = std::min(step, soc_step(ub, db));
            }
        }
        return step;
    }

    std::vector<BlockScaling> nt_scaling(const Vector& s, const Vector& z) const {
        std::vector<BlockScaling> out(blocks_.size());
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            auto sb = s.segment(b.offset, b.dim);
            auto zb = z.segment(b.offset, b.dim);
            if (b.kind == BlockKind::NonNeg) {
                out[k].w = sb.cwiseQuotient(zb).cwiseSqrt();
                continue;
            }
            // (u0 - |u1|)(u0 + |u1|) keeps the determinant accurate near the boundary
            const double s_tail = sb.tail(b.dim - 1).norm(), z_tail = zb.tail(b.dim - 1).norm();
            const double s_det = std::max((sb(0) - s_tail) * (sb(0) + s_tail), 1e-300);
            const double z_det = std::max((zb(0) - z_tail) * (zb(0) + z_tail), 1e-300);
            const Vector s_bar = sb / std::sqrt(s_det);
            const Vector z_bar = zb / std::sqrt(z_det);
            const double gamma = std::sqrt(0.5 * (1.0 + s_bar.dot(z_bar)));
            Vector w_bar = s_bar;
            w_bar(0) += z_bar(0);
            w_bar.tail(b.dim - 1) -= z_bar.tail(b.dim - 1);
            w_bar /= 2.0 * gamma;
            // v = (wbar + e) / sqrt(2 (wbar_0 + 1)) satisfies v'Jv = 1.
            Vector v = w_bar;
            v(0) += 1.0;
            v /= std::sqrt(2.0 * (w_bar(0) + 1.0));
            out[k].eta = std::pow(s_det / z_det, 0.25);
            out[k].wbar = std::move(v);
        }
        return out;
    }

    Vector apply_w(const std::vector<BlockScaling>& scal, const Vector& v, bool inverse) const {
        Vector out(dim_);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            auto vb = v.segment(b.offset, b.dim);
            auto ob = out.segment(b.offset, b.dim);
            if (b.kind == BlockKind::NonNeg) {
                if (inverse)
                    ob = vb.cwiseQuotient(scal[k].w);
                else
                    ob = vb.cwiseProduct(scal[k].w);
                continue;
            }
            // W = eta (2 w w' - J);  W^{-1} = (1/eta) (2 Jw (Jw)' - J)
            Vector w = scal[k].wbar;
            if (inverse) w.tail(b.dim - 1) *= -1.0;
            const double coef = 2.0 * w.dot(vb);
            ob = coef * w;
            ob(0) -= vb(0);
            ob.tail(b.dim - 1) += vb.tail(b.dim - 1);
            ob *= inverse ? 1.0 / scal[k].eta : scal[k].eta;
        }
        return out;
    }

    // W^{-1} M applied block-row-wise.
    Matrix apply_winv_rows(const std::vector<BlockScaling>& scal, const Matrix& M) const {
        Matrix out(M.rows(), M.cols());
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto& b = blocks_[k];
            auto Mb = M.middleRows(b.offset, b.dim);
            auto Ob = out.middleRows(b.offset, b.dim);
            if (b.kind == BlockKind::NonNeg) {
                Ob = scal[k].w.cwiseInverse().asDiagonal() * Mb;
                continue;
            }
            Vector jw = scal[k].wbar;
            jw.tail(b.dim - 1) *= -1.0;
            const Eigen::RowVectorXd proj = jw.transpose() * Mb;
            Ob = 2.0 * jw * proj;
            Ob.row(0) -= Mb.row(0);
            Ob.bottomRows(b.dim - 1) += Mb.bottomRows(b.dim - 1);
            Ob /= scal[k].eta;
        }
        return out;
    }

private:
    static double soc_step(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& d) {
        const Index q = u.size();
        const double a = d(0) * d(0) - d.tail(q - 1).squaredNorm();
        const double b = 2.0 * (u(0) * d(0) - u.tail(q - 1).dot(d.tail(q - 1)));
        const double c = std::max(u(0) * u(0) - u.tail(q - 1).squaredNorm(), 0.0);
        const double scale = std::max({std::abs(a), std::abs(b), c, 1e-300});
        if (std::abs(a) <= 1e-14 * scale) {
            if (b < 0.0) return -c / b;
            return (d(0) < 0.0) ? -u(0) / d(0) : kInf;
        }
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return kInf;
        const double root = std::sqrt(disc);
        const double qv = -0.5 * (b + std::copysign(root, b));
        double r1 = qv / a;
        double r2 = (qv != 0.0) ? c / qv : kInf;
        double best = kInf;
        for (double r : {r1, r2})
            if (r > 0.0) best = std::min(best, r);
        return best;
    }

    std::vector<Block> blocks_;
    Index dim_ = 0;
    Index degree_ = 0;
};

// The program split into  A x = b  (Zero rows) and  G x + s = h, s in K
// (all other rows, rotated cones already mapped onto SOC).
struct Split {
    Matrix A, G;
    Vector b, h, c;
    Cones cones;
    std::vector<Index> eq_rows;
    std::vector<Index> cone_rows;
    std::vector<Index> rotated_heads;  // internal cone row of each RSOC block
};

void rotate_pair(Matrix& M, Vector& v, Index row) {
    const double r = std::sqrt(0.5);
    const Eigen::RowVectorXd first = M.row(row);
    const Eigen::RowVectorXd second = M.row(row + 1);
    M.row(row) = r * (first + second);
    M.row(row + 1) = r * (first - second);
    const double v0 = v(row), v1 = v(row + 1);
    v(row) = r * (v0 + v1);
    v(row + 1) = r * (v0 - v1);
}

Split split_program(const ConicProgram& program) {
    Split sp;
    const Index n = program.cols();
    std::vector<Block> blocks;
    Index row = 0;
    Index cone_offset = 0;
    for (const auto& block : program.cones.blocks()) {
        for (Index i = 0; i < block.dim; ++i)
            (block.kind == ConeKind::Zero ? sp.eq_rows : sp.cone_rows).push_back(row + i);
        // a one-dimensional second-order cone is the nonnegative ray
        if (block.kind == ConeKind::NonNeg || (block.kind == ConeKind::SecondOrder && block.dim == 1)) {
            blocks.push_back({BlockKind::NonNeg, cone_offset, block.dim});
        } else if (block.kind != ConeKind::Zero) {
            blocks.push_back({BlockKind::Soc, cone_offset, block.dim});
            if (block.kind == ConeKind::RotatedSecondOrder) sp.rotated_heads.push_back(cone_offset);
        }
        if (block.kind != ConeKind::Zero) cone_offset += block.dim;
        row += block.dim;
    }
    sp.cones = Cones(std::move(blocks));

    const auto p = static_cast<Index>(sp.eq_rows.size());
    const auto mc = static_cast<Index>(sp.cone_rows.size());
    sp.A.resize(p, n);
    sp.b.resize(p);
    for (Index i = 0; i < p; ++i) {
        sp.A.row(i) = program.A.row(sp.eq_rows[static_cast<std::size_t>(i)]);
        sp.b(i) = program.b(sp.eq_rows[static_cast<std::size_t>(i)]);
    }
    sp.G.resize(mc, n);
    sp.h.resize(mc);
    for (Index i = 0; i < mc; ++i) {
        sp.G.row(i) = program.A.row(sp.cone_rows[static_cast<std::size_t>(i)]);
        sp.h(i) = program.b(sp.cone_rows[static_cast<std::size_t>(i)]);
    }
    for (Index head : sp.rotated_heads) rotate_pair(sp.G, sp.h, head);
    sp.c = program.c;
    return sp;
}

// Ruiz equilibration: x = D x~, rows scaled by E (uniform within each SOC
// block so the cone is preserved).
struct Equilibration {
    Vector D, E_eq, E_cone;
};

Equilibration equilibrate(const Split& sp, int passes) {
    const Index n = sp.c.size();
    Equilibration eq{Vector::Ones(n), Vector::Ones(sp.A.rows()), Vector::Ones(sp.G.rows())};
    Matrix A = sp.A, G = sp.G;
    auto inv_sqrt = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
    for (int pass = 0; pass < passes; ++pass) {
        Vector col = Vector::Zero(n);
        if (A.rows() > 0) col = col.cwiseMax(A.cwiseAbs().colwise().maxCoeff().transpose());
        if (G.rows() > 0) col = col.cwiseMax(G.cwiseAbs().colwise().maxCoeff().transpose());
        Vector dcol = col.unaryExpr(inv_sqrt).cwiseMax(1e-4).cwiseMin(1e4);

        Vector deq(A.rows());
        for (Index i = 0; i < A.rows(); ++i) deq(i) = inv_sqrt(A.row(i).cwiseAbs().maxCoeff());
        Vector dcone(G.rows());
        for (const auto& b : sp.cones.blocks()) {
            if (b.kind == BlockKind::NonNeg) {
                for (Index i = b.offset; i < b.offset + b.dim; ++i)
                    dcone(i) = inv_sqrt(G.row(i).cwiseAbs().maxCoeff());
            } else {
                const double v = G.middleRows(b.offset, b.dim).cwiseAbs().maxCoeff();
                dcone.segment(b.offset, b.dim).setConstant(inv_sqrt(v));
            }
        }
        deq = deq.cwiseMax(1e-4).cwiseMin(1e4);
        dcone = dcone.cwiseMax(1e-4).cwiseMin(1e4);

        A = deq.asDiagonal() * A * dcol.asDiagonal();
        G = dcone.asDiagonal() * G * dcol.asDiagonal();
        eq.D = eq.D.cwiseProduct(dcol);
        eq.E_eq = eq.E_eq.cwiseProduct(deq);
        eq.E_cone = eq.E_cone.cwiseProduct(dcone);
    }
    return eq;
}

// Reduced KKT system
//   [ 0  A'  G' ] [dx]   [bx]
//   [ A  0   0  ] [dy] = [by]
//   [ G  0  -H  ] [dz]   [bz],   H = W W,
// factored after eliminating dz.
class KktSolver {
public:
    KktSolver(const Matrix& A, const Matrix& G, const Cones& cones, const std::vector<BlockScaling>& scal,
              double reg)
        : A_(A), G_(G), cones_(cones), scal_(scal) {
        const Index n = G.cols();
        const Index p = A.rows();
        g_hat_ = cones.apply_winv_rows(scal, G);
        Matrix M = Matrix::Zero(n + p, n + p);
        M.topLeftCorner(n, n).selfadjointView<Eigen::Lower>().rankUpdate(g_hat_.transpose());
        M.topLeftCorner(n, n).triangularView<Eigen::StrictlyUpper>() =
            M.topLeftCorner(n, n).transpose().triangularView<Eigen::StrictlyUpper>();
        M.topLeftCorner(n, n).diagonal().array() += reg;
        M.topRightCorner(n, p) = A.transpose();
        M.bottomLeftCorner(p, n) = A;
        M.bottomRightCorner(p, p).diagonal().setConstant(-reg);
        lu_.compute(M);
    }

    void solve(const Vector& bx, const Vector& by, const Vector& bz, Vector& dx, Vector& dy, Vector& dz) const {
        solve_once(bx, by, bz, dx, dy, dz);
        const double scale = 1.0 + std::max({inf_norm(bx), inf_norm(by), inf_norm(bz)});
        for (int refine = 0; refine < 3; ++refine) {
            const Vector ex = bx - A_.transpose() * dy - G_.transpose() * dz;
            const Vector ey = by - A_ * dx;
            const Vector ez = bz - G_ * dx + cones_.apply_w(scal_, cones_.apply_w(scal_, dz, false), false);
            const double err = std::max({inf_norm(ex), inf_norm(ey), inf_norm(ez)});
            if (err <= 1e-14 * scale) break;
            Vector cx, cy, cz;
            solve_once(ex, ey, ez, cx, cy, cz);
            dx += cx;
            dy += cy;
            dz += cz;
        }
        if (!dx.allFinite() || !dy.allFinite() || !dz.allFinite())
            throw NumericalBreakdown("KKT solve produced non-finite values");
    }

private:
    static double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

    void solve_once(const Vector& bx, const Vector& by, const Vector& bz, Vector& dx, Vector& dy,
                    Vector& dz) const {
        const Index n = G_.cols();
        const Index p = A_.rows();
        const Vector winv_bz = cones_.apply_w(scal_, bz, true);
        Vector rhs(n + p);
        rhs.head(n) = bx + g_hat_.transpose() * winv_bz;
        rhs.tail(p) = by;
        const Vector sol = lu_.solve(rhs);
        dx = sol.head(n);
        dy = sol.tail(p);
        dz = cones_.apply_w(scal_, g_hat_ * dx - winv_bz, true);
    }

    const Matrix& A_;
    const Matrix& G_;
    const Cones& cones_;
    const std::vector<BlockScaling>& scal_;
    Matrix g_hat_;
    Eigen::PartialPivLU<Matrix> lu_;
};

std::vector<BlockScaling> identity_scaling(const Cones& cones) {
    std::vector<BlockScaling> out(cones.blocks().size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto& b = cones.blocks()[k];
        if (b.kind == BlockKind::NonNeg) {
            out[k].w = Vector::Ones(b.dim);
        } else {
            out[k].wbar = Vector::Zero(b.dim);
            out[k].wbar(0) = 1.0;
        }
    }
    return out;
}

double norm_or_zero(const Vector& v) { return v.size() ? v.norm() : 0.0; }

struct Metrics {
    double pres, dres, gap, pcost, dcost;
};

}  // namespace

Solution solve(const ConicProgram& program, const SolverSettings& settings) {
    settings.check();
    if (auto violations = validate(program); !violations.empty())
        throw ValidationError("solve: invalid program: " + violations.front());

    const Split orig = split_program(program);
    const Equilibration eq = equilibrate(orig, settings.equilibration_passes);

    const Index n = orig.c.size();
    const Index p = orig.A.rows();
    const Index mc = orig.G.rows();
    const Cones& cones = orig.cones;

    const Matrix A = eq.E_eq.asDiagonal() * orig.A * eq.D.asDiagonal();
    const Matrix G = eq.E_cone.asDiagonal() * orig.G * eq.D.asDiagonal();
    const Vector b = eq.E_eq.cwiseProduct(orig.b);
    const Vector h = eq.E_cone.cwiseProduct(orig.h);
    const Vector c = eq.D.cwiseProduct(orig.c);

    const double b_norm = std::sqrt(orig.b.squaredNorm() + orig.h.squaredNorm());
    const double c_norm = norm_or_zero(orig.c);

    Vector x(n), y(p), z(mc), s(mc);
    double tau = 1.0, kappa = 1.0;
    {
        const auto scal = identity_scaling(cones);
        KktSolver kkt(A, G, cones, scal, std::max(settings.regularization, 1e-8));
        Vector x0, y0, z0;
        kkt.solve(Vector::Zero(n), b, h, x0, y0, z0);
        x = x0;
        s = -z0;
        cones.shift_into_interior(s);
        kkt.solve(-c, Vector::Zero(p), Vector::Zero(mc), x0, y0, z0);
        y = y0;
        z = z0;
        cones.shift_into_interior(z);
    }

    Solution result;
    result.status = SolveStatus::MaxIter;
    double best_merit = kInf;
    int best_iter = 0;
    auto unscale_into = [&](Solution& out, double t) {
        out.x = eq.D.cwiseProduct(x) / t;
        Vector ys = eq.E_eq.cwiseProduct(y) / t;
        Vector zs = eq.E_cone.cwiseProduct(z) / t;
        for (Index head : orig.rotated_heads) {
            const double r = std::sqrt(0.5);
            const double z0 = zs(head), z1 = zs(head + 1);
            zs(head) = r * (z0 + z1);
            zs(head + 1) = r * (z0 - z1);
        }
        out.y.resize(program.rows());
        for (Index i = 0; i < p; ++i) out.y(orig.eq_rows[static_cast<std::size_t>(i)]) = ys(i);
        for (Index i = 0; i < mc; ++i) out.y(orig.cone_rows[static_cast<std::size_t>(i)]) = zs(i);
    };

    const Vector e = cones.identity();
    const double degree = static_cast<double>(cones.degree());

    for (int iter = 0; iter <= settings.max_iter; ++iter) {
        // residuals of the embedding (scaled space)
        const Vector rx = A.transpose() * y + G.transpose() * z + c * tau;
        const Vector ry = b * tau - A * x;
        const Vector rz = s + G * x - h * tau;
        const double rt = kappa + c.dot(x) + b.dot(y) + h.dot(z);

        // termination, measured on the unscaled problem
        const Vector xs = eq.D.cwiseProduct(x);
        const Vector ys = eq.E_eq.cwiseProduct(y);
        const Vector zs = eq.E_cone.cwiseProduct(z);
        const Vector ss = s.cwiseQuotient(eq.E_cone);
        const Vector aty_gtz = orig.A.transpose() * ys + orig.G.transpose() * zs;
        const Vector ax = orig.A * xs;
        const Vector gx_s = orig.G * xs + ss;
        // relative to the size of the iterate as well as the data
        const double ax_norm = std::sqrt(ax.squaredNorm() + (orig.G * xs).squaredNorm()) / tau;
        const double pres = std::sqrt((orig.b * tau - ax).squaredNorm() + (orig.h * tau - gx_s).squaredNorm()) /
                            tau / (1.0 + std::max({b_norm, ax_norm, ss.norm() / tau}));
        const double dres =
            (aty_gtz + orig.c * tau).norm() / tau / (1.0 + std::max(c_norm, aty_gtz.norm() / tau));
        const double pcost = orig.c.dot(xs) / tau;
        const double dcost = -(orig.b.dot(ys) + orig.h.dot(zs)) / tau;
        const double gap = std::max(std::abs(pcost - dcost), ss.dot(zs) / (tau * tau)) / (1.0 + std::abs(pcost));

        if (settings.verbose)
            std::fprintf(stderr, "%3d  pcost % .6e  dcost % .6e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kap %.2e\n",
                         iter, pcost, dcost, pres, dres, gap, tau, kappa);

        const double merit = std::max({pres, dres, gap});
        if (merit < best_merit && std::isfinite(merit)) {
            best_merit = merit;
            unscale_into(result, tau);
            result.objective = pcost;
            result.residuals = {pres, dres, gap};
            result.iterations = iter;
            best_iter = iter;
        }
        if (pres <= settings.tol && dres <= settings.tol && gap <= settings.tol) {
            result.status = SolveStatus::Optimal;
            return result;
        }

        const double by_hz = orig.b.dot(ys) + orig.h.dot(zs);
        if (by_hz < 0.0 && aty_gtz.norm() <= settings.infeasibility_threshold * -by_hz) {
            result.status = SolveStatus::PrimalInfeasible;
            unscale_into(result, -by_hz);
            result.x.setConstant(std::numeric_limits<double>::quiet_NaN());
            result.objective = kInf;
            result.residuals = {aty_gtz.norm() / -by_hz, 0.0, 0.0};
            result.iterations = iter;
            return result;
        }
        const double cx = orig.c.dot(xs);
        if (cx < 0.0 && std::max(norm_or_zero(ax), norm_or_zero(gx_s)) <= settings.infeasibility_threshold * -cx) {
            result.status = SolveStatus::DualInfeasible;
            unscale_into(result, -cx);
            result.y.setConstant(std::numeric_limits<double>::quiet_NaN());
            result.objective = -kInf;
            result.residuals = {0.0, std::max(norm_or_zero(ax), norm_or_zero(gx_s)) / -cx, 0.0};
            result.iterations = iter;
            return result;
        }
        if (iter == settings.max_iter || iter - best_iter >= settings.stall_iters) break;

        const auto scal = cones.nt_scaling(s, z);
        const Vector lambda = cones.apply_w(scal, z, false);
        const double mu = (s.dot(z) + tau * kappa) / (degree + 1.0);

        // a breakdown after the first iterations ends the run with the best iterate
        try {
            KktSolver kkt(A, G, cones, scal, settings.regularization);
            Vector x1, y1, z1;
            kkt.solve(-c, b, h, x1, y1, z1);
            const double dot1 = c.dot(x1) + b.dot(y1) + h.dot(z1);

            auto direction = [&](double sigma, const Vector& ds_tilde, double d_kappa, Vector& dx, Vector& dy,
                                 Vector& dz, Vector& ds, double& dtau, double& dkappa) {
                Vector x2, y2, z2;
                const Vector w_ds = cones.apply_w(scal, ds_tilde, false);
                kkt.solve(-(1.0 - sigma) * rx, (1.0 - sigma) * ry, -(1.0 - sigma) * rz - w_ds, x2, y2, z2);
                const double dot2 = c.dot(x2) + b.dot(y2) + h.dot(z2);
                dtau = (-(1.0 - sigma) * rt - d_kappa / tau - dot2) / (dot1 - kappa / tau);
                dx = x2 + dtau * x1;
                dy = y2 + dtau * y1;
                dz = z2 + dtau * z1;
                ds = w_ds - cones.apply_w(scal, cones.apply_w(scal, dz, false), false);
                dkappa = (d_kappa - kappa * dtau) / tau;
            };

            auto step_to_boundary = [&](const Vector& ds, const Vector& dz, double dtau, double dkappa) {
                double step = std::min(cones.max_step(s, ds), cones.max_step(z, dz));
                if (dtau < 0.0) step = std::min(step, -tau / dtau);
                if (dkappa < 0.0) step = std::min(step, -kappa / dkappa);
                return step;
            };

            // predictor
            Vector dx_a, dy_a, dz_a, ds_a;
            double dtau_a, dkappa_a;
            direction(0.0, -lambda, -tau * kappa, dx_a, dy_a, dz_a, ds_a, dtau_a, dkappa_a);
            const double alpha_a = std::min(1.0, step_to_boundary(ds_a, dz_a, dtau_a, dkappa_a));
            const double sigma = std::clamp(std::pow(1.0 - alpha_a, 3), 0.0, 1.0);

            // corrector
            const Vector d_s = -cones.circ(lambda, lambda) -
                               cones.circ(cones.apply_w(scal, ds_a, true), cones.apply_w(scal, dz_a, false)) +
                               sigma * mu * e;
            const Vector ds_tilde = cones.inv_circ(lambda, d_s);
            const double d_kappa = -tau * kappa - dtau_a * dkappa_a + sigma * mu;
            Vector dx, dy, dz, ds;
            double dtau, dkappa;
            direction(sigma, ds_tilde, d_kappa, dx, dy, dz, ds, dtau, dkappa);
            const double alpha = std::min(1.0, 0.99 * step_to_boundary(ds, dz, dtau, dkappa));
            if (!(alpha > 1e-12)) break;

            x += alpha * dx;
            y += alpha * dy;
            z += alpha * dz;
            s += alpha * ds;
            tau += alpha * dtau;
            kappa += alpha * dkappa;
        } catch (const NumericalBreakdown&) {
            if (iter == 0) throw;
            break;
        }
    }
    if (best_merit <= settings.reduced_tol) {
        result.status = SolveStatus::Optimal;
        result.reduced_accuracy = true;
    }
    return result;
}

KktReport kkt_report(const ConicProgram& program, const Solution& solution) {
    if (solution.x.size() != program.cols())
        throw ValidationError("kkt_report: x has wrong length");
    Vector y = solution.y;
    if (y.size() != program.rows()) y = Vector::Zero(program.rows());

    const Vector v = slack(program, solution.x);
    const double b_norm = norm_or_zero(program.b);
    const double c_norm = norm_or_zero(program.c);
    const double cx = program.c.dot(solution.x);

    KktReport report;
    report.primal = norm_or_zero(v - project_onto_cone(v, program.cones)) / (1.0 + b_norm);
    report.dual = (norm_or_zero(program.A.transpose() * y + program.c) +
                   norm_or_zero(y - project_onto_dual_cone(y, program.cones))) /
                  (1.0 + c_norm);
    report.gap = std::abs(cx + program.b.dot(y)) / (1.0 + std::abs(cx));
    report.complementarity = std::abs(v.dot(y)) / (1.0 + std::abs(cx));
    return report;
}

}  // namespace dpconic
