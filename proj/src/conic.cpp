#include "dpconic/conic.hpp"

#include "dpconic/errors.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace dpconic {

std::string_view to_string(ConeKind kind) {
    switch (kind) {
        case ConeKind::Zero: return "zero";
        case ConeKind::NonNeg: return "nonneg";
        case ConeKind::SecondOrder: return "soc";
        case ConeKind::RotatedSecondOrder: return "rsoc";
    }
    return "unknown";
}

ConeKind cone_kind_from_string(std::string_view name) {
    if (name == "zero") return ConeKind::Zero;
    if (name == "nonneg") return ConeKind::NonNeg;
    if (name == "soc") return ConeKind::SecondOrder;
    if (name == "rsoc") return ConeKind::RotatedSecondOrder;
    throw ValidationError("unknown cone kind '" + std::string(name) + "'");
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "primal_infeasible";
        case SolveStatus::DualInfeasible: return "dual_infeasible";
        case SolveStatus::MaxIter: return "max_iter";
    }
    return "unknown";
}

Index ConeSpec::total_dim() const {
    Index total = 0;
    for (const auto& block : blocks_) total += block.dim;
    return total;
}

std::vector<Index> ConeSpec::offsets() const {
    std::vector<Index> out;
    out.reserve(blocks_.size());
    Index offset = 0;
    for (const auto& block : blocks_) {
        out.push_back(offset);
        offset += block.dim;
    }
    return out;
}

Index ConeSpec::zero_dim() const {
    Index total = 0;
    for (const auto& block : blocks_)
        if (block.kind == ConeKind::Zero) total += block.dim;
    return total;
}

std::vector<std::string> validate(const ConicProgram& program) {
    std::vector<std::string> violations;
    const Index m = program.A.rows();
    const Index n = program.A.cols();

    if (program.b.size() != m) violations.emplace_back("b length != m");
    if (program.c.size() != n) violations.emplace_back("c length != n");
    if (program.cones.total_dim() != m) violations.emplace_back("cone dims != m");
    if (!program.variable_names.empty() && static_cast<Index>(program.variable_names.size()) != n)
        violations.emplace_back("variable_names length != n");

    for (std::size_t i = 0; i < program.cones.size(); ++i) {
        const auto& block = program.cones[i];
        std::ostringstream where;
        where << "cone block " << i << " (" << to_string(block.kind) << ")";
        if (block.dim < 1) violations.push_back(where.str() + ": dim < 1");
        if (block.kind == ConeKind::RotatedSecondOrder && block.dim < 2)
            violations.push_back(where.str() + ": rotated second-order dim < 2");
    }

    if (!program.A.allFinite()) violations.emplace_back("A has non-finite entries");
    if (!program.b.allFinite()) violations.emplace_back("b has non-finite entries");
    if (!program.c.allFinite()) violations.emplace_back("c has non-finite entries");
    return violations;
}

Vector slack(const ConicProgram& program, const Vector& x) {
    if (x.size() != program.cols())
        throw ValidationError("slack: x has length " + std::to_string(x.size()) + ", expected " +
                              std::to_string(program.cols()));
    return program.b - program.A * x;
}

namespace {

bool block_member(const Eigen::Ref<const Vector>& v, ConeKind kind, double tol) {
    switch (kind) {
        case ConeKind::Zero:
            return v.size() == 0 || v.cwiseAbs().maxCoeff() <= tol;
        case ConeKind::NonNeg:
            return v.size() == 0 || v.minCoeff() >= -tol;
        case ConeKind::SecondOrder:
            return v(0) >= v.tail(v.size() - 1).norm() - tol;
        case ConeKind::RotatedSecondOrder:
            return v(0) >= -tol && v(1) >= -tol &&
                   2.0 * v(0) * v(1) >= v.tail(v.size() - 2).squaredNorm() - tol;
    }
    return false;
}

Vector project_soc(const Eigen::Ref<const Vector>& v) {
    const double t = v(0);
    const double r = v.tail(v.size() - 1).norm();
    if (r <= t) return v;
    if (r <= -t) return Vector::Zero(v.size());
    Vector out(v.size());
    const double scale = 0.5 * (t + r);
    out(0) = scale;
    out.tail(v.size() - 1) = (scale / r) * v.tail(v.size() - 1);
    return out;
}

// (u, v, w) in RSOC  <=>  ((u+v)/sqrt2, (u-v)/sqrt2, w) in SOC; the map is an
// involution.
Vector rotate(const Eigen::Ref<const Vector>& v) {
    Vector out = v;
    const double s = std::sqrt(0.5);
    out(0) = s * (v(0) + v(1));
    out(1) = s * (v(0) - v(1));
    return out;
}

Vector project_block(const Eigen::Ref<const Vector>& v, ConeKind kind, bool dual) {
    switch (kind) {
        case ConeKind::Zero:
            return dual ? Vector(v) : Vector::Zero(v.size());
        case ConeKind::NonNeg:
            return v.cwiseMax(0.0);
        case ConeKind::SecondOrder:
            return project_soc(v);
        case ConeKind::RotatedSecondOrder:
            return rotate(project_soc(rotate(v)));
    }
    return v;
}

Vector project(const Vector& v, const ConeSpec& cones, bool dual) {
    if (v.size() != cones.total_dim()) throw ValidationError("projection: dimension mismatch");
    Vector out(v.size());
    Index offset = 0;
    for (const auto& block : cones.blocks()) {
        out.segment(offset, block.dim) = project_block(v.segment(offset, block.dim), block.kind, dual);
        offset += block.dim;
    }
    return out;
}

}  // namespace

bool cone_membership(const Vector& v, const ConeSpec& cones, double tol) {
    if (v.size() != cones.total_dim())
        throw ValidationError("cone_membership: vector length " + std::to_string(v.size()) +
                              " != cone dimension " + std::to_string(cones.total_dim()));
    Index offset = 0;
    for (const auto& block : cones.blocks()) {
        if (!block_member(v.segment(offset, block.dim), block.kind, tol)) return false;
        offset += block.dim;
    }
    return true;
}

Vector project_onto_cone(const Vector& v, const ConeSpec& cones) { return project(v, cones, false); }

Vector project_onto_dual_cone(const Vector& v, const ConeSpec& cones) { return project(v, cones, true); }

ConicProgram build_simple_lp(double c, double lower, double upper) {
    if (!(lower < upper)) throw ValidationError("build_simple_lp: lower must be < upper");
    ConicProgram program;
    program.A.resize(2, 1);
    program.A << -1.0, 1.0;
    program.b.resize(2);
    program.b << -lower, upper;
    program.c = Vector::Constant(1, c);
    program.cones = ConeSpec{{ConeKind::NonNeg, 2}};
    program.variable_names = {"x"};
    return program;
}

ProgramBuilder::ProgramBuilder(Index num_vars) : num_vars_(num_vars), c_(Vector::Zero(num_vars)) {}

void ProgramBuilder::set_objective(const Vector& c) {
    if (c.size() != num_vars_) throw ValidationError("ProgramBuilder: objective length mismatch");
    c_ = c;
}

void ProgramBuilder::set_variable_names(std::vector<std::string> names) { names_ = std::move(names); }

void ProgramBuilder::add_block(ConeKind kind, const Matrix& A, const Vector& b) {
    if (A.cols() != num_vars_ || A.rows() != b.size())
        throw ValidationError("ProgramBuilder: block shape mismatch");
    if (A.rows() == 0) return;
    blocks_A_.push_back(A);
    for (Index i = 0; i < b.size(); ++i) rows_b_.push_back(b(i));
    cones_.push_back({kind, A.rows()});
}

ConicProgram ProgramBuilder::build() const {
    ConicProgram program;
    const Index m = num_rows();
    program.A.resize(m, num_vars_);
    Index row = 0;
    for (const auto& block : blocks_A_) {
        program.A.middleRows(row, block.rows()) = block;
        row += block.rows();
    }
    program.b = Eigen::Map<const Vector>(rows_b_.data(), m);
    program.c = c_;
    program.cones = cones_;
    program.variable_names = names_;
    return program;
}

}  // namespace dpconic
