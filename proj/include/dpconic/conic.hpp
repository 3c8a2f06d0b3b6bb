#pragma once

// Standard-form conic programs:  minimize c'x  subject to  b - Ax in K,
// where K is an ordered product of Zero, NonNeg, SecondOrder and
// RotatedSecondOrder blocks.

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace dpconic {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ConeKind { Zero, NonNeg, SecondOrder, RotatedSecondOrder };

std::string_view to_string(ConeKind kind);
ConeKind cone_kind_from_string(std::string_view name);

struct ConeBlock {
    ConeKind kind = ConeKind::NonNeg;
    Index dim = 0;

    bool operator==(const ConeBlock&) const = default;
};

/// Ordered list of cone blocks. Rows of the owning program are assigned to
/// blocks positionally.
class ConeSpec {
public:
    ConeSpec() = default;
    ConeSpec(std::initializer_list<ConeBlock> blocks) : blocks_(blocks) {}
    explicit ConeSpec(std::vector<ConeBlock> blocks) : blocks_(std::move(blocks)) {}

    const std::vector<ConeBlock>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    const ConeBlock& operator[](std::size_t i) const { return blocks_[i]; }

    void push_back(ConeBlock block) { blocks_.push_back(block); }

    Index total_dim() const;
    /// First row of each block.
    std::vector<Index> offsets() const;
    /// Number of rows in Zero blocks.
    Index zero_dim() const;

    bool operator==(const ConeSpec&) const = default;

private:
    std::vector<ConeBlock> blocks_;
};

struct ConicProgram {
    Matrix A;
    Vector b;
    Vector c;
    ConeSpec cones;
    std::vector<std::string> variable_names;

    Index rows() const { return A.rows(); }
    Index cols() const { return A.cols(); }
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter };

std::string_view to_string(SolveStatus status);

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

struct Solution {
    Vector x;
    Vector y;
    SolveStatus status = SolveStatus::MaxIter;
    double objective = 0.0;
    Residuals residuals;
    int iterations = 0;
    /// Optimal only to SolverSettings::reduced_tol: the iterates stalled
    /// before reaching tol.
    bool reduced_accuracy = false;

    bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Every dimension or finiteness violation; empty means the program is valid.
std::vector<std::string> validate(const ConicProgram& program);

/// b - A x.
Vector slack(const ConicProgram& program, const Vector& x);

bool cone_membership(const Vector& v, const ConeSpec& cones, double tol);

/// Euclidean projection onto K (or onto the dual cone K*, which differs
/// from K only for Zero blocks).
Vector project_onto_cone(const Vector& v, const ConeSpec& cones);
Vector project_onto_dual_cone(const Vector& v, const ConeSpec& cones);

/// min c x  s.t.  lower <= x <= upper, written as b - Ax in NonNeg(2).
ConicProgram build_simple_lp(double c, double lower, double upper);

/// Incremental assembly of a program block by block.
class ProgramBuilder {
public:
    explicit ProgramBuilder(Index num_vars);

    Index num_vars() const { return num_vars_; }
    Index num_rows() const { return static_cast<Index>(rows_b_.size()); }

    void set_objective(const Vector& c);
    void set_variable_names(std::vector<std::string> names);

    /// Appends the block  b - A x in cone(kind, rows).
    void add_block(ConeKind kind, const Matrix& A, const Vector& b);

    ConicProgram build() const;

private:
    Index num_vars_;
    Vector c_;
    std::vector<std::string> names_;
    std::vector<Matrix> blocks_A_;
    std::vector<double> rows_b_;
    ConeSpec cones_;
};

}  // namespace dpconic
