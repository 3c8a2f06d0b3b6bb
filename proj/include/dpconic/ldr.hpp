#pragma once

// Program perturbation: the chance-constrained counterpart of a conic program
// in linear decision rule variables x = xbar + X zeta.
//
// Transformed variable order: xbar (n), the free entries of X in row-major
// order, then auxiliaries. Pinned entries of X (identity queries, fixed
// recourse, variables without recourse) are substituted as constants.

#include "dpconic/conic.hpp"
#include "dpconic/privacy.hpp"
#include "dpconic/solver.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace dpconic {

enum class QueryKind { Identity, Sum, WeightedSum, FixedRecourse };

struct PinnedEntry {
    Index row;
    Index col;
    double value;
};

struct QueryConstraint {
    QueryKind kind = QueryKind::Identity;
    /// Variables read by the query; empty means all n.
    std::vector<Index> support;
    /// WeightedSum weights, aligned with the support.
    Vector weights;
    /// FixedRecourse only.
    Index declared_dim = 0;
    std::vector<PinnedEntry> pinned;

    static QueryConstraint identity(std::vector<Index> support = {});
    static QueryConstraint sum(std::vector<Index> support = {});
    static QueryConstraint weighted_sum(Vector weights, std::vector<Index> support = {});
    static QueryConstraint fixed_recourse(Index k, std::vector<PinnedEntry> pinned);

    std::vector<Index> resolved_support(Index n) const;
    /// Identity: |support|; Sum and WeightedSum: 1; FixedRecourse: declared.
    Index noise_dim(Index n) const;
    /// q(x). FixedRecourse releases the whole vector.
    Vector evaluate(const Vector& x) const;
};

/// M vec(X) = rhs with vec(X)[i k + j] = X(i, j).
struct LinearEqualities {
    Matrix M;
    Vector rhs;
};

LinearEqualities apply_query_constraint(const QueryConstraint& query, Index n, Index k);

struct EqualitySplit {
    /// b_E - A_E xbar = 0
    Matrix nominal_A;
    Vector nominal_b;
    /// A_E X = 0 on vec(X)
    LinearEqualities recourse;
};

EqualitySplit split_equalities(const Matrix& A_E, const Vector& b_E, Index k);

struct DecisionRule {
    Vector xbar;
    Matrix X;

    Vector evaluate(const Vector& zeta) const { return xbar + X * zeta; }
};

enum class ChanceMethod { Vertex, Individual };
enum class SafetyKind { Chebyshev, GaussianExact };

struct ChanceSpec {
    ChanceMethod method = ChanceMethod::Vertex;
    /// Vertex: joint tolerance and confidence of the sample-size bound.
    double eta = 0.05;
    double beta = 0.01;
    std::optional<Index> sample_override;
    /// Individual: per-row tolerances for the zeta-dependent rows, in row
    /// order. Empty: eta split evenly; one value: used for every row.
    std::vector<double> eta_bar;
    /// Default: Chebyshev for Laplace noise, GaussianExact for Gaussian.
    std::optional<SafetyKind> safety;

    static ChanceSpec vertex(double eta, double beta = 0.01) {
        ChanceSpec s;
        s.eta = eta;
        s.beta = beta;
        return s;
    }
    static ChanceSpec individual(double eta, std::vector<double> eta_bar = {}) {
        ChanceSpec s;
        s.method = ChanceMethod::Individual;
        s.eta = eta;
        s.eta_bar = std::move(eta_bar);
        return s;
    }
    void check() const;
};

/// ceil((1/eta) (e/(e-1)) (2k - 1 + ln(1/beta))).
Index vertex_sample_size(double eta, Index k, double beta);

/// Corners of the bounding box of the sample rows. Vertex v takes the max of
/// coordinate j when bit (k-1-j) of v is set, so the first coordinate varies
/// slowest.
Matrix hyperrectangle_vertices(const Matrix& samples);

double safety_factor(double eta_bar, SafetyKind kind);

/// |xbar|^2 + Tr(X Sigma X').
double reduce_quadratic_objective(const Vector& xbar, const Matrix& X, const Matrix& covariance);

/// One row of b - A(xbar + X zeta) written over transformed variables y:
///   slack(zeta) = c0 - a y - zeta'(g0 + Gamma y).
struct ExpandedRow {
    double c0 = 0.0;
    Eigen::RowVectorXd a;
    Vector g0;
    Matrix Gamma;

    bool depends_on_zeta() const;
    /// Coefficients (b, A row) of the row at a fixed zeta, in b - A y form.
    std::pair<double, Eigen::RowVectorXd> at(const Vector& zeta) const;
};

struct ConeRows {
    ConeKind kind;
    Matrix A;
    Vector b;
};

/// (c0 - a y, z F'(g0 + Gamma y)) in SOC(k+1); for k = 1 the two linear rows
/// c0 - a y -+ z F (g0 + Gamma y) >= 0.
ConeRows reformulate_individual_soc(const ExpandedRow& row, const Matrix& F, double z);

/// How a zeta-dependent cone block enters the transformed program.
struct BlockTreatment {
    enum class Kind {
        /// Held with probability >= 1 - eta (vertex or per-row).
        ChanceConstrained,
        /// RSOC epigraph (u, v, w) of a squared norm: replaced by the
        /// epigraph of E|w|^2 = |w(xbar)|^2 + |vec(A_w X F)|^2. Rows u, v must
        /// not depend on zeta.
        ExpectationQuadratic,
        /// Block with epigraph variable `epigraph_var`: S_obj sampled copies
        /// with their own epigraph variables t_s, and xbar[epigraph] is tied
        /// to their mean.
        SampleAverage,
    };
    Kind kind = Kind::ChanceConstrained;
    Index epigraph_var = -1;
    Index samples = 32;
};

struct PrivatizeOptions {
    /// Variables allowed to carry recourse; empty means all. Explicit pins
    /// from the query take precedence.
    std::vector<bool> recourse;
    /// Keyed by cone block index of the source program.
    std::map<std::size_t, BlockTreatment> treatments;
    /// Weight of the |vec(X_free)| tie-break term; negative selects
    /// 1e-6 max(1, |c|_inf), zero disables it.
    double recourse_penalty = -1.0;
};

struct RuleLayout {
    Index n = 0;
    Index k = 0;
    Index columns = 0;
    /// Column of X(i, j), or -1 when the entry is pinned.
    Eigen::MatrixXi x_col;
    Matrix x_fixed;

    /// w'(xbar + X zeta) = constant + coeffs y.
    std::pair<double, Eigen::RowVectorXd> linear_functional(const Vector& w, const Vector& zeta) const;
    /// Rule stored in the solution vector y (no polishing).
    DecisionRule rule(const Vector& y) const;
};

struct PrivatizedProgram {
    ConicProgram program;
    RuleLayout layout;
    QueryConstraint query;
    NoiseSpec noise;
    /// Vertex method data.
    Index scenario_samples = 0;
    Matrix vertices;
    /// Individual method: tolerance and safety factor per chance row.
    std::vector<double> row_eta;
    std::vector<double> row_safety;
    Index chance_blocks = 0;

    /// Projects y onto the Zero rows of the program (least-norm correction,
    /// removes solver round-off on equalities) and reads the rule.
    DecisionRule extract(const Vector& y) const;
};

PrivatizedProgram privatize(const ConicProgram& program, const NoiseSpec& noise, const QueryConstraint& query,
                            const ChanceSpec& chance, std::uint64_t seed, const PrivatizeOptions& options = {});

struct PrivatizedSolution {
    Solution solution;
    DecisionRule rule;
};

/// Solves the transformed program; throws SolveFailure unless Optimal.
PrivatizedSolution solve_privatized(const PrivatizedProgram& privatized, const SolverSettings& settings = {});

struct QueryRelease {
    Vector nominal;
    /// The raw noise draw; independent of the dataset.
    Vector increment;
    Vector released;
};

/// Identity / Sum / WeightedSum: q(xbar) + zeta. FixedRecourse: the full
/// vector xbar + X zeta.
QueryRelease release_query(const DecisionRule& rule, const QueryConstraint& query, const NoiseSpec& noise,
                           std::uint64_t seed);

}  // namespace dpconic
