#include "dpconic/ldr.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/stats.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace dpconic {

// ---------------------------------------------------------------- queries

QueryConstraint QueryConstraint::identity(std::vector<Index> support) {
    QueryConstraint q;
    q.kind = QueryKind::Identity;
    q.support = std::move(support);
    return q;
}

QueryConstraint QueryConstraint::sum(std::vector<Index> support) {
    QueryConstraint q;
    q.kind = QueryKind::Sum;
    q.support = std::move(support);
    return q;
}

QueryConstraint QueryConstraint::weighted_sum(Vector weights, std::vector<Index> support) {
    QueryConstraint q;
    q.kind = QueryKind::WeightedSum;
    q.weights = std::move(weights);
    q.support = std::move(support);
    return q;
}

QueryConstraint QueryConstraint::fixed_recourse(Index k, std::vector<PinnedEntry> pinned) {
    QueryConstraint q;
    q.kind = QueryKind::FixedRecourse;
    q.declared_dim = k;
    q.pinned = std::move(pinned);
    return q;
}

std::vector<Index> QueryConstraint::resolved_support(Index n) const {
    if (!support.empty()) {
        for (Index i : support)
            if (i < 0 || i >= n) throw ValidationError("query support index out of range");
        return support;
    }
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    return all;
}

Index QueryConstraint::noise_dim(Index n) const {
    switch (kind) {
        case QueryKind::Identity: return static_cast<Index>(resolved_support(n).size());
        case QueryKind::Sum:
        case QueryKind::WeightedSum: return 1;
        case QueryKind::FixedRecourse: return declared_dim;
    }
    return 0;
}

Vector QueryConstraint::evaluate(const Vector& x) const {
    const Index n = x.size();
    if (kind == QueryKind::FixedRecourse) return x;
    const auto s = resolved_support(n);
    if (kind == QueryKind::Identity) {
        Vector out(static_cast<Index>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) out(static_cast<Index>(i)) = x(s[i]);
        return out;
    }
    if (kind == QueryKind::WeightedSum && weights.size() != static_cast<Index>(s.size()))
        throw ValidationError("weighted-sum query: weights and support differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        total += (kind == QueryKind::Sum ? 1.0 : weights(static_cast<Index>(i))) * x(s[i]);
    return Vector::Constant(1, total);
}

LinearEqualities apply_query_constraint(const QueryConstraint& query, Index n, Index k) {
    if (query.noise_dim(n) != k) throw ValidationError("query constraint: noise dimension mismatch");
    const auto s = query.resolved_support(n);
    LinearEqualities eq;
    switch (query.kind) {
        case QueryKind::Identity: {
            eq.M = Matrix::Zero(n * k, n * k);
            eq.rhs = Vector::Zero(n * k);
            Index row = 0;
            for (std::size_t a = 0; a < s.size(); ++a)
                for (Index j = 0; j < k; ++j) {
                    eq.M(row, s[a] * k + j) = 1.0;
                    eq.rhs(row) = (static_cast<Index>(a) == j) ? 1.0 : 0.0;
                    ++row;
                }
            eq.M.conservativeResize(row, n * k);
            eq.rhs.conservativeResize(row);
            break;
        }
        case QueryKind::Sum:
        case QueryKind::WeightedSum: {
            if (query.kind == QueryKind::WeightedSum && query.weights.size() != static_cast<Index>(s.size()))
                throw ValidationError("weighted-sum query: weights and support differ in length");
            eq.M = Matrix::Zero(1, n * k);
            for (std::size_t a = 0; a < s.size(); ++a)
                eq.M(0, s[a] * k) = query.kind == QueryKind::Sum ? 1.0 : query.weights(static_cast<Index>(a));
            eq.rhs = Vector::Ones(1);
            break;
        }
        case QueryKind::FixedRecourse: {
            eq.M = Matrix::Zero(static_cast<Index>(query.pinned.size()), n * k);
            eq.rhs.resize(static_cast<Index>(query.pinned.size()));
            for (std::size_t p = 0; p < query.pinned.size(); ++p) {
                const auto& pin = query.pinned[p];
                if (pin.row < 0 || pin.row >= n || pin.col < 0 || pin.col >= k)
                    throw ValidationError("fixed recourse: pinned entry out of range");
                eq.M(static_cast<Index>(p), pin.row * k + pin.col) = 1.0;
                eq.rhs(static_cast<Index>(p)) = pin.value;
            }
            break;
        }
    }
    return eq;
}

EqualitySplit split_equalities(const Matrix& A_E, const Vector& b_E, Index k) {
    if (A_E.rows() != b_E.size()) throw ValidationError("split_equalities: shape mismatch");
    const Index n = A_E.cols();
    EqualitySplit out{A_E, b_E, {Matrix::Zero(A_E.rows() * k, n * k), Vector::Zero(A_E.rows() * k)}};
    for (Index i = 0; i < A_E.rows(); ++i)
        for (Index j = 0; j < k; ++j)
            for (Index r = 0; r < n; ++r) out.recourse.M(i * k + j, r * k + j) = A_E(i, r);
    return out;
}

// ---------------------------------------------------------------- chance data

void ChanceSpec::check() const {
    if (method == ChanceMethod::Vertex) {
        if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("chance: eta must lie in (0, 1)");
        if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("chance: beta must lie in (0, 1)");
        if (sample_override && *sample_override < 1) throw ValidationError("chance: sample override must be >= 1");
    } else {
        for (double e : eta_bar)
            if (!(e > 0.0 && e <= 0.5)) throw ValidationError("chance: each eta_bar must lie in (0, 0.5]");
        if (eta_bar.empty() && !(eta > 0.0 && eta < 1.0)) throw ValidationError("chance: eta must lie in (0, 1)");
    }
}

Index vertex_sample_size(double eta, Index k, double beta) {
    if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("vertex_sample_size: eta must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("vertex_sample_size: beta must lie in (0, 1)");
    if (k < 1) throw ValidationError("vertex_sample_size: k must be >= 1");
    const double e = std::numbers::e;
    const double value = (1.0 / eta) * (e / (e - 1.0)) * (2.0 * static_cast<double>(k) - 1.0 + std::log(1.0 / beta));
    const double nearest = std::round(value);
    if (std::abs(value - nearest) <= 1e-9 * value) return static_cast<Index>(nearest);
    return static_cast<Index>(std::ceil(value));
}

Matrix hyperrectangle_vertices(const Matrix& samples) {
    if (samples.rows() < 1) throw ValidationError("hyperrectangle_vertices: need at least one sample");
    const Index k = samples.cols();
    if (k > 20)
        throw ValidationError("hyperrectangle_vertices: k = " + std::to_string(k) +
                              " would need 2^k vertices; use the individual (per-row SOC) method");
    const Eigen::RowVectorXd lo = samples.colwise().minCoeff();
    const Eigen::RowVectorXd hi = samples.colwise().maxCoeff();
    const Index count = Index{1} << k;
    Matrix out(count, k);
    for (Index v = 0; v < count; ++v)
        for (Index j = 0; j < k; ++j) out(v, j) = ((v >> (k - 1 - j)) & 1) ? hi(j) : lo(j);
    return out;
}

double safety_factor(double eta_bar, SafetyKind kind) {
    if (!(eta_bar > 0.0 && eta_bar <= 0.5)) throw ValidationError("safety_factor: eta_bar must lie in (0, 0.5]");
    if (kind == SafetyKind::Chebyshev) return std::sqrt((1.0 - eta_bar) / eta_bar);
    if (eta_bar == 0.5) return 0.0;
    return normal_quantile(1.0 - eta_bar);
}

double reduce_quadratic_objective(const Vector& xbar, const Matrix& X, const Matrix& covariance) {
    if (X.rows() != xbar.size() || X.cols() != covariance.rows() || covariance.rows() != covariance.cols())
        throw ValidationError("reduce_quadratic_objective: shape mismatch");
    return xbar.squaredNorm() + (X * covariance * X.transpose()).trace();
}

// ---------------------------------------------------------------- rows

bool ExpandedRow::depends_on_zeta() const {
    return (g0.size() > 0 && g0.cwiseAbs().maxCoeff() > 0.0) ||
           (Gamma.size() > 0 && Gamma.cwiseAbs().maxCoeff() > 0.0);
}

std::pair<double, Eigen::RowVectorXd> ExpandedRow::at(const Vector& zeta) const {
    return {c0 - zeta.dot(g0), a + zeta.transpose() * Gamma};
}

ConeRows reformulate_individual_soc(const ExpandedRow& row, const Matrix& F, double z) {
    const Index k = row.g0.size();
    if (F.rows() != k || F.cols() != k) throw ValidationError("reformulate_individual_soc: factor shape mismatch");
    const Index w = row.a.size();
    const Vector scaled_g0 = z * F.transpose() * row.g0;
    const Matrix scaled_gamma = z * F.transpose() * row.Gamma;
    if (k == 1) {
        ConeRows out{ConeKind::NonNeg, Matrix(2, w), Vector(2)};
        out.A.row(0) = row.a + scaled_gamma.row(0);
        out.b(0) = row.c0 - scaled_g0(0);
        out.A.row(1) = row.a - scaled_gamma.row(0);
        out.b(1) = row.c0 + scaled_g0(0);
        return out;
    }
    // identically zero tail rows (a singular factor) are dropped
    std::vector<Index> tail;
    for (Index j = 0; j < k; ++j)
        if (scaled_g0(j) != 0.0 || !scaled_gamma.row(j).isZero(0.0)) tail.push_back(j);
    const auto dim = static_cast<Index>(tail.size());
    ConeRows out{dim == 0 ? ConeKind::NonNeg : ConeKind::SecondOrder, Matrix(dim + 1, w), Vector(dim + 1)};
    out.A.row(0) = row.a;
    out.b(0) = row.c0;
    for (Index t = 0; t < dim; ++t) {
        out.A.row(1 + t) = scaled_gamma.row(tail[static_cast<std::size_t>(t)]);
        out.b(1 + t) = -scaled_g0(tail[static_cast<std::size_t>(t)]);
    }
    return out;
}

// ---------------------------------------------------------------- layout

std::pair<double, Eigen::RowVectorXd> RuleLayout::linear_functional(const Vector& w, const Vector& zeta) const {
    if (w.size() != n || zeta.size() != k) throw ValidationError("linear_functional: shape mismatch");
    Eigen::RowVectorXd coeffs = Eigen::RowVectorXd::Zero(columns);
    double constant = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (w(i) == 0.0) continue;
        coeffs(i) += w(i);
        for (Index j = 0; j < k; ++j) {
            if (x_col(i, j) >= 0)
                coeffs(x_col(i, j)) += w(i) * zeta(j);
            else
                constant += w(i) * x_fixed(i, j) * zeta(j);
        }
    }
    return {constant, coeffs};
}

DecisionRule RuleLayout::rule(const Vector& y) const {
    DecisionRule r{y.head(n), x_fixed};
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j)
            if (x_col(i, j) >= 0) r.X(i, j) = y(x_col(i, j));
    return r;
}

DecisionRule PrivatizedProgram::extract(const Vector& y) const {
    if (y.size() != program.cols()) throw ValidationError("extract: solution length mismatch");
    Index zero_rows = 0;
    for (const auto& block : program.cones.blocks())
        if (block.kind == ConeKind::Zero) zero_rows += block.dim;
    if (zero_rows == 0) return layout.rule(y);

    Matrix M(zero_rows, program.cols());
    Vector rhs(zero_rows);
    Index row = 0, out = 0;
    for (const auto& block : program.cones.blocks()) {
        if (block.kind == ConeKind::Zero) {
            M.middleRows(out, block.dim) = program.A.middleRows(row, block.dim);
            rhs.segment(out, block.dim) = program.b.segment(row, block.dim);
            out += block.dim;
        }
        row += block.dim;
    }
    const Vector residual = rhs - M * y;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
    const Vector polished = y + cod.solve(residual);
    return layout.rule(polished);
}

// ---------------------------------------------------------------- privatize

namespace {

// Cone rows accumulated with a growing column count; padded on assembly.
class RowSink {
public:
    explicit RowSink(Index base_columns) : columns_(base_columns) {}

    Index add_column() { return columns_++; }
    Index columns() const { return columns_; }

    void emit(ConeKind kind, Matrix A, Vector b) {
        if (A.rows() == 0) return;
        blocks_.push_back({kind, std::move(A), std::move(b)});
    }

    ConicProgram assemble(const Vector& objective) const {
        ProgramBuilder builder(columns_);
        for (const auto& block : blocks_) {
            Matrix A = Matrix::Zero(block.A.rows(), columns_);
            A.leftCols(block.A.cols()) = block.A;
            builder.add_block(block.kind, A, block.b);
        }
        Vector c = Vector::Zero(columns_);
        c.head(objective.size()) = objective;
        builder.set_objective(c);
        return builder.build();
    }

private:
    Index columns_;
    std::vector<ConeRows> blocks_;
};


}  // namespace

PrivatizedProgram privatize(const ConicProgram& program, const NoiseSpec& noise, const QueryConstraint& query,
                            const ChanceSpec& chance, std::uint64_t seed, const PrivatizeOptions& options) {
    if (auto violations = validate(program); !violations.empty())
        throw ValidationError("privatize: invalid program: " + violations.front());
    noise.check();
    chance.check();
    const Index n = program.cols();
    const Index k = query.noise_dim(n);
    if (k != noise.dim)
        throw ValidationError("privatize: query needs noise dimension " + std::to_string(k) + ", noise has " +
                              std::to_string(noise.dim));
    if (!options.recourse.empty() && static_cast<Index>(options.recourse.size()) != n)
        throw ValidationError("privatize: recourse mask length != n");

    PrivatizedProgram out;
    out.query = query;
    out.noise = noise;
    RuleLayout& layout = out.layout;
    layout.n = n;
    layout.k = k;
    layout.x_fixed = Matrix::Zero(n, k);
    Eigen::MatrixXi pinned = Eigen::MatrixXi::Zero(n, k);

    for (Index i = 0; i < n; ++i)
        if (!options.recourse.empty() && !options.recourse[static_cast<std::size_t>(i)]) pinned.row(i).setOnes();
    if (query.kind == QueryKind::Identity) {
        const auto s = query.resolved_support(n);
        for (std::size_t a = 0; a < s.size(); ++a) {
            pinned.row(s[a]).setOnes();
            layout.x_fixed.row(s[a]).setZero();
            layout.x_fixed(s[a], static_cast<Index>(a)) = 1.0;
        }
    } else if (query.kind == QueryKind::FixedRecourse) {
        const auto eq = apply_query_constraint(query, n, k);
        (void)eq;  // range checks
        for (const auto& pin : query.pinned) {
            pinned(pin.row, pin.col) = 1;
            layout.x_fixed(pin.row, pin.col) = pin.value;
        }
    }

    // Without noise, recourse on a variable outside every equality row only
    // meets the tie-break cone, whose optimum is its apex; pin it to zero.
    if (noise.scale == 0.0) {
        std::vector<char> in_equality(static_cast<std::size_t>(n), 0);
        const auto starts = program.cones.offsets();
        for (std::size_t b = 0; b < program.cones.size(); ++b) {
            if (program.cones[b].kind != ConeKind::Zero) continue;
            for (Index r = starts[b]; r < starts[b] + program.cones[b].dim; ++r)
                for (Index i = 0; i < n; ++i)
                    if (program.A(r, i) != 0.0) in_equality[static_cast<std::size_t>(i)] = 1;
        }
        if (query.kind == QueryKind::Sum || query.kind == QueryKind::WeightedSum)
            for (Index i : query.resolved_support(n)) in_equality[static_cast<std::size_t>(i)] = 1;
        for (Index i = 0; i < n; ++i)
            if (!in_equality[static_cast<std::size_t>(i)]) pinned.row(i).setOnes();
    }

    layout.x_col = Eigen::MatrixXi::Constant(n, k, -1);
    Index next = n;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j)
            if (!pinned(i, j)) layout.x_col(i, j) = static_cast<int>(next++);
    const Index base = next;
    const Index free_entries = base - n;

    auto expand = [&](Index r) {
        ExpandedRow row;
        row.c0 = program.b(r);
        row.a = Eigen::RowVectorXd::Zero(base);
        row.a.head(n) = program.A.row(r);
        row.g0 = (program.A.row(r) * layout.x_fixed).transpose();
        row.Gamma = Matrix::Zero(k, base);
        for (Index i = 0; i < n; ++i) {
            const double a = program.A(r, i);
            if (a == 0.0) continue;
            for (Index j = 0; j < k; ++j)
                if (layout.x_col(i, j) >= 0) row.Gamma(j, layout.x_col(i, j)) = a;
        }
        return row;
    };

    // noise samples used by the vertex box and by sampled objectives
    Matrix vertices;
    if (chance.method == ChanceMethod::Vertex) {
        out.scenario_samples = chance.sample_override.value_or(vertex_sample_size(chance.eta, k, chance.beta));
        if (k > 20)
            throw ValidationError("privatize: vertex method needs 2^" + std::to_string(k) +
                                  " vertices; use the individual method");
        vertices = hyperrectangle_vertices(sample_noise(noise, derive_seed(seed, 1), out.scenario_samples));
        out.vertices = vertices;
    }
    SafetyKind safety = noise.family == NoiseFamily::Gaussian ? SafetyKind::GaussianExact : SafetyKind::Chebyshev;
    if (chance.safety) safety = *chance.safety;
    if (safety == SafetyKind::GaussianExact && noise.family != NoiseFamily::Gaussian)
        throw ValidationError("privatize: exact Gaussian safety factor requires Gaussian noise");
    const Matrix F = noise.factor();

    RowSink sink(base);
    std::vector<ExpandedRow> x_equalities;  // rows g0 + Gamma y = 0

    // first pass: count zeta-dependent rows under the individual method
    const auto offsets = program.cones.offsets();
    auto treatment_of = [&](std::size_t b) {
        auto it = options.treatments.find(b);
        return it == options.treatments.end() ? BlockTreatment{} : it->second;
    };
    std::vector<ExpandedRow> rows;
    rows.reserve(static_cast<std::size_t>(program.rows()));
    for (Index r = 0; r < program.rows(); ++r) rows.push_back(expand(r));

    Index individual_rows = 0;
    for (std::size_t b = 0; b < program.cones.size(); ++b) {
        const auto& block = program.cones[b];
        if (block.kind == ConeKind::Zero || treatment_of(b).kind != BlockTreatment::Kind::ChanceConstrained) continue;
        for (Index r = offsets[b]; r < offsets[b] + block.dim; ++r)
            if (rows[static_cast<std::size_t>(r)].depends_on_zeta()) ++individual_rows;
    }
    if (chance.method == ChanceMethod::Individual) {
        if (!chance.eta_bar.empty() && chance.eta_bar.size() != 1 &&
            static_cast<Index>(chance.eta_bar.size()) != individual_rows)
            throw ValidationError("privatize: eta_bar has " + std::to_string(chance.eta_bar.size()) +
                                  " entries, program has " + std::to_string(individual_rows) + " chance rows");
    }
    auto eta_for_row = [&](Index idx) {
        if (chance.eta_bar.empty()) return std::min(0.5, chance.eta / static_cast<double>(individual_rows));
        if (chance.eta_bar.size() == 1) return chance.eta_bar.front();
        return chance.eta_bar[static_cast<std::size_t>(idx)];
    };

    Index chance_row_index = 0;
    Vector objective = program.c;
    for (std::size_t b = 0; b < program.cones.size(); ++b) {
        const auto& block = program.cones[b];
        const Index first = offsets[b];
        const Index dim = block.dim;
        auto block_rows = [&](auto&& fn) {
            for (Index r = first; r < first + dim; ++r) fn(rows[static_cast<std::size_t>(r)]);
        };

        if (block.kind == ConeKind::Zero) {
            Matrix A(dim, base);
            Vector bb(dim);
            for (Index r = 0; r < dim; ++r) {
                A.row(r) = rows[static_cast<std::size_t>(first + r)].a;
                bb(r) = rows[static_cast<std::size_t>(first + r)].c0;
            }
            sink.emit(ConeKind::Zero, A, bb);
            block_rows([&](const ExpandedRow& row) {
                for (Index j = 0; j < k; ++j) {
                    ExpandedRow eq;
                    eq.c0 = row.g0(j);
                    eq.a = row.Gamma.row(j);
                    x_equalities.push_back(std::move(eq));
                }
            });
            continue;
        }

        bool dependent = false;
        block_rows([&](const ExpandedRow& row) { dependent = dependent || row.depends_on_zeta(); });
        const BlockTreatment treatment = treatment_of(b);

        auto emit_at = [&](const Vector& zeta, Index swap_from = -1, Index swap_to = -1) {
            Matrix A(dim, sink.columns());
            A.setZero();
            Vector bb(dim);
            for (Index r = 0; r < dim; ++r) {
                auto [c, a] = rows[static_cast<std::size_t>(first + r)].at(zeta);
                bb(r) = c;
                A.row(r).head(base) = a;
                if (swap_from >= 0) {
                    A(r, swap_to) = A(r, swap_from);
                    A(r, swap_from) = 0.0;
                }
            }
            sink.emit(block.kind, A, bb);
        };

        if (!dependent && treatment.kind != BlockTreatment::Kind::SampleAverage) {
            emit_at(Vector::Zero(k));
            continue;
        }

        switch (treatment.kind) {
            case BlockTreatment::Kind::ChanceConstrained: {
                ++out.chance_blocks;
                if (chance.method == ChanceMethod::Vertex) {
                    for (Index v = 0; v < vertices.rows(); ++v) emit_at(vertices.row(v).transpose());
                    break;
                }
                if (block.kind != ConeKind::NonNeg)
                    throw ValidationError("privatize: the individual method handles linear (nonnegative) rows only; "
                                          "cone block " + std::to_string(b) + " is " +
                                          std::string(to_string(block.kind)) + ", use the vertex method");
                block_rows([&](const ExpandedRow& row) {
                    if (!row.depends_on_zeta()) {
                        sink.emit(ConeKind::NonNeg, row.a, Vector::Constant(1, row.c0));
                        return;
                    }
                    const double eta_i = eta_for_row(chance_row_index++);
                    const double z = safety_factor(eta_i, safety);
                    out.row_eta.push_back(eta_i);
                    out.row_safety.push_back(z);
                    auto cone = reformulate_individual_soc(row, F, z);
                    sink.emit(cone.kind, cone.A, cone.b);
                });
                break;
            }
            case BlockTreatment::Kind::ExpectationQuadratic: {
                if (block.kind != ConeKind::RotatedSecondOrder || dim < 3)
                    throw ValidationError("privatize: expectation treatment needs a rotated cone epigraph block");
                if (rows[static_cast<std::size_t>(first)].depends_on_zeta() ||
                    rows[static_cast<std::size_t>(first + 1)].depends_on_zeta())
                    throw ValidationError("privatize: epigraph rows of a quadratic objective must not depend on zeta");
                std::vector<std::pair<double, Eigen::RowVectorXd>> out_rows;
                block_rows([&](const ExpandedRow& row) { out_rows.emplace_back(row.c0, row.a); });
                for (Index r = first + 2; r < first + dim; ++r) {
                    const auto& row = rows[static_cast<std::size_t>(r)];
                    if (!row.depends_on_zeta()) continue;
                    const Vector g = -F.transpose() * row.g0;
                    const Matrix G = F.transpose() * row.Gamma;
                    for (Index j = 0; j < k; ++j)
                        if (g(j) != 0.0 || !G.row(j).isZero(0.0)) out_rows.emplace_back(g(j), G.row(j));
                }
                Matrix A(static_cast<Index>(out_rows.size()), base);
                Vector bb(A.rows());
                for (Index r = 0; r < A.rows(); ++r) {
                    bb(r) = out_rows[static_cast<std::size_t>(r)].first;
                    A.row(r) = out_rows[static_cast<std::size_t>(r)].second;
                }
                sink.emit(ConeKind::RotatedSecondOrder, A, bb);
                break;
            }
            case BlockTreatment::Kind::SampleAverage: {
                const Index e = treatment.epigraph_var;
                if (e < 0 || e >= n) throw ValidationError("privatize: sample-average epigraph variable out of range");
                for (Index j = 0; j < k; ++j)
                    if (layout.x_col(e, j) >= 0 || layout.x_fixed(e, j) != 0.0)
                        throw ValidationError("privatize: sample-average epigraph variable must not carry recourse");
                if (treatment.samples < 1) throw ValidationError("privatize: sample-average needs >= 1 sample");
                const Matrix draws = sample_noise(noise, derive_seed(seed, 1000 + b), treatment.samples);
                std::vector<Index> t_cols;
                for (Index s = 0; s < treatment.samples; ++s) {
                    const Index t = sink.add_column();
                    t_cols.push_back(t);
                    emit_at(draws.row(s).transpose(), e, t);
                }
                // xbar[e] = mean_s t_s
                Matrix A = Matrix::Zero(1, sink.columns());
                A(0, e) = 1.0;
                for (Index t : t_cols) A(0, t) = -1.0 / static_cast<double>(treatment.samples);
                sink.emit(ConeKind::Zero, A, Vector::Zero(1));
                break;
            }
        }
    }

    // query equalities on the free recourse entries
    if (query.kind == QueryKind::Sum || query.kind == QueryKind::WeightedSum) {
        const auto eq = apply_query_constraint(query, n, k);
        ExpandedRow row;
        row.a = Eigen::RowVectorXd::Zero(base);
        row.c0 = -1.0;
        for (Index i = 0; i < n; ++i) {
            const double w = eq.M(0, i * k);
            if (w == 0.0) continue;
            if (layout.x_col(i, 0) >= 0)
                row.a(layout.x_col(i, 0)) = w;
            else
                row.c0 += w * layout.x_fixed(i, 0);
        }
        x_equalities.push_back(std::move(row));
    }

    // consistency of all recourse equalities, then an independent subset
    if (!x_equalities.empty()) {
        std::vector<std::size_t> active;
        for (std::size_t r = 0; r < x_equalities.size(); ++r) {
            const auto& row = x_equalities[r];
            const bool empty = row.a.cwiseAbs().maxCoeff() == 0.0;
            if (empty) {
                if (std::abs(row.c0) > 1e-12)
                    throw ConflictingConstraints(
                        "privatize: an equality row forces its recourse term to vanish, but the pinned recourse "
                        "(query constraint) gives it a nonzero value; the equality cannot hold for every noise draw");
                continue;
            }
            active.push_back(r);
        }
        if (!active.empty()) {
            const Index rows_x = static_cast<Index>(active.size());
            Matrix M(rows_x, free_entries);
            Vector rhs(rows_x);
            for (Index r = 0; r < rows_x; ++r) {
                const auto& row = x_equalities[active[static_cast<std::size_t>(r)]];
                M.row(r) = row.a.segment(n, free_entries);
                rhs(r) = -row.c0;
            }
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
            const Vector ls = cod.solve(rhs);
            if ((M * ls - rhs).norm() > 1e-9 * (1.0 + rhs.norm()))
                throw ConflictingConstraints(
                    "privatize: the recourse equalities A_E X = 0 from split equality rows contradict the query "
                    "constraint on X (e.g. 1'X = 0 from a balance row against 1'X = 1); no decision rule can satisfy "
                    "both exactly. Restrict the query support or use a weighted query whose weights are not "
                    "constant on the recourse support");
            Eigen::ColPivHouseholderQR<Matrix> qr(M.transpose());
            const Index rank = qr.rank();
            std::vector<Index> keep;
            for (Index r = 0; r < rank; ++r) keep.push_back(qr.colsPermutation().indices()(r));
            std::sort(keep.begin(), keep.end());
            Matrix A = Matrix::Zero(rank, base);
            Vector bb(rank);
            for (Index r = 0; r < rank; ++r) {
                A.row(r).segment(n, free_entries) = M.row(keep[static_cast<std::size_t>(r)]);
                bb(r) = rhs(keep[static_cast<std::size_t>(r)]);
            }
            sink.emit(ConeKind::Zero, A, bb);
        }
    }

    // tie-break toward the smallest free recourse
    double penalty = options.recourse_penalty;
    if (penalty < 0.0) penalty = 1e-6 * std::max(1.0, program.c.cwiseAbs().maxCoeff());
    if (penalty > 0.0 && free_entries > 0) {
        const Index r = sink.add_column();
        Matrix A = Matrix::Zero(free_entries + 1, sink.columns());
        A(0, r) = -1.0;
        for (Index f = 0; f < free_entries; ++f) A(1 + f, n + f) = -1.0;
        sink.emit(ConeKind::SecondOrder, A, Vector::Zero(free_entries + 1));
        objective.conservativeResize(sink.columns());
        objective.tail(sink.columns() - n).setZero();
        objective(r) = penalty;
    }

    out.program = sink.assemble(objective);
    layout.columns = sink.columns();
    std::vector<std::string> names(static_cast<std::size_t>(layout.columns));
    for (Index i = 0; i < n; ++i) names[static_cast<std::size_t>(i)] = "xbar[" + std::to_string(i) + "]";
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j)
            if (layout.x_col(i, j) >= 0)
                names[static_cast<std::size_t>(layout.x_col(i, j))] =
                    "X[" + std::to_string(i) + "][" + std::to_string(j) + "]";
    for (Index c = base; c < layout.columns; ++c) names[static_cast<std::size_t>(c)] = "aux[" + std::to_string(c - base) + "]";
    out.program.variable_names = std::move(names);
    return out;
}

PrivatizedSolution solve_privatized(const PrivatizedProgram& privatized, const SolverSettings& settings) {
    Solution sol = solve(privatized.program, settings);
    if (!sol.optimal())
        throw SolveFailure("privatized program: solver returned " + std::string(to_string(sol.status)));
    DecisionRule rule = privatized.extract(sol.x);
    return {std::move(sol), std::move(rule)};
}

QueryRelease release_query(const DecisionRule& rule, const QueryConstraint& query, const NoiseSpec& noise,
                           std::uint64_t seed) {
    const Index n = rule.xbar.size();
    if (query.noise_dim(n) != noise.dim) throw ValidationError("release_query: noise dimension mismatch");
    const Vector zeta = sample_noise(noise, seed, 1).row(0).transpose();
    QueryRelease out;
    out.nominal = query.evaluate(rule.xbar);
    out.increment = query.kind == QueryKind::FixedRecourse ? Vector(rule.X * zeta) : zeta;
    out.released = out.nominal + out.increment;
    return out;
}

}  // namespace dpconic
