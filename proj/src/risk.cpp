#include "dpconic/risk.hpp"

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace dpconic {

namespace {

// (1 - q) S, snapped to an integer when rounding put it a hair off one.
double tail_mass(double q, Index S) {
    const double m = (1.0 - q) * static_cast<double>(S);
    const double r = std::round(m);
    return std::abs(m - r) <= 1e-9 * std::max(1.0, m) ? r : m;
}

void check_q(double q) {
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("CVaR: q must lie in (0, 1)");
}

}  // namespace

LinearLoss LinearLoss::relative_to(const Vector& weights, const Vector& x_ref) {
    if (weights.size() != x_ref.size()) throw ValidationError("loss: weights and reference differ in length");
    return {weights, -weights.dot(x_ref)};
}

LossSamples optimality_loss(const DecisionRule& rule, const Vector& base, const Vector& loss_weights,
                            const NoiseSpec& noise, Index S, std::uint64_t seed) {
    if (S < 1) throw ValidationError("optimality_loss: S must be >= 1");
    if (base.size() != rule.xbar.size() || loss_weights.size() != base.size() || rule.X.cols() != noise.dim)
        throw ValidationError("optimality_loss: shape mismatch");
    const Matrix zeta = sample_noise(noise, seed, S);
    const double nominal = loss_weights.dot(rule.xbar - base);
    const Eigen::RowVectorXd slope = loss_weights.transpose() * rule.X;
    LossSamples out;
    out.samples.resize(S);
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t s) {
        const auto i = static_cast<Index>(s);
        out.samples(i) = nominal + slope.dot(zeta.row(i));
    });
    out.mean = out.samples.mean();
    return out;
}

double cvar_empirical(const Vector& losses, double q) {
    check_q(q);
    if (losses.size() == 0) throw ValidationError("cvar_empirical: no losses");
    std::vector<double> sorted(losses.data(), losses.data() + losses.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double m = tail_mass(q, losses.size());
    const auto whole = static_cast<std::size_t>(std::floor(m));
    double total = 0.0;
    for (std::size_t s = 0; s < whole; ++s) total += sorted[s];
    if (whole < sorted.size()) total += (m - static_cast<double>(whole)) * sorted[whole];
    return total / m;
}

double var_empirical(const Vector& losses, double q) {
    check_q(q);
    if (losses.size() == 0) throw ValidationError("var_empirical: no losses");
    std::vector<double> sorted(losses.data(), losses.data() + losses.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto rank = static_cast<std::size_t>(std::ceil(tail_mass(q, losses.size())));
    return sorted[std::min(sorted.size(), std::max<std::size_t>(rank, 1)) - 1];
}

void CvarSpec::check() const {
    check_q(q);
    if (!(blend > 0.0 && blend <= 1.0)) throw ValidationError("CVaR: blend must lie in (0, 1]");
    if (!loss.weights.allFinite() || !std::isfinite(loss.offset)) throw ValidationError("CVaR: loss must be finite");
}

double CvarProgram::cvar_value(const Vector& y) const {
    const double m = tail_mass(q, samples);
    return y(gamma_col) + y.segment(first_z, samples).sum() / m;
}

CvarProgram augment_with_cvar(const PrivatizedProgram& privatized, const CvarSpec& spec, const Matrix& zeta_samples) {
    spec.check();
    const RuleLayout& layout = privatized.layout;
    if (spec.loss.weights.size() != layout.n)
        throw ValidationError("augment_with_cvar: loss must act on the n decision variables");
    if (zeta_samples.rows() < 1 || zeta_samples.cols() != layout.k)
        throw ValidationError("augment_with_cvar: samples must be S x k with S >= 1");

    const ConicProgram& src = privatized.program;
    const Index S = zeta_samples.rows();
    const Index old_cols = src.cols();
    const Index gamma = old_cols;
    const Index first_z = old_cols + 1;
    const Index cols = old_cols + 1 + S;

    ProgramBuilder builder(cols);
    const auto offsets = src.cones.offsets();
    for (std::size_t b = 0; b < src.cones.size(); ++b) {
        const auto& block = src.cones[b];
        Matrix A = Matrix::Zero(block.dim, cols);
        A.leftCols(old_cols) = src.A.middleRows(offsets[b], block.dim);
        builder.add_block(block.kind, A, src.b.segment(offsets[b], block.dim));
    }

    // z_s >= 0 and z_s + g - l(xbar + X zeta_s) >= 0
    Matrix A = Matrix::Zero(2 * S, cols);
    Vector b = Vector::Zero(2 * S);
    for (Index s = 0; s < S; ++s) {
        A(s, first_z + s) = -1.0;
        auto [constant, coeffs] = layout.linear_functional(spec.loss.weights, zeta_samples.row(s).transpose());
        const Index r = S + s;
        A.row(r).head(coeffs.size()) = coeffs;
        A(r, first_z + s) = -1.0;
        A(r, gamma) = -1.0;
        b(r) = -(constant + spec.loss.offset);
    }
    builder.add_block(ConeKind::NonNeg, A, b);

    // rule columns take the blended objective; auxiliaries (tie-break) keep theirs
    Index rule_cols = layout.n;
    for (Index i = 0; i < layout.x_col.size(); ++i)
        rule_cols = std::max<Index>(rule_cols, layout.x_col.data()[i] + 1);
    Vector c = Vector::Zero(cols);
    c.head(old_cols) = src.c;
    c.head(rule_cols) *= 1.0 - spec.blend;
    c(gamma) = spec.blend;
    const double m = tail_mass(spec.q, S);
    c.segment(first_z, S).setConstant(spec.blend / m);
    builder.set_objective(c);

    std::vector<std::string> names = src.variable_names;
    if (!names.empty()) {
        names.push_back("cvar_gamma");
        for (Index s = 0; s < S; ++s) names.push_back("cvar_z[" + std::to_string(s) + "]");
        builder.set_variable_names(names);
    }

    CvarProgram out;
    out.privatized = privatized;
    out.privatized.program = builder.build();
    out.privatized.layout.columns = cols;
    out.gamma_col = gamma;
    out.first_z = first_z;
    out.samples = S;
    out.q = spec.q;
    return out;
}

ConicProgram freeze_rule(const ConicProgram& program, const RuleLayout& layout, const DecisionRule& rule) {
    if (rule.xbar.size() != layout.n || rule.X.rows() != layout.n || rule.X.cols() != layout.k)
        throw ValidationError("freeze_rule: rule shape does not match the layout");
    std::vector<std::pair<Index, double>> pins;
    for (Index i = 0; i < layout.n; ++i) pins.emplace_back(i, rule.xbar(i));
    for (Index i = 0; i < layout.n; ++i)
        for (Index j = 0; j < layout.k; ++j)
            if (layout.x_col(i, j) >= 0) pins.emplace_back(layout.x_col(i, j), rule.X(i, j));

    ProgramBuilder builder(program.cols());
    Matrix A = Matrix::Zero(static_cast<Index>(pins.size()), program.cols());
    Vector b(A.rows());
    for (std::size_t p = 0; p < pins.size(); ++p) {
        A(static_cast<Index>(p), pins[p].first) = 1.0;
        b(static_cast<Index>(p)) = pins[p].second;
    }
    builder.add_block(ConeKind::Zero, A, b);
    // blocks over rule columns only are settled by the pins
    std::vector<bool> is_rule(static_cast<std::size_t>(program.cols()), false);
    for (const auto& pin : pins) is_rule[static_cast<std::size_t>(pin.first)] = true;
    const auto offsets = program.cones.offsets();
    for (std::size_t k = 0; k < program.cones.size(); ++k) {
        const Matrix rows = program.A.middleRows(offsets[k], program.cones[k].dim);
        bool touches_free = false;
        for (Index col = 0; col < rows.cols() && !touches_free; ++col)
            touches_free = !is_rule[static_cast<std::size_t>(col)] && rows.col(col).cwiseAbs().maxCoeff() > 0.0;
        if (touches_free)
            builder.add_block(program.cones[k].kind, rows, program.b.segment(offsets[k], program.cones[k].dim));
    }
    builder.set_objective(program.c);
    if (!program.variable_names.empty()) builder.set_variable_names(program.variable_names);
    return builder.build();
}

}  // namespace dpconic
