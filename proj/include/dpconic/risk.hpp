#pragma once

// Optimality loss of a decision rule under noise, its empirical CVaR, and the
// sample program that co-optimizes the rule with the CVaR auxiliaries.

#include "dpconic/ldr.hpp"

namespace dpconic {

/// l(x) = weights'x + offset. Loss functionals are linear by construction.
struct LinearLoss {
    Vector weights;
    double offset = 0.0;

    double operator()(const Vector& x) const { return weights.dot(x) + offset; }
    /// l(x) - l(x_ref): the optimality loss relative to x_ref.
    static LinearLoss relative_to(const Vector& weights, const Vector& x_ref);
};

struct LossSamples {
    double mean = 0.0;
    Vector samples;
};

/// Per-sample l(xbar + X zeta_s) - l(x_base) for zeta_s = sample_noise(noise,
/// seed, S) rows.
LossSamples optimality_loss(const DecisionRule& rule, const Vector& base, const Vector& loss_weights,
                            const NoiseSpec& noise, Index S, std::uint64_t seed);

/// Mean of the worst (1 - q) S losses, the last one counted fractionally:
/// the minimum over g of g + sum_s [l_s - g]^+ / ((1 - q) S).
double cvar_empirical(const Vector& losses, double q);
/// A minimizer g of that program: the ceil((1 - q) S)-th largest loss.
double var_empirical(const Vector& losses, double q);

struct CvarSpec {
    double q = 0.95;
    /// Weight of the CVaR term; the original objective keeps 1 - blend.
    /// 1 replaces it.
    double blend = 1.0;
    LinearLoss loss;

    void check() const;
};

struct CvarProgram {
    PrivatizedProgram privatized;
    Index gamma_col = 0;
    Index first_z = 0;
    Index samples = 0;
    double q = 0.0;

    /// g + sum_s z_s / ((1 - q) S) read off a solution vector.
    double cvar_value(const Vector& y) const;
};

/// Appends g (free) and z_1..z_S with z_s >= 0, z_s >= l(xbar + X zeta_s) - g
/// to the transformed program. Query equalities and chance rows stay as they
/// are.
CvarProgram augment_with_cvar(const PrivatizedProgram& privatized, const CvarSpec& spec, const Matrix& zeta_samples);

/// Adds Zero rows pinning the rule variables (xbar and free X entries) to
/// `rule` and drops the cone blocks that involve rule variables only (they
/// are constants at the pinned rule). Used to evaluate the CVaR program at a
/// given rule.
ConicProgram freeze_rule(const ConicProgram& program, const RuleLayout& layout, const DecisionRule& rule);

}  // namespace dpconic
