#pragma once

// Soft-margin linear SVM
//   min lambda |w|^2 + (1/m) 1'z  s.t.  y_i (w'x_i - b) >= 1 - z_i,  z >= 0
// in standard form with variables (w, b, z, u), u the epigraph of lambda |w|^2.

#include "dpconic/apps/metrics.hpp"
#include "dpconic/ldr.hpp"
#include "dpconic/privacy.hpp"

#include <optional>

namespace dpconic {

struct LabeledPoints {
    /// m x n features.
    Matrix X;
    /// +1 / -1.
    Vector y;
    double lambda = 1e-5;

    Index m() const { return X.rows(); }
    Index n() const { return X.cols(); }
    void check() const;
};

struct MinMaxScaler {
    Eigen::RowVectorXd lo, hi;

    static MinMaxScaler fit(const Matrix& X);
    Matrix apply(const Matrix& X) const;
};

/// Class +1 from N((1,1), 0.5 I), class -1 from N((3,3), 0.5 I), alternating
/// labels, raw (unnormalized) features.
LabeledPoints synthetic_svm_data(Index m, std::uint64_t seed, double lambda = 1e-5);

struct SvmColumns {
    Index n, m;
    Index w(Index j) const { return j; }
    Index b() const { return n; }
    Index z(Index i) const { return n + 1 + i; }
    Index u() const { return n + 1 + m; }
    Index total() const { return n + 2 + m; }
};

/// Blocks: RSOC (u, 1/2, sqrt(lambda) w), NonNeg margins, NonNeg z.
ConicProgram build_svm(const LabeledPoints& data);

/// sign(w'x - b) with ties going to +1.
int classify(const Vector& w, double b, const Vector& x);
double accuracy(const Vector& w, double b, const Matrix& X, const Vector& y);

/// Universe of datasets: point i is x_i + r (sin t, cos t) with r ~ U(0,
/// radius), t ~ U(0, 2 pi) (first two features). Every pair is adjacent
/// (alpha = infinity). The query is (w*, b*).
AdjacencyModel svm_universe(const LabeledPoints& data, double radius = 0.05);

struct PrivateSvm {
    ConicProgram program;
    Solution base;
    PrivacyParams privacy;
    NoiseSpec noise;
    PrivatizedProgram privatized;
    DecisionRule rule;
    /// (w, b) released as (wbar, bbar) + zeta.
    QueryRelease release;
};

/// Estimates Delta_1 over svm_universe(data, radius) with S = sensitivity_sample_size(gamma,
/// beta) unless `delta1` is given, calibrates Laplace noise of dimension n + 1
/// and solves the chance-constrained counterpart with the identity query on
/// (w, b). The |w|^2 term is replaced by its expectation.
PrivateSvm privatize_svm(const LabeledPoints& data, const PrivacyParams& privacy, const ChanceSpec& chance,
                         std::uint64_t seed, std::optional<double> delta1 = std::nullopt, double radius = 0.05);

/// Test accuracy of `draws` released hyperplanes. Loss is the accuracy drop
/// against the non-private hyperplane; infeasibility the share of draws whose
/// perturbed (w, b, z) violates a margin or slack row. Input perturbation is
/// not defined here (the training points stay unchanged).
StrategyResult evaluate_svm(const PrivateSvm& priv, Strategy strategy, const LabeledPoints& test, Index draws,
                            std::uint64_t seed, Vector* accuracies = nullptr);

}  // namespace dpconic
