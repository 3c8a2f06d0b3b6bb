#pragma once

// Batch experiments: a JSON config names an application, the strategies to
// compare and a parameter grid; every (point, strategy) pair becomes one CSV
// row carrying the parameters that produced it.
//
// Config keys (defaults in ExperimentConfig):
//   app          opf | svm | regression | ellipsoid | simple-lp
//   strategies   ["input", "output", "program"]
//   privacy      {eps: x | [..], delta, alpha: x | [..], gamma, beta, S, sensitivity}
//   chance       {method: vertex | individual, eta, beta}
//   universe     x | [..]  application scale of the dataset universe
//   cvar         {q: [..], scenarios, report_q}   opf only, program rows
//   query        {kind: weighted_sum | sum | identity, support: [..]}   opf only
//   S_mc, seed, dataset, output, options {...}

#include "dpconic/apps/metrics.hpp"
#include "dpconic/privacy.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dpconic {

struct ExperimentConfig {
    std::string app = "simple-lp";
    std::vector<Strategy> strategies{Strategy::Input, Strategy::Output, Strategy::Program};
    std::vector<double> eps{1.0};
    double delta = 0.0;
    std::vector<double> alpha{1.0};
    /// Sensitivity estimation: confidence gamma and risk beta; S overrides
    /// the sample-size rule when positive.
    double gamma = 0.1;
    double sens_beta = 0.1;
    Index sensitivity_samples = 0;
    /// Fixes Delta_p instead of the application default.
    std::optional<double> sensitivity;
    std::optional<ChanceMethod> method;
    double eta = 0.05;
    double chance_beta = 0.01;
    /// Universe scale per point: SVM displacement radius, regression
    /// relative range (wind) or circle scale (cubic), ellipsoid b range.
    std::vector<double> universe;
    std::vector<double> cvar_q;
    Index cvar_scenarios = 100;
    double cvar_report_q = 0.95;
    nlohmann::json query;
    Index draws = 1000;
    std::uint64_t seed = 1;
    std::string dataset;
    std::filesystem::path output;
    nlohmann::json options = nlohmann::json::object();

    /// Ranges and names; ValidationError otherwise.
    void check() const;
};

/// Relative paths in `dataset` and `output` resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

struct ExperimentRow {
    std::string app;
    std::string dataset;
    Strategy strategy = Strategy::Program;
    Index point = 0;
    double eps = 0.0;
    double delta = 0.0;
    double alpha = 0.0;
    double universe = 0.0;
    double eta = 0.0;
    double q = 0.0;
    Index draws = 0;
    std::uint64_t seed = 0;
    double sensitivity = 0.0;
    double loss_mean = 0.0;
    double loss_cvar = 0.0;
    double infeasibility = 0.0;
    double var = 0.0;
    std::string status = "ok";
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;
    nlohmann::json manifest;
};

struct ExperimentAdjacency {
    AdjacencyModel model;
    /// Norm order of the application's sensitivity (1 Laplace, 2 Gaussian).
    int p;
};

/// The dataset adjacency of the configured application at one grid point:
/// `alpha` for opf and simple-lp, `universe` for the others (NaN picks the
/// application default).
ExperimentAdjacency experiment_adjacency(const ExperimentConfig& config, double alpha, double universe);

/// Runs every grid point (in parallel, each on its own seed) and every
/// strategy at it. Solver failures and infeasible programs become rows with
/// a status; configuration errors throw ValidationError before any work.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Header plus one line per row, LF endings.
std::string rows_to_csv(const std::vector<ExperimentRow>& rows);

/// Writes results.csv and manifest.json under config.output (created when
/// missing) and returns the CSV path.
std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& output);

}  // namespace dpconic
