#include <doctest.h>

#include "dpconic/csv.hpp"
#include "dpconic/errors.hpp"
#include "dpconic/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

using namespace dpconic;
using nlohmann::json;

namespace {

const ExperimentRow& find_row(const std::vector<ExperimentRow>& rows, Strategy s, Index point = 0) {
    for (const auto& r : rows)
        if (r.strategy == s && r.point == point) return r;
    FAIL("row not found");
    return rows.front();
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

TEST_CASE("numeric csv parsing") {
    const auto t = parse_numeric_csv("x, y\n1,2.5\n\n-3e2,4\n");
    REQUIRE(t.header.size() == 2);
    CHECK(t.header[1] == "y");
    CHECK(t.values.rows() == 2);
    CHECK(t.values(1, 0) == -300.0);
    CHECK(t.column("y") == 1);
    CHECK_THROWS_AS(t.column("z"), ValidationError);
    CHECK_THROWS_AS(parse_numeric_csv("x,y\n1\n"), ValidationError);
    CHECK_THROWS_AS(parse_numeric_csv("x,y\n1,abc\n"), ValidationError);
    CHECK_THROWS_AS(parse_numeric_csv("x,y\n1,\n"), ValidationError);
    CHECK_THROWS_AS(parse_numeric_csv(""), ValidationError);
    CHECK_THROWS_AS(read_numeric_csv("/nonexistent/file.csv"), ValidationError);
}

TEST_CASE("number formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 0.0}) {
        const std::string s = format_number(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(csv_cell("plain") == "plain");
    CHECK(csv_cell("a,b") == "\"a,b\"");
    CHECK(csv_cell("say \"x\"") == "\"say \"\"x\"\"\"");
}

TEST_CASE("config parsing") {
    const json doc = {{"app", "opf"},
                      {"privacy", {{"eps", {0.5, 1.0}}, {"alpha", 3}}},
                      {"chance", {{"method", "individual"}, {"eta", 0.02}}},
                      {"S_mc", 50},
                      {"seed", 9}};
    const auto cfg = experiment_config_from_json(doc);
    CHECK(cfg.app == "opf");
    CHECK(cfg.eps == std::vector<double>{0.5, 1.0});
    CHECK(cfg.alpha == std::vector<double>{3.0});
    CHECK(cfg.method == ChanceMethod::Individual);
    CHECK(cfg.eta == 0.02);
    CHECK(cfg.draws == 50);
    CHECK(cfg.seed == 9);

    const auto again = experiment_config_from_json(experiment_config_to_json(cfg));
    CHECK(experiment_config_to_json(again) == experiment_config_to_json(cfg));

    CHECK_THROWS_AS(experiment_config_from_json({{"app", "opf"}, {"colour", 1}}), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json({{"app", "opf"}, {"privacy", {{"epsilon", 1}}}}), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json({{"app", "knapsack"}}), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json({{"app", "opf"}, {"privacy", {{"eps", -1}}}}), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json({{"app", "opf"}, {"strategies", {"magic"}}}), ValidationError);
    CHECK_THROWS_AS(experiment_config_from_json({{"app", "regression"}, {"privacy", {{"delta", 0}}}}), ValidationError);
}

TEST_CASE("simple lp experiment reproduces the infeasibility gap") {
    ExperimentConfig cfg;
    cfg.app = "simple-lp";
    cfg.alpha = {0.1};
    cfg.draws = 10000;
    cfg.seed = 4;
    const auto report = run_experiment(cfg);
    REQUIRE(report.rows.size() == 3);
    const double se = std::sqrt(0.25 / 10000.0);
    CHECK(std::abs(find_row(report.rows, Strategy::Output).infeasibility - 0.5) <= 3 * se);
    CHECK(std::abs(find_row(report.rows, Strategy::Input).infeasibility - 0.5) <= 3 * se);
    const auto& prog = find_row(report.rows, Strategy::Program);
    CHECK(prog.status == "ok");
    CHECK(prog.infeasibility <= 0.05 + 3 * std::sqrt(0.05 * 0.95 / 10000.0));
    CHECK(prog.sensitivity == doctest::Approx(0.1));

    // same config, same bytes
    CHECK(rows_to_csv(run_experiment(cfg).rows) == rows_to_csv(report.rows));
    cfg.seed = 5;
    CHECK(rows_to_csv(run_experiment(cfg).rows) != rows_to_csv(report.rows));
}

TEST_CASE("an infeasible chance program becomes status rows") {
    ExperimentConfig cfg;
    cfg.app = "simple-lp";
    cfg.alpha = {1.0};  // vertex box wider than [lower, upper]
    cfg.draws = 100;
    const auto report = run_experiment(cfg);
    for (const auto& r : report.rows) {
        CHECK(r.status == "infeasible");
        CHECK(std::isnan(r.loss_mean));
    }
}

TEST_CASE("opf experiment over an alpha grid") {
    ExperimentConfig cfg;
    cfg.app = "opf";
    cfg.dataset = "net4";
    cfg.alpha = {1.0, 3.0, 10.0};
    cfg.eta = 0.01;
    cfg.draws = 300;
    cfg.seed = 3;
    const auto report = run_experiment(cfg);
    REQUIRE(report.rows.size() == 9);
    double last = -INFINITY;
    for (Index point = 0; point < 3; ++point) {
        const auto& prog = find_row(report.rows, Strategy::Program, point);
        REQUIRE(prog.status == "ok");
        CHECK(prog.loss_mean >= last);
        last = prog.loss_mean;
        CHECK(find_row(report.rows, Strategy::Output, point).sensitivity == doctest::Approx(prog.sensitivity));
    }
    CHECK(report.manifest["points"].size() == 3);
    CHECK(report.manifest["statuses"]["ok"] == 9);
}

TEST_CASE("cvar points of one cell share a seed") {
    ExperimentConfig cfg;
    cfg.app = "opf";
    cfg.dataset = "net5";
    cfg.strategies = {Strategy::Program};
    cfg.eta = 0.05;
    cfg.query = {{"kind", "sum"}, {"support", {1, 2}}};
    cfg.cvar_q = {0.05, 0.95};
    cfg.cvar_scenarios = 100;
    cfg.draws = 500;
    const auto report = run_experiment(cfg);
    REQUIRE(report.rows.size() == 3);
    CHECK(std::isnan(report.rows[0].q));
    CHECK(report.rows[1].seed == report.rows[0].seed);
    CHECK(report.rows[2].seed == report.rows[0].seed);
    for (const auto& r : report.rows) CHECK(r.status == "ok");
    CHECK(!std::isnan(report.rows[2].var));
    CHECK(report.rows[2].loss_cvar <= report.rows[1].loss_cvar + 1e-6);
}

TEST_CASE("unsupported strategies and written reports") {
    ExperimentConfig cfg;
    cfg.app = "svm";
    cfg.delta = 0.1;
    cfg.sensitivity = 10.0;
    cfg.options = {{"train", 40}, {"test", 200}};
    cfg.draws = 20;
    const auto report = run_experiment(cfg);
    REQUIRE(report.rows.size() == 3);
    CHECK(find_row(report.rows, Strategy::Input).status == "unsupported");
    CHECK(find_row(report.rows, Strategy::Program).status == "ok");
    CHECK(std::isinf(report.rows[0].alpha));

    const auto dir = std::filesystem::temp_directory_path() / "dpconic_experiment_test";
    std::filesystem::remove_all(dir);
    const auto csv = write_report(report, dir);
    const std::string text = slurp(csv);
    CHECK(text.rfind("app,dataset,strategy,point,eps,delta,alpha,universe,eta,q,draws,seed,sensitivity,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["rows"] == 3);
    CHECK(manifest["config"]["app"] == "svm");
    std::filesystem::remove_all(dir);
}
