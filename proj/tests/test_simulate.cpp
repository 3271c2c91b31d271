#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bfmon/simulate.hpp"

using namespace bfmon;

TEST_CASE("generate_path: law-of-large-numbers sanity") {
    std::vector<double> path;
    Rng rng(11);

    double effect = generate_path(Truth::H0, Precise{0.2}, 100000, rng, path);
    CHECK(effect == 0.0);
    double mean = 0.0;
    for (double x : path) mean += x;
    mean /= static_cast<double>(path.size());
    CHECK(std::fabs(mean) < 0.02);

    effect = generate_path(Truth::H1, Precise{0.2}, 100000, rng, path);
    CHECK(effect == 0.2);
    mean = 0.0;
    for (double x : path) mean += x;
    mean /= static_cast<double>(path.size());
    CHECK(std::fabs(mean - 0.2) < 0.02);
}

TEST_CASE("generate_path: composite effect draws have the right spread") {
    std::vector<double> path;
    double sum = 0.0, sum_sq = 0.0;
    const int draws = 50000;
    for (int i = 0; i < draws; ++i) {
        Rng rng = Rng::substream(21, static_cast<std::uint64_t>(i));
        double effect = generate_path(Truth::H1, CompositeNormal{0.01}, 1, rng, path);
        sum += effect;
        sum_sq += effect * effect;
    }
    double var = sum_sq / draws - (sum / draws) * (sum / draws);
    CHECK(std::sqrt(var) == Catch::Approx(0.1).epsilon(0.03));
}

TEST_CASE("calibration histogram: bin placement and ratio markers") {
    std::vector<RunRecord> records;
    RunRecord r;
    r.truth = Truth::H1;
    r.log_bf_at_stop = 0.05;
    records.push_back(r);
    records.push_back(r);
    r.truth = Truth::H0;
    records.push_back(r);
    r.log_bf_at_stop = 100.0; // overflow bin
    records.push_back(r);

    auto edges = std::vector<double>{-1.0, 0.0, 0.1, 1.0};
    auto bins = calibration_histogram(records, edges);
    REQUIRE(bins.size() == 5); // 3 interior + 2 overflow
    CHECK(bins[2].count_h1 == 2);
    CHECK(bins[2].count_h0 == 1);
    CHECK(bins[2].observed_ratio == Catch::Approx(2.0));
    // empty bin: undefined marker
    CHECK(bins[1].count_h1 == 0);
    CHECK(bins[1].count_h0 == 0);
    CHECK(std::isnan(bins[1].observed_ratio));
    // h1-empty, h0-nonempty overflow bin: ratio 0; reverse gives inf
    CHECK(bins[4].count_h0 == 1);
    CHECK(std::isinf(bins[4].observed_ratio) == false);
    CHECK(bins[4].observed_ratio == 0.0);

    CHECK_THROWS_AS(calibration_histogram(records, std::vector<double>{1.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("run_study: fixed-horizon metrics match the closed form") {
    // reject iff BF_N > 9 iff mean > delta/2 + ln9/(N delta); under H0 the
    // z-statistic is standard normal, so Type-I ~ 1 - Phi(2.0986)
    StudyConfig cfg;
    cfg.runs_per_hypothesis = 20000;
    cfg.horizon = 100;
    cfg.model = Precise{0.2};
    cfg.rule = StoppingRule::fixed_horizon(100);
    cfg.reject_threshold_k = 9.0;
    cfg.seed = 101;
    auto report = run_study(cfg);
    CHECK(report.metrics.type_i_error == Catch::Approx(0.0179).margin(0.004));
    CHECK(report.metrics.power == Catch::Approx(0.465).margin(0.012));
    CHECK(report.metrics.early_stop_rate_h0 == 0.0);
    CHECK(report.metrics.early_stop_rate_h1 == 0.0);
    CHECK(std::isnan(report.metrics.mean_stop_time_early));
    long long total = 0;
    for (const auto& b : report.calibration) total += b.count_h0 + b.count_h1;
    CHECK(total == 2 * cfg.runs_per_hypothesis);
}

TEST_CASE("run_study: identical seed gives identical report at any thread count") {
    StudyConfig cfg;
    cfg.runs_per_hypothesis = 2000;
    cfg.horizon = 100;
    cfg.model = Precise{0.2};
    cfg.rule = StoppingRule::bf_two_sided(9.0);
    cfg.seed = 7;
    cfg.threads = 1;
    auto a = run_study(cfg);
    cfg.threads = 8;
    auto b = run_study(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].stop_time == b.records[i].stop_time);
        CHECK(a.records[i].log_bf_at_stop == b.records[i].log_bf_at_stop);
    }
    CHECK(metrics_to_json(a.metrics).dump() == metrics_to_json(b.metrics).dump());
}

TEST_CASE("run_study: one-sided stopping inflates Type-I and power vs fixed horizon") {
    StudyConfig fixed;
    fixed.runs_per_hypothesis = 10000;
    fixed.horizon = 100;
    fixed.model = Precise{0.2};
    fixed.rule = StoppingRule::fixed_horizon(100);
    fixed.seed = 31;
    auto rf = run_study(fixed);

    StudyConfig stop = fixed;
    stop.rule = StoppingRule::bf_upper(9.0);
    auto rs = run_study(stop);

    CHECK(rs.metrics.type_i_error > rf.metrics.type_i_error);
    CHECK(rs.metrics.power > rf.metrics.power);
    CHECK(rs.metrics.early_stop_rate_h1 > 0.5);
}

TEST_CASE("run_study: two-sided FDR stays below the 1/(K+1) bound") {
    StudyConfig cfg;
    cfg.runs_per_hypothesis = 20000;
    cfg.horizon = 100;
    cfg.model = Precise{0.2};
    cfg.rule = StoppingRule::bf_two_sided(9.0);
    cfg.reject_threshold_k = 9.0;
    cfg.seed = 13;
    auto report = run_study(cfg);
    CHECK(report.metrics.fdr <= 0.1 + 0.01);
}

TEST_CASE("run_study: undefined FDR uses a marker, not zero") {
    StudyConfig cfg;
    cfg.runs_per_hypothesis = 50;
    cfg.horizon = 5;
    cfg.model = Precise{0.2};
    cfg.rule = StoppingRule::fixed_horizon(5);
    cfg.reject_threshold_k = 1e6; // nothing can clear this at horizon 5
    cfg.seed = 1;
    auto report = run_study(cfg);
    CHECK(std::isnan(report.metrics.fdr));
    auto j = metrics_to_json(report.metrics);
    CHECK(j["fdr"].is_null());
    CHECK(j["fdr_defined"] == false);
}

TEST_CASE("calibration CSV has the documented schema") {
    StudyConfig cfg;
    cfg.runs_per_hypothesis = 100;
    cfg.horizon = 20;
    cfg.model = Precise{0.2};
    cfg.rule = StoppingRule::fixed_horizon(20);
    cfg.seed = 3;
    auto report = run_study(cfg);
    auto csv = calibration_to_csv(report.calibration);
    CHECK(csv.rfind("bin_lo,bin_hi,bin_center_bf,count_h1,count_h0,observed_ratio\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          static_cast<long>(report.calibration.size()) + 1);
}
