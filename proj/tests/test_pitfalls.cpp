#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bfmon/pitfalls.hpp"

using namespace bfmon;

namespace {

StudyConfig small_cfg(std::uint64_t seed, long long runs = 10000, long long horizon = 100) {
    StudyConfig cfg;
    cfg.runs_per_hypothesis = runs;
    cfg.horizon = horizon;
    cfg.model = Precise{0.2};
    cfg.rule = StoppingRule::fixed_horizon(horizon);
    cfg.reject_threshold_k = 9.0;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("re-analysis inflates FDR past the proper procedure") {
    auto cfg = small_cfg(201, 20000);
    auto bad = demo_reanalysis(cfg);
    auto proper = run_study(cfg);
    REQUIRE(!std::isnan(bad.observed_fdr));
    REQUIRE(!std::isnan(proper.metrics.fdr));
    CHECK(bad.observed_fdr > proper.metrics.fdr);
    CHECK(bad.observed_fdr > bad.nominal_fdr - 0.02); // proper fixed horizon sits well below
}

TEST_CASE("re-analysis with stage 2 disabled equals the fixed-horizon study") {
    auto cfg = small_cfg(17, 2000);
    auto rep = demo_reanalysis(cfg, /*enable_stage2=*/false);
    auto proper = run_study(cfg);
    REQUIRE(rep.records.size() == proper.records.size());
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        CHECK(rep.records[i].stop_time == proper.records[i].stop_time);
        CHECK(rep.records[i].log_bf_at_stop == proper.records[i].log_bf_at_stop);
    }
}

TEST_CASE("optimal stopping understates evidence in the calibration table") {
    auto cfg = small_cfg(301, 20000);
    auto rep = demo_optimal_stopping(cfg);
    // bins with real mass near BF = 9 show observed ratios well below the BF
    int checked = 0;
    for (const auto& b : rep.calibration) {
        if (std::isnan(b.center_log_bf)) continue;
        if (b.count_h1 + b.count_h0 < 1000) continue;
        double bf = std::exp(b.center_log_bf);
        if (bf < 4.0 || bf > 20.0) continue;
        CHECK(b.observed_ratio < 0.8 * bf);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("optimal stopping at horizon 1 reduces to the fixed-horizon study") {
    auto cfg = small_cfg(5, 3000, 1);
    auto rep = demo_optimal_stopping(cfg);
    auto proper = run_study(cfg);
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        CHECK(rep.records[i].stop_time == 1);
        CHECK(rep.records[i].log_bf_at_stop == proper.records[i].log_bf_at_stop);
    }
}

TEST_CASE("continuous testing until win: bad procedure wins too often under H0") {
    auto rep = demo_continuous_until_win(20, 100, 9.0, Precise{0.2}, Truth::H0, 71, 10000);
    // single proper test rejects ~1.8% of the time; iterating drives it up
    CHECK(rep.bad_win_rate > 2.0 * rep.proper_win_rate);
    CHECK(rep.bad_win_rate > 0.1);
    // corrected evidence shrinks: cumulative median log BF negative and falling
    REQUIRE(rep.corrected_median_log_bf.size() == 20);
    CHECK(rep.corrected_median_log_bf.back() < 0.0);
    CHECK(rep.corrected_median_log_bf.back() < rep.corrected_median_log_bf.front());
}

TEST_CASE("continuous testing until win grows with the iteration count") {
    auto r5 = demo_continuous_until_win(5, 100, 9.0, Precise{0.2}, Truth::H0, 71, 5000);
    auto r20 = demo_continuous_until_win(20, 100, 9.0, Precise{0.2}, Truth::H0, 71, 5000);
    CHECK(r20.bad_win_rate > r5.bad_win_rate);
}

TEST_CASE("one iteration: both procedures coincide with a single test") {
    auto rep = demo_continuous_until_win(1, 100, 9.0, Precise{0.2}, Truth::H0, 11, 5000);
    CHECK(rep.bad_win_rate == rep.proper_win_rate);
}

TEST_CASE("pitfall report JSON carries the documented fields") {
    auto rep = demo_continuous_until_win(3, 50, 9.0, Precise{0.2}, Truth::H0, 1, 500);
    auto j = pitfall_report_to_json(rep);
    CHECK(j["practice"] == "continuous_until_win");
    CHECK(j.contains("nominal_fdr"));
    CHECK(j.contains("bad_win_rate"));
    CHECK(j["corrected_median_log_bf"].size() == 3);
}
