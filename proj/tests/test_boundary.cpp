#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bfmon/boundary.hpp"

using namespace bfmon;

namespace {

SufficientStats stats_of(double n, double mean) {
    return SufficientStats{static_cast<long long>(n), mean * n, mean * mean * n};
}

} // namespace

TEST_CASE("nhst_boundary") {
    CHECK(nhst_boundary(0.05) == Catch::Approx(1.959963984540054).epsilon(1e-12));
    // alpha = 2(1 - Phi(1)) gives boundary 1
    double alpha = std::erfc(1.0 / std::sqrt(2.0));
    CHECK(nhst_boundary(alpha) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(nhst_boundary(1.0) == 0.0);
    CHECK_THROWS_AS(nhst_boundary(0.0), std::domain_error);
    CHECK_THROWS_AS(nhst_boundary(1.5), std::domain_error);
}

TEST_CASE("norm_quantile round trips through norm_cdf") {
    for (double p : {1e-8, 0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999, 1.0 - 1e-8})
        CHECK(norm_cdf(norm_quantile(p)) == Catch::Approx(p).epsilon(1e-12));
}

TEST_CASE("bayes_precise_boundary: frozen example and BF round trip") {
    CHECK(bayes_precise_boundary(100, 0.2, 9.0) ==
          Catch::Approx(0.1 * 10.0 + std::log(9.0) / 0.2 / 10.0).epsilon(1e-14));
    CHECK(bayes_precise_boundary(100, 0.2, 9.0) == Catch::Approx(2.0986122886681098));
    // k=1: the midpoint classification line
    CHECK(bayes_precise_boundary(400, 0.2, 1.0) == Catch::Approx(0.1 * 20.0));
    CHECK_THROWS_AS(bayes_precise_boundary(100, 0.0, 9.0), std::domain_error);

    // evaluating the BF with the mean sitting exactly on the boundary gives k
    for (long long n : {1LL, 10LL, 100LL, 10000LL}) {
        for (double k : {1.0, 2.0, 9.0, 100.0}) {
            double b = bayes_precise_boundary(n, 0.2, k);
            double mean = b / std::sqrt(static_cast<double>(n));
            CHECK(log_bf_precise(static_cast<double>(n), mean, 0.2) ==
                  Catch::Approx(std::log(k)).margin(1e-10));
        }
    }
}

TEST_CASE("bayes_composite_boundary: BF round trip") {
    for (long long n : {1LL, 10LL, 1000LL, 100000LL}) {
        for (double v_sq : {0.001, 0.01, 1.0}) {
            for (double k : {1.0, 9.0, 50.0}) {
                auto b = bayes_composite_boundary(n, v_sq, k);
                REQUIRE(b.has_value());
                double mean = *b / std::sqrt(static_cast<double>(n));
                CHECK(log_bf_composite(static_cast<double>(n), mean, v_sq) ==
                      Catch::Approx(std::log(k)).margin(1e-10));
            }
        }
    }
    // k below the composite BF's minimum: no real boundary
    CHECK_FALSE(bayes_composite_boundary(100, 0.01, 0.1).has_value());
}

TEST_CASE("boundary asymptotics") {
    // precise: boundary / sqrt(n) -> |delta|/2
    double r6 = bayes_precise_boundary(1000000, 0.2, 9.0) / std::sqrt(1e6);
    CHECK(r6 == Catch::Approx(0.1).epsilon(0.01));
    // increasing in n past the turning point 2 ln k / delta^2
    long long turn = static_cast<long long>(std::ceil(2.0 * std::log(9.0) / 0.04));
    double prev = bayes_precise_boundary(turn, 0.2, 9.0);
    for (long long n = turn + 1; n < turn + 50; ++n) {
        double cur = bayes_precise_boundary(n, 0.2, 9.0);
        CHECK(cur > prev);
        prev = cur;
    }

    // composite: boundary^2 / ln(n v_sq) -> 1
    double b = *bayes_composite_boundary(100000000, 1.0, 1.0);
    CHECK(b * b / std::log(1e8) == Catch::Approx(1.0).epsilon(0.05));
    // boundary / sqrt(ln n) settles: < 5% change between 1e7 and 1e8
    double a7 = *bayes_composite_boundary(10000000, 0.01, 9.0) / std::sqrt(std::log(1e7));
    double a8 = *bayes_composite_boundary(100000000, 0.01, 9.0) / std::sqrt(std::log(1e8));
    CHECK(std::fabs(a8 / a7 - 1.0) < 0.05);

    // hierarchy at large n: O(1) < O(sqrt(log n)) < O(sqrt(n))
    long long big = 1000000;
    CHECK(nhst_boundary(0.05) < *bayes_composite_boundary(big, 0.01, 9.0));
    CHECK(*bayes_composite_boundary(big, 0.01, 9.0) < bayes_precise_boundary(big, 0.2, 9.0));
}

TEST_CASE("msprt log LR is the composite log BF") {
    for (double mean : {-0.3, 0.0, 0.15})
        for (double v_sq : {0.01, 0.5}) {
            auto s = stats_of(500, mean);
            CHECK(msprt_log_lr(s, v_sq) == log_bf_composite(s, v_sq));
        }
    // prior odds shift the rejection bar: FDR 0.1 at prior odds 0.25 needs BF 36
    double required_bf = 9.0 / 0.25;
    CHECK(required_bf == Catch::Approx(36.0));
    CHECK(required_bf > 1.0 / 0.05); // vs the mSPRT threshold 20 at alpha=0.05
}

TEST_CASE("boundary table CSV") {
    auto table = boundary_table({10, 100, 1000}, 0.05, 0.2, 0.01, 9.0);
    REQUIRE(table.size() == 3);
    auto csv = boundary_table_to_csv(table);
    CHECK(csv.rfind("n,nhst,bayes_precise,bayes_composite\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
