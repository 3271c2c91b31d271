#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bfmon/core.hpp"
#include "bfmon/rng.hpp"
#include "bfmon/serde.hpp"
#include "bfmon/stopping.hpp"

namespace bfmon {

enum class Truth { H0, H1 };

inline const char* to_string(Truth t) { return t == Truth::H0 ? "h0" : "h1"; }

// 40 uniform bins in log-BF space over [ln(1/64), ln 64]; run_study adds the
// two overflow bins at histogram time.
inline std::vector<double> default_bin_edges(int n_bins = 40) {
    const double lo = std::log(1.0 / 64.0);
    const double hi = std::log(64.0);
    std::vector<double> edges(static_cast<std::size_t>(n_bins) + 1);
    for (int i = 0; i <= n_bins; ++i)
        edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n_bins;
    return edges;
}

struct StudyConfig {
    long long runs_per_hypothesis = 50000;
    long long horizon = 100;
    AlternativeModel model = Precise{0.2};
    PriorOdds prior{1.0};
    StoppingRule rule = StoppingRule::fixed_horizon(100);
    double reject_threshold_k = 9.0;
    std::uint64_t seed = 0;
    long long check_every = 1;
    int threads = 1;
    std::vector<double> bin_edges = default_bin_edges();
};

struct RunRecord {
    Truth truth = Truth::H0;
    double drawn_effect = 0.0;
    long long stop_time = 0;
    double log_bf_at_stop = 0.0;
    double post_odds_at_stop = 0.0;
    Decision decision = Decision::InconclusiveAtHorizon;
};

struct CalibrationBin {
    double lo = 0.0, hi = 0.0;        // log-BF edges; +-inf on the overflow bins
    double center_log_bf = 0.0;       // NaN for overflow bins
    long long count_h1 = 0, count_h0 = 0;
    double observed_ratio = 0.0;      // NaN for 0/0, inf for x/0
};

struct StudyMetrics {
    double type_i_error = 0.0;
    double power = 0.0;
    double fdr = std::numeric_limits<double>::quiet_NaN(); // NaN when no rejections
    double early_stop_rate_h1 = 0.0;
    double early_stop_rate_h0 = 0.0;
    double mean_stop_time_early = std::numeric_limits<double>::quiet_NaN();
    long long rejections_h0 = 0;
    long long rejections_h1 = 0;
};

struct StudyReport {
    std::vector<RunRecord> records;
    StudyMetrics metrics;
    std::vector<CalibrationBin> calibration;
};

// Draws one run's observation path. Under H0 the stream is i.i.d. N(0,1);
// under a precise H1 it is N(delta,1); under a composite H1 the effect is
// drawn from N(0, V^2) first and then held fixed for the whole path.
inline double generate_path(Truth truth, const AlternativeModel& model, long long horizon,
                            Rng& rng, std::vector<double>& out) {
    validate(model);
    double effect = 0.0;
    if (truth == Truth::H1) {
        if (const auto* p = std::get_if<Precise>(&model)) {
            effect = p->delta;
        } else {
            effect = rng.next_normal(0.0, std::sqrt(std::get<CompositeNormal>(model).v_sq));
        }
    }
    out.resize(static_cast<std::size_t>(horizon));
    for (auto& x : out) x = effect + rng.next_normal();
    return effect;
}

inline std::vector<CalibrationBin> calibration_histogram(const std::vector<RunRecord>& records,
                                                         const std::vector<double>& edges) {
    if (edges.size() < 2) throw std::invalid_argument("calibration: need at least two bin edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw std::invalid_argument("calibration: bin edges must be strictly increasing");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<CalibrationBin> bins;
    bins.push_back({-inf, edges.front(), nan, 0, 0, nan});
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        bins.push_back({edges[i], edges[i + 1], 0.5 * (edges[i] + edges[i + 1]), 0, 0, nan});
    bins.push_back({edges.back(), inf, nan, 0, 0, nan});

    for (const auto& rec : records) {
        const double x = rec.log_bf_at_stop;
        std::size_t idx;
        if (x < edges.front()) {
            idx = 0;
        } else if (x >= edges.back()) {
            idx = bins.size() - 1;
        } else {
            idx = 1 + static_cast<std::size_t>(
                          std::upper_bound(edges.begin(), edges.end(), x) - edges.begin() - 1);
        }
        if (rec.truth == Truth::H1)
            ++bins[idx].count_h1;
        else
            ++bins[idx].count_h0;
    }
    for (auto& b : bins) {
        if (b.count_h0 > 0)
            b.observed_ratio = static_cast<double>(b.count_h1) / static_cast<double>(b.count_h0);
        else
            b.observed_ratio = b.count_h1 > 0 ? inf : nan;
    }
    return bins;
}

inline StudyMetrics compute_metrics(const std::vector<RunRecord>& records, double reject_k,
                                    long long horizon) {
    StudyMetrics m;
    long long n_h0 = 0, n_h1 = 0, early_h0 = 0, early_h1 = 0, early_total = 0;
    double early_time_sum = 0.0;
    for (const auto& r : records) {
        const bool reject = r.post_odds_at_stop > reject_k;
        const bool early = r.stop_time < horizon;
        if (r.truth == Truth::H0) {
            ++n_h0;
            if (reject) ++m.rejections_h0;
            if (early) ++early_h0;
        } else {
            ++n_h1;
            if (reject) ++m.rejections_h1;
            if (early) ++early_h1;
        }
        if (early) {
            ++early_total;
            early_time_sum += static_cast<double>(r.stop_time);
        }
    }
    if (n_h0 > 0) {
        m.type_i_error = static_cast<double>(m.rejections_h0) / static_cast<double>(n_h0);
        m.early_stop_rate_h0 = static_cast<double>(early_h0) / static_cast<double>(n_h0);
    }
    if (n_h1 > 0) {
        m.power = static_cast<double>(m.rejections_h1) / static_cast<double>(n_h1);
        m.early_stop_rate_h1 = static_cast<double>(early_h1) / static_cast<double>(n_h1);
    }
    const long long total_rej = m.rejections_h0 + m.rejections_h1;
    if (total_rej > 0)
        m.fdr = static_cast<double>(m.rejections_h0) / static_cast<double>(total_rej);
    if (early_total > 0) m.mean_stop_time_early = early_time_sum / static_cast<double>(early_total);
    return m;
}

// Runs 2 * runs_per_hypothesis monitored paths (equal H1/H0 split). Run i
// uses RNG substream (seed, i), so the report is identical for any thread
// count; aggregation is an ordered reduction over run index.
inline StudyReport run_study(const StudyConfig& cfg) {
    if (cfg.runs_per_hypothesis < 1)
        throw std::invalid_argument("run_study: runs_per_hypothesis must be >= 1");
    if (cfg.horizon < 1) throw std::invalid_argument("run_study: horizon must be >= 1");
    if (!(cfg.reject_threshold_k > 1.0))
        throw std::invalid_argument("run_study: reject_threshold_k must be > 1");
    validate(cfg.model);

    const long long total = 2 * cfg.runs_per_hypothesis;
    StudyReport report;
    report.records.resize(static_cast<std::size_t>(total));

    auto worker = [&](long long begin, long long end) {
        std::vector<double> path;
        for (long long i = begin; i < end; ++i) {
            const Truth truth = i < cfg.runs_per_hypothesis ? Truth::H1 : Truth::H0;
            Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i));
            RunRecord rec;
            rec.truth = truth;
            rec.drawn_effect = generate_path(truth, cfg.model, cfg.horizon, rng, path);
            MonitorResult mr = run_monitor(path, cfg.rule, cfg.model, cfg.prior, cfg.horizon,
                                           cfg.check_every);
            rec.stop_time = mr.stop_time;
            rec.log_bf_at_stop = mr.log_bf_at_stop;
            rec.post_odds_at_stop = mr.post_odds_at_stop;
            rec.decision = mr.decision;
            report.records[static_cast<std::size_t>(i)] = rec;
        }
    };

    const int n_threads = std::max(1, cfg.threads);
    if (n_threads == 1 || total < 2 * n_threads) {
        worker(0, total);
    } else {
        std::vector<std::thread> pool;
        const long long chunk = (total + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const long long begin = t * chunk;
            const long long end = std::min(total, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    report.metrics = compute_metrics(report.records, cfg.reject_threshold_k, cfg.horizon);
    report.calibration = calibration_histogram(report.records, cfg.bin_edges);
    return report;
}

// --- serialization ---

inline nlohmann::json metrics_to_json(const StudyMetrics& m) {
    nlohmann::json j;
    j["type_i_error"] = m.type_i_error;
    j["power"] = m.power;
    if (std::isnan(m.fdr)) {
        j["fdr"] = nullptr;
        j["fdr_defined"] = false;
    } else {
        j["fdr"] = m.fdr;
        j["fdr_defined"] = true;
    }
    j["early_stop_rate_h1"] = m.early_stop_rate_h1;
    j["early_stop_rate_h0"] = m.early_stop_rate_h0;
    if (std::isnan(m.mean_stop_time_early))
        j["mean_stop_time_early"] = nullptr;
    else
        j["mean_stop_time_early"] = m.mean_stop_time_early;
    j["rejections_h0"] = m.rejections_h0;
    j["rejections_h1"] = m.rejections_h1;
    return j;
}

inline nlohmann::json calibration_to_json(const std::vector<CalibrationBin>& bins) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bins) {
        nlohmann::json j;
        j["bin_lo"] = std::isfinite(b.lo) ? nlohmann::json(b.lo) : nlohmann::json(nullptr);
        j["bin_hi"] = std::isfinite(b.hi) ? nlohmann::json(b.hi) : nlohmann::json(nullptr);
        j["bin_center_log_bf"] =
            std::isnan(b.center_log_bf) ? nlohmann::json(nullptr) : nlohmann::json(b.center_log_bf);
        j["count_h1"] = b.count_h1;
        j["count_h0"] = b.count_h0;
        if (std::isnan(b.observed_ratio))
            j["observed_ratio"] = "undefined";
        else if (std::isinf(b.observed_ratio))
            j["observed_ratio"] = "inf";
        else
            j["observed_ratio"] = b.observed_ratio;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::string calibration_to_csv(const std::vector<CalibrationBin>& bins) {
    std::ostringstream os;
    os.precision(17);
    os << "bin_lo,bin_hi,bin_center_bf,count_h1,count_h0,observed_ratio\n";
    for (const auto& b : bins) {
        if (std::isfinite(b.lo)) os << b.lo;
        else os << "-Inf";
        os << ',';
        if (std::isfinite(b.hi)) os << b.hi;
        else os << "Inf";
        os << ',';
        if (std::isnan(b.center_log_bf)) os << "NA";
        else os << std::exp(b.center_log_bf);
        os << ',' << b.count_h1 << ',' << b.count_h0 << ',';
        if (std::isnan(b.observed_ratio)) os << "NA";
        else if (std::isinf(b.observed_ratio)) os << "Inf";
        else os << b.observed_ratio;
        os << '\n';
    }
    return os.str();
}

inline nlohmann::json record_to_json(const RunRecord& r) {
    return nlohmann::json{{"truth", to_string(r.truth)},
                          {"drawn_effect", r.drawn_effect},
                          {"stop_time", r.stop_time},
                          {"log_bf_at_stop", r.log_bf_at_stop},
                          {"post_odds_at_stop", r.post_odds_at_stop},
                          {"decision", to_string(r.decision)}};
}

inline nlohmann::json report_to_json(const StudyReport& report, bool include_records = false) {
    nlohmann::json j;
    j["metrics"] = metrics_to_json(report.metrics);
    j["calibration"] = calibration_to_json(report.calibration);
    if (include_records) {
        nlohmann::json recs = nlohmann::json::array();
        for (const auto& r : report.records) recs.push_back(record_to_json(r));
        j["records"] = std::move(recs);
    }
    return j;
}

} // namespace bfmon
