#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "bfmon/simulate.hpp"

namespace bfmon {

enum class Practice { Reanalysis, OptimalStopping, ContinuousUntilWin };

inline const char* to_string(Practice p) {
    switch (p) {
        case Practice::Reanalysis: return "reanalysis";
        case Practice::OptimalStopping: return "optimal_stopping";
        default: return "continuous_until_win";
    }
}

struct PitfallReport {
    Practice practice = Practice::Reanalysis;
    double nominal_fdr = 0.0;
    double observed_fdr = std::numeric_limits<double>::quiet_NaN();
    std::vector<CalibrationBin> calibration;
    std::vector<std::string> notes;
    // continuous-until-win extras
    double bad_win_rate = std::numeric_limits<double>::quiet_NaN();
    double proper_win_rate = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> corrected_median_log_bf; // cumulative, per replication
    std::vector<RunRecord> records;
};

namespace detail {

inline double fdr_of(const std::vector<RunRecord>& records, double k, long long& n_reject) {
    long long rej = 0, rej_h0 = 0;
    for (const auto& r : records) {
        if (r.post_odds_at_stop > k) {
            ++rej;
            if (r.truth == Truth::H0) ++rej_h0;
        }
    }
    n_reject = rej;
    if (rej == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(rej_h0) / static_cast<double>(rej);
}

} // namespace detail

// Fixed-horizon test first; on failure to reject, the same path is re-scanned
// with continuous monitoring and any interim crossing is reported as the
// result. The combined procedure snoops (the re-scan decision uses data past
// the reported stopping point), so its FDR exceeds the nominal 1/(K+1).
inline PitfallReport demo_reanalysis(const StudyConfig& cfg, bool enable_stage2 = true) {
    validate(cfg.model);
    const double k = cfg.reject_threshold_k;
    PitfallReport rep;
    rep.practice = Practice::Reanalysis;
    rep.nominal_fdr = 1.0 / (k + 1.0);

    const long long total = 2 * cfg.runs_per_hypothesis;
    rep.records.resize(static_cast<std::size_t>(total));
    std::vector<double> path;
    for (long long i = 0; i < total; ++i) {
        const Truth truth = i < cfg.runs_per_hypothesis ? Truth::H1 : Truth::H0;
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i));
        RunRecord rec;
        rec.truth = truth;
        rec.drawn_effect = generate_path(truth, cfg.model, cfg.horizon, rng, path);

        SufficientStats stats;
        std::vector<double> log_bfs(path.size());
        for (std::size_t t = 0; t < path.size(); ++t) {
            stats = update_stats(stats, path[t]);
            log_bfs[t] = log_bf(stats, cfg.model);
        }
        long long tau = cfg.horizon;
        if (posterior_odds(cfg.prior, log_bfs.back()) <= k && enable_stage2) {
            for (std::size_t t = 0; t < log_bfs.size(); ++t) {
                if (posterior_odds(cfg.prior, log_bfs[t]) >= k) {
                    tau = static_cast<long long>(t + 1);
                    break;
                }
            }
        }
        rec.stop_time = tau;
        rec.log_bf_at_stop = log_bfs[static_cast<std::size_t>(tau - 1)];
        rec.post_odds_at_stop = posterior_odds(cfg.prior, rec.log_bf_at_stop);
        rec.decision = rec.post_odds_at_stop >= k ? Decision::RejectH0
                                                  : Decision::InconclusiveAtHorizon;
        rep.records[static_cast<std::size_t>(i)] = rec;
    }

    long long n_reject = 0;
    rep.observed_fdr = detail::fdr_of(rep.records, k, n_reject);
    rep.calibration = calibration_histogram(rep.records, cfg.bin_edges);
    rep.notes.push_back("two-stage procedure: fixed-horizon test, then interim re-scan on failure");
    return rep;
}

// For each path, the reported stopping time is argmax_t BF_t over the whole
// horizon (earliest tie). Peeking at the future inflates the reported BF, so
// observed per-bin H1:H0 ratios fall below the theoretical BF values.
inline PitfallReport demo_optimal_stopping(const StudyConfig& cfg) {
    validate(cfg.model);
    PitfallReport rep;
    rep.practice = Practice::OptimalStopping;
    rep.nominal_fdr = 1.0 / (cfg.reject_threshold_k + 1.0);

    const long long total = 2 * cfg.runs_per_hypothesis;
    rep.records.resize(static_cast<std::size_t>(total));
    std::vector<double> path;
    for (long long i = 0; i < total; ++i) {
        const Truth truth = i < cfg.runs_per_hypothesis ? Truth::H1 : Truth::H0;
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(i));
        RunRecord rec;
        rec.truth = truth;
        rec.drawn_effect = generate_path(truth, cfg.model, cfg.horizon, rng, path);

        SufficientStats stats;
        double best = -std::numeric_limits<double>::infinity();
        long long best_t = 1;
        for (std::size_t t = 0; t < path.size(); ++t) {
            stats = update_stats(stats, path[t]);
            double lb = log_bf(stats, cfg.model);
            if (lb > best) {
                best = lb;
                best_t = static_cast<long long>(t + 1);
            }
        }
        rec.stop_time = best_t;
        rec.log_bf_at_stop = best;
        rec.post_odds_at_stop = posterior_odds(cfg.prior, best);
        rec.decision = rec.post_odds_at_stop > cfg.reject_threshold_k
                           ? Decision::RejectH0
                           : Decision::InconclusiveAtHorizon;
        rep.records[static_cast<std::size_t>(i)] = rec;
    }

    long long n_reject = 0;
    rep.observed_fdr = detail::fdr_of(rep.records, cfg.reject_threshold_k, n_reject);
    rep.calibration = calibration_histogram(rep.records, cfg.bin_edges);
    rep.notes.push_back("stopping time chosen as argmax_t BF_t with full-path knowledge");
    return rep;
}

// Repeated independent replications of the same fixed-horizon test. The bad
// procedure declares success at the first replication whose own-data BF
// clears k, discarding earlier evidence; the corrected procedure multiplies
// the per-replication BFs (sums log BFs) into one running likelihood ratio.
inline PitfallReport demo_continuous_until_win(int n_iterations, long long per_test_n, double k,
                                               const AlternativeModel& model, Truth truth,
                                               std::uint64_t seed, long long n_worlds = 10000,
                                               const PriorOdds& prior = PriorOdds{1.0}) {
    if (n_iterations < 1) throw std::invalid_argument("demo_continuous_until_win: n_iterations >= 1");
    if (per_test_n < 1) throw std::invalid_argument("demo_continuous_until_win: per_test_n >= 1");
    validate(model);

    PitfallReport rep;
    rep.practice = Practice::ContinuousUntilWin;
    rep.nominal_fdr = 1.0 / (k + 1.0);

    long long bad_wins = 0, proper_wins = 0;
    std::vector<std::vector<double>> cum(static_cast<std::size_t>(n_iterations));
    for (auto& v : cum) v.reserve(static_cast<std::size_t>(n_worlds));

    std::vector<double> path;
    for (long long w = 0; w < n_worlds; ++w) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(w));
        bool won = false;
        double cum_log_bf = 0.0;
        for (int i = 0; i < n_iterations; ++i) {
            generate_path(truth, model, per_test_n, rng, path);
            SufficientStats stats;
            for (double x : path) stats = update_stats(stats, x);
            const double lb = log_bf(stats, model);
            if (!won && posterior_odds(prior, lb) > k) {
                won = true;
                if (i == 0) ++proper_wins; // a single proper test = first replication only
            }
            cum_log_bf += lb;
            cum[static_cast<std::size_t>(i)].push_back(cum_log_bf);
        }
        if (won) ++bad_wins;
    }

    rep.bad_win_rate = static_cast<double>(bad_wins) / static_cast<double>(n_worlds);
    rep.proper_win_rate = static_cast<double>(proper_wins) / static_cast<double>(n_worlds);
    rep.observed_fdr = truth == Truth::H0 ? rep.bad_win_rate
                                          : std::numeric_limits<double>::quiet_NaN();
    rep.corrected_median_log_bf.resize(static_cast<std::size_t>(n_iterations));
    for (int i = 0; i < n_iterations; ++i) {
        auto& v = cum[static_cast<std::size_t>(i)];
        std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
        rep.corrected_median_log_bf[static_cast<std::size_t>(i)] = v[v.size() / 2];
    }
    rep.notes.push_back("bad: first replication with own-data posterior odds > k counts as a win");
    rep.notes.push_back("corrected: running product of per-replication Bayes factors");
    return rep;
}

inline nlohmann::json pitfall_report_to_json(const PitfallReport& rep) {
    nlohmann::json j;
    j["practice"] = to_string(rep.practice);
    j["nominal_fdr"] = rep.nominal_fdr;
    if (std::isnan(rep.observed_fdr)) j["observed_fdr"] = nullptr;
    else j["observed_fdr"] = rep.observed_fdr;
    j["calibration"] = calibration_to_json(rep.calibration);
    j["notes"] = rep.notes;
    if (!std::isnan(rep.bad_win_rate)) j["bad_win_rate"] = rep.bad_win_rate;
    if (!std::isnan(rep.proper_win_rate)) j["proper_win_rate"] = rep.proper_win_rate;
    if (!rep.corrected_median_log_bf.empty())
        j["corrected_median_log_bf"] = rep.corrected_median_log_bf;
    return j;
}

} // namespace bfmon
