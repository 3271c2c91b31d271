#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfmon/core.hpp"
#include "bfmon/normal.hpp"

namespace bfmon {

enum class Decision { RejectH0, AcceptH0, InconclusiveAtHorizon };

inline const char* to_string(Decision d) {
    switch (d) {
        case Decision::RejectH0: return "reject_h0";
        case Decision::AcceptH0: return "accept_h0";
        default: return "inconclusive_at_horizon";
    }
}

// Declarative proper stopping rule. The stop/continue decision at time t is
// a function only of observations 1..t; run_monitor enforces the horizon
// truncation on top of whichever variant is used.
struct StoppingRule {
    enum class Kind { FixedHorizon, BfUpper, BfTwoSided, PValueMinN, All, Any };

    Kind kind = Kind::FixedHorizon;
    long long n_max = 0;   // FixedHorizon
    double k = 0.0;        // BfUpper / BfTwoSided, threshold on posterior odds
    double alpha = 0.0;    // PValueMinN
    long long n_min = 0;   // PValueMinN
    std::vector<StoppingRule> children; // All / Any

    static StoppingRule fixed_horizon(long long n) {
        if (n < 1) throw std::domain_error("fixed_horizon: n_max must be >= 1");
        StoppingRule r;
        r.kind = Kind::FixedHorizon;
        r.n_max = n;
        return r;
    }
    static StoppingRule bf_upper(double k) {
        if (!(k > 1.0)) throw std::domain_error("bf_upper: k must be > 1");
        StoppingRule r;
        r.kind = Kind::BfUpper;
        r.k = k;
        return r;
    }
    static StoppingRule bf_two_sided(double k) {
        if (!(k > 1.0)) throw std::domain_error("bf_two_sided: k must be > 1");
        StoppingRule r;
        r.kind = Kind::BfTwoSided;
        r.k = k;
        return r;
    }
    static StoppingRule p_value_min_n(double alpha, long long n_min) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::domain_error("p_value_min_n: alpha must lie in (0,1)");
        if (n_min < 1) throw std::domain_error("p_value_min_n: n_min must be >= 1");
        StoppingRule r;
        r.kind = Kind::PValueMinN;
        r.alpha = alpha;
        r.n_min = n_min;
        return r;
    }
    static StoppingRule all_of(std::vector<StoppingRule> rules) {
        StoppingRule r;
        r.kind = Kind::All;
        r.children = std::move(rules);
        return r;
    }
    static StoppingRule any_of(std::vector<StoppingRule> rules) {
        StoppingRule r;
        r.kind = Kind::Any;
        r.children = std::move(rules);
        return r;
    }
};

// Threshold comparisons are inclusive: the rule fires at odds >= k or <= 1/k.
// n is the (possibly effective, hence real-valued) sample size behind `mean`;
// t is the checkpoint index the truncation and n_min constraints refer to.
inline bool should_stop(const StoppingRule& rule, long long t, double n, double mean,
                        const AlternativeModel& model, const PriorOdds& prior) {
    switch (rule.kind) {
        case StoppingRule::Kind::FixedHorizon:
            return t >= rule.n_max;
        case StoppingRule::Kind::BfUpper:
            return posterior_odds(prior, log_bf(n, mean, model)) >= rule.k;
        case StoppingRule::Kind::BfTwoSided: {
            double odds = posterior_odds(prior, log_bf(n, mean, model));
            return odds >= rule.k || odds <= 1.0 / rule.k;
        }
        case StoppingRule::Kind::PValueMinN: {
            if (t < rule.n_min) return false;
            double z = mean * std::sqrt(n);
            return two_sided_p(z) < rule.alpha;
        }
        case StoppingRule::Kind::All:
            for (const auto& c : rule.children)
                if (!should_stop(c, t, n, mean, model, prior)) return false;
            return true;
        case StoppingRule::Kind::Any:
            for (const auto& c : rule.children)
                if (should_stop(c, t, n, mean, model, prior)) return true;
            return false;
    }
    return false;
}

inline bool should_stop(const StoppingRule& rule, long long t,
                        const SufficientStats& stats, const AlternativeModel& model,
                        const PriorOdds& prior) {
    return should_stop(rule, t, static_cast<double>(stats.n), stats.mean(), model, prior);
}

struct MonitorResult {
    long long stop_time = 0;
    double log_bf_at_stop = 0.0;
    double post_odds_at_stop = 0.0;
    bool stopped_early = false;
    Decision decision = Decision::InconclusiveAtHorizon;
};

namespace detail {

// Classifies why a rule fired at its stopping time. BF-threshold rules label
// the boundary that was hit; PValueMinN firing counts as a rejection;
// FixedHorizon firing carries no directional evidence.
inline Decision classify_stop(const StoppingRule& rule, long long t, double n, double mean,
                              const AlternativeModel& model, const PriorOdds& prior) {
    switch (rule.kind) {
        case StoppingRule::Kind::FixedHorizon:
            return Decision::InconclusiveAtHorizon;
        case StoppingRule::Kind::BfUpper:
            return Decision::RejectH0;
        case StoppingRule::Kind::BfTwoSided: {
            double odds = posterior_odds(prior, log_bf(n, mean, model));
            return odds >= rule.k ? Decision::RejectH0 : Decision::AcceptH0;
        }
        case StoppingRule::Kind::PValueMinN:
            return Decision::RejectH0;
        case StoppingRule::Kind::All:
        case StoppingRule::Kind::Any: {
            Decision out = Decision::InconclusiveAtHorizon;
            for (const auto& c : rule.children) {
                if (!should_stop(c, t, n, mean, model, prior)) continue;
                Decision d = classify_stop(c, t, n, mean, model, prior);
                if (d == Decision::RejectH0) return d;
                if (d == Decision::AcceptH0) out = d;
            }
            return out;
        }
    }
    return Decision::InconclusiveAtHorizon;
}

} // namespace detail

// Replays the stream, checking the rule at t = check_every, 2*check_every, ...
// and always at the horizon. The BF at the stopping time is computed from all
// observations 1..tau.
inline MonitorResult run_monitor(std::span<const double> stream, const StoppingRule& rule,
                                 const AlternativeModel& model, const PriorOdds& prior,
                                 long long horizon, long long check_every = 1) {
    if (horizon < 1) throw std::domain_error("run_monitor: horizon must be >= 1");
    if (check_every < 1) throw std::domain_error("run_monitor: check_every must be >= 1");
    validate(model);

    SufficientStats stats;
    for (long long t = 1; t <= horizon; ++t) {
        if (static_cast<std::size_t>(t) > stream.size())
            throw std::runtime_error("run_monitor: stream exhausted after " +
                                     std::to_string(t - 1) + " observations, horizon " +
                                     std::to_string(horizon));
        stats = update_stats(stats, stream[static_cast<std::size_t>(t - 1)]);
        const bool checkpoint = (t % check_every == 0) || t == horizon;
        if (!checkpoint) continue;
        bool fired = should_stop(rule, t, stats, model, prior);
        if (fired || t == horizon) {
            MonitorResult r;
            r.stop_time = t;
            r.log_bf_at_stop = log_bf(stats, model);
            r.post_odds_at_stop = posterior_odds(prior, r.log_bf_at_stop);
            r.stopped_early = t < horizon;
            r.decision = fired ? detail::classify_stop(rule, t, static_cast<double>(stats.n),
                                                       stats.mean(), model, prior)
                               : Decision::InconclusiveAtHorizon;
            return r;
        }
    }
    throw std::logic_error("run_monitor: unreachable");
}

} // namespace bfmon
