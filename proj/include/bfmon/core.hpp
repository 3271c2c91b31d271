#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

#include "bfmon/normal.hpp"

namespace bfmon {

// Running count, sum and sum of squares of one observation stream.
// Everything downstream (Bayes factors, z statistics) is a function of this.
struct SufficientStats {
    long long n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    double mean() const {
        if (n < 1) throw std::domain_error("SufficientStats: mean undefined for n = 0");
        return sum / static_cast<double>(n);
    }
};

inline SufficientStats update_stats(const SufficientStats& s, double x) {
    return SufficientStats{s.n + 1, s.sum + x, s.sum_sq + x * x};
}

// Precise alternative H1: mu = delta. Composite alternative: mu ~ N(0, V^2).
struct Precise {
    double delta;
};
struct CompositeNormal {
    double v_sq;
};
using AlternativeModel = std::variant<Precise, CompositeNormal>;

inline void validate(const AlternativeModel& m) {
    if (const auto* p = std::get_if<Precise>(&m)) {
        if (p->delta == 0.0 || !std::isfinite(p->delta))
            throw std::domain_error("Precise alternative requires a finite nonzero delta");
    } else {
        const auto& c = std::get<CompositeNormal>(m);
        if (!(c.v_sq > 0.0) || !std::isfinite(c.v_sq))
            throw std::domain_error("CompositeNormal requires v_sq > 0");
    }
}

struct PriorOdds {
    double odds = 1.0; // P(H1)/P(H0)

    explicit PriorOdds(double o = 1.0) : odds(o) {
        if (!(o > 0.0) || !std::isfinite(o))
            throw std::domain_error("prior odds must be positive and finite");
    }
};

struct TwoSampleSummary {
    double mean_t = 0.0, mean_c = 0.0;
    double var_t = 0.0, var_c = 0.0;
    long long n_t = 0, n_c = 0;
};

// Log Bayes factor for the precise alternative, unit observation variance:
// log BF = (n/2) * delta * (2*mean - delta).
inline double log_bf_precise(double n, double mean, double delta) {
    if (!(n > 0.0)) throw std::domain_error("log_bf_precise: need a positive sample size");
    return 0.5 * n * delta * (2.0 * mean - delta);
}

inline double log_bf_precise(const SufficientStats& s, double delta) {
    return log_bf_precise(static_cast<double>(s.n), s.mean(), delta);
}

// Log Bayes factor for the composite alternative with effect prior N(0, v_sq):
// density ratio N(mean; 0, v_sq + 1/n) / N(mean; 0, 1/n), kept in log space.
inline double log_bf_composite(double n, double mean, double v_sq) {
    if (!(n > 0.0)) throw std::domain_error("log_bf_composite: need a positive sample size");
    if (!(v_sq > 0.0)) throw std::domain_error("log_bf_composite: v_sq must be positive");
    const double inv_n = 1.0 / n;
    const double s1 = v_sq + inv_n;
    return 0.5 * std::log(inv_n / s1) + 0.5 * mean * mean * (n - 1.0 / s1);
}

inline double log_bf_composite(const SufficientStats& s, double v_sq) {
    return log_bf_composite(static_cast<double>(s.n), s.mean(), v_sq);
}

inline double log_bf(double n, double mean, const AlternativeModel& m) {
    if (const auto* p = std::get_if<Precise>(&m)) return log_bf_precise(n, mean, p->delta);
    return log_bf_composite(n, mean, std::get<CompositeNormal>(m).v_sq);
}

inline double log_bf(const SufficientStats& s, const AlternativeModel& m) {
    return log_bf(static_cast<double>(s.n), s.mean(), m);
}

// Posterior odds = prior odds * BF. Saturates at the largest finite double
// instead of overflowing to inf; long monitored runs produce very large BFs.
inline double posterior_odds(const PriorOdds& prior, double log_bf_value) {
    double log_odds = std::log(prior.odds) + log_bf_value;
    if (log_odds >= std::log(std::numeric_limits<double>::max()))
        return std::numeric_limits<double>::max();
    return std::exp(log_odds);
}

inline bool odds_saturated(double odds) {
    return odds == std::numeric_limits<double>::max();
}

// P(H0 | data) given posterior odds K is 1/(K+1).
inline double false_discovery_prob(double post_odds) {
    if (!(post_odds > 0.0)) throw std::domain_error("false_discovery_prob: odds must be positive");
    return 1.0 / (post_odds + 1.0);
}

// N_E = 1/(1/N_T + 1/N_C).
inline double effective_sample_size(long long n_t, long long n_c) {
    if (n_t < 1 || n_c < 1)
        throw std::domain_error("effective_sample_size: group sizes must be >= 1");
    return 1.0 / (1.0 / static_cast<double>(n_t) + 1.0 / static_cast<double>(n_c));
}

struct EffectReduction {
    double delta; // (mean_t - mean_c) / pooled sigma
    double n_e;   // effective sample size
};

// Two-sample to one-sample reduction: pooled sigma^2 solves
// sigma^2 / N_E = var_t/n_t + var_c/n_c, and delta = (mean_t - mean_c)/sigma.
// delta * sqrt(N_E) reproduces the two-sample Wald z statistic.
inline EffectReduction reduce_two_sample(const TwoSampleSummary& s) {
    if (s.n_t < 1 || s.n_c < 1)
        throw std::domain_error("reduce_two_sample: group sizes must be >= 1");
    if (s.var_t < 0.0 || s.var_c < 0.0)
        throw std::domain_error("reduce_two_sample: variances must be nonnegative");
    if (s.var_t == 0.0 && s.var_c == 0.0)
        throw std::domain_error("reduce_two_sample: degenerate data, both variances zero");
    const double n_e = effective_sample_size(s.n_t, s.n_c);
    const double wald_var = s.var_t / static_cast<double>(s.n_t) +
                            s.var_c / static_cast<double>(s.n_c);
    const double sigma = std::sqrt(wald_var * n_e);
    return EffectReduction{(s.mean_t - s.mean_c) / sigma, n_e};
}

} // namespace bfmon
