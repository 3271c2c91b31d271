#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bfmon/normal.hpp"

namespace bfmon {

// One historical experiment: observed effect size and effective sample size.
struct HistoricalRecord {
    double delta = 0.0;
    double n_e = 0.0;
};

struct PriorParams {
    double p = 0.5;     // P(H1)
    double v_sq = 0.0;  // variance of the effect-size prior under H1
};

struct EmIteration {
    double p;
    double v_sq;
    double mean_responsibility;
};

struct EmTrace {
    std::vector<EmIteration> iterations;
    bool converged = false;
    int n_iter = 0;
    bool lower_bound_active = false;
    bool degenerate = false; // v_sq pinned at the bound and p nearly 0
};

// P(H1 | delta_i) under the current prior: the posterior odds are
// phi(delta; 0, 1/N_E + V^2) / phi(delta; 0, 1/N_E) * p/(1-p), evaluated in
// log space and converted to a probability.
inline double responsibility(const HistoricalRecord& rec, const PriorParams& params) {
    if (!(rec.n_e > 0.0)) throw std::domain_error("responsibility: n_e must be positive");
    if (!(params.p > 0.0 && params.p < 1.0))
        throw std::domain_error("responsibility: p must lie in (0,1)");
    if (!(params.v_sq > 0.0)) throw std::domain_error("responsibility: v_sq must be positive");
    const double inv_n = 1.0 / rec.n_e;
    double log_odds = norm_log_pdf(rec.delta, 0.0, inv_n + params.v_sq) -
                      norm_log_pdf(rec.delta, 0.0, inv_n) +
                      std::log(params.p / (1.0 - params.p));
    // odds/(1+odds) without overflow for either sign of log_odds
    if (log_odds >= 0.0) return 1.0 / (1.0 + std::exp(-log_odds));
    double e = std::exp(log_odds);
    return e / (1.0 + e);
}

inline double em_lower_bound_v_sq(const std::vector<HistoricalRecord>& records, double k) {
    double avg_inv_ne = 0.0;
    for (const auto& r : records) avg_inv_ne += 1.0 / r.n_e;
    avg_inv_ne /= static_cast<double>(records.size());
    return k * k * avg_inv_ne;
}

// Moment-based starting point: p = 0.5 and v_sq from the marginal variance
// of delta minus the average sampling variance, clamped at the bound.
inline PriorParams em_default_init(const std::vector<HistoricalRecord>& records, double k) {
    double mean_d = 0.0, mean_d2 = 0.0;
    for (const auto& r : records) {
        mean_d += r.delta;
        mean_d2 += r.delta * r.delta;
    }
    const double n = static_cast<double>(records.size());
    mean_d /= n;
    mean_d2 /= n;
    const double var_d = mean_d2 - mean_d * mean_d;
    const double bound = em_lower_bound_v_sq(records, k);
    double avg_inv_ne = 0.0;
    for (const auto& r : records) avg_inv_ne += 1.0 / r.n_e;
    avg_inv_ne /= n;
    return PriorParams{0.5, std::max(var_d - avg_inv_ne, bound)};
}

// EM for the two-point mixture prior. Step I computes responsibilities,
// Step II sets p to their mean, Step III is a weighted method-of-moments
// update for V^2 clamped at k^2 * Avg(1/N_E). Observed-data likelihood is not
// guaranteed monotone across Step III, so convergence is on parameter change.
inline std::pair<PriorParams, EmTrace> em_fit(const std::vector<HistoricalRecord>& records,
                                              PriorParams init, double tol = 1e-6,
                                              int max_iter = 1000, double k = 2.0) {
    if (records.size() < 2)
        throw std::invalid_argument("em_fit: need at least two historical records");
    if (!(tol > 0.0)) throw std::invalid_argument("em_fit: tol must be positive");
    if (!(k > 0.0)) throw std::invalid_argument("em_fit: k must be positive");
    for (const auto& r : records) {
        if (!(r.n_e > 0.0) || !std::isfinite(r.delta))
            throw std::invalid_argument("em_fit: records require finite delta and n_e > 0");
    }

    const double bound = em_lower_bound_v_sq(records, k);
    const double eps = 1e-12;
    PriorParams params{std::clamp(init.p, eps, 1.0 - eps), std::max(init.v_sq, bound)};

    EmTrace trace;
    std::vector<double> resp(records.size());
    for (int iter = 0; iter < max_iter; ++iter) {
        // Step I
        double sum_resp = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            resp[i] = std::clamp(responsibility(records[i], params), eps, 1.0 - eps);
            sum_resp += resp[i];
        }
        // Step II
        const double new_p = std::clamp(sum_resp / static_cast<double>(records.size()),
                                        eps, 1.0 - eps);
        // Step III
        double w_d2 = 0.0, w_inv_ne = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            w_d2 += resp[i] * records[i].delta * records[i].delta;
            w_inv_ne += resp[i] / records[i].n_e;
        }
        const double new_v_sq = std::max((w_d2 - w_inv_ne) / sum_resp, bound);

        const double step = std::max(std::fabs(new_p - params.p),
                                     std::fabs(new_v_sq - params.v_sq));
        params = PriorParams{new_p, new_v_sq};
        trace.iterations.push_back({params.p, params.v_sq,
                                    sum_resp / static_cast<double>(records.size())});
        trace.n_iter = iter + 1;
        if (step < tol) {
            trace.converged = true;
            break;
        }
    }
    trace.lower_bound_active = params.v_sq <= bound;
    trace.degenerate = trace.lower_bound_active && params.p < 0.01;
    return {params, trace};
}

} // namespace bfmon
