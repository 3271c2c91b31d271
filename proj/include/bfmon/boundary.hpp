#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfmon/core.hpp"
#include "bfmon/normal.hpp"

namespace bfmon {

// NHST rejection boundary for |sqrt(n) * mean|: the constant z_{1-alpha/2}.
inline double nhst_boundary(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::domain_error("nhst_boundary: alpha must lie in (0,1]");
    if (alpha == 1.0) return 0.0;
    return norm_quantile(1.0 - alpha / 2.0);
}

// Rejection boundary for |sqrt(n) * mean| of the precise-alternative Bayes
// test at BF threshold k: (|delta|/2) * sqrt(n) + (ln k / |delta|) / sqrt(n).
// Exact inversion of the precise log BF; grows like O(sqrt(n)).
inline double bayes_precise_boundary(long long n, double delta, double k) {
    if (n < 1) throw std::domain_error("bayes_precise_boundary: n must be >= 1");
    if (delta == 0.0) throw std::domain_error("bayes_precise_boundary: delta must be nonzero");
    if (!(k > 0.0)) throw std::domain_error("bayes_precise_boundary: k must be positive");
    const double ad = std::fabs(delta);
    const double rn = std::sqrt(static_cast<double>(n));
    return 0.5 * ad * rn + std::log(k) / (ad * rn);
}

// Rejection boundary for |sqrt(n) * mean| of the composite test at BF
// threshold k: sqrt((1 + n v^2)/(n v^2) * (2 ln k + ln(1 + n v^2))); grows
// like O(sqrt(log n)). Returns nullopt when BF = k has no real solution.
inline std::optional<double> bayes_composite_boundary(long long n, double v_sq, double k) {
    if (n < 1) throw std::domain_error("bayes_composite_boundary: n must be >= 1");
    if (!(v_sq > 0.0)) throw std::domain_error("bayes_composite_boundary: v_sq must be positive");
    if (!(k > 0.0)) throw std::domain_error("bayes_composite_boundary: k must be positive");
    const double nv = static_cast<double>(n) * v_sq;
    const double inner = 2.0 * std::log(k) + std::log1p(nv);
    if (inner < 0.0) return std::nullopt;
    return std::sqrt((1.0 + nv) / nv * inner);
}

// The mixture-SPRT likelihood ratio with a normal mixing density over H1 is
// the composite Bayes factor; both names are kept so reports can tabulate
// the SPRT threshold 1/alpha against posterior-odds thresholds.
inline double msprt_log_lr(const SufficientStats& stats, double v_sq) {
    return log_bf_composite(stats, v_sq);
}

struct BoundarySample {
    long long n;
    double nhst;
    double bayes_precise;
    double bayes_composite; // NaN when no real solution exists
};

inline std::vector<BoundarySample> boundary_table(const std::vector<long long>& n_grid,
                                                  double alpha, double delta, double v_sq,
                                                  double k) {
    std::vector<BoundarySample> out;
    out.reserve(n_grid.size());
    const double c1 = nhst_boundary(alpha);
    for (long long n : n_grid) {
        auto comp = bayes_composite_boundary(n, v_sq, k);
        out.push_back({n, c1, bayes_precise_boundary(n, delta, k),
                       comp ? *comp : std::numeric_limits<double>::quiet_NaN()});
    }
    return out;
}

inline std::string boundary_table_to_csv(const std::vector<BoundarySample>& table) {
    std::ostringstream os;
    os.precision(17);
    os << "n,nhst,bayes_precise,bayes_composite\n";
    for (const auto& row : table) {
        os << row.n << ',' << row.nhst << ',' << row.bayes_precise << ',';
        if (std::isnan(row.bayes_composite)) os << "NA";
        else os << row.bayes_composite;
        os << '\n';
    }
    return os.str();
}

} // namespace bfmon
