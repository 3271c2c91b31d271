#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bfmon/stopping.hpp"

namespace bfmon {

using Rational = boost::multiprecision::cpp_rational;

// Finite-alphabet likelihood model with explicit rational masses under each
// hypothesis. Path probabilities and Bayes factors stay exact, so the
// likelihood-ratio identity can be checked with zero tolerance.
struct DiscreteModel {
    std::vector<Rational> p_h0;
    std::vector<Rational> p_h1;

    std::size_t alphabet_size() const { return p_h0.size(); }

    void validate() const {
        if (p_h0.size() != p_h1.size() || p_h0.size() < 2)
            throw std::invalid_argument("DiscreteModel: need matching masses over >= 2 outcomes");
        Rational s0 = 0, s1 = 0;
        for (std::size_t i = 0; i < p_h0.size(); ++i) {
            if (p_h0[i] <= 0 || p_h1[i] <= 0)
                throw std::invalid_argument("DiscreteModel: all masses must be positive");
            s0 += p_h0[i];
            s1 += p_h1[i];
        }
        if (s0 != 1 || s1 != 1)
            throw std::invalid_argument("DiscreteModel: masses must each sum to 1");
    }
};

// Maps a full path's BF trajectory (BF_1..BF_H) to a stopping index in
// [1, H]. Proper rules look only at the prefix up to the returned index;
// improper rules (argmax, re-analysis) may use the whole trajectory, which is
// exactly what the identity check is meant to expose.
using StopTimeFn = std::function<std::size_t(const std::vector<Rational>&)>;

// First t with BF_t >= k, else the horizon.
inline StopTimeFn discrete_bf_upper(const Rational& k) {
    return [k](const std::vector<Rational>& bfs) {
        for (std::size_t t = 0; t < bfs.size(); ++t)
            if (bfs[t] >= k) return t + 1;
        return bfs.size();
    };
}

// First t with BF_t >= k or <= 1/k, else the horizon.
inline StopTimeFn discrete_bf_two_sided(const Rational& k) {
    return [k](const std::vector<Rational>& bfs) {
        const Rational inv = Rational(1) / k;
        for (std::size_t t = 0; t < bfs.size(); ++t)
            if (bfs[t] >= k || bfs[t] <= inv) return t + 1;
        return bfs.size();
    };
}

inline StopTimeFn discrete_fixed_horizon() {
    return [](const std::vector<Rational>& bfs) { return bfs.size(); };
}

// Improper: picks the t maximizing BF_t over the whole path (earliest tie).
inline StopTimeFn discrete_argmax_stop() {
    return [](const std::vector<Rational>& bfs) {
        std::size_t best = 0;
        for (std::size_t t = 1; t < bfs.size(); ++t)
            if (bfs[t] > bfs[best]) best = t;
        return best + 1;
    };
}

// Improper: report the horizon if BF_H >= k, otherwise re-scan the same path
// for the first interim crossing.
inline StopTimeFn discrete_reanalysis_stop(const Rational& k) {
    return [k](const std::vector<Rational>& bfs) {
        if (bfs.back() >= k) return bfs.size();
        for (std::size_t t = 0; t < bfs.size(); ++t)
            if (bfs[t] >= k) return t + 1;
        return bfs.size();
    };
}

struct BfGroup {
    Rational bf_value;
    Rational p_h1;
    Rational p_h0;
    Rational ratio;       // p_h1 / p_h0
    bool identity_holds;  // ratio == bf_value, exactly
};

// Exhaustively enumerates every length-`horizon` path over the model's
// alphabet, computes its exact probability under each hypothesis and its
// stopped Bayes factor, and groups paths by that exact BF value. For a proper
// stopping rule, each group's P(H1)/P(H0) ratio must equal the BF exactly.
inline std::vector<BfGroup> enumerate_identity_check(const DiscreteModel& model,
                                                     const StopTimeFn& stop_time,
                                                     int horizon) {
    model.validate();
    if (horizon < 1) throw std::invalid_argument("enumerate: horizon must be >= 1");
    const std::size_t a = model.alphabet_size();
    double est = std::pow(static_cast<double>(a), horizon);
    if (est > 1e7)
        throw std::runtime_error("enumerate: state space too large (" +
                                 std::to_string(static_cast<long long>(est)) + " paths > 1e7)");

    std::map<Rational, BfGroup> groups;
    std::vector<std::size_t> path(static_cast<std::size_t>(horizon), 0);
    std::vector<Rational> bfs(static_cast<std::size_t>(horizon));

    const long long total = static_cast<long long>(est);
    for (long long code = 0; code < total; ++code) {
        long long c = code;
        for (auto& o : path) {
            o = static_cast<std::size_t>(c % static_cast<long long>(a));
            c /= static_cast<long long>(a);
        }
        Rational prob0 = 1, prob1 = 1, bf = 1;
        for (std::size_t t = 0; t < path.size(); ++t) {
            prob0 *= model.p_h0[path[t]];
            prob1 *= model.p_h1[path[t]];
            bf *= model.p_h1[path[t]] / model.p_h0[path[t]];
            bfs[t] = bf;
        }
        std::size_t tau = stop_time(bfs);
        if (tau < 1 || tau > path.size())
            throw std::logic_error("enumerate: stopping time out of range");
        const Rational& bf_tau = bfs[tau - 1];
        auto [it, inserted] = groups.try_emplace(bf_tau);
        if (inserted) it->second.bf_value = bf_tau;
        it->second.p_h0 += prob0;
        it->second.p_h1 += prob1;
    }

    std::vector<BfGroup> out;
    out.reserve(groups.size());
    for (auto& [bf, g] : groups) {
        g.ratio = g.p_h1 / g.p_h0;
        g.identity_holds = (g.ratio == g.bf_value);
        out.push_back(g);
    }
    return out;
}

inline bool all_groups_calibrated(const std::vector<BfGroup>& groups) {
    for (const auto& g : groups)
        if (!g.identity_holds) return false;
    return true;
}

} // namespace bfmon
