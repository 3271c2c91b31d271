#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bfmon/core.hpp"
#include "bfmon/csv.hpp"
#include "bfmon/stopping.hpp"

namespace bfmon {

// Input for the monitor command. Either a single pre-standardized stream
// (header `value`) or unit-level two-group rows (header `unit_id,group,value`)
// that are aggregated to the randomization unit and reduced to a one-sample
// effect size at each checkpoint.
struct MonitorInput {
    bool two_group = false;
    std::vector<double> values;            // one-column schema
    std::vector<std::string> unit_ids;     // two-group schema, row-aligned
    std::vector<int> groups;               // 0 = control, 1 = treatment
    std::vector<double> group_values;
};

inline MonitorInput read_monitor_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    MonitorInput input;
    if (table.header == std::vector<std::string>{"value"}) {
        input.two_group = false;
        for (std::size_t i = 0; i < table.rows.size(); ++i)
            input.values.push_back(
                parse_double_field(table.rows[i][0], table.line_numbers[i], "value"));
    } else if (table.header == std::vector<std::string>{"unit_id", "group", "value"}) {
        input.two_group = true;
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const long line = table.line_numbers[i];
            const std::string& g = table.rows[i][1];
            int group;
            if (g == "treatment" || g == "t") group = 1;
            else if (g == "control" || g == "c") group = 0;
            else
                throw CsvError("line " + std::to_string(line) + ": unknown group '" + g +
                               "' (expected treatment|control)");
            input.unit_ids.push_back(table.rows[i][0]);
            input.groups.push_back(group);
            input.group_values.push_back(parse_double_field(table.rows[i][2], line, "value"));
        }
    } else {
        throw CsvError("unrecognized header in " + path +
                       ": expected 'value' or 'unit_id,group,value'");
    }
    if (!input.two_group && input.values.empty())
        throw CsvError("insufficient data: no observations in " + path);
    if (input.two_group && input.unit_ids.empty())
        throw CsvError("insufficient data: no rows in " + path);
    return input;
}

// Replays unit-level rows in arrival order. Each row is summed into its
// unit's running total; at each checkpoint the per-group unit totals are
// summarized (plug-in variances) and reduced to (delta, N_E), on which the
// stopping rule is evaluated. Checkpoints where the reduction is not yet
// defined (a group still empty, or all unit totals identical) are skipped.
inline MonitorResult run_two_group_monitor(const MonitorInput& input, const StoppingRule& rule,
                                           const AlternativeModel& model, const PriorOdds& prior,
                                           long long horizon, long long check_every = 1) {
    if (horizon < 1) throw std::domain_error("monitor: horizon must be >= 1");
    if (static_cast<long long>(input.group_values.size()) < horizon)
        throw std::runtime_error("monitor: stream exhausted after " +
                                 std::to_string(input.group_values.size()) +
                                 " rows, horizon " + std::to_string(horizon));
    validate(model);

    bool seen_group[2] = {false, false};
    for (std::size_t i = 0; i < static_cast<std::size_t>(horizon); ++i)
        seen_group[input.groups[i]] = true;
    if (!seen_group[1]) throw std::runtime_error("monitor: group 'treatment' has no rows");
    if (!seen_group[0]) throw std::runtime_error("monitor: group 'control' has no rows");

    struct Unit {
        int group;
        double total = 0.0;
    };
    std::unordered_map<std::string, Unit> units;
    // per-group running sums over unit totals
    double sum[2] = {0, 0}, sum_sq[2] = {0, 0};
    long long count[2] = {0, 0};

    auto summarize = [&]() -> TwoSampleSummary {
        TwoSampleSummary s;
        s.n_t = count[1];
        s.n_c = count[0];
        s.mean_t = sum[1] / static_cast<double>(count[1]);
        s.mean_c = sum[0] / static_cast<double>(count[0]);
        s.var_t = sum_sq[1] / static_cast<double>(count[1]) - s.mean_t * s.mean_t;
        s.var_c = sum_sq[0] / static_cast<double>(count[0]) - s.mean_c * s.mean_c;
        s.var_t = std::max(s.var_t, 0.0);
        s.var_c = std::max(s.var_c, 0.0);
        return s;
    };

    MonitorResult last{};
    bool have_result = false;
    for (long long t = 1; t <= horizon; ++t) {
        const std::size_t i = static_cast<std::size_t>(t - 1);
        const int g = input.groups[i];
        auto [it, is_new] = units.try_emplace(input.unit_ids[i], Unit{g, 0.0});
        Unit& u = it->second;
        if (is_new) {
            ++count[g];
        } else {
            if (u.group != g)
                throw std::runtime_error("monitor: unit '" + input.unit_ids[i] +
                                         "' appears in both groups (row " +
                                         std::to_string(t + 1) + ")");
            sum[g] -= u.total;
            sum_sq[g] -= u.total * u.total;
        }
        u.total += input.group_values[i];
        sum[g] += u.total;
        sum_sq[g] += u.total * u.total;

        const bool checkpoint = (t % check_every == 0) || t == horizon;
        if (!checkpoint) continue;
        if (count[0] < 1 || count[1] < 1) continue;
        TwoSampleSummary s = summarize();
        if (s.var_t == 0.0 && s.var_c == 0.0) {
            if (t == horizon)
                throw std::runtime_error("monitor: degenerate data, all unit totals identical");
            continue;
        }
        EffectReduction red = reduce_two_sample(s);
        last.stop_time = t;
        last.log_bf_at_stop = log_bf(red.n_e, red.delta, model);
        last.post_odds_at_stop = posterior_odds(prior, last.log_bf_at_stop);
        have_result = true;
        bool fired = should_stop(rule, t, red.n_e, red.delta, model, prior);
        if (fired || t == horizon) {
            last.stopped_early = t < horizon;
            last.decision = fired
                                ? detail::classify_stop(rule, t, red.n_e, red.delta, model, prior)
                                : Decision::InconclusiveAtHorizon;
            return last;
        }
    }
    if (!have_result)
        throw std::runtime_error("monitor: reduction never defined over the stream");
    return last;
}

inline nlohmann::json monitor_result_to_json(const MonitorResult& r) {
    return nlohmann::json{{"stop_time", r.stop_time},
                          {"log_bf_at_stop", r.log_bf_at_stop},
                          {"bf_at_stop", std::exp(r.log_bf_at_stop)},
                          {"post_odds_at_stop", r.post_odds_at_stop},
                          {"p_h0_given_data", false_discovery_prob(r.post_odds_at_stop)},
                          {"stopped_early", r.stopped_early},
                          {"decision", to_string(r.decision)}};
}

} // namespace bfmon
