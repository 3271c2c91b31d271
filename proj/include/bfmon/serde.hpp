#pragma once

#include <string>

#include <json.hpp>

#include "bfmon/stopping.hpp"

namespace bfmon {

// A stopping rule plus the monitoring schedule it runs under. This is the
// on-disk shape: {"type": "bf_two_sided", "k": 9, "horizon": 100, "check_every": 1}.
struct MonitorSpec {
    StoppingRule rule;
    long long horizon = 0;
    long long check_every = 1;
};

inline nlohmann::json rule_to_json(const StoppingRule& r) {
    nlohmann::json j;
    switch (r.kind) {
        case StoppingRule::Kind::FixedHorizon:
            j["type"] = "fixed_horizon";
            j["n_max"] = r.n_max;
            break;
        case StoppingRule::Kind::BfUpper:
            j["type"] = "bf_upper";
            j["k"] = r.k;
            break;
        case StoppingRule::Kind::BfTwoSided:
            j["type"] = "bf_two_sided";
            j["k"] = r.k;
            break;
        case StoppingRule::Kind::PValueMinN:
            j["type"] = "p_value_min_n";
            j["alpha"] = r.alpha;
            j["n_min"] = r.n_min;
            break;
        case StoppingRule::Kind::All:
        case StoppingRule::Kind::Any:
            j["type"] = r.kind == StoppingRule::Kind::All ? "all" : "any";
            j["rules"] = nlohmann::json::array();
            for (const auto& c : r.children) j["rules"].push_back(rule_to_json(c));
            break;
    }
    return j;
}

inline StoppingRule rule_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "fixed_horizon") {
        long long n = j.contains("n_max") ? j.at("n_max").get<long long>()
                                          : j.at("horizon").get<long long>();
        return StoppingRule::fixed_horizon(n);
    }
    if (type == "bf_upper") return StoppingRule::bf_upper(j.at("k").get<double>());
    if (type == "bf_two_sided") return StoppingRule::bf_two_sided(j.at("k").get<double>());
    if (type == "p_value_min_n")
        return StoppingRule::p_value_min_n(j.at("alpha").get<double>(),
                                           j.at("n_min").get<long long>());
    if (type == "all" || type == "any") {
        std::vector<StoppingRule> children;
        for (const auto& c : j.at("rules")) children.push_back(rule_from_json(c));
        return type == "all" ? StoppingRule::all_of(std::move(children))
                             : StoppingRule::any_of(std::move(children));
    }
    throw std::invalid_argument("unknown stopping rule type: " + type);
}

inline nlohmann::json spec_to_json(const MonitorSpec& s) {
    nlohmann::json j = rule_to_json(s.rule);
    j["horizon"] = s.horizon;
    j["check_every"] = s.check_every;
    return j;
}

inline MonitorSpec spec_from_json(const nlohmann::json& j) {
    MonitorSpec s;
    s.rule = rule_from_json(j);
    s.horizon = j.at("horizon").get<long long>();
    s.check_every = j.value("check_every", 1LL);
    if (s.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (s.check_every < 1) throw std::invalid_argument("check_every must be >= 1");
    return s;
}

} // namespace bfmon
