// bfmon: sequential Bayesian A/B-test monitoring toolbox.
// Subcommands: simulate | monitor | learn-prior | boundaries | pitfalls.
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bfmon/boundary.hpp"
#include "bfmon/core.hpp"
#include "bfmon/csv.hpp"
#include "bfmon/monitor.hpp"
#include "bfmon/pitfalls.hpp"
#include "bfmon/prior_em.hpp"
#include "bfmon/serde.hpp"
#include "bfmon/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0; // 0 = hardware concurrency
    std::string out_dir = ".";
    std::string format = "json";
    bool dry_run = false;
};

int effective_threads(const GlobalOpts& g) {
    if (g.threads > 0) return g.threads;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_manifest(const GlobalOpts& g, const std::string& command, const json& config,
                    const std::vector<fs::path>& artifacts) {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = g.seed;
    m["artifact_paths"] = json::array();
    for (const auto& p : artifacts) m["artifact_paths"].push_back(p.string());
    m["tool_version"] = kToolVersion;
    write_text(fs::path(g.out_dir) / (command + "_manifest.json"), m.dump(2) + "\n");
}

bfmon::AlternativeModel model_from_flags(bool composite, double delta, double v, double v_sq) {
    if (composite) {
        double vv = v_sq > 0.0 ? v_sq : v * v;
        if (!(vv > 0.0))
            throw CLI::ValidationError("--composite requires --v or --v-sq to be positive");
        return bfmon::CompositeNormal{vv};
    }
    if (delta == 0.0)
        throw CLI::ValidationError("precise model requires a nonzero --delta");
    return bfmon::Precise{delta};
}

bfmon::StoppingRule rule_from_flags(const std::string& rule_name, long long horizon, double k,
                                    double alpha, long long n_min) {
    if (rule_name == "fixed") return bfmon::StoppingRule::fixed_horizon(horizon);
    if (rule_name == "bf-upper") {
        if (!(k > 1.0)) throw CLI::ValidationError("--rule bf-upper requires --k > 1");
        return bfmon::StoppingRule::bf_upper(k);
    }
    if (rule_name == "bf-two-sided") {
        if (!(k > 1.0)) throw CLI::ValidationError("--rule bf-two-sided requires --k > 1");
        return bfmon::StoppingRule::bf_two_sided(k);
    }
    if (rule_name == "p-value") {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw CLI::ValidationError("--rule p-value requires --alpha in (0,1)");
        if (n_min < 1) throw CLI::ValidationError("--rule p-value requires --n-min >= 1");
        return bfmon::StoppingRule::p_value_min_n(alpha, n_min);
    }
    throw CLI::ValidationError("unknown --rule '" + rule_name +
                               "' (fixed|bf-upper|bf-two-sided|p-value)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential Bayesian hypothesis-testing toolbox"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "master RNG seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--format", g.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_flag("--dry-run", g.dry_run, "validate configuration and exit");

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "run a Monte Carlo study");
    double sim_delta = 0.0, sim_v = 0.0, sim_v_sq = 0.0, sim_k = 0.0, sim_alpha = 0.0;
    double sim_prior_odds = 1.0, sim_reject_k = 9.0;
    bool sim_composite = false;
    long long sim_horizon = 100, sim_runs = 50000, sim_n_min = 0, sim_check_every = 1;
    std::string sim_rule = "fixed", sim_config_file;
    sim->add_option("--config", sim_config_file, "JSON config file (flags override)");
    sim->add_option("--delta", sim_delta, "precise-alternative effect size");
    sim->add_flag("--composite", sim_composite, "use the composite alternative");
    sim->add_option("--v", sim_v, "composite prior standard deviation");
    sim->add_option("--v-sq", sim_v_sq, "composite prior variance");
    sim->add_option("--horizon", sim_horizon, "maximum observations per run")
        ->capture_default_str();
    sim->add_option("--rule", sim_rule, "stopping rule: fixed|bf-upper|bf-two-sided|p-value")
        ->capture_default_str();
    sim->add_option("--k", sim_k, "posterior-odds stopping threshold");
    sim->add_option("--alpha", sim_alpha, "p-value threshold for --rule p-value");
    sim->add_option("--n-min", sim_n_min, "minimum sample size for --rule p-value");
    sim->add_option("--runs", sim_runs, "runs per hypothesis")->capture_default_str();
    sim->add_option("--prior-odds", sim_prior_odds, "prior odds P(H1)/P(H0)")
        ->capture_default_str();
    sim->add_option("--reject-k", sim_reject_k, "posterior-odds rejection threshold")
        ->capture_default_str();
    sim->add_option("--check-every", sim_check_every, "checkpoint spacing")
        ->capture_default_str();

    // --- monitor ---
    auto* mon = app.add_subcommand("monitor", "replay a recorded stream through a stopping rule");
    std::string mon_file;
    double mon_delta = 0.0, mon_v = 0.0, mon_v_sq = 0.0, mon_k = 0.0, mon_alpha = 0.0;
    double mon_prior_odds = 1.0;
    bool mon_composite = false;
    long long mon_horizon = 0, mon_n_min = 0, mon_check_every = 1;
    std::string mon_rule = "bf-two-sided";
    mon->add_option("data", mon_file, "input CSV (header 'value' or 'unit_id,group,value')")
        ->required();
    mon->add_option("--delta", mon_delta, "precise-alternative effect size");
    mon->add_flag("--composite", mon_composite, "use the composite alternative");
    mon->add_option("--v", mon_v, "composite prior standard deviation");
    mon->add_option("--v-sq", mon_v_sq, "composite prior variance");
    mon->add_option("--rule", mon_rule, "stopping rule")->capture_default_str();
    mon->add_option("--k", mon_k, "posterior-odds stopping threshold");
    mon->add_option("--alpha", mon_alpha, "p-value threshold");
    mon->add_option("--n-min", mon_n_min, "minimum sample size");
    mon->add_option("--horizon", mon_horizon, "horizon (default: stream length)");
    mon->add_option("--check-every", mon_check_every, "checkpoint spacing");
    mon->add_option("--prior-odds", mon_prior_odds, "prior odds")->capture_default_str();

    // --- learn-prior ---
    auto* lp = app.add_subcommand("learn-prior", "fit (p, V) from historical experiments");
    std::string lp_file;
    double lp_k = 2.0, lp_tol = 1e-6, lp_init_p = 0.0, lp_init_v_sq = 0.0;
    int lp_max_iter = 1000;
    lp->add_option("history", lp_file, "CSV with header 'delta,n_effective'")->required();
    lp->add_option("--k", lp_k, "lower-bound multiplier for V^2")->capture_default_str();
    lp->add_option("--tol", lp_tol, "convergence tolerance")->capture_default_str();
    lp->add_option("--max-iter", lp_max_iter, "iteration cap")->capture_default_str();
    lp->add_option("--init-p", lp_init_p, "initial p (default: 0.5)");
    lp->add_option("--init-v-sq", lp_init_v_sq, "initial V^2 (default: moment estimate)");

    // --- boundaries ---
    auto* bd = app.add_subcommand("boundaries", "tabulate rejection boundaries over an n-grid");
    double bd_alpha = 0.05, bd_delta = 0.2, bd_v_sq = 0.01, bd_k = 9.0;
    long long bd_n_lo = 10, bd_n_hi = 1000000;
    int bd_points = 25;
    bd->add_option("--alpha", bd_alpha, "NHST level")->capture_default_str();
    bd->add_option("--delta", bd_delta, "precise effect size")->capture_default_str();
    bd->add_option("--v-sq", bd_v_sq, "composite prior variance")->capture_default_str();
    bd->add_option("--k", bd_k, "Bayes-factor threshold")->capture_default_str();
    bd->add_option("--n-lo", bd_n_lo, "grid start")->capture_default_str();
    bd->add_option("--n-hi", bd_n_hi, "grid end")->capture_default_str();
    bd->add_option("--points", bd_points, "log-spaced grid size")->capture_default_str();

    // --- pitfalls ---
    auto* pf = app.add_subcommand("pitfalls", "run an improper-practice demonstration");
    std::string pf_practice = "reanalysis", pf_truth = "h0";
    double pf_delta = 0.2, pf_v = 0.0, pf_v_sq = 0.0, pf_k = 9.0;
    bool pf_composite = false;
    long long pf_horizon = 100, pf_runs = 10000, pf_per_test_n = 100, pf_worlds = 10000;
    int pf_iterations = 20;
    pf->add_option("--practice", pf_practice,
                   "reanalysis|optimal-stopping|continuous-until-win")
        ->capture_default_str();
    pf->add_option("--delta", pf_delta, "precise effect size")->capture_default_str();
    pf->add_flag("--composite", pf_composite, "use the composite alternative");
    pf->add_option("--v", pf_v, "composite prior standard deviation");
    pf->add_option("--v-sq", pf_v_sq, "composite prior variance");
    pf->add_option("--k", pf_k, "posterior-odds threshold")->capture_default_str();
    pf->add_option("--horizon", pf_horizon, "per-run horizon")->capture_default_str();
    pf->add_option("--runs", pf_runs, "runs per hypothesis")->capture_default_str();
    pf->add_option("--per-test-n", pf_per_test_n, "observations per replication")
        ->capture_default_str();
    pf->add_option("--iterations", pf_iterations, "replications per world")
        ->capture_default_str();
    pf->add_option("--worlds", pf_worlds, "number of simulated worlds")->capture_default_str();
    pf->add_option("--truth", pf_truth, "ground truth for continuous-until-win: h0|h1")
        ->check(CLI::IsMember({"h0", "h1"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        fs::create_directories(g.out_dir);
        const fs::path out_dir(g.out_dir);

        if (sim->parsed()) {
            bfmon::StudyConfig cfg;
            if (!sim_config_file.empty()) {
                std::ifstream in(sim_config_file);
                if (!in) throw std::runtime_error("cannot open config " + sim_config_file);
                json jc = json::parse(in);
                bfmon::MonitorSpec spec = bfmon::spec_from_json(jc);
                cfg.rule = spec.rule;
                sim_horizon = spec.horizon;
                sim_check_every = spec.check_every;
                if (jc.contains("runs_per_hypothesis"))
                    sim_runs = jc["runs_per_hypothesis"].get<long long>();
                if (jc.contains("delta")) sim_delta = jc["delta"].get<double>();
                if (jc.contains("v_sq")) {
                    sim_composite = true;
                    sim_v_sq = jc["v_sq"].get<double>();
                }
                if (jc.contains("prior_odds")) sim_prior_odds = jc["prior_odds"].get<double>();
                if (jc.contains("reject_k")) sim_reject_k = jc["reject_k"].get<double>();
            } else {
                cfg.rule = rule_from_flags(sim_rule, sim_horizon, sim_k, sim_alpha, sim_n_min);
            }
            cfg.model = model_from_flags(sim_composite, sim_delta, sim_v, sim_v_sq);
            cfg.runs_per_hypothesis = sim_runs;
            cfg.horizon = sim_horizon;
            cfg.prior = bfmon::PriorOdds(sim_prior_odds);
            cfg.reject_threshold_k = sim_reject_k;
            cfg.seed = g.seed;
            cfg.check_every = sim_check_every;
            cfg.threads = effective_threads(g);

            json config = bfmon::spec_to_json(
                bfmon::MonitorSpec{cfg.rule, cfg.horizon, cfg.check_every});
            config["runs_per_hypothesis"] = cfg.runs_per_hypothesis;
            config["prior_odds"] = cfg.prior.odds;
            config["reject_k"] = cfg.reject_threshold_k;
            if (sim_composite) config["v_sq"] = std::get<bfmon::CompositeNormal>(cfg.model).v_sq;
            else config["delta"] = std::get<bfmon::Precise>(cfg.model).delta;

            if (g.dry_run) {
                std::cout << "config ok\n" << config.dump(2) << "\n";
                return 0;
            }
            bfmon::StudyReport report = bfmon::run_study(cfg);
            const fs::path report_path = out_dir / "study_report.json";
            const fs::path calib_path = out_dir / "calibration.csv";
            const fs::path metrics_path = out_dir / "metrics.json";
            write_text(report_path, bfmon::report_to_json(report).dump(2) + "\n");
            write_text(calib_path, bfmon::calibration_to_csv(report.calibration));
            write_text(metrics_path, bfmon::metrics_to_json(report.metrics).dump(2) + "\n");
            write_manifest(g, "simulate", config, {report_path, calib_path, metrics_path});
            std::cout << bfmon::metrics_to_json(report.metrics).dump(2) << "\n";
            return 0;
        }

        if (mon->parsed()) {
            bfmon::AlternativeModel model =
                model_from_flags(mon_composite, mon_delta, mon_v, mon_v_sq);
            bfmon::MonitorInput input = bfmon::read_monitor_csv(mon_file);
            const long long stream_len = static_cast<long long>(
                input.two_group ? input.group_values.size() : input.values.size());
            const long long horizon = mon_horizon > 0 ? mon_horizon : stream_len;
            bfmon::StoppingRule rule =
                rule_from_flags(mon_rule, horizon, mon_k, mon_alpha, mon_n_min);
            bfmon::PriorOdds prior(mon_prior_odds);

            json config;
            config["data"] = mon_file;
            config["rule"] = bfmon::spec_to_json(bfmon::MonitorSpec{rule, horizon, mon_check_every});
            if (g.dry_run) {
                std::cout << "config ok\n" << config.dump(2) << "\n";
                return 0;
            }
            bfmon::MonitorResult result =
                input.two_group
                    ? bfmon::run_two_group_monitor(input, rule, model, prior, horizon,
                                                   mon_check_every)
                    : bfmon::run_monitor(input.values, rule, model, prior, horizon,
                                         mon_check_every);
            json out = bfmon::monitor_result_to_json(result);
            const fs::path result_path = out_dir / "monitor_result.json";
            write_text(result_path, out.dump(2) + "\n");
            write_manifest(g, "monitor", config, {result_path});
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (lp->parsed()) {
            bfmon::CsvTable table = bfmon::read_csv(lp_file);
            if (table.header != std::vector<std::string>{"delta", "n_effective"})
                throw bfmon::CsvError("expected header 'delta,n_effective' in " + lp_file);
            std::vector<bfmon::HistoricalRecord> records;
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                const long line = table.line_numbers[i];
                records.push_back(
                    {bfmon::parse_double_field(table.rows[i][0], line, "delta"),
                     bfmon::parse_double_field(table.rows[i][1], line, "n_effective")});
                if (!(records.back().n_e > 0.0))
                    throw bfmon::CsvError("line " + std::to_string(line) +
                                          ": n_effective must be positive");
            }
            if (records.size() < 2)
                throw bfmon::CsvError("insufficient data: need at least two records");

            json config{{"history", lp_file}, {"k", lp_k}, {"tol", lp_tol},
                        {"max_iter", lp_max_iter}};
            if (g.dry_run) {
                std::cout << "config ok\n" << config.dump(2) << "\n";
                return 0;
            }
            bfmon::PriorParams init = bfmon::em_default_init(records, lp_k);
            if (lp_init_p > 0.0) init.p = lp_init_p;
            if (lp_init_v_sq > 0.0) init.v_sq = lp_init_v_sq;
            auto [params, trace] = bfmon::em_fit(records, init, lp_tol, lp_max_iter, lp_k);
            json out{{"p", params.p},
                     {"v", std::sqrt(params.v_sq)},
                     {"v_sq", params.v_sq},
                     {"iterations", trace.n_iter},
                     {"converged", trace.converged},
                     {"lower_bound_active", trace.lower_bound_active}};
            if (trace.degenerate)
                std::cerr << "warning: near-unidentifiable fit (v_sq at bound, p < 0.01)\n";
            const fs::path params_path = out_dir / "prior_params.json";
            write_text(params_path, out.dump(2) + "\n");
            write_manifest(g, "learn-prior", config, {params_path});
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (bd->parsed()) {
            if (bd_n_lo < 1 || bd_n_hi < bd_n_lo || bd_points < 2)
                throw std::invalid_argument("boundaries: need 1 <= n-lo <= n-hi and points >= 2");
            std::vector<long long> grid;
            const double llo = std::log(static_cast<double>(bd_n_lo));
            const double lhi = std::log(static_cast<double>(bd_n_hi));
            for (int i = 0; i < bd_points; ++i) {
                long long n = static_cast<long long>(
                    std::llround(std::exp(llo + (lhi - llo) * i / (bd_points - 1))));
                if (grid.empty() || n > grid.back()) grid.push_back(n);
            }
            json config{{"alpha", bd_alpha}, {"delta", bd_delta}, {"v_sq", bd_v_sq},
                        {"k", bd_k},         {"n_lo", bd_n_lo},   {"n_hi", bd_n_hi},
                        {"points", bd_points}};
            if (g.dry_run) {
                std::cout << "config ok\n" << config.dump(2) << "\n";
                return 0;
            }
            auto table = bfmon::boundary_table(grid, bd_alpha, bd_delta, bd_v_sq, bd_k);
            const fs::path csv_path = out_dir / "boundaries.csv";
            write_text(csv_path, bfmon::boundary_table_to_csv(table));
            write_manifest(g, "boundaries", config, {csv_path});
            std::cout << bfmon::boundary_table_to_csv(table);
            return 0;
        }

        if (pf->parsed()) {
            bfmon::AlternativeModel model = model_from_flags(pf_composite, pf_delta, pf_v, pf_v_sq);
            json config{{"practice", pf_practice}, {"k", pf_k}};
            if (g.dry_run) {
                std::cout << "config ok\n" << config.dump(2) << "\n";
                return 0;
            }
            bfmon::PitfallReport rep;
            if (pf_practice == "reanalysis" || pf_practice == "optimal-stopping") {
                bfmon::StudyConfig cfg;
                cfg.runs_per_hypothesis = pf_runs;
                cfg.horizon = pf_horizon;
                cfg.model = model;
                cfg.rule = bfmon::StoppingRule::fixed_horizon(pf_horizon);
                cfg.reject_threshold_k = pf_k;
                cfg.seed = g.seed;
                rep = pf_practice == "reanalysis" ? bfmon::demo_reanalysis(cfg)
                                                  : bfmon::demo_optimal_stopping(cfg);
            } else if (pf_practice == "continuous-until-win") {
                rep = bfmon::demo_continuous_until_win(
                    pf_iterations, pf_per_test_n, pf_k, model,
                    pf_truth == "h0" ? bfmon::Truth::H0 : bfmon::Truth::H1, g.seed, pf_worlds);
            } else {
                throw std::invalid_argument("unknown --practice '" + pf_practice + "'");
            }
            json out = bfmon::pitfall_report_to_json(rep);
            const fs::path report_path = out_dir / "pitfall_report.json";
            const fs::path calib_path = out_dir / "pitfall_calibration.csv";
            write_text(report_path, out.dump(2) + "\n");
            std::vector<fs::path> artifacts{report_path};
            if (!rep.calibration.empty()) {
                write_text(calib_path, bfmon::calibration_to_csv(rep.calibration));
                artifacts.push_back(calib_path);
            }
            write_manifest(g, "pitfalls", config, artifacts);
            std::cout << out.dump(2) << "\n";
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bfmon::CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
