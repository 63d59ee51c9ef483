#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "trustdyn/analysis.hpp"
#include "trustdyn/classifier.hpp"
#include "trustdyn/clustering.hpp"
#include "trustdyn/csv.hpp"
#include "trustdyn/estimation.hpp"
#include "trustdyn/scenario.hpp"
#include "trustdyn/trust_model.hpp"

// Batch pipeline: simulate -> fit -> cluster -> classify -> analyze ->
// report, each stage reading and writing the CSV formats below. Everything
// is keyed off one mandatory seed; two runs with the same configuration
// produce byte-identical outputs regardless of thread count.

namespace trustdyn {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : ConfigError {
    using ConfigError::ConfigError;
};
struct UnknownKey : ConfigError {
    using ConfigError::ConfigError;
};
struct MissingRequired : ConfigError {
    using ConfigError::ConfigError;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ClusteringMode { PerLevel, Pooled };

struct PipelineConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;  // seed is mandatory; no wall-clock default
    std::string out_dir = "out";
    std::vector<int> reliability_mix = {62, 64, 66, 68, 70};
    CohortSizes cohort_sizes;
    ClusteringMode clustering_mode = ClusteringMode::PerLevel;
    int kmax = 8;
    int kmeans_restarts = 8;
    std::vector<int> grid_max_depth = {2, 3, 4, 5, 6, 7, 8};
    std::vector<int> grid_min_leaf = {1, 2, 4, 8};
    bool stratified_split = false;
    BehaviorConfig behavior;
    double param_noise_sd = 0.1;
    int threads = 0;  // 0 = hardware concurrency
    bool quiet = false;
};

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            std::size_t pos = 0;
            const int v = std::stoi(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ParseError("bad integer list for key '" + key + "': " + s);
        }
    }
    if (out.empty()) throw ParseError("empty list for key '" + key + "'");
    return out;
}

inline double parse_real(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad real for key '" + key + "': " + s);
    }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ParseError("bad boolean for key '" + key + "': " + s);
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

// Line-oriented key=value configuration; '#' starts a comment, unknown keys
// are rejected.
inline PipelineConfig parse_config_text(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ParseError("line " + std::to_string(line_no) + ": expected key=value");

        if (key == "seed") {
            try {
                cfg.seed = std::stoull(val);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) + ": bad seed");
            }
            cfg.seed_set = true;
        } else if (key == "out_dir") {
            cfg.out_dir = val;
        } else if (key == "reliability_mix") {
            cfg.reliability_mix = detail::parse_int_list(val, key);
            for (int p : cfg.reliability_mix) {
                try {
                    ReliabilityLevel::from_percent(p);
                } catch (const std::invalid_argument& e) {
                    throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
                }
            }
        } else if (key == "cohort_sizes") {
            const auto v = detail::parse_int_list(val, key);
            if (v.size() != 3) throw ParseError("cohort_sizes needs exactly 3 integers");
            cfg.cohort_sizes = CohortSizes{v[0], v[1], v[2]};
        } else if (key == "clustering_mode") {
            if (val == "per_level") cfg.clustering_mode = ClusteringMode::PerLevel;
            else if (val == "pooled") cfg.clustering_mode = ClusteringMode::Pooled;
            else throw ParseError("clustering_mode must be per_level or pooled");
        } else if (key == "kmax") {
            cfg.kmax = static_cast<int>(detail::parse_real(val, key));
        } else if (key == "kmeans_restarts") {
            cfg.kmeans_restarts = static_cast<int>(detail::parse_real(val, key));
        } else if (key == "grid_max_depth") {
            cfg.grid_max_depth = detail::parse_int_list(val, key);
        } else if (key == "grid_min_leaf") {
            cfg.grid_min_leaf = detail::parse_int_list(val, key);
        } else if (key == "stratified_split") {
            cfg.stratified_split = detail::parse_bool(val, key);
        } else if (key == "blind_follow_bdm") {
            cfg.behavior.blind_follow_rate[0] = detail::parse_real(val, key);
        } else if (key == "blind_follow_disbeliever") {
            cfg.behavior.blind_follow_rate[1] = detail::parse_real(val, key);
        } else if (key == "blind_follow_oscillator") {
            cfg.behavior.blind_follow_rate[2] = detail::parse_real(val, key);
        } else if (key == "cross_check_accuracy") {
            cfg.behavior.cross_check_accuracy = detail::parse_real(val, key);
        } else if (key == "blind_time_ms") {
            const auto v = detail::parse_int_list(val, key);
            if (v.size() != 2) throw ParseError("blind_time_ms needs lo,hi");
            cfg.behavior.blind_time_lo_ms = v[0];
            cfg.behavior.blind_time_hi_ms = v[1];
        } else if (key == "cross_time_ms") {
            const auto v = detail::parse_int_list(val, key);
            if (v.size() != 2) throw ParseError("cross_time_ms needs lo,hi");
            cfg.behavior.cross_time_lo_ms = v[0];
            cfg.behavior.cross_time_hi_ms = v[1];
        } else if (key == "tracking_error_max_px") {
            cfg.behavior.tracking_error_max_px = detail::parse_real(val, key);
        } else if (key == "param_noise_sd") {
            cfg.param_noise_sd = detail::parse_real(val, key);
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(detail::parse_real(val, key));
        } else if (key == "quiet") {
            cfg.quiet = detail::parse_bool(val, key);
        } else {
            throw UnknownKey("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (!cfg.seed_set) throw MissingRequired("missing required key: seed");
    return cfg;
}

inline PipelineConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return parse_config_text(os.str());
}

// Canonical snapshot of the effective configuration, reproduced verbatim in
// the run manifest. Placement knobs (out_dir, threads, quiet) are omitted:
// they do not affect the produced bytes.
inline std::string config_snapshot(const PipelineConfig& cfg) {
    std::ostringstream os;
    auto list = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(v[i]);
        }
        return s;
    };
    os << "seed=" << cfg.seed << '\n';
    os << "reliability_mix=" << list(cfg.reliability_mix) << '\n';
    os << "cohort_sizes=" << cfg.cohort_sizes.n_bdm << ',' << cfg.cohort_sizes.n_disbeliever
       << ',' << cfg.cohort_sizes.n_oscillator << '\n';
    os << "clustering_mode="
       << (cfg.clustering_mode == ClusteringMode::PerLevel ? "per_level" : "pooled") << '\n';
    os << "kmax=" << cfg.kmax << '\n';
    os << "kmeans_restarts=" << cfg.kmeans_restarts << '\n';
    os << "grid_max_depth=" << list(cfg.grid_max_depth) << '\n';
    os << "grid_min_leaf=" << list(cfg.grid_min_leaf) << '\n';
    os << "stratified_split=" << (cfg.stratified_split ? 1 : 0) << '\n';
    os << "blind_follow_bdm=" << format_real(cfg.behavior.blind_follow_rate[0]) << '\n';
    os << "blind_follow_disbeliever=" << format_real(cfg.behavior.blind_follow_rate[1]) << '\n';
    os << "blind_follow_oscillator=" << format_real(cfg.behavior.blind_follow_rate[2]) << '\n';
    os << "cross_check_accuracy=" << format_real(cfg.behavior.cross_check_accuracy) << '\n';
    os << "tracking_error_max_px=" << format_real(cfg.behavior.tracking_error_max_px) << '\n';
    os << "param_noise_sd=" << format_real(cfg.param_noise_sd) << '\n';
    return os.str();
}

namespace detail {

// Independent per-item work fanned out over a fixed thread count. Items are
// pure functions of their index, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        threads = hc > 0 ? static_cast<int>(hc) : 1;
    }
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<std::size_t>(threads, n);
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage outputs

struct FitOutput {
    std::vector<FitResult> mle;
    std::vector<FitResult> map_final;
    std::vector<std::vector<double>> online_pred;  // prediction of t_m before seeing it
    std::vector<std::vector<double>> final_pred;   // trajectory under the final theta
};

struct ScreeRow {
    std::string level;  // "all" in pooled mode, else the percent
    int k = 0;
    double wcss = 0.0;
    int selected = 0;
};

struct ClusterOutput {
    std::vector<ClusterAssignment> assignments;  // ordered by agent id
    std::vector<ScreeRow> scree;
};

struct ClassifyOutput {
    HyperParams best;
    DecisionTree tree;
    EvalReport report;
    std::size_t n_train = 0, n_test = 0;
};

struct IngestResult {
    std::vector<TrustTrajectory> trajectories;  // ordered by agent id
    std::vector<int> reliability_percent;       // recovered from the outcome mix
    std::vector<double> blind_ratio, cross_ratio;
    std::vector<double> tracking_total, detection_total, total_score;
    std::vector<std::string> notes;  // validation findings (agents still loaded)
};

// ---------------------------------------------------------------------------
// CSV emission

inline std::string trajectories_csv(const std::vector<AgentRecord>& agents) {
    CsvWriter w;
    w.header({"agent_id", "trial", "reported_trust", "outcome_class", "behavior",
              "detection_score", "tracking_score"});
    for (const auto& a : agents) {
        for (const auto& t : a.trials) {
            w.row_strings({std::to_string(a.agent_id), std::to_string(t.trial.index),
                           format_real(t.reported_trust),
                           outcome_class_name(t.trial.outcome_class),
                           t.behavior == Behavior::BlindFollow ? "blind" : "cross",
                           format_real(t.detection_score),
                           std::to_string(t.tracking_score)});
        }
    }
    return w.str();
}

inline std::string profiles_csv(const std::vector<AgentRecord>& agents) {
    CsvWriter w;
    std::vector<std::string> header = {"agent_id"};
    for (const auto& d : characteristic_dims()) header.push_back(d.name);
    w.header(header);
    for (const auto& a : agents) {
        std::vector<std::string> row = {std::to_string(a.agent_id)};
        for (double v : a.profile.values) row.push_back(format_real(v));
        w.row_strings(row);
    }
    return w.str();
}

inline std::string schedule_csv(const PipelineConfig& cfg) {
    CsvWriter w;
    w.header({"level", "trial", "outcome_class"});
    for (std::size_t li = 0; li < cfg.reliability_mix.size(); ++li) {
        const auto level = ReliabilityLevel::from_percent(cfg.reliability_mix[li]);
        const TrialSchedule sched =
            generate_schedule(level, derive_seed(cfg.seed, 100000 + li));
        for (const auto& t : sched)
            w.row_strings({std::to_string(level.percent), std::to_string(t.index),
                           outcome_class_name(t.outcome_class)});
    }
    return w.str();
}

inline std::string params_csv(const FitOutput& fit, const std::vector<int>& agent_ids) {
    CsvWriter w;
    w.header({"agent_id", "mle_alpha0", "mle_beta0", "mle_gain_success", "mle_gain_failure",
              "mle_loglik", "mle_converged", "mle_degenerate", "map_alpha0", "map_beta0",
              "map_gain_success", "map_gain_failure", "map_logpost", "map_converged"});
    for (std::size_t i = 0; i < fit.mle.size(); ++i) {
        const auto& m = fit.mle[i];
        const auto& p = fit.map_final[i];
        w.row_strings({std::to_string(agent_ids[i]), format_real(m.params.alpha0),
                       format_real(m.params.beta0), format_real(m.params.gain_success),
                       format_real(m.params.gain_failure), format_real(m.objective_value),
                       std::to_string(m.converged ? 1 : 0),
                       std::to_string(m.degenerate ? 1 : 0), format_real(p.params.alpha0),
                       format_real(p.params.beta0), format_real(p.params.gain_success),
                       format_real(p.params.gain_failure), format_real(p.objective_value),
                       std::to_string(p.converged ? 1 : 0)});
    }
    return w.str();
}

inline std::string predictions_csv(const FitOutput& fit, const std::vector<int>& agent_ids) {
    CsvWriter w;
    w.header({"agent_id", "trial", "predicted_online", "predicted_final"});
    for (std::size_t i = 0; i < fit.online_pred.size(); ++i) {
        for (std::size_t t = 0; t < fit.online_pred[i].size(); ++t) {
            w.row_strings({std::to_string(agent_ids[i]), std::to_string(t + 1),
                           format_real(fit.online_pred[i][t]),
                           format_real(fit.final_pred[i][t])});
        }
    }
    return w.str();
}

inline std::string clusters_csv(const ClusterOutput& out) {
    CsvWriter w;
    w.header({"agent_id", "label", "avg_log_trust", "rmse", "centroid_distance"});
    for (const auto& a : out.assignments) {
        w.row_strings({std::to_string(a.agent_id), archetype_name(a.label),
                       format_real(a.features.avg_log_trust), format_real(a.features.rmse),
                       format_real(a.centroid_distance)});
    }
    return w.str();
}

inline std::string scree_csv(const ClusterOutput& out) {
    CsvWriter w;
    w.header({"level", "k", "wcss", "selected"});
    for (const auto& r : out.scree)
        w.row_strings({r.level, std::to_string(r.k), format_real(r.wcss),
                       std::to_string(r.selected)});
    return w.str();
}

inline std::string eval_csv(const ClassifyOutput& out) {
    CsvWriter w;
    std::vector<std::string> header = {"accuracy",        "weighted_f1",
                                       "best_max_depth",  "best_min_samples_leaf",
                                       "n_train",         "n_test",
                                       "recall_bdm",      "recall_disbeliever",
                                       "recall_oscillator"};
    const char* cls[3] = {"bdm", "disbeliever", "oscillator"};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            header.push_back(std::string("cm_") + cls[i] + "_as_" + cls[j]);
    w.header(header);
    std::vector<std::string> row = {format_real(out.report.accuracy),
                                    format_real(out.report.weighted_f1),
                                    std::to_string(out.best.max_depth),
                                    std::to_string(out.best.min_samples_leaf),
                                    std::to_string(out.n_train),
                                    std::to_string(out.n_test),
                                    format_real(out.report.per_class_recall[0]),
                                    format_real(out.report.per_class_recall[1]),
                                    format_real(out.report.per_class_recall[2])};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) row.push_back(std::to_string(out.report.confusion[i][j]));
    w.row_strings(row);
    return w.str();
}

// ---------------------------------------------------------------------------
// Ingestion

inline IngestResult ingest_trajectories_text(const std::string& text) {
    const CsvReader csv(text);
    if (csv.size() == 0) throw EmptyFile("trajectories: no data rows");
    const std::size_t c_agent = csv.column("agent_id");
    const std::size_t c_trial = csv.column("trial");
    const std::size_t c_trust = csv.column("reported_trust");
    const std::size_t c_outcome = csv.column("outcome_class");
    const std::size_t c_behavior = csv.column("behavior");
    const std::size_t c_det = csv.column("detection_score");
    const std::size_t c_trk = csv.column("tracking_score");

    struct Row {
        int trial;
        double trust;
        OutcomeClass oc;
        bool blind;
        double det;
        double trk;
    };
    std::map<int, std::vector<Row>> by_agent;
    for (std::size_t r = 0; r < csv.size(); ++r) {
        Row row;
        const int agent = static_cast<int>(csv.integer(r, c_agent));
        row.trial = static_cast<int>(csv.integer(r, c_trial));
        row.trust = csv.real(r, c_trust);
        row.oc = outcome_class_from_name(csv.cell(r, c_outcome));
        row.blind = (csv.cell(r, c_behavior) == "blind");
        row.det = csv.real(r, c_det);
        row.trk = csv.real(r, c_trk);
        by_agent[agent].push_back(row);
    }

    IngestResult out;
    std::size_t modal_len = 0;
    std::map<std::size_t, int> len_counts;
    for (const auto& [id, rows] : by_agent) ++len_counts[rows.size()];
    int best = 0;
    for (const auto& [len, cnt] : len_counts)
        if (cnt > best) { best = cnt; modal_len = len; }

    for (auto& [id, rows] : by_agent) {
        std::sort(rows.begin(), rows.end(),
                  [](const Row& a, const Row& b) { return a.trial < b.trial; });
        TrustTrajectory traj;
        traj.agent_id = id;
        int n_success = 0;
        double blind = 0, det = 0, trk = 0;
        for (const auto& row : rows) {
            const double clamped = clamp_report(row.trust);
            if (clamped != row.trust)
                out.notes.push_back("agent " + std::to_string(id) + " trial " +
                                    std::to_string(row.trial) + ": trust clamped");
            traj.reports.push_back(clamped);
            const Outcome o = detector_outcome(row.oc);
            traj.outcomes.push_back(o);
            n_success += (o == Outcome::Success);
            blind += row.blind ? 1.0 : 0.0;
            det += row.det;
            trk += row.trk;
        }
        if (rows.size() != modal_len)
            out.notes.push_back("agent " + std::to_string(id) + ": trial count " +
                                std::to_string(rows.size()) + " differs from modal " +
                                std::to_string(modal_len));
        const double n = static_cast<double>(rows.size());
        out.trajectories.push_back(std::move(traj));
        out.reliability_percent.push_back(
            static_cast<int>(std::lround(100.0 * n_success / n)));
        out.blind_ratio.push_back(blind / n);
        out.cross_ratio.push_back(1.0 - blind / n);
        out.detection_total.push_back(det);
        out.tracking_total.push_back(trk);
        out.total_score.push_back(det + trk);
    }
    return out;
}

inline IngestResult ingest_trajectories(const std::string& path) {
    return ingest_trajectories_text(read_file(path));
}

// ---------------------------------------------------------------------------
// Stages

inline std::vector<AgentRecord> stage_simulate(const PipelineConfig& cfg) {
    return generate_cohort(cfg.cohort_sizes, cfg.reliability_mix, cfg.seed, cfg.behavior,
                           cfg.param_noise_sd);
}

// MLE per agent, then a leave-one-out cohort prior and a trial-by-trial MAP
// replay per agent. The replay refits after every trial; each refit warm
// starts from the previous optimum (plus the prior mode) rather than the
// full lattice, which keeps the 100-step replay tractable without changing
// the objective.
inline FitOutput stage_fit(const PipelineConfig& cfg,
                           const std::vector<TrustTrajectory>& trajectories) {
    const std::size_t n = trajectories.size();
    if (n < 3) throw DataError("fit: need at least 3 agents for a leave-one-out prior");
    FitOutput out;
    out.mle.resize(n);
    out.map_final.resize(n);
    out.online_pred.resize(n);
    out.final_pred.resize(n);

    detail::parallel_for(n, cfg.threads,
                         [&](std::size_t i) { out.mle[i] = fit_mle(trajectories[i]); });

    detail::parallel_for(n, cfg.threads, [&](std::size_t i) {
        std::vector<TrustParams> others;
        others.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) others.push_back(out.mle[j].params);
        const CohortPrior prior = fit_prior(others);

        const auto& traj = trajectories[i];
        const std::size_t len = traj.size();
        std::vector<double> online;
        online.reserve(len);
        FitResult cur = fit_map({}, {}, prior);  // prior mode before any report
        for (std::size_t m = 1; m <= len; ++m) {
            const std::vector<double> reports(traj.reports.begin(),
                                              traj.reports.begin() + (m - 1));
            if (m > 1) {
                cur = fit_map_warm(reports, traj.outcomes, prior, {cur.params});
            }
            // predict t_m from the detector history through trial m
            int ns = 0, nf = 0;
            for (std::size_t t = 0; t < m; ++t)
                (traj.outcomes[t] == Outcome::Success ? ns : nf) += 1;
            online.push_back(predict(state_after(cur.params, ns, nf)));
        }
        // final theta sees the full report history
        const FitResult fin = fit_map_warm(traj.reports, traj.outcomes, prior, {cur.params});
        out.map_final[i] = fin;
        out.online_pred[i] = std::move(online);
        out.final_pred[i] = predicted_trajectory(fin.params, traj.outcomes);
    });
    return out;
}

namespace detail {

struct GroupClusterResult {
    std::vector<ClusterAssignment> assignments;
    std::vector<ScreeRow> scree;
};

inline GroupClusterResult cluster_group(const std::string& level_label,
                                        const std::vector<int>& agent_ids,
                                        const std::vector<TrajectoryFeatures>& feats,
                                        const PipelineConfig& cfg, std::uint64_t seed) {
    GroupClusterResult res;
    if (feats.size() < 3)
        throw DataError("cluster: group '" + level_label + "' has fewer than 3 agents");
    const FeatureScaler scaler = FeatureScaler::fit(feats);
    std::vector<TrajectoryFeatures> z;
    z.reserve(feats.size());
    for (const auto& f : feats) z.push_back(scaler.transform(f));

    const std::vector<double> wcss = scan_wcss(z, cfg.kmax, seed, cfg.kmeans_restarts);
    const int selected = elbow_select(wcss);
    for (std::size_t k = 1; k <= wcss.size(); ++k)
        res.scree.push_back({level_label, static_cast<int>(k), wcss[k - 1],
                             static_cast<int>(k) == selected ? 1 : 0});

    const KMeansRun run = kmeans_best_of(z, 3, derive_seed(seed, 3), cfg.kmeans_restarts);
    const auto labels = label_clusters(run.model);
    for (std::size_t i = 0; i < feats.size(); ++i) {
        ClusterAssignment a;
        a.agent_id = agent_ids[i];
        a.label = labels[static_cast<std::size_t>(run.assignments[i])];
        a.features = feats[i];
        a.centroid_distance = std::sqrt(
            detail::sqdist(z[i], run.model.centroids[run.assignments[i]]));
        res.assignments.push_back(a);
    }
    return res;
}

}  // namespace detail

// Features per agent (reports vs fitted predictions), then seeded k-means
// with elbow selection. Default groups agents by reliability level, with a
// pooled mode over the whole cohort.
inline ClusterOutput stage_cluster(const PipelineConfig& cfg,
                                   const std::vector<TrustTrajectory>& trajectories,
                                   const std::vector<std::vector<double>>& predictions,
                                   const std::vector<int>& reliability_percent) {
    const std::size_t n = trajectories.size();
    if (predictions.size() != n || reliability_percent.size() != n)
        throw DataError("cluster: trajectories/predictions/levels size mismatch");
    std::vector<TrajectoryFeatures> feats(n);
    for (std::size_t i = 0; i < n; ++i)
        feats[i] = compute_features(trajectories[i], predictions[i]);

    std::map<std::string, std::pair<std::vector<int>, std::vector<TrajectoryFeatures>>> groups;
    if (cfg.clustering_mode == ClusteringMode::Pooled) {
        for (std::size_t i = 0; i < n; ++i) {
            groups["all"].first.push_back(trajectories[i].agent_id);
            groups["all"].second.push_back(feats[i]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const std::string label = std::to_string(reliability_percent[i]);
            groups[label].first.push_back(trajectories[i].agent_id);
            groups[label].second.push_back(feats[i]);
        }
    }

    ClusterOutput out;
    std::size_t group_index = 0;
    for (const auto& [label, group] : groups) {
        const auto res = detail::cluster_group(label, group.first, group.second, cfg,
                                               derive_seed(cfg.seed, 200000 + group_index));
        out.assignments.insert(out.assignments.end(), res.assignments.begin(),
                               res.assignments.end());
        out.scree.insert(out.scree.end(), res.scree.begin(), res.scree.end());
        ++group_index;
    }
    std::sort(out.assignments.begin(), out.assignments.end(),
              [](const ClusterAssignment& a, const ClusterAssignment& b) {
                  return a.agent_id < b.agent_id;
              });
    return out;
}

inline ClassifyOutput stage_classify(const PipelineConfig& cfg,
                                     const std::vector<FeatureVector>& profiles,
                                     const std::vector<int>& labels) {
    if (profiles.size() != labels.size() || profiles.empty())
        throw DataError("classify: bad profile/label inputs");
    LabeledDataset all;
    all.features = profiles;
    all.labels = labels;

    const TrainTestSplit split =
        split_80_20(labels, derive_seed(cfg.seed, 300000), cfg.stratified_split);
    LabeledDataset train, test;
    for (int i : split.train_idx) {
        train.features.push_back(all.features[i]);
        train.labels.push_back(all.labels[i]);
    }
    for (int i : split.test_idx) {
        test.features.push_back(all.features[i]);
        test.labels.push_back(all.labels[i]);
    }

    const CvResult cv = cross_validate(train, cfg.grid_max_depth, cfg.grid_min_leaf,
                                       derive_seed(cfg.seed, 300001));
    ClassifyOutput out;
    out.best = cv.best;
    out.tree = train_tree(train, cv.best.max_depth, cv.best.min_samples_leaf);
    out.report = evaluate(out.tree, test);
    out.n_train = train.size();
    out.n_test = test.size();
    return out;
}

// ANOVA + Bonferroni over every characteristic dimension and the behavior
// and performance metrics, plus the cluster-by-level chi-squared test.
inline std::string stage_analyze(const std::vector<CharacteristicsProfile>& profiles,
                                 const std::vector<int>& labels,
                                 const IngestResult& metrics) {
    const std::size_t n = profiles.size();
    if (labels.size() != n || metrics.trajectories.size() != n)
        throw DataError("analyze: input size mismatch");

    std::vector<std::string> dim_names;
    std::vector<std::vector<double>> values(n);
    for (const auto& d : characteristic_dims()) dim_names.push_back(d.name);
    for (std::size_t i = 0; i < n; ++i)
        values[i].assign(profiles[i].values.begin(), profiles[i].values.end());
    const std::vector<std::pair<std::string, const std::vector<double>*>> extras = {
        {"blindly_following", &metrics.blind_ratio},
        {"cross_checking", &metrics.cross_ratio},
        {"tracking_score_total", &metrics.tracking_total},
        {"detection_score_total", &metrics.detection_total},
        {"total_score", &metrics.total_score},
    };
    for (const auto& [name, col] : extras) {
        dim_names.push_back(name);
        for (std::size_t i = 0; i < n; ++i) values[i].push_back((*col)[i]);
    }

    CsvWriter w;
    w.header({"dimension", "mean_bdm", "sd_bdm", "mean_disbeliever", "sd_disbeliever",
              "mean_oscillator", "sd_oscillator", "f_stat", "df_between", "df_within",
              "p_value", "p_bdm_vs_disbeliever", "p_bdm_vs_oscillator",
              "p_disbeliever_vs_oscillator"});

    const SummaryTable summary = summary_table(values, labels, 3, dim_names);
    std::array<int, 3> cluster_n{0, 0, 0};
    for (int l : labels) ++cluster_n[l];
    const bool anova_ok = cluster_n[0] >= 2 && cluster_n[1] >= 2 && cluster_n[2] >= 2;

    for (std::size_t d = 0; d < dim_names.size(); ++d) {
        std::vector<std::string> row = {dim_names[d]};
        for (int c = 0; c < 3; ++c) {
            const SummaryCell& cell = summary.cells[d][c];
            row.push_back(cell.n > 0 ? format_real(cell.mean) : "NA");
            row.push_back(cell.sd ? format_real(*cell.sd) : "NA");
        }
        if (anova_ok) {
            std::vector<std::vector<double>> groups(3);
            for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(values[i][d]);
            const AnovaResult a = one_way_anova(groups);
            const auto post = pairwise_bonferroni(groups);
            row.push_back(a.zero_within_variance ? "inf" : format_real(a.f_stat));
            row.push_back(std::to_string(a.df_between));
            row.push_back(std::to_string(a.df_within));
            row.push_back(format_real(a.p_value));
            for (const auto& t : post) row.push_back(format_real(t.adjusted_p));
        } else {
            for (int c = 0; c < 7; ++c) row.push_back("NA");
        }
        w.row_strings(row);
    }

    // cluster distribution across reliability levels
    std::map<int, int> level_index;
    for (std::size_t i = 0; i < n; ++i)
        level_index.emplace(metrics.reliability_percent[i],
                            static_cast<int>(level_index.size()));
    if (level_index.size() >= 2) {
        std::vector<std::vector<int>> table(3, std::vector<int>(level_index.size(), 0));
        for (std::size_t i = 0; i < n; ++i)
            ++table[labels[i]][level_index[metrics.reliability_percent[i]]];
        try {
            const ContingencyResult chi = chi_squared_independence(table);
            w.row_strings({"cluster_by_level_chi2", "NA", "NA", "NA", "NA", "NA", "NA",
                           format_real(chi.chi2), std::to_string(chi.df), "0",
                           format_real(chi.p_value), "NA", "NA", "NA"});
        } catch (const DegenerateMargins&) {
            w.row_strings({"cluster_by_level_chi2", "NA", "NA", "NA", "NA", "NA", "NA",
                           "NA", "NA", "NA", "NA", "NA", "NA", "NA"});
        }
    }
    return w.str();
}

inline std::string agent_report_tsv(const TrustTrajectory& traj,
                                    const std::vector<double>& predicted) {
    CsvWriter w('\t');
    w.header({"trial", "reported_trust", "predicted_trust", "detector_success"});
    for (std::size_t t = 0; t < traj.size(); ++t) {
        w.row_strings({std::to_string(t + 1), format_real(traj.reports[t]),
                       format_real(predicted[t]),
                       traj.outcomes[t] == Outcome::Success ? "1" : "0"});
    }
    return w.str();
}

}  // namespace trustdyn
