#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "trustdyn/pipeline.hpp"

// Subcommand driver shared by the CLI and the integration tests. Each stage
// reads its inputs from the output directory (or from the in-memory results
// of earlier stages in an `all` run), writes its files, and removes them
// again if it fails partway.

namespace trustdyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitNumericalError = 4;

namespace detail {

namespace fs = std::filesystem;

inline std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

class StageFiles {
public:
    explicit StageFiles(std::string dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& content) {
        const std::string path = join(dir_, name);
        fs::create_directories(fs::path(path).parent_path());
        write_file(path, content);
        written_.push_back(path);
    }

    // Partial outputs are removed when a stage throws.
    void rollback() {
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written_.clear();
    }

    // Files from a completed stage are no longer rollback candidates.
    void commit(std::vector<std::string>& sink) {
        sink.insert(sink.end(), written_.begin(), written_.end());
        written_.clear();
    }

    const std::vector<std::string>& written() const { return written_; }

private:
    std::string dir_;
    std::vector<std::string> written_;
};

struct ChainState {
    std::vector<AgentRecord> agents;          // populated by simulate in `all`
    bool have_agents = false;
    IngestResult ingest;
    bool have_ingest = false;
    FitOutput fit;
    bool have_fit = false;
    ClusterOutput clusters;
    bool have_clusters = false;
    std::vector<std::string> all_written;
};

inline IngestResult& load_trajectories(const PipelineConfig& cfg, ChainState& st) {
    if (!st.have_ingest) {
        const std::string path = join(cfg.out_dir, "trajectories.csv");
        if (!fs::exists(path))
            throw DataError("missing " + path + " (run the simulate stage first)");
        st.ingest = ingest_trajectories(path);
        st.have_ingest = true;
    }
    return st.ingest;
}

inline void load_predictions(const PipelineConfig& cfg, ChainState& st) {
    if (st.have_fit) return;
    const std::string path = join(cfg.out_dir, "predictions.csv");
    if (!fs::exists(path))
        throw DataError("missing " + path + " (run the fit stage first)");
    const CsvReader csv(read_file(path));
    const std::size_t c_agent = csv.column("agent_id");
    const std::size_t c_online = csv.column("predicted_online");
    const std::size_t c_final = csv.column("predicted_final");
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_agent;
    for (std::size_t r = 0; r < csv.size(); ++r) {
        auto& dst = by_agent[static_cast<int>(csv.integer(r, c_agent))];
        dst.first.push_back(csv.real(r, c_online));
        dst.second.push_back(csv.real(r, c_final));
    }
    st.fit.online_pred.clear();
    st.fit.final_pred.clear();
    for (auto& [id, preds] : by_agent) {
        st.fit.online_pred.push_back(std::move(preds.first));
        st.fit.final_pred.push_back(std::move(preds.second));
    }
    st.have_fit = true;
}

inline std::vector<CharacteristicsProfile> load_profiles(const PipelineConfig& cfg) {
    const std::string path = join(cfg.out_dir, "profiles.csv");
    if (!fs::exists(path))
        throw DataError("missing " + path + " (run the simulate stage first)");
    const CsvReader csv(read_file(path));
    std::map<int, CharacteristicsProfile> by_agent;
    const std::size_t c_agent = csv.column("agent_id");
    const auto& dims = characteristic_dims();
    std::vector<std::size_t> cols;
    for (const auto& d : dims) cols.push_back(csv.column(d.name));
    for (std::size_t r = 0; r < csv.size(); ++r) {
        CharacteristicsProfile p;
        for (int i = 0; i < kNumCharacteristicDims; ++i) p.values[i] = csv.real(r, cols[i]);
        by_agent[static_cast<int>(csv.integer(r, c_agent))] = p;
    }
    std::vector<CharacteristicsProfile> out;
    out.reserve(by_agent.size());
    for (auto& [id, p] : by_agent) out.push_back(p);
    return out;
}

inline std::vector<int> load_labels(const PipelineConfig& cfg) {
    const std::string path = join(cfg.out_dir, "clusters.csv");
    if (!fs::exists(path))
        throw DataError("missing " + path + " (run the cluster stage first)");
    const CsvReader csv(read_file(path));
    const std::size_t c_agent = csv.column("agent_id");
    const std::size_t c_label = csv.column("label");
    std::map<int, int> by_agent;
    for (std::size_t r = 0; r < csv.size(); ++r)
        by_agent[static_cast<int>(csv.integer(r, c_agent))] =
            static_cast<int>(archetype_from_name(csv.cell(r, c_label)));
    std::vector<int> out;
    out.reserve(by_agent.size());
    for (auto& [id, l] : by_agent) out.push_back(l);
    return out;
}

inline void note(const PipelineConfig& cfg, const std::string& msg) {
    if (!cfg.quiet) std::cout << msg << '\n';
}

inline void run_simulate(const PipelineConfig& cfg, ChainState& st, StageFiles& files) {
    st.agents = stage_simulate(cfg);
    st.have_agents = true;
    files.write("trajectories.csv", trajectories_csv(st.agents));
    files.write("profiles.csv", profiles_csv(st.agents));
    files.write("schedule.csv", schedule_csv(cfg));
    note(cfg, "[simulate] " + std::to_string(st.agents.size()) + " agents -> " +
                  cfg.out_dir);
    // chain the in-memory ingest view so later stages need not re-read
    st.ingest = ingest_trajectories_text(trajectories_csv(st.agents));
    st.have_ingest = true;
}

inline void run_fit(const PipelineConfig& cfg, ChainState& st, StageFiles& files) {
    IngestResult& data = load_trajectories(cfg, st);
    st.fit = stage_fit(cfg, data.trajectories);
    st.have_fit = true;
    std::vector<int> ids;
    for (const auto& t : data.trajectories) ids.push_back(t.agent_id);
    files.write("params.csv", params_csv(st.fit, ids));
    files.write("predictions.csv", predictions_csv(st.fit, ids));
    int degenerate = 0, nonconverged = 0;
    for (const auto& f : st.fit.mle) {
        degenerate += f.degenerate;
        nonconverged += !f.converged;
    }
    if (nonconverged > 0)
        throw NumericalError("fit: " + std::to_string(nonconverged) +
                             " agents failed to converge");
    note(cfg, "[fit] " + std::to_string(st.fit.mle.size()) + " agents fitted (" +
                  std::to_string(degenerate) + " degenerate histories)");
}

inline void run_cluster(const PipelineConfig& cfg, ChainState& st, StageFiles& files) {
    IngestResult& data = load_trajectories(cfg, st);
    load_predictions(cfg, st);
    if (st.fit.final_pred.size() != data.trajectories.size())
        throw DataError("cluster: predictions do not cover all agents");
    st.clusters = stage_cluster(cfg, data.trajectories, st.fit.final_pred,
                                data.reliability_percent);
    st.have_clusters = true;
    files.write("clusters.csv", clusters_csv(st.clusters));
    files.write("scree.csv", scree_csv(st.clusters));
    int chosen = 0;
    for (const auto& r : st.clusters.scree)
        if (r.selected) chosen = r.k;
    note(cfg, "[cluster] " + std::to_string(st.clusters.assignments.size()) +
                  " agents labeled (last elbow k=" + std::to_string(chosen) + ")");
}

inline void run_classify(const PipelineConfig& cfg, ChainState& st, StageFiles& files) {
    std::vector<FeatureVector> feats;
    std::vector<int> labels;
    if (st.have_agents && st.have_clusters) {
        for (const auto& a : st.agents) feats.push_back(a.profile.predictive_subset());
        for (const auto& c : st.clusters.assignments)
            labels.push_back(static_cast<int>(c.label));
    } else {
        for (const auto& p : load_profiles(cfg)) feats.push_back(p.predictive_subset());
        labels = load_labels(cfg);
    }
    if (feats.size() != labels.size())
        throw DataError("classify: profiles and cluster labels disagree");
    const ClassifyOutput out = stage_classify(cfg, feats, labels);
    files.write("tree.txt", out.tree.serialize());
    files.write("eval.csv", eval_csv(out));
    note(cfg, "[classify] depth=" + std::to_string(out.best.max_depth) +
                  " min_leaf=" + std::to_string(out.best.min_samples_leaf) +
                  " accuracy=" + format_real(out.report.accuracy));
}

inline void run_analyze(const PipelineConfig& cfg, ChainState& st, StageFiles& files) {
    IngestResult& data = load_trajectories(cfg, st);
    std::vector<CharacteristicsProfile> profiles;
    if (st.have_agents) {
        for (const auto& a : st.agents) profiles.push_back(a.profile);
    } else {
        profiles = load_profiles(cfg);
    }
    std::vector<int> labels;
    if (st.have_clusters) {
        for (const auto& c : st.clusters.assignments)
            labels.push_back(static_cast<int>(c.label));
    } else {
        labels = load_labels(cfg);
    }
    files.write("analysis_report.csv", stage_analyze(profiles, labels, data));
    note(cfg, "[analyze] " + std::to_string(profiles.size()) + " agents, report written");
}

inline void run_report(const PipelineConfig& cfg, ChainState& st, StageFiles& files) {
    IngestResult& data = load_trajectories(cfg, st);
    load_predictions(cfg, st);
    if (st.fit.final_pred.size() != data.trajectories.size())
        throw DataError("report: predictions do not cover all agents");
    for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
        const auto& traj = data.trajectories[i];
        files.write("reports/agent_" + std::to_string(traj.agent_id) + ".tsv",
                    agent_report_tsv(traj, st.fit.final_pred[i]));
    }
    note(cfg, "[report] " + std::to_string(data.trajectories.size()) + " agent reports");
}

inline void write_manifest(const PipelineConfig& cfg, const std::vector<std::string>& files,
                           StageFiles& stage) {
    std::ostringstream os;
    os << "toolkit_version=" << kToolkitVersion << '\n';
    os << config_snapshot(cfg);
    std::vector<std::string> rel = files;
    std::sort(rel.begin(), rel.end());
    for (const auto& path : rel) {
        const std::string relpath =
            fs::relative(fs::path(path), fs::path(cfg.out_dir)).generic_string();
        os << "digest " << relpath << ' ' << digest_hex(read_file(path)) << '\n';
    }
    stage.write("manifest.txt", os.str());
}

}  // namespace detail

// Runs one subcommand; throws ConfigError / DataError / NumericalError on
// failure after removing the stage's partial outputs.
inline void run_subcommand(const std::string& name, const PipelineConfig& cfg) {
    detail::ChainState st;
    detail::StageFiles files(cfg.out_dir);
    auto guarded = [&](void (*stage)(const PipelineConfig&, detail::ChainState&,
                                     detail::StageFiles&)) {
        try {
            stage(cfg, st, files);
            files.commit(st.all_written);
        } catch (...) {
            files.rollback();
            throw;
        }
    };
    if (name == "simulate") guarded(detail::run_simulate);
    else if (name == "fit") guarded(detail::run_fit);
    else if (name == "cluster") guarded(detail::run_cluster);
    else if (name == "classify") guarded(detail::run_classify);
    else if (name == "analyze") guarded(detail::run_analyze);
    else if (name == "report") guarded(detail::run_report);
    else if (name == "all") {
        guarded(detail::run_simulate);
        guarded(detail::run_fit);
        guarded(detail::run_cluster);
        guarded(detail::run_classify);
        guarded(detail::run_analyze);
        guarded(detail::run_report);
        try {
            detail::write_manifest(cfg, st.all_written, files);
        } catch (...) {
            files.rollback();
            throw;
        }
        detail::note(cfg, "[all] manifest written (" +
                              std::to_string(st.all_written.size()) + " files)");
    } else {
        throw ConfigError("unknown subcommand: " + name);
    }
}

// Exception-to-exit-code mapping shared by the CLI and tests.
inline int run_subcommand_exit(const std::string& name, const PipelineConfig& cfg) {
    try {
        run_subcommand(name, cfg);
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error [" << name << "]: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const SchemaError& e) {
        std::cerr << "data error [" << name << "]: " << e.what() << '\n';
        return kExitDataError;
    } catch (const EmptyFile& e) {
        std::cerr << "data error [" << name << "]: " << e.what() << '\n';
        return kExitDataError;
    } catch (const DataError& e) {
        std::cerr << "data error [" << name << "]: " << e.what() << '\n';
        return kExitDataError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure [" << name << "]: " << e.what() << '\n';
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure [" << name << "]: " << e.what() << '\n';
        return kExitNumericalError;
    }
}

}  // namespace trustdyn
