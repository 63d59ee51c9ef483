#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trustdyn/classifier.hpp"
#include "trustdyn/clustering.hpp"
#include "trustdyn/rng.hpp"
#include "trustdyn/special.hpp"
#include "trustdyn/trust_model.hpp"

// Surveillance-task simulator: signal-detection trial plans, the two scoring
// rules, and synthetic operators that reproduce the archetype cohorts from
// the fitted per-archetype parameter and characteristics tables.

namespace trustdyn {

struct SampleCountMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Signal detection configuration

struct SdtConfig {
    double criterion_c = -0.20;
    double sensitivity_dprime = 1.09;
    int n_signal = 50;
    int n_total = 100;
};

struct SdtCounts {
    int hits = 0, misses = 0, false_alarms = 0, correct_rejections = 0;
};

// Expected outcome counts for a detector with the given criterion and
// sensitivity. Note these do not exactly reproduce the per-level
// composition below (back-computing that table gives c ~= -0.29); the table
// is authoritative for trial plans, this is the analytic route.
inline SdtCounts sdt_counts(const SdtConfig& cfg) {
    if (cfg.n_signal < 0 || cfg.n_signal > cfg.n_total)
        throw std::invalid_argument("sdt_counts: n_signal must lie in [0, n_total]");
    const double hit_rate = normal_cdf(cfg.sensitivity_dprime / 2.0 - cfg.criterion_c);
    const double fa_rate = normal_cdf(-cfg.sensitivity_dprime / 2.0 - cfg.criterion_c);
    const int n_noise = cfg.n_total - cfg.n_signal;
    SdtCounts out;
    out.hits = static_cast<int>(std::lround(hit_rate * cfg.n_signal));
    out.false_alarms = static_cast<int>(std::lround(fa_rate * n_noise));
    out.misses = cfg.n_signal - out.hits;
    out.correct_rejections = n_noise - out.false_alarms;
    return out;
}

// ---------------------------------------------------------------------------
// Reliability levels and trial schedules

enum class OutcomeClass : std::uint8_t { Hit, Miss, FalseAlarm, CorrectRejection };

inline const char* outcome_class_name(OutcomeClass oc) {
    switch (oc) {
        case OutcomeClass::Hit: return "hit";
        case OutcomeClass::Miss: return "miss";
        case OutcomeClass::FalseAlarm: return "fa";
        case OutcomeClass::CorrectRejection: return "cr";
    }
    return "?";
}

inline OutcomeClass outcome_class_from_name(const std::string& s) {
    if (s == "hit") return OutcomeClass::Hit;
    if (s == "miss") return OutcomeClass::Miss;
    if (s == "fa") return OutcomeClass::FalseAlarm;
    if (s == "cr") return OutcomeClass::CorrectRejection;
    throw std::invalid_argument("unknown outcome class: " + s);
}

// Detector success = its alert matched the ground truth.
inline Outcome detector_outcome(OutcomeClass oc) {
    return (oc == OutcomeClass::Hit || oc == OutcomeClass::CorrectRejection)
               ? Outcome::Success
               : Outcome::Failure;
}

struct ReliabilityLevel {
    int percent = 70;
    SdtCounts counts;

    static ReliabilityLevel from_percent(int percent) {
        for (const auto& lvl : all())
            if (lvl.percent == percent) return lvl;
        throw std::invalid_argument("reliability level must be one of 62/64/66/68/70");
    }

    // Per-level outcome composition (100 trials each).
    static const std::array<ReliabilityLevel, 5>& all() {
        static const std::array<ReliabilityLevel, 5> levels = {{
            {62, {8, 2, 36, 54}},
            {64, {16, 4, 32, 48}},
            {66, {24, 6, 28, 42}},
            {68, {32, 8, 24, 36}},
            {70, {40, 10, 20, 30}},
        }};
        return levels;
    }
};

struct TrialSpec {
    int index = 1;  // 1-based
    bool threat_present = false;
    bool alert_danger = false;
    OutcomeClass outcome_class = OutcomeClass::CorrectRejection;
};

inline TrialSpec make_trial(int index, OutcomeClass oc) {
    TrialSpec t;
    t.index = index;
    t.outcome_class = oc;
    t.threat_present = (oc == OutcomeClass::Hit || oc == OutcomeClass::Miss);
    t.alert_danger = (oc == OutcomeClass::Hit || oc == OutcomeClass::FalseAlarm);
    return t;
}

using TrialSchedule = std::vector<TrialSpec>;

inline TrialSchedule generate_schedule(const ReliabilityLevel& level, Rng& rng) {
    std::vector<OutcomeClass> classes;
    classes.reserve(100);
    classes.insert(classes.end(), level.counts.hits, OutcomeClass::Hit);
    classes.insert(classes.end(), level.counts.misses, OutcomeClass::Miss);
    classes.insert(classes.end(), level.counts.false_alarms, OutcomeClass::FalseAlarm);
    classes.insert(classes.end(), level.counts.correct_rejections,
                   OutcomeClass::CorrectRejection);
    rng.shuffle(classes);
    TrialSchedule schedule;
    schedule.reserve(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i)
        schedule.push_back(make_trial(static_cast<int>(i) + 1, classes[i]));
    return schedule;
}

inline TrialSchedule generate_schedule(const ReliabilityLevel& level, std::uint64_t seed) {
    Rng rng(seed);
    return generate_schedule(level, rng);
}

// ---------------------------------------------------------------------------
// Scoring

constexpr double kTrialDurationMs = 10000.0;

// 0 when wrong; speed-weighted up to 5 for a confirmed threat; flat 5 for a
// correct all-clear.
inline double detection_score(bool correct, bool threat_present, double detection_time_ms) {
    if (detection_time_ms < 0.0 || detection_time_ms > kTrialDurationMs)
        throw std::domain_error("detection_score: time outside trial duration");
    if (!correct) return 0.0;
    if (threat_present) return 5.0 - 5.0 * detection_time_ms / kTrialDurationMs;
    return 5.0;
}

constexpr std::size_t kTrackingSamples = 200;  // 20 Hz for 10 s

// RMSE of the tracking error mapped through 10 equal-width bins over
// [0, e_max): bin k scores 10 - k, clamped to [0, 10].
inline int tracking_score(const std::vector<double>& error_samples_px,
                          double e_max_px = 250.0) {
    if (error_samples_px.size() != kTrackingSamples)
        throw SampleCountMismatch("tracking_score: expected 200 error samples");
    double sum_sq = 0.0;
    for (double e : error_samples_px) sum_sq += e * e;
    const double rmse = std::sqrt(sum_sq / kTrackingSamples);
    const int bin = static_cast<int>(std::floor(rmse / e_max_px * 10.0));
    return std::clamp(10 - bin, 0, 10);
}

// ---------------------------------------------------------------------------
// Operator behavior

enum class Behavior : std::uint8_t { BlindFollow, CrossCheck };

// Response-generation knobs. The blind-follow rates are the per-archetype
// behavior ratios; the time/accuracy/tracking-cost ranges are simulator
// plumbing with no measured counterpart, so they are explicit configuration
// rather than constants.
struct BehaviorConfig {
    std::array<double, 3> blind_follow_rate = {0.42, 0.18, 0.40};  // BDM, disbeliever, oscillator
    double cross_check_accuracy = 0.95;
    double blind_time_lo_ms = 300.0, blind_time_hi_ms = 1200.0;
    double cross_time_lo_ms = 2000.0, cross_time_hi_ms = 8000.0;
    double blind_track_frac_lo = 0.1, blind_track_frac_hi = 0.4;
    double cross_track_frac_lo = 0.4, cross_track_frac_hi = 0.8;
    double tracking_error_max_px = 250.0;
};

// Fitted parameter sets per archetype (cluster averages), used as the
// generative ground truth for synthetic agents.
inline const TrustParams& archetype_params(Archetype a) {
    static const std::array<TrustParams, 3> params = {{
        {231.93, 128.35, 2.21, 1.88},  // BDM
        {71.78, 335.22, 0.43, 6.48},   // disbeliever
        {3.83, 3.47, 0.04, 0.07},      // oscillator
    }};
    return params[static_cast<std::size_t>(a)];
}

// ---------------------------------------------------------------------------
// Personal characteristics (28 dimensions)

struct DimensionSpec {
    const char* name;
    double lo, hi;                 // declared scale range
    std::array<double, 3> mean;    // BDM, disbeliever, oscillator
    std::array<double, 3> sd;
};

inline const std::array<DimensionSpec, 28>& characteristic_dims() {
    static const std::array<DimensionSpec, 28> dims = {{
        {"power_distance", 1, 5, {1.82, 1.80, 1.86}, {0.46, 0.54, 0.73}},
        {"uncertainty_avoidance", 1, 5, {4.25, 4.36, 4.27}, {0.48, 0.50, 0.58}},
        {"collectivism", 1, 5, {3.08, 3.21, 3.21}, {0.63, 0.69, 0.90}},
        {"long_term_orientation", 1, 5, {4.09, 4.19, 4.26}, {0.47, 0.52, 0.36}},
        {"masculinity", 1, 5, {1.81, 1.68, 2.38}, {0.67, 0.77, 1.12}},
        {"attentional_capacity", 1, 4, {2.67, 2.58, 2.79}, {0.40, 0.38, 0.32}},
        {"positive_affect", 1, 5, {2.80, 2.75, 3.37}, {0.71, 0.76, 0.65}},
        {"negative_affect", 1, 5, {1.36, 1.35, 1.31}, {0.45, 0.31, 0.41}},
        {"extraversion", 1, 5, {2.99, 2.74, 3.54}, {0.95, 0.96, 1.08}},
        {"agreeableness", 1, 5, {3.99, 3.90, 3.96}, {0.64, 0.75, 0.70}},
        {"conscientiousness", 1, 5, {3.38, 3.15, 3.57}, {0.86, 1.17, 0.58}},
        {"neuroticism", 1, 5, {2.67, 3.09, 2.61}, {0.73, 0.83, 0.90}},
        {"intellect", 1, 5, {3.77, 3.57, 4.23}, {0.72, 0.93, 0.46}},
        {"risk_propensity", 1, 9, {4.20, 4.15, 4.83}, {1.28, 1.38, 1.14}},
        {"intuitive", 1, 5, {3.35, 3.23, 3.53}, {0.65, 0.74, 0.86}},
        {"dependent", 1, 5, {3.75, 3.74, 3.54}, {0.67, 0.68, 0.65}},
        {"rational", 1, 5, {4.09, 4.03, 4.36}, {0.49, 0.81, 0.42}},
        {"avoidant", 1, 5, {2.97, 2.88, 2.43}, {1.04, 1.09, 1.00}},
        {"spontaneous", 1, 5, {2.65, 2.82, 2.63}, {0.70, 0.68, 0.63}},
        {"reasoning_score", 0, 7, {5.56, 5.04, 5.14}, {1.42, 1.79, 2.32}},
        {"trust_propensity", 1, 5, {3.29, 3.05, 3.13}, {0.44, 0.69, 0.64}},
        {"attitude_interaction", 1, 5, {2.17, 2.26, 1.96}, {0.63, 0.68, 0.53}},
        {"attitude_social_influence", 1, 5, {3.22, 3.41, 3.09}, {0.60, 0.82, 0.94}},
        {"performance_expectancy", 1, 7, {5.73, 5.24, 6.07}, {0.70, 1.39, 0.68}},
        {"effort_expectancy", 1, 7, {5.24, 5.17, 5.57}, {0.72, 0.78, 0.99}},
        {"self_efficacy", 1, 5, {3.45, 3.63, 3.82}, {0.74, 0.88, 0.81}},
        {"pas_high_expectations", 1, 5, {1.88, 1.55, 2.14}, {0.57, 0.54, 0.79}},
        {"pas_all_or_none", 1, 5, {1.80, 2.00, 1.79}, {0.62, 0.87, 0.70}},
    }};
    return dims;
}

constexpr int kNumCharacteristicDims = 28;

// Indices of the seven predictive dimensions within characteristic_dims(),
// in predictive_dim_names() order.
inline const std::array<int, kNumPredictiveDims>& predictive_dim_indices() {
    static const std::array<int, kNumPredictiveDims> idx = {4, 6, 8, 11, 12, 23, 26};
    return idx;
}

struct CharacteristicsProfile {
    std::array<double, kNumCharacteristicDims> values{};

    FeatureVector predictive_subset() const {
        FeatureVector out{};
        const auto& idx = predictive_dim_indices();
        for (int i = 0; i < kNumPredictiveDims; ++i) out[i] = values[idx[i]];
        return out;
    }

    void validate() const {
        const auto& dims = characteristic_dims();
        for (int i = 0; i < kNumCharacteristicDims; ++i) {
            if (!(values[i] >= dims[i].lo && values[i] <= dims[i].hi))
                throw std::invalid_argument(std::string("profile value out of range: ") +
                                            dims[i].name);
        }
    }
};

// Gaussian per dimension, clamped at the scale endpoints. Clamping (rather
// than rejection) keeps the sample mean near the table value even where an
// endpoint sits within ~1.3 sd of the mean, and fixes the draw count per
// profile at 28.
inline CharacteristicsProfile sample_profile(Archetype archetype, Rng& rng) {
    CharacteristicsProfile p;
    const auto& dims = characteristic_dims();
    const auto a = static_cast<std::size_t>(archetype);
    for (int i = 0; i < kNumCharacteristicDims; ++i) {
        const double v = rng.normal(dims[i].mean[a], dims[i].sd[a]);
        p.values[i] = std::clamp(v, dims[i].lo, dims[i].hi);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Operator simulation

struct TrialRecord {
    TrialSpec trial;
    double reported_trust = 0.5;
    Behavior behavior = Behavior::BlindFollow;
    bool detection_correct = false;
    double detection_time_ms = 0.0;
    double tracking_rmse_px = 0.0;
    double detection_score = 0.0;
    int tracking_score = 0;
};

struct AgentRecord {
    int agent_id = 0;
    Archetype archetype = Archetype::BDM;
    TrustParams generating_params;
    int reliability_percent = 70;
    CharacteristicsProfile profile;
    TrustTrajectory trajectory;
    std::vector<TrialRecord> trials;
    double total_tracking = 0.0;
    double total_detection = 0.0;
    double total_score = 0.0;

    double blind_follow_ratio() const {
        if (trials.empty()) return 0.0;
        int n = 0;
        for (const auto& t : trials) n += (t.behavior == Behavior::BlindFollow);
        return static_cast<double>(n) / static_cast<double>(trials.size());
    }
};

// One synthetic operator run over a schedule. Per-trial draw order is fixed:
// trust report, behavior, cross-check correctness, detection time, tracking
// error level.
inline AgentRecord simulate_operator(Archetype archetype, const TrustParams& params,
                                     const TrialSchedule& schedule,
                                     const BehaviorConfig& cfg, Rng& rng) {
    params.validate();
    AgentRecord rec;
    rec.archetype = archetype;
    rec.generating_params = params;
    rec.trials.reserve(schedule.size());
    rec.trajectory.reports.reserve(schedule.size());
    rec.trajectory.outcomes.reserve(schedule.size());

    const double blind_rate = cfg.blind_follow_rate[static_cast<std::size_t>(archetype)];
    TrustState state = initial_state(params);
    for (const TrialSpec& trial : schedule) {
        const Outcome outcome = detector_outcome(trial.outcome_class);
        state = update_state(state, outcome, params);

        TrialRecord tr;
        tr.trial = trial;
        tr.reported_trust = clamp_report(sample_trust(state, rng));
        tr.behavior = (rng.uniform01() < blind_rate) ? Behavior::BlindFollow
                                                     : Behavior::CrossCheck;
        if (tr.behavior == Behavior::BlindFollow) {
            tr.detection_correct = (outcome == Outcome::Success);
            tr.detection_time_ms = rng.uniform(cfg.blind_time_lo_ms, cfg.blind_time_hi_ms);
            tr.tracking_rmse_px = rng.uniform(cfg.blind_track_frac_lo, cfg.blind_track_frac_hi) *
                                  cfg.tracking_error_max_px;
        } else {
            tr.detection_correct = (rng.uniform01() < cfg.cross_check_accuracy);
            tr.detection_time_ms = rng.uniform(cfg.cross_time_lo_ms, cfg.cross_time_hi_ms);
            tr.tracking_rmse_px = rng.uniform(cfg.cross_track_frac_lo, cfg.cross_track_frac_hi) *
                                  cfg.tracking_error_max_px;
        }
        tr.detection_score =
            detection_score(tr.detection_correct, trial.threat_present, tr.detection_time_ms);
        const std::vector<double> samples(kTrackingSamples, tr.tracking_rmse_px);
        tr.tracking_score = tracking_score(samples, cfg.tracking_error_max_px);

        rec.trajectory.reports.push_back(tr.reported_trust);
        rec.trajectory.outcomes.push_back(outcome);
        rec.total_detection += tr.detection_score;
        rec.total_tracking += tr.tracking_score;
        rec.trials.push_back(tr);
    }
    rec.total_score = rec.total_tracking + rec.total_detection;
    return rec;
}

struct CohortSizes {
    int n_bdm = 91;
    int n_disbeliever = 25;
    int n_oscillator = 14;

    int total() const { return n_bdm + n_disbeliever + n_oscillator; }
};

// Synthetic cohort: archetype parameters jittered with multiplicative
// log-normal noise, profiles drawn from the per-cluster characteristic
// table, reliability levels dealt round-robin. Each agent consumes only its
// own derived stream, so cohorts are reproducible under any scheduling.
inline std::vector<AgentRecord> generate_cohort(const CohortSizes& sizes,
                                                const std::vector<int>& level_mix,
                                                std::uint64_t seed,
                                                const BehaviorConfig& cfg = {},
                                                double param_noise_sd = 0.1) {
    if (sizes.n_bdm <= 0 || sizes.n_disbeliever <= 0 || sizes.n_oscillator <= 0)
        throw std::invalid_argument("generate_cohort: sizes must be positive");
    if (level_mix.empty())
        throw std::invalid_argument("generate_cohort: empty level mix");

    std::vector<Archetype> plan;
    plan.insert(plan.end(), sizes.n_bdm, Archetype::BDM);
    plan.insert(plan.end(), sizes.n_disbeliever, Archetype::Disbeliever);
    plan.insert(plan.end(), sizes.n_oscillator, Archetype::Oscillator);

    std::vector<AgentRecord> cohort;
    cohort.reserve(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i) {
        Rng rng(derive_seed(seed, i));
        const Archetype arch = plan[i];
        const TrustParams base = archetype_params(arch);
        TrustParams params{base.alpha0 * std::exp(param_noise_sd * rng.normal()),
                           base.beta0 * std::exp(param_noise_sd * rng.normal()),
                           base.gain_success * std::exp(param_noise_sd * rng.normal()),
                           base.gain_failure * std::exp(param_noise_sd * rng.normal())};
        const CharacteristicsProfile profile = sample_profile(arch, rng);
        const int percent = level_mix[i % level_mix.size()];
        const ReliabilityLevel level = ReliabilityLevel::from_percent(percent);
        const TrialSchedule schedule = generate_schedule(level, rng);

        AgentRecord rec = simulate_operator(arch, params, schedule, cfg, rng);
        rec.agent_id = static_cast<int>(i);
        rec.trajectory.agent_id = rec.agent_id;
        rec.reliability_percent = percent;
        rec.profile = profile;
        cohort.push_back(std::move(rec));
    }
    return cohort;
}

}  // namespace trustdyn
