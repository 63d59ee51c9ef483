#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trustdyn/rng.hpp"
#include "trustdyn/special.hpp"

// Beta-distribution trust model. A person's trust after each interaction is
// a Beta(alpha, beta) variable; detector successes add to alpha, failures
// add to beta, so the predicted trust alpha/(alpha+beta) rises on success,
// falls on failure, and stabilizes as evidence accumulates.

namespace trustdyn {

// Reported trust of exactly 0 or 1 would blow up the log terms; the
// visual-analog scale allows endpoints, so reports are clamped here.
constexpr double kReportClamp = 1e-4;

inline double clamp_report(double t) {
    if (t < kReportClamp) return kReportClamp;
    if (t > 1.0 - kReportClamp) return 1.0 - kReportClamp;
    return t;
}

enum class Outcome : std::uint8_t { Success, Failure };

// theta = {alpha0, beta0, gain_success, gain_failure}: prior experience plus
// per-outcome evidence gains.
struct TrustParams {
    double alpha0 = 1.0;
    double beta0 = 1.0;
    double gain_success = 0.0;
    double gain_failure = 0.0;

    void validate() const {
        const bool ok = std::isfinite(alpha0) && std::isfinite(beta0) &&
                        std::isfinite(gain_success) && std::isfinite(gain_failure) &&
                        alpha0 > 0.0 && beta0 > 0.0 && gain_success >= 0.0 &&
                        gain_failure >= 0.0;
        if (!ok) throw std::invalid_argument("TrustParams: invalid parameter set");
    }
};

struct TrustState {
    double alpha = 1.0;
    double beta = 1.0;
    int trial_index = 0;
};

inline TrustState initial_state(const TrustParams& p) {
    return TrustState{p.alpha0, p.beta0, 0};
}

inline TrustState update_state(const TrustState& s, Outcome o, const TrustParams& p) {
    TrustState next = s;
    if (o == Outcome::Success) {
        next.alpha += p.gain_success;
    } else {
        next.beta += p.gain_failure;
    }
    ++next.trial_index;
    return next;
}

// Expected trust, the model's point prediction.
inline double predict(const TrustState& s) { return s.alpha / (s.alpha + s.beta); }

// State after n_success + n_failure tasks. Repeated addition keeps the
// result bit-identical to folding update_state in any outcome order.
inline TrustState state_after(const TrustParams& p, int n_success, int n_failure) {
    TrustState s = initial_state(p);
    for (int i = 0; i < n_success; ++i) s.alpha += p.gain_success;
    for (int i = 0; i < n_failure; ++i) s.beta += p.gain_failure;
    s.trial_index = n_success + n_failure;
    return s;
}

inline double beta_log_density(double t, double alpha, double beta) {
    if (!(t > 0.0 && t < 1.0))
        throw std::domain_error("beta_log_density: t must lie in (0, 1)");
    if (!(alpha > 0.0 && beta > 0.0))
        throw std::domain_error("beta_log_density: shape parameters must be positive");
    return (alpha - 1.0) * std::log(t) + (beta - 1.0) * std::log1p(-t) -
           log_beta(alpha, beta);
}

inline double sample_trust(const TrustState& s, Rng& rng) {
    return rng.beta(s.alpha, s.beta);
}

struct TrustTrajectory {
    int agent_id = 0;
    std::vector<double> reports;    // clamped to [kReportClamp, 1 - kReportClamp]
    std::vector<Outcome> outcomes;  // detector performance history

    std::size_t size() const { return reports.size(); }

    void validate() const {
        if (reports.size() != outcomes.size())
            throw std::invalid_argument("TrustTrajectory: reports/outcomes length mismatch");
        for (double t : reports) {
            if (!(t > 0.0 && t < 1.0))
                throw std::invalid_argument("TrustTrajectory: report outside (0, 1)");
        }
    }
};

// Predicted-mean trajectory under theta for a given outcome history (the
// model's red line in a trust-dynamics plot).
inline std::vector<double> predicted_trajectory(const TrustParams& p,
                                                const std::vector<Outcome>& outcomes) {
    std::vector<double> out;
    out.reserve(outcomes.size());
    TrustState s = initial_state(p);
    for (Outcome o : outcomes) {
        s = update_state(s, o, p);
        out.push_back(predict(s));
    }
    return out;
}

}  // namespace trustdyn
