#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imr/errors.hpp"
#include "imr/estimation.hpp"
#include "imr/series.hpp"

namespace imr {

/// Configuration for one iterative repair job.
struct RepairConfig {
    std::size_t order = 1;
    double tau = 0.1;
    std::size_t max_iterations = 100000;
    Backend backend = Backend::incremental;

    void validate() const {
        validate_order(order);
        if (!(tau >= 0.0) || !std::isfinite(tau)) {
            throw InputError("convergence threshold tau must be finite and >= 0");
        }
        if (max_iterations < 1) {
            throw InputError("max_iterations must be >= 1");
        }
    }
};

/// One proposed repair: position t (1-based) and its candidate value.
struct Candidate {
    std::size_t index = 0;
    double value = 0.0;
};

/// Candidates in increasing position order. Contains only unlabeled positions
/// t > p whose proposal differs from the current value by more than tau.
struct CandidateSet {
    std::vector<Candidate> candidates;

    bool empty() const { return candidates.empty(); }
    std::size_t size() const { return candidates.size(); }
};

/// One accepted repair, for the per-iteration trace.
struct RepairChange {
    std::size_t index = 0;
    double previous = 0.0;
    double repaired = 0.0;
};

struct RepairResult {
    std::vector<double> values; ///< final sequence, 0-based storage
    std::size_t iterations = 0; ///< estimate/candidate/evaluate passes run
    bool converged = false;
    std::vector<ModelParams> phi_trace;   ///< one entry per pass
    std::vector<RepairChange> changes;    ///< one entry per accepted repair

    double at(std::size_t t) const { return values.at(t - 1); }
};

namespace detail {

/// ARX(p) one-step proposal at position t (1-based, t > p):
/// x_t plus the phi-weighted previous displacements. Shared between the
/// engine's candidate step and the one-pass ARX baseline so their arithmetic
/// is identical.
inline double arx_predict(const std::vector<double>& x_values,
                          const std::vector<double>& y_values,
                          const std::vector<double>& phi, std::size_t t) {
    const std::size_t p = phi.size();
    double acc = x_values[t - 1];
    for (std::size_t i = 1; i <= p; ++i) {
        acc += phi[i - 1] * (y_values[t - 1 - i] - x_values[t - 1 - i]);
    }
    return acc;
}

} // namespace detail

inline CandidateSet generate_candidates(const TimeSeries& x, const RepairState& state,
                                        const ModelParams& phi, double tau) {
    const std::size_t p = phi.order();
    validate_order(p);
    const std::size_t n = x.size();
    if (n <= p) {
        throw InputError("need n > p, got n = " + std::to_string(n) +
                         ", p = " + std::to_string(p));
    }

    CandidateSet set;
    // The first p positions have no complete lag window and are never
    // modified; labeled positions are frozen.
    for (std::size_t t = p + 1; t <= n; ++t) {
        if (state.labeled(t)) {
            continue;
        }
        const double proposal =
            detail::arx_predict(x.values(), state.values(), phi.phi, t);
        if (std::fabs(proposal - state.values()[t - 1]) > tau) {
            set.candidates.push_back(Candidate{t, proposal});
        }
    }
    return set;
}

/// The minimum-change rule: the candidate closest to its original
/// observation wins; ties go to the smallest position.
inline std::optional<Candidate> select_minimum_repair(const CandidateSet& set,
                                                      const TimeSeries& x) {
    std::optional<Candidate> best;
    double best_dist = 0.0;
    for (const Candidate& c : set.candidates) {
        const double dist = std::fabs(c.value - x.values()[c.index - 1]);
        if (!best.has_value() || dist < best_dist) {
            best = c;
            best_dist = dist;
        }
    }
    return best;
}

inline bool converged(std::span<const double> prev, std::span<const double> next,
                      double tau) {
    if (prev.size() != next.size()) {
        throw InputError("sequences differ in length: " + std::to_string(prev.size()) +
                         " vs " + std::to_string(next.size()));
    }
    for (std::size_t i = 0; i < prev.size(); ++i) {
        if (std::fabs(prev[i] - next[i]) > tau) {
            return false;
        }
    }
    return true;
}

namespace detail {

/// Main loop shared by the dynamic and static parameter modes. Exactly one
/// point changes per pass; an empty candidate set means the next sequence
/// would equal the current one, so the convergence condition holds with zero
/// change and the loop stops.
inline RepairResult run_repair(const TimeSeries& x, const LabeledSeries& labels,
                               const RepairConfig& cfg,
                               const ModelParams* static_phi) {
    cfg.validate();
    const std::size_t n = x.size();
    if (n <= cfg.order) {
        throw InputError("need n > p, got n = " + std::to_string(n) +
                         ", p = " + std::to_string(cfg.order));
    }
    if (static_phi != nullptr && static_phi->order() != cfg.order) {
        throw InputError("static phi has order " + std::to_string(static_phi->order()) +
                         ", config says " + std::to_string(cfg.order));
    }

    RepairState state = init_repair_state(x, labels);
    DiffSeries z = diff(state, x);
    EstimationCache cache;

    RepairResult result;
    while (result.iterations < cfg.max_iterations) {
        ++result.iterations;

        ModelParams phi;
        if (static_phi != nullptr) {
            phi = *static_phi;
        } else {
            try {
                phi = estimate(x, state, cfg.order, cfg.backend, &cache);
            } catch (const SingularSystem&) {
                // No information in the diffs: with phi = 0 every proposal
                // equals x_t, a self-sustaining fixed point.
                phi.phi.assign(cfg.order, 0.0);
            }
        }
        result.phi_trace.push_back(phi);

        const CandidateSet candidates = generate_candidates(x, state, phi, cfg.tau);
        const std::optional<Candidate> repair = select_minimum_repair(candidates, x);
        if (!repair.has_value()) {
            result.converged = true;
            break;
        }

        const std::size_t r = repair->index;
        const double new_value = repair->value;
        result.changes.push_back(RepairChange{r, state.values()[r - 1], new_value});

        // Update the cached normal equations against the pre-commit diffs,
        // then commit.
        if (static_phi == nullptr && cfg.backend == Backend::incremental &&
            cache.ne.has_value()) {
            cache.ne = incremental_update(*cache.ne, z, r, new_value - x.values()[r - 1]);
        }
        state.set(r, new_value);
        z.diffs[r - 1] = new_value - x.values()[r - 1];
    }

    result.values = state.values();
    return result;
}

} // namespace detail

/// Iterative minimum repairing with the parameter re-estimated every pass.
inline RepairResult imr_repair(const TimeSeries& x, const LabeledSeries& labels,
                               const RepairConfig& cfg) {
    return detail::run_repair(x, labels, cfg, nullptr);
}

/// IMR with a fixed parameter vector for every pass.
inline RepairResult imr_repair_static(const TimeSeries& x, const LabeledSeries& labels,
                                      const RepairConfig& cfg, const ModelParams& phi) {
    return detail::run_repair(x, labels, cfg, &phi);
}

} // namespace imr
