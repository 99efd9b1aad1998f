#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "imr/errors.hpp"
#include "imr/series.hpp"

namespace imr {

/// Closed-form IMR(1) state for a series whose first ell points are labeled.
struct OnlinePrefixModel {
    double phi1 = 0.0;
    std::size_t ell = 0;  ///< labeled prefix length
    double z_ell = 0.0;   ///< last labeled displacement y_ell - x_ell
};

namespace detail {

/// Labeled-prefix displacements z_1..z_ell; validates the prefix shape.
inline std::vector<double> prefix_diffs(const TimeSeries& x, const LabeledSeries& labels,
                                        std::size_t ell) {
    if (ell < 2) {
        throw InputError("labeled prefix must have length >= 2");
    }
    if (ell > x.size()) {
        throw InputError("prefix length " + std::to_string(ell) + " exceeds n = " +
                         std::to_string(x.size()));
    }
    std::vector<double> z(ell);
    for (std::size_t t = 1; t <= ell; ++t) {
        if (!labels.contains(t)) {
            throw InputError("position " + std::to_string(t) +
                             " is not labeled; the first " + std::to_string(ell) +
                             " points must be");
        }
        z[t - 1] = labels.at(t) - x.at(t);
    }
    return z;
}

} // namespace detail

/**
 * @brief Converged IMR(1) parameter for a labeled prefix, without iterating:
 * the ratio of adjacent displacement products to squared displacements over
 * the prefix.
 */
inline double phi_single(const TimeSeries& x, const LabeledSeries& labels,
                         std::size_t ell) {
    const std::vector<double> z = detail::prefix_diffs(x, labels, ell);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t + 1 < ell; ++t) {
        num += z[t] * z[t + 1];
        den += z[t] * z[t];
    }
    if (den == 0.0) {
        throw DegenerateLabels("all prefix displacements are zero; the converged "
                               "parameter is undefined");
    }
    return num / den;
}

inline OnlinePrefixModel fit_prefix(const TimeSeries& x, const LabeledSeries& labels,
                                    std::size_t ell) {
    OnlinePrefixModel model;
    model.phi1 = phi_single(x, labels, ell);
    model.ell = ell;
    model.z_ell = labels.at(ell) - x.at(ell);
    return model;
}

/**
 * @brief Sufficient condition for the iterative parameter to stay bounded:
 * |sum z_t z_{t+1}| strictly below sum z_t^2 over the prefix. When it holds,
 * every per-iteration |phi_1| stays under one and the iteration converges.
 */
inline bool check_bound_condition(const TimeSeries& x, const LabeledSeries& labels,
                                  std::size_t ell) {
    const std::vector<double> z = detail::prefix_diffs(x, labels, ell);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t + 1 < ell; ++t) {
        num += z[t] * z[t + 1];
        den += z[t] * z[t];
    }
    return std::fabs(num) < den;
}

/**
 * @brief Direct converged repair for the labeled-prefix case: labels up to
 * ell, then x_i plus the geometrically propagated last displacement.
 */
inline std::vector<double> repair_single(const TimeSeries& x,
                                         const LabeledSeries& labels,
                                         const OnlinePrefixModel& model) {
    const std::size_t n = x.size();
    if (model.ell < 2 || model.ell > n) {
        throw InputError("prefix model has invalid ell = " + std::to_string(model.ell));
    }
    std::vector<double> y(n);
    for (std::size_t t = 1; t <= model.ell; ++t) {
        y[t - 1] = labels.at(t);
    }
    double carry = model.z_ell;
    for (std::size_t t = model.ell + 1; t <= n; ++t) {
        carry *= model.phi1;
        y[t - 1] = carry + x.at(t);
    }
    return y;
}

/**
 * @brief Streaming repairer for the online setting: feed the labeled prefix
 * first, then one observation at a time; each repair is emitted in O(1) by
 * carrying phi_1^k z_ell forward.
 */
class StreamingRepairer {
public:
    /// Extend the labeled prefix by one point. Only valid before the first
    /// unlabeled observation arrives.
    void push_labeled(double observation, double truth) {
        if (streaming_) {
            throw InputError("labeled prefix cannot grow once observations started");
        }
        if (!std::isfinite(observation) || !std::isfinite(truth)) {
            throw InputError("streaming inputs must be finite");
        }
        const double z = truth - observation;
        if (count_ > 0) {
            num_ += last_z_ * z;
            den_ += last_z_ * last_z_;
        }
        last_z_ = z;
        ++count_;
    }

    /// Emit the repair for the next unlabeled observation.
    double push_observation(double observation) {
        if (count_ < 2) {
            throw InputError("need a labeled prefix of length >= 2 before streaming");
        }
        if (!std::isfinite(observation)) {
            throw InputError("streaming inputs must be finite");
        }
        if (!streaming_) {
            streaming_ = true;
            carry_ = last_z_;
        }
        carry_ *= phi();
        ++count_;
        return carry_ + observation;
    }

    /// Converged parameter over the prefix seen so far; zero when the prefix
    /// displacements carry no information.
    double phi() const { return den_ == 0.0 ? 0.0 : num_ / den_; }

    std::size_t prefix_length() const { return streaming_ ? 0 : count_; }
    std::size_t total_points() const { return count_; }

private:
    double num_ = 0.0;
    double den_ = 0.0;
    double last_z_ = 0.0;
    double carry_ = 0.0;
    std::size_t count_ = 0;
    bool streaming_ = false;
};

namespace detail {

/// Right-hand side of the converged-parameter equation for m labeled
/// segments. Within-segment products enter directly; each gap contributes
/// the displacement propagated across it, phi^{s(j)-1-e(j-1)} z_{e(j-1)},
/// paired with the next segment's first displacement. Segment 0 is the empty
/// convention with z_{e(0)} = 0.
struct SegmentSums {
    // z indexed by 1-based position, only labeled positions meaningful.
    const std::vector<double>& z;
    const std::vector<Segment>& segments;

    double within_num = 0.0;
    double within_den = 0.0;

    SegmentSums(const std::vector<double>& z_, const std::vector<Segment>& segs)
        : z(z_), segments(segs) {
        for (const Segment& s : segments) {
            for (std::size_t i = s.start; i < s.end; ++i) {
                within_num += z[i - 1] * z[i];
                within_den += z[i - 1] * z[i - 1];
            }
        }
    }

    /// Evaluates F(phi); returns NaN when the denominator vanishes with a
    /// nonzero numerator (the caller treats that as failure).
    double evaluate(double phi) const {
        double num = within_num;
        double den = within_den;
        std::size_t prev_end = 0; // e(0); z there is 0 by convention
        double prev_z = 0.0;
        for (const Segment& s : segments) {
            if (prev_end > 0) {
                const double gap_exp = static_cast<double>(s.start - 1 - prev_end);
                const double propagated = std::pow(phi, gap_exp) * prev_z;
                num += propagated * z[s.start - 1];
                den += propagated * propagated;
            }
            prev_end = s.end;
            prev_z = z[s.end - 1];
        }
        if (den == 0.0) {
            return num == 0.0 ? 0.0 : std::nan("");
        }
        return num / den;
    }
};

} // namespace detail

inline constexpr std::size_t kFixpointStepCap = 10000;

/// Solver diagnostics for the multi-segment closed form. The equation may
/// admit several solutions; only the one reached from the within-segment
/// starting ratio is reported, with its residual, never a uniqueness claim.
struct MultiSegmentInfo {
    double phi1 = 0.0;
    double residual = 0.0;
    std::size_t steps = 0;
};

/**
 * @brief Direct converged IMR(1) repair for any labeling, via the
 * multi-segment converged-parameter equation.
 *
 * The equation is implicit in phi (phi appears under gap powers), so it is
 * solved by damped fixpoint iteration phi <- (phi + F(phi)) / 2 starting from
 * the within-segment-only ratio, stopping once |F(phi) - phi| <= tol. Gaps
 * are then filled by geometric propagation from each segment's last labeled
 * displacement; positions before the first segment keep x (segment 0 carries
 * a zero displacement).
 */
inline std::vector<double> repair_multi_segment(const TimeSeries& x,
                                                const LabeledSeries& labels,
                                                double tol = 1e-9,
                                                MultiSegmentInfo* info = nullptr) {
    if (!(tol > 0.0) || !std::isfinite(tol)) {
        throw InputError("fixpoint tolerance must be finite and > 0");
    }
    const std::size_t n = x.size();
    const SegmentIndex index = labeled_segments(labels, n);
    const std::size_t m = index.count();
    if (m == 0) {
        throw InputError("at least one labeled segment is required");
    }
    bool well_posed = m >= 2;
    for (const Segment& s : index.segments) {
        if (s.end > s.start) {
            well_posed = true;
        }
    }
    if (!well_posed) {
        throw InputError("a single labeled point under-determines the converged "
                         "parameter; need a segment of length >= 2 or m >= 2");
    }

    std::vector<double> z(n, 0.0);
    bool any_nonzero = false;
    for (const auto& [t, v] : labels.entries()) {
        z[t - 1] = v - x.at(t);
        if (z[t - 1] != 0.0) {
            any_nonzero = true;
        }
    }
    if (!any_nonzero) {
        throw DegenerateLabels("all labeled displacements are zero; the converged "
                               "parameter is undefined");
    }

    const detail::SegmentSums sums(z, index.segments);
    double phi = sums.within_den == 0.0 ? 0.0 : sums.within_num / sums.within_den;
    double residual = std::numeric_limits<double>::infinity();
    double damping = 0.5;
    std::size_t steps = 0;
    while (steps < kFixpointStepCap) {
        ++steps;
        const double next = sums.evaluate(phi);
        if (!std::isfinite(next)) {
            throw NoFixpoint("converged-parameter equation left the finite domain "
                             "at phi = " + std::to_string(phi));
        }
        const double prev_residual = residual;
        residual = std::fabs(next - phi);
        if (residual <= tol) {
            phi = next;
            break;
        }
        // A growing residual means the damped map overshoots around a steep
        // crossing; shrink the step until it contracts again.
        if (residual > prev_residual) {
            damping = std::max(damping * 0.5, 1.0 / 64.0);
        } else {
            damping = std::min(damping * 1.25, 0.5);
        }
        phi = (1.0 - damping) * phi + damping * next;
    }
    if (residual > tol) {
        throw NoFixpoint("fixpoint did not settle within " +
                         std::to_string(kFixpointStepCap) + " steps (residual " +
                         std::to_string(residual) + ")");
    }
    if (info != nullptr) {
        info->phi1 = phi;
        info->residual = residual;
        info->steps = steps;
    }

    std::vector<double> y(x.values());
    for (const auto& [t, v] : labels.entries()) {
        y[t - 1] = v;
    }
    // Fill each gap (e(j), s(j+1)) and the tail after the last segment by
    // propagating z_{e(j)} geometrically.
    for (std::size_t j = 0; j < m; ++j) {
        const Segment& s = index.segments[j];
        const std::size_t gap_end =
            (j + 1 < m) ? index.segments[j + 1].start - 1 : n;
        double carry = z[s.end - 1];
        for (std::size_t t = s.end + 1; t <= gap_end; ++t) {
            carry *= phi;
            y[t - 1] = carry + x.at(t);
        }
    }
    return y;
}

} // namespace imr
