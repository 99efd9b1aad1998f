#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "imr/errors.hpp"

namespace imr {

/// Positions are 1-based throughout the public API, matching the usual
/// time-series convention x_1..x_n; storage is 0-based internally.

namespace detail {

inline void require_finite(double v, const char* what, std::size_t pos_1based) {
    if (!std::isfinite(v)) {
        throw InputError(std::string(what) + " at position " +
                         std::to_string(pos_1based) + " is not finite");
    }
}

} // namespace detail

/**
 * @brief Immutable observation sequence x_1..x_n.
 *
 * Values are validated at construction: the sequence must be non-empty and
 * every entry finite. Estimation math is undefined on NaN/infinity, so bad
 * values are rejected here instead of propagating.
 */
class TimeSeries {
public:
    explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            throw InputError("time series must contain at least one point");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            detail::require_finite(values_[i], "observation", i + 1);
        }
    }

    std::size_t size() const { return values_.size(); }

    /// Value at 1-based position t.
    double at(std::size_t t) const {
        if (t < 1 || t > values_.size()) {
            throw InputError("index " + std::to_string(t) + " outside [1, " +
                             std::to_string(values_.size()) + "]");
        }
        return values_[t - 1];
    }

    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

/**
 * @brief Partial map from 1-based position to labeled truth value.
 *
 * Labels are treated as ground truth absolutely: a labeled position is never
 * modified by any repair algorithm in this library.
 */
class LabeledSeries {
public:
    LabeledSeries() = default;

    explicit LabeledSeries(std::map<std::size_t, double> labels)
        : labels_(std::move(labels)) {
        for (const auto& [t, v] : labels_) {
            if (t < 1) {
                throw InputError("label index must be >= 1");
            }
            detail::require_finite(v, "label", t);
        }
    }

    void set(std::size_t t, double truth) {
        if (t < 1) {
            throw InputError("label index must be >= 1");
        }
        detail::require_finite(truth, "label", t);
        labels_[t] = truth;
    }

    bool contains(std::size_t t) const { return labels_.count(t) != 0; }

    double at(std::size_t t) const {
        auto it = labels_.find(t);
        if (it == labels_.end()) {
            throw InputError("position " + std::to_string(t) + " is not labeled");
        }
        return it->second;
    }

    bool empty() const { return labels_.empty(); }
    std::size_t size() const { return labels_.size(); }

    /// Ordered by position.
    const std::map<std::size_t, double>& entries() const { return labels_; }

private:
    std::map<std::size_t, double> labels_;
};

/**
 * @brief The evolving sequence y^(k): labels frozen, everything else mutable.
 *
 * Construction realizes the initialization y_t = label_t where labeled,
 * y_t = x_t otherwise. set() refuses to touch a labeled position, which makes
 * label immutability a structural guarantee rather than a convention.
 */
class RepairState {
public:
    RepairState(const TimeSeries& x, const LabeledSeries& labels)
        : values_(x.values()), labeled_(x.size(), false) {
        const std::size_t n = x.size();
        for (const auto& [t, v] : labels.entries()) {
            if (t > n) {
                throw InputError("label index " + std::to_string(t) +
                                 " outside [1, " + std::to_string(n) + "]");
            }
            values_[t - 1] = v;
            labeled_[t - 1] = true;
        }
    }

    std::size_t size() const { return values_.size(); }

    double at(std::size_t t) const {
        check_range(t);
        return values_[t - 1];
    }

    bool labeled(std::size_t t) const {
        check_range(t);
        return labeled_[t - 1];
    }

    /// Repair the unlabeled position t to value v.
    void set(std::size_t t, double v) {
        check_range(t);
        if (labeled_[t - 1]) {
            throw InputError("position " + std::to_string(t) +
                             " is labeled and cannot be repaired");
        }
        detail::require_finite(v, "repair value", t);
        values_[t - 1] = v;
    }

    const std::vector<double>& values() const { return values_; }
    const std::vector<bool>& labeled_mask() const { return labeled_; }

private:
    void check_range(std::size_t t) const {
        if (t < 1 || t > values_.size()) {
            throw InputError("index " + std::to_string(t) + " outside [1, " +
                             std::to_string(values_.size()) + "]");
        }
    }

    std::vector<double> values_;
    std::vector<bool> labeled_;
};

/// z_t = y_t - x_t, the displacement sequence all estimation operates on.
struct DiffSeries {
    std::vector<double> diffs;

    std::size_t size() const { return diffs.size(); }

    double at(std::size_t t) const {
        if (t < 1 || t > diffs.size()) {
            throw InputError("index " + std::to_string(t) + " outside [1, " +
                             std::to_string(diffs.size()) + "]");
        }
        return diffs[t - 1];
    }
};

/// Maximal run of consecutive labeled positions [start, end], 1-based.
struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const Segment&) const = default;
};

/// Labeled segments s(j), e(j) in increasing position order.
struct SegmentIndex {
    std::vector<Segment> segments;

    std::size_t count() const { return segments.size(); }
};

inline RepairState init_repair_state(const TimeSeries& x, const LabeledSeries& labels) {
    return RepairState(x, labels);
}

inline DiffSeries diff(const RepairState& state, const TimeSeries& x) {
    if (state.size() != x.size()) {
        throw InputError("repair state and observations differ in length: " +
                         std::to_string(state.size()) + " vs " +
                         std::to_string(x.size()));
    }
    DiffSeries z;
    z.diffs.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        z.diffs[i] = state.values()[i] - x.values()[i];
    }
    return z;
}

/// Decompose the labeled positions into maximal consecutive runs.
inline SegmentIndex labeled_segments(const LabeledSeries& labels, std::size_t n) {
    SegmentIndex index;
    for (const auto& [t, v] : labels.entries()) {
        (void)v;
        if (t > n) {
            throw InputError("label index " + std::to_string(t) +
                             " outside [1, " + std::to_string(n) + "]");
        }
        if (!index.segments.empty() && index.segments.back().end + 1 == t) {
            index.segments.back().end = t;
        } else {
            index.segments.push_back(Segment{t, t});
        }
    }
    return index;
}

} // namespace imr
