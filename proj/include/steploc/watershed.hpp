#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "steploc/curves.hpp"

namespace steploc {

/// Disjoint grouped interval with integrated per-step scores.
struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::vector<double> scores;
    bool operator==(const Segment&) const = default;
};

using SegmentList = std::vector<Segment>;

enum class WatershedCriterion { avg_gap, avg_len };

/// Threshold sweep on the actionness signal: thresholds run from
/// hi_frac*max down to lo_frac*max in steps of step_frac*max; the sweep stops
/// at the first threshold whose segments meet the termination criterion.
/// avg_gap: mean inter-segment gap (slots) drops below theta_gap (needs at
/// least two segments). avg_len: mean segment length (slots) exceeds
/// theta_len. Thetas are measured in slots.
struct WatershedConfig {
    double hi_frac = 0.95;
    double lo_frac = 0.05;
    double step_frac = 0.05;
    WatershedCriterion criterion = WatershedCriterion::avg_gap;
    double theta_gap = 6.0;
    double theta_len = 15.0;
};

namespace detail {

inline void validate_watershed_config(const WatershedConfig& cfg) {
    if (!(cfg.lo_frac > 0.0) || !(cfg.hi_frac > cfg.lo_frac) || cfg.hi_frac > 1.0)
        throw ValidationError("watershed thresholds need 0 < lo_frac < hi_frac <= 1");
    if (!(cfg.step_frac > 0.0)) throw ValidationError("watershed step_frac must be > 0");
}

// Maximal runs of slots with actionness strictly above the threshold,
// as inclusive [first, last] slot pairs.
inline std::vector<std::pair<int, int>> runs_above(const std::vector<double>& a, double threshold) {
    std::vector<std::pair<int, int>> runs;
    int start = -1;
    for (int m = 0; m < static_cast<int>(a.size()); ++m) {
        if (a[m] > threshold) {
            if (start < 0) start = m;
        } else if (start >= 0) {
            runs.emplace_back(start, m - 1);
            start = -1;
        }
    }
    if (start >= 0) runs.emplace_back(start, static_cast<int>(a.size()) - 1);
    return runs;
}

inline bool criterion_met(const std::vector<std::pair<int, int>>& runs, const WatershedConfig& cfg) {
    if (runs.empty()) return false;
    if (cfg.criterion == WatershedCriterion::avg_gap) {
        if (runs.size() < 2) return false;
        double gap_sum = 0.0;
        for (std::size_t l = 1; l < runs.size(); ++l)
            gap_sum += static_cast<double>(runs[l].first - runs[l - 1].second - 1);
        return gap_sum / static_cast<double>(runs.size() - 1) < cfg.theta_gap;
    }
    double len_sum = 0.0;
    for (const auto& r : runs) len_sum += static_cast<double>(r.second - r.first + 1);
    return len_sum / static_cast<double>(runs.size()) > cfg.theta_len;
}

inline SegmentList runs_to_segments(const std::vector<std::pair<int, int>>& runs, const CurveSet& curves,
                                    const TimeGrid& grid) {
    const double width = grid.slot_width();
    SegmentList segments;
    segments.reserve(runs.size());
    for (const auto& [first, last] : runs) {
        Segment seg;
        seg.start_s = first * width;
        seg.end_s = (last + 1) * width;
        seg.scores.assign(curves.num_steps, 0.0);
        for (int m = first; m <= last; ++m)
            for (int k = 0; k < curves.num_steps; ++k) seg.scores[k] += curves.at(m, k) * width;
        segments.push_back(std::move(seg));
    }
    return segments;
}

} // namespace detail

inline SegmentList watershed_group(const CurveSet& curves, const TimeGrid& grid, const WatershedConfig& cfg) {
    detail::validate_watershed_config(cfg);
    if (curves.num_slots != grid.slots) throw ValidationError("curve set does not match grid");
    double peak = 0.0;
    for (double v : curves.actionness) peak = std::max(peak, v);
    if (!(peak > 0.0)) throw ValidationError("no signal (all-zero actionness)");

    const int n_thresholds =
        static_cast<int>(std::llround((cfg.hi_frac - cfg.lo_frac) / cfg.step_frac)) + 1;
    std::vector<std::pair<int, int>> last_runs;
    for (int i = 0; i < n_thresholds; ++i) {
        const double threshold = (cfg.hi_frac - i * cfg.step_frac) * peak;
        last_runs = detail::runs_above(curves.actionness, threshold);
        if (detail::criterion_met(last_runs, cfg)) break;
    }
    return detail::runs_to_segments(last_runs, curves, grid);
}

} // namespace steploc
