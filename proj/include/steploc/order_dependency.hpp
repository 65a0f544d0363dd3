#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "steploc/curves.hpp"
#include "steploc/transitions.hpp"
#include "steploc/types.hpp"
#include "steploc/watershed.hpp"

namespace steploc {

struct OdConfig {
    double lambda1 = 0.0;  // weight of the observed score
    double lambda2 = 1.0;  // weight of the ordering prior
    CurveConfig curve;
    int slots = 100;
    WatershedConfig watershed;
    Fusion fusion = Fusion::weighted_sum;
};

inline void validate_od_config(const OdConfig& cfg) {
    if (std::abs(cfg.lambda1 + cfg.lambda2 - 1.0) > 1e-9 || cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0)
        throw ValidationError("lambda1+lambda2 must equal 1 with both >= 0");
    if (cfg.slots < 2) throw ValidationError("slots must be >= 2");
    if (!(cfg.curve.beta > 0.0)) throw ValidationError("beta must be > 0");
    detail::validate_watershed_config(cfg.watershed);
}

/// Push segment-level score changes back onto the proposals. The per-segment
/// delta is spread over the segment's slots proportionally to the video curve,
/// then re-integrated against each proposal's own curve with a unit-peak
/// midpoint weight. Slots where the video curve or segment score is zero
/// contribute nothing. Intervals are unchanged.
inline ProposalSet map_variation(const ProposalSet& proposals, const CurveSet& curves,
                                 const SegmentList& segments_old, const SegmentList& segments_new,
                                 const TimeGrid& grid, const CurveConfig& curve_cfg) {
    if (segments_old.size() != segments_new.size())
        throw ValidationError("mismatched segment structures (different counts)");
    for (std::size_t l = 0; l < segments_old.size(); ++l) {
        if (segments_old[l].start_s != segments_new[l].start_s || segments_old[l].end_s != segments_new[l].end_s)
            throw ValidationError("mismatched segment structures (different intervals)");
        if (segments_old[l].scores.size() != segments_new[l].scores.size())
            throw ValidationError("mismatched segment structures (different score lengths)");
    }

    const int num_steps = curves.num_steps;
    const double width = grid.slot_width();

    // Per-slot curve delta: zero outside segments, ratio-scaled inside.
    std::vector<double> delta_curve(curves.values.size(), 0.0);
    for (std::size_t l = 0; l < segments_old.size(); ++l) {
        const auto& old_seg = segments_old[l];
        const auto& new_seg = segments_new[l];
        for (int m = 0; m < grid.slots; ++m) {
            const double t = grid.center(m);
            if (t < old_seg.start_s || t > old_seg.end_s) continue;
            for (int k = 0; k < num_steps; ++k) {
                const double base = old_seg.scores[k];
                if (base == 0.0) continue;
                const double ratio = (new_seg.scores[k] - base) / base;
                delta_curve[static_cast<std::size_t>(m) * num_steps + k] = ratio * curves.at(m, k);
            }
        }
    }

    ProposalSet out = proposals;
    std::vector<double> score_delta;
    for (auto& p : out.proposals) {
        score_delta.assign(num_steps, 0.0);
        for (int m = 0; m < grid.slots; ++m) {
            const double t = grid.center(m);
            const double shape = curve_shape(p.start_s, p.end_s, t, curve_cfg);
            if (shape == 0.0) continue;
            const double weight = midpoint_weight(p.start_s, p.end_s, t, curve_cfg);
            for (int k = 0; k < num_steps; ++k) {
                const double total = curves.at(m, k);
                if (total == 0.0) continue;
                const double delta = delta_curve[static_cast<std::size_t>(m) * num_steps + k];
                if (delta == 0.0) continue;
                score_delta[k] += (delta / total) * (p.scores[k] * shape) * weight * width;
            }
        }
        for (int k = 0; k < num_steps; ++k) p.scores[k] += score_delta[k];
    }
    return out;
}

/// Full ordering-dependency pass over one video: accumulate proposal curves,
/// group them into segments, refine the segment scores with the transition
/// model, and map the variation back onto the proposals. Refined scores are
/// floored at zero so the result is a valid proposal set.
inline ProposalSet apply_od(const ProposalSet& proposals, const TransitionModel& model, const OdConfig& cfg) {
    validate_od_config(cfg);
    if (proposals.proposals.empty())
        throw ValidationError("video " + proposals.video_id + ": no proposals");
    for (const auto& p : proposals.proposals) {
        if (static_cast<int>(p.scores.size()) != model.num_steps)
            throw ValidationError("video " + proposals.video_id + ": scores length != K (" +
                                  std::to_string(p.scores.size()) + " vs " +
                                  std::to_string(model.num_steps) + ")");
    }
    const TimeGrid grid(proposals.duration_s, cfg.slots);
    const CurveSet curves = accumulate(proposals, grid, cfg.curve);
    const SegmentList grouped = watershed_group(curves, grid, cfg.watershed);
    const SegmentList refined = refine_segments(grouped, model, cfg.lambda1, cfg.lambda2, cfg.fusion);
    ProposalSet out = map_variation(proposals, curves, grouped, refined, grid, cfg.curve);
    for (auto& p : out.proposals)
        for (double& s : p.scores) s = std::max(0.0, s);
    return out;
}

} // namespace steploc
