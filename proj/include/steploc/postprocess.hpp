#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "steploc/metrics.hpp"
#include "steploc/types.hpp"

namespace steploc {

struct NmsConfig {
    double iou_threshold = 0.6;
};

/// Per-proposal weighted sum of two modalities' score vectors. Both sets must
/// describe the same video with identical proposal intervals in order.
inline ProposalSet combine_modalities(const ProposalSet& a, const ProposalSet& b, double weight_a = 0.5,
                                      double weight_b = 0.5) {
    if (a.video_id != b.video_id)
        throw ValidationError("modality video ids differ (" + a.video_id + " vs " + b.video_id + ")");
    if (a.proposals.size() != b.proposals.size())
        throw ValidationError("video " + a.video_id + ": modality proposal counts differ");
    ProposalSet out = a;
    for (std::size_t n = 0; n < a.proposals.size(); ++n) {
        const auto& pa = a.proposals[n];
        const auto& pb = b.proposals[n];
        if (pa.start_s != pb.start_s || pa.end_s != pb.end_s)
            throw ValidationError("video " + a.video_id + " proposal " + std::to_string(n) +
                                  ": modality intervals differ");
        if (pa.scores.size() != pb.scores.size())
            throw ValidationError("video " + a.video_id + " proposal " + std::to_string(n) +
                                  ": modality score lengths differ");
        for (std::size_t k = 0; k < pa.scores.size(); ++k)
            out.proposals[n].scores[k] = weight_a * pa.scores[k] + weight_b * pb.scores[k];
    }
    return out;
}

/// Class-wise greedy NMS over one video. Every step with a positive score
/// becomes a candidate; per class, candidates are kept highest-score first
/// and later ones overlapping a kept candidate above the IoU threshold are
/// dropped. Output is in rank order.
inline std::vector<Detection> nms(const ProposalSet& set, const NmsConfig& cfg) {
    if (!(cfg.iou_threshold > 0.0) || cfg.iou_threshold > 1.0)
        throw ValidationError("nms threshold must be in (0, 1]");
    std::map<int, std::vector<Detection>> by_class;
    for (const auto& p : set.proposals) {
        for (std::size_t k = 0; k < p.scores.size(); ++k) {
            if (p.scores[k] > 0.0)
                by_class[static_cast<int>(k)].push_back({static_cast<int>(k), p.start_s, p.end_s, p.scores[k]});
        }
    }
    std::vector<Detection> kept;
    for (auto& [class_id, candidates] : by_class) {
        std::sort(candidates.begin(), candidates.end(), detection_rank_less);
        std::vector<Detection> kept_class;
        for (const auto& cand : candidates) {
            bool suppressed = false;
            for (const auto& k : kept_class) {
                if (iou(k.start_s, k.end_s, cand.start_s, cand.end_s) > cfg.iou_threshold) {
                    suppressed = true;
                    break;
                }
            }
            if (!suppressed) kept_class.push_back(cand);
        }
        kept.insert(kept.end(), kept_class.begin(), kept_class.end());
    }
    std::sort(kept.begin(), kept.end(), detection_rank_less);
    return kept;
}

} // namespace steploc
