#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "steploc/lexicon.hpp"

namespace steploc {

/// Detector output candidate: a temporal interval with one score per step.
struct Proposal {
    double start_s = 0.0;
    double end_s = 0.0;
    std::vector<double> scores;
    bool operator==(const Proposal&) const = default;
};

/// All proposals of one video.
struct ProposalSet {
    std::string video_id;
    double duration_s = 0.0;
    std::vector<Proposal> proposals;
    bool operator==(const ProposalSet&) const = default;
};

struct AnnotatedSegment {
    int step_id = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    bool operator==(const AnnotatedSegment&) const = default;
};

struct VideoAnnotation {
    std::string video_id;
    int task_id = 0;
    double duration_s = 0.0;
    std::vector<AnnotatedSegment> segments;
    bool operator==(const VideoAnnotation&) const = default;
};

struct AnnotationSet {
    std::vector<VideoAnnotation> videos;
    bool operator==(const AnnotationSet&) const = default;
};

struct Detection {
    int step_id = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double score = 0.0;
    bool operator==(const Detection&) const = default;
};

struct VideoDetections {
    std::string video_id;
    std::vector<Detection> detections;
    bool operator==(const VideoDetections&) const = default;
};

struct DetectionSet {
    std::vector<VideoDetections> videos;
    bool operator==(const DetectionSet&) const = default;
};

inline void validate_proposal_set(const ProposalSet& set, int expected_k = -1) {
    if (!(set.duration_s > 0.0) || !std::isfinite(set.duration_s))
        throw ValidationError("video " + set.video_id + ": duration_s must be finite and > 0");
    for (std::size_t n = 0; n < set.proposals.size(); ++n) {
        const auto& p = set.proposals[n];
        const std::string where = "video " + set.video_id + " proposal " + std::to_string(n);
        if (!std::isfinite(p.start_s) || !std::isfinite(p.end_s) || p.end_s <= p.start_s)
            throw ValidationError(where + ": end_s must be > start_s");
        if (p.start_s < 0.0 || p.end_s > set.duration_s)
            throw ValidationError(where + ": interval out of range [0, duration_s]");
        if (expected_k >= 0 && static_cast<int>(p.scores.size()) != expected_k)
            throw ValidationError(where + ": scores length != K (" +
                                  std::to_string(p.scores.size()) + " vs " + std::to_string(expected_k) + ")");
        for (double s : p.scores) {
            if (!std::isfinite(s)) throw ValidationError(where + ": non-finite score");
            if (s < 0.0) throw ValidationError(where + ": negative score");
        }
    }
}

inline void validate_annotations(const AnnotationSet& set, const Lexicon* lex = nullptr) {
    for (const auto& v : set.videos) {
        const std::string where = "video " + v.video_id;
        if (!(v.duration_s > 0.0) || !std::isfinite(v.duration_s))
            throw ValidationError(where + ": duration_s must be finite and > 0");
        if (v.task_id < 0) throw ValidationError(where + ": negative task id");
        if (lex && v.task_id >= lex->task_count())
            throw ValidationError(where + ": unknown task " + std::to_string(v.task_id));
        double prev_start = 0.0;
        for (std::size_t i = 0; i < v.segments.size(); ++i) {
            const auto& seg = v.segments[i];
            if (!std::isfinite(seg.start_s) || !std::isfinite(seg.end_s) || seg.end_s <= seg.start_s)
                throw ValidationError(where + " segment " + std::to_string(i) + ": end_s must be > start_s");
            if (seg.start_s < 0.0 || seg.end_s > v.duration_s)
                throw ValidationError(where + " segment " + std::to_string(i) + ": interval out of range");
            if (i > 0 && seg.start_s < prev_start)
                throw ValidationError(where + ": segments not in nondecreasing start order");
            prev_start = seg.start_s;
            if (seg.step_id < 0) throw ValidationError(where + ": negative step id");
            if (lex) {
                if (seg.step_id >= lex->step_count())
                    throw ValidationError(where + ": unknown step " + std::to_string(seg.step_id));
                if (lex->steps[seg.step_id].task_id != v.task_id)
                    throw ValidationError(where + ": step " + std::to_string(seg.step_id) +
                                          " does not belong to task " + std::to_string(v.task_id));
            }
        }
    }
}

inline void validate_detections(const DetectionSet& set, const Lexicon* lex = nullptr) {
    for (const auto& v : set.videos) {
        const std::string where = "video " + v.video_id;
        for (std::size_t i = 0; i < v.detections.size(); ++i) {
            const auto& d = v.detections[i];
            if (!std::isfinite(d.start_s) || !std::isfinite(d.end_s) || d.end_s <= d.start_s)
                throw ValidationError(where + " detection " + std::to_string(i) + ": end_s must be > start_s");
            if (!std::isfinite(d.score))
                throw ValidationError(where + " detection " + std::to_string(i) + ": non-finite score");
            if (d.step_id < 0)
                throw ValidationError(where + " detection " + std::to_string(i) + ": negative step id");
            if (lex && d.step_id >= lex->step_count())
                throw ValidationError(where + " detection " + std::to_string(i) + ": unknown step");
        }
    }
}

} // namespace steploc
