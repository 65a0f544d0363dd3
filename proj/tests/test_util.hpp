#pragma once

// Shared helpers for the test binaries: small random evaluation instances
// with a handful of classes, ground-truth segments and scored detections.

#include <string>
#include <utility>

#include "steploc/synth.hpp"
#include "steploc/types.hpp"

namespace steploc::testutil {

struct EvalInstance {
    AnnotationSet annotations;
    DetectionSet detections;
};

inline EvalInstance random_eval_instance(SplitMix64& rng) {
    const int classes = 1 + static_cast<int>(rng.below(5));
    const int videos = 1 + static_cast<int>(rng.below(3));
    const int total_gt = 1 + static_cast<int>(rng.below(20));
    const int total_det = static_cast<int>(rng.below(51));

    EvalInstance inst;
    for (int v = 0; v < videos; ++v) {
        VideoAnnotation anno;
        anno.video_id = "v" + std::to_string(v);
        anno.task_id = 0;
        anno.duration_s = 120.0;
        inst.annotations.videos.push_back(anno);
        inst.detections.videos.push_back({anno.video_id, {}});
    }
    for (int g = 0; g < total_gt; ++g) {
        const int v = static_cast<int>(rng.below(videos));
        AnnotatedSegment seg;
        seg.step_id = static_cast<int>(rng.below(classes));
        seg.start_s = rng.range(0.0, 100.0);
        seg.end_s = seg.start_s + rng.range(1.0, 20.0);
        inst.annotations.videos[v].segments.push_back(seg);
    }
    for (auto& video : inst.annotations.videos) {
        std::sort(video.segments.begin(), video.segments.end(),
                  [](const AnnotatedSegment& a, const AnnotatedSegment& b) { return a.start_s < b.start_s; });
    }
    // Sometimes a video exists on one side only.
    if (rng.uniform() < 0.3) inst.annotations.videos.push_back({"anno_only", 0, 120.0, {}});
    if (rng.uniform() < 0.3) inst.detections.videos.push_back({"det_only", {}});

    for (int d = 0; d < total_det; ++d) {
        const int v = static_cast<int>(rng.below(inst.detections.videos.size()));
        Detection det;
        det.step_id = static_cast<int>(rng.below(classes));
        det.start_s = rng.range(0.0, 100.0);
        det.end_s = det.start_s + rng.range(1.0, 20.0);
        // Coarse scores so ties between detections actually occur.
        det.score = static_cast<double>(rng.below(100)) / 100.0;
        inst.detections.videos[v].detections.push_back(det);
    }
    // Detection-file video order need not match the annotation file.
    for (std::size_t i = inst.detections.videos.size(); i > 1; --i)
        std::swap(inst.detections.videos[i - 1], inst.detections.videos[rng.below(i)]);
    return inst;
}

} // namespace steploc::testutil
