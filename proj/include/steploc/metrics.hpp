#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "steploc/lexicon.hpp"
#include "steploc/types.hpp"

namespace steploc {

struct EvalConfig {
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5};
    double frame_rate_hz = 10.0;
};

inline void validate_eval_config(const EvalConfig& cfg) {
    if (cfg.alphas.empty()) throw ValidationError("alphas must not be empty");
    double prev = 0.0;
    for (double a : cfg.alphas) {
        if (!(a > 0.0) || a > 1.0) throw ValidationError("alphas must lie in (0, 1]");
        if (a <= prev) throw ValidationError("alphas must be strictly increasing");
        prev = a;
    }
    if (!(cfg.frame_rate_hz > 0.0)) throw ValidationError("frame rate must be > 0");
}

/// Temporal intersection over union of [gs, ge] and [ds, de].
inline double iou(double gs, double ge, double ds, double de) {
    const double inter = std::min(ge, de) - std::max(gs, ds);
    if (inter <= 0.0) return 0.0;
    const double uni = std::max(ge, de) - std::min(gs, ds);
    return inter / uni;
}

/// Rank order shared by NMS output, evaluation, and the test oracles:
/// score descending, then earlier start, lower step, earlier end.
inline bool detection_rank_less(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.start_s != b.start_s) return a.start_s < b.start_s;
    if (a.step_id != b.step_id) return a.step_id < b.step_id;
    return a.end_s < b.end_s;
}

struct MatchResult {
    std::vector<bool> is_tp;       // per detection, in the given order
    std::vector<bool> gt_matched;  // per ground-truth segment
};

/// Greedy matching for one video and one class. Detections must already be in
/// rank order; each one takes the unmatched ground truth of highest IoU when
/// that IoU reaches alpha, and each ground truth is matched at most once.
inline MatchResult match_greedy(const std::vector<Detection>& detections,
                                const std::vector<AnnotatedSegment>& ground_truth, double alpha) {
    MatchResult result;
    result.is_tp.assign(detections.size(), false);
    result.gt_matched.assign(ground_truth.size(), false);
    for (std::size_t d = 0; d < detections.size(); ++d) {
        double best_iou = 0.0;
        int best_gt = -1;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (result.gt_matched[g]) continue;
            const double overlap =
                iou(ground_truth[g].start_s, ground_truth[g].end_s, detections[d].start_s, detections[d].end_s);
            if (overlap > best_iou) {
                best_iou = overlap;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0 && best_iou >= alpha) {
            result.is_tp[d] = true;
            result.gt_matched[best_gt] = true;
        }
    }
    return result;
}

/// Interpolation-free AP: precision summed at each true-positive rank,
/// divided by the ground-truth count. Flags must be in rank order.
inline double average_precision(const std::vector<bool>& tp_flags, int n_gt) {
    if (n_gt < 0) throw ValidationError("n_gt must be >= 0");
    if (n_gt == 0) return 0.0;
    double ap = 0.0;
    int tp = 0;
    for (std::size_t i = 0; i < tp_flags.size(); ++i) {
        if (tp_flags[i]) {
            ++tp;
            ap += static_cast<double>(tp) / static_cast<double>(i + 1);
        }
    }
    return ap / static_cast<double>(n_gt);
}

struct ClassEval {
    int class_id = 0;
    int n_gt = 0;
    double ap = 0.0;
    double recall = 0.0;
};

struct AlphaReport {
    double alpha = 0.0;
    double map = 0.0;
    double mar = 0.0;
    std::vector<ClassEval> per_class;  // classes with ground truth, ascending id
};

struct MetricReport {
    std::vector<AlphaReport> per_alpha;
};

namespace detail {

// Global rank order within a class: score descending, ties by video id then
// interval. Keying ties on the id string keeps every metric invariant to the
// order videos appear in the files.
struct RankedDetection {
    double score;
    const std::string* video_id;
    double start_s;
    double end_s;
    bool tp;
};

inline bool ranked_less(const RankedDetection& a, const RankedDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (*a.video_id != *b.video_id) return *a.video_id < *b.video_id;
    if (a.start_s != b.start_s) return a.start_s < b.start_s;
    return a.end_s < b.end_s;
}

} // namespace detail

/// Per-class AP and recall at every alpha; classes without ground truth are
/// excluded from the means. Throws when the annotations contain no segments.
inline MetricReport evaluate_detections(const DetectionSet& detections, const AnnotationSet& annotations,
                                        const EvalConfig& cfg) {
    validate_eval_config(cfg);

    // Ground truth per class keyed by video id.
    std::map<int, std::unordered_map<std::string, std::vector<AnnotatedSegment>>> gts_by_class;
    std::map<int, int> gt_count;
    for (const auto& v : annotations.videos) {
        for (const auto& seg : v.segments) {
            gts_by_class[seg.step_id][v.video_id].push_back(seg);
            ++gt_count[seg.step_id];
        }
    }
    if (gt_count.empty()) throw ValidationError("empty evaluation (no class has ground truth)");

    std::map<int, std::map<int, std::vector<Detection>>> dets_by_class;  // class -> video idx
    for (std::size_t v = 0; v < detections.videos.size(); ++v) {
        for (const auto& d : detections.videos[v].detections)
            dets_by_class[d.step_id][static_cast<int>(v)].push_back(d);
    }

    MetricReport report;
    for (double alpha : cfg.alphas) {
        AlphaReport ar;
        ar.alpha = alpha;
        double ap_sum = 0.0;
        double recall_sum = 0.0;
        for (const auto& [class_id, n_gt] : gt_count) {
            std::vector<detail::RankedDetection> ranked;
            int matched = 0;
            auto dit = dets_by_class.find(class_id);
            if (dit != dets_by_class.end()) {
                const auto& class_gts = gts_by_class.at(class_id);
                for (const auto& [vid, dets] : dit->second) {
                    std::vector<Detection> sorted = dets;
                    std::sort(sorted.begin(), sorted.end(), detection_rank_less);
                    std::vector<AnnotatedSegment> gts;
                    auto git = class_gts.find(detections.videos[vid].video_id);
                    if (git != class_gts.end()) gts = git->second;
                    const MatchResult match = match_greedy(sorted, gts, alpha);
                    for (std::size_t i = 0; i < sorted.size(); ++i) {
                        ranked.push_back({sorted[i].score, &detections.videos[vid].video_id,
                                          sorted[i].start_s, sorted[i].end_s, match.is_tp[i]});
                        if (match.is_tp[i]) ++matched;
                    }
                }
            }
            std::sort(ranked.begin(), ranked.end(), detail::ranked_less);
            std::vector<bool> flags(ranked.size());
            for (std::size_t i = 0; i < ranked.size(); ++i) flags[i] = ranked[i].tp;

            ClassEval ce;
            ce.class_id = class_id;
            ce.n_gt = n_gt;
            ce.ap = average_precision(flags, n_gt);
            ce.recall = static_cast<double>(matched) / static_cast<double>(n_gt);
            ap_sum += ce.ap;
            recall_sum += ce.recall;
            ar.per_class.push_back(ce);
        }
        ar.map = ap_sum / static_cast<double>(gt_count.size());
        ar.mar = recall_sum / static_cast<double>(gt_count.size());
        report.per_alpha.push_back(std::move(ar));
    }
    return report;
}

inline double map_at(const DetectionSet& detections, const AnnotationSet& annotations, double alpha) {
    EvalConfig cfg;
    cfg.alphas = {alpha};
    return evaluate_detections(detections, annotations, cfg).per_alpha.front().map;
}

inline double mar_at(const DetectionSet& detections, const AnnotationSet& annotations, double alpha) {
    EvalConfig cfg;
    cfg.alphas = {alpha};
    return evaluate_detections(detections, annotations, cfg).per_alpha.front().mar;
}

inline double frame_accuracy(const std::vector<int>& pred_frames, const std::vector<int>& gt_frames) {
    if (pred_frames.size() != gt_frames.size())
        throw ValidationError("frame label length mismatch (" + std::to_string(pred_frames.size()) +
                              " vs " + std::to_string(gt_frames.size()) + ")");
    if (pred_frames.empty()) throw ValidationError("no frames to compare");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred_frames.size(); ++i)
        if (pred_frames[i] == gt_frames[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred_frames.size());
}

constexpr int kBackgroundLabel = -1;

/// Sample detection labels at frame centers (i + 0.5) / fps. Overlaps resolve
/// to the highest score, then earlier start, then lower step id.
inline std::vector<int> rasterize_detections(const VideoDetections& video, double duration_s, double fps) {
    const int n = static_cast<int>(std::floor(duration_s * fps));
    std::vector<int> labels(std::max(n, 0), kBackgroundLabel);
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / fps;
        const Detection* best = nullptr;
        for (const auto& d : video.detections) {
            if (t < d.start_s || t >= d.end_s) continue;
            if (!best || d.score > best->score ||
                (d.score == best->score &&
                 (d.start_s < best->start_s || (d.start_s == best->start_s && d.step_id < best->step_id))))
                best = &d;
        }
        if (best) labels[i] = best->step_id;
    }
    return labels;
}

/// Sample annotation labels at frame centers; overlapping segments resolve to
/// the earliest-listed one.
inline std::vector<int> rasterize_annotations(const VideoAnnotation& video, double fps) {
    const int n = static_cast<int>(std::floor(video.duration_s * fps));
    std::vector<int> labels(std::max(n, 0), kBackgroundLabel);
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / fps;
        for (const auto& seg : video.segments) {
            if (t >= seg.start_s && t < seg.end_s) {
                labels[i] = seg.step_id;
                break;
            }
        }
    }
    return labels;
}

/// Corpus-level frame accuracy: correctly labeled frames over all frames of
/// all annotated videos, sampled at fps.
inline double frame_accuracy_eval(const DetectionSet& detections, const AnnotationSet& annotations, double fps) {
    if (!(fps > 0.0)) throw ValidationError("frame rate must be > 0");
    std::unordered_map<std::string, const VideoDetections*> dets_by_id;
    for (const auto& v : detections.videos) dets_by_id.emplace(v.video_id, &v);
    std::size_t correct = 0;
    std::size_t total = 0;
    const VideoDetections empty;
    for (const auto& v : annotations.videos) {
        auto it = dets_by_id.find(v.video_id);
        const VideoDetections& dv = (it != dets_by_id.end()) ? *it->second : empty;
        const std::vector<int> gt = rasterize_annotations(v, fps);
        const std::vector<int> pred = rasterize_detections(dv, v.duration_s, fps);
        for (std::size_t i = 0; i < gt.size(); ++i)
            if (gt[i] == pred[i]) ++correct;
        total += gt.size();
    }
    if (total == 0) throw ValidationError("no frames to compare");
    return static_cast<double>(correct) / static_cast<double>(total);
}

/// Longest common subsequence length by dynamic programming.
inline int lcs(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<int> prev(b.size() + 1, 0);
    std::vector<int> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

struct TaskOrderStats {
    int task_id = 0;
    int n_videos = 0;
    double mss = 0.0;
    double oce = 0.0;
};

struct OrderStatsReport {
    std::vector<TaskOrderStats> per_task;  // tasks with at least one video
    double mean_mss = 0.0;
    double mean_oce = 0.0;
};

/// Missing-steps score and order-consistency error per task. The canonical
/// step sequence of a task is its lexicon file order. A video contributes the
/// number of distinct annotated steps and the LCS of its annotated sequence
/// against the canonical one; videos without segments contribute zeros.
inline OrderStatsReport mss_oce(const AnnotationSet& annotations, const Lexicon& lexicon) {
    validate_annotations(annotations, &lexicon);
    std::vector<std::vector<int>> canonical(lexicon.task_count());
    for (const auto& s : lexicon.steps) canonical[s.task_id].push_back(s.id);

    struct Accum {
        int n_videos = 0;
        long long distinct_sum = 0;
        long long lcs_sum = 0;
    };
    std::vector<Accum> acc(lexicon.task_count());
    for (const auto& v : annotations.videos) {
        auto& a = acc[v.task_id];
        ++a.n_videos;
        std::vector<int> seq;
        seq.reserve(v.segments.size());
        for (const auto& seg : v.segments) seq.push_back(seg.step_id);
        std::vector<int> distinct = seq;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        a.distinct_sum += static_cast<long long>(distinct.size());
        a.lcs_sum += lcs(seq, canonical[v.task_id]);
    }

    OrderStatsReport report;
    double mss_sum = 0.0;
    double oce_sum = 0.0;
    for (int j = 0; j < lexicon.task_count(); ++j) {
        if (acc[j].n_videos == 0) continue;
        TaskOrderStats stats;
        stats.task_id = j;
        stats.n_videos = acc[j].n_videos;
        const double k_n = static_cast<double>(canonical[j].size()) * acc[j].n_videos;
        stats.mss = 1.0 - static_cast<double>(acc[j].distinct_sum) / k_n;
        stats.oce = acc[j].distinct_sum > 0
                        ? 1.0 - static_cast<double>(acc[j].lcs_sum) / static_cast<double>(acc[j].distinct_sum)
                        : 0.0;
        mss_sum += stats.mss;
        oce_sum += stats.oce;
        report.per_task.push_back(stats);
    }
    if (report.per_task.empty()) throw ValidationError("no annotated videos");
    report.mean_mss = mss_sum / static_cast<double>(report.per_task.size());
    report.mean_oce = oce_sum / static_cast<double>(report.per_task.size());
    return report;
}

} // namespace steploc
