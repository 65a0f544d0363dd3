#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "steploc/json_io.hpp"
#include "steploc/metrics.hpp"
#include "steploc/watershed.hpp"

namespace steploc {

/// SplitMix64: 64-bit generator with a fixed published scramble, cheap to
/// split into independent per-video streams.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t s) : state(s) {}

    static std::uint64_t scramble(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        return scramble(state);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t below(std::uint64_t n) { return next() % n; }

    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

/// Stream for one generated video, decorrelated from its neighbours.
inline SplitMix64 video_stream(std::uint64_t seed, std::uint64_t video_index) {
    return SplitMix64(SplitMix64::scramble(seed + 0x9E3779B97F4A7C15ull * (video_index + 1)));
}

struct SynthConfig {
    std::uint64_t seed = 1;
    int n_tasks = 2;
    int steps_per_task = 3;
    int n_videos = 10;  // per split (train and test each)
    double drop_prob = 0.0;
    double swap_prob = 0.0;
    double jitter_s = 0.0;
    double confusion_prob = 0.0;
    int proposals_per_segment = 1;
};

inline void validate_synth_config(const SynthConfig& cfg) {
    if (cfg.n_tasks < 1 || cfg.steps_per_task < 1 || cfg.n_videos < 1 || cfg.proposals_per_segment < 1)
        throw ValidationError("synth counts must be >= 1");
    for (double p : {cfg.drop_prob, cfg.swap_prob, cfg.confusion_prob})
        if (p < 0.0 || p > 1.0) throw ValidationError("synth probabilities must lie in [0, 1]");
    if (cfg.drop_prob >= 1.0)
        throw ValidationError("drop_prob of 1 can only yield zero-step videos");
    if (cfg.jitter_s < 0.0) throw ValidationError("jitter_s must be >= 0");
}

struct Corpus {
    Lexicon lexicon;
    AnnotationSet train;
    AnnotationSet test;
    std::vector<ProposalSet> proposals;  // detector output for the test split
};

namespace detail {

inline std::string synth_video_id(const char* prefix, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d", prefix, index);
    return buf;
}

inline VideoAnnotation synth_video(const SynthConfig& cfg, SplitMix64& rng, const std::string& video_id) {
    VideoAnnotation video;
    video.video_id = video_id;
    video.task_id = static_cast<int>(rng.below(cfg.n_tasks));

    // Canonical order, independent drops (re-drawn until nonempty), then one
    // pass of adjacent swaps.
    std::vector<int> steps;
    while (steps.empty()) {
        for (int i = 0; i < cfg.steps_per_task; ++i)
            if (rng.uniform() >= cfg.drop_prob) steps.push_back(video.task_id * cfg.steps_per_task + i);
    }
    for (std::size_t i = 0; i + 1 < steps.size(); ++i)
        if (rng.uniform() < cfg.swap_prob) std::swap(steps[i], steps[i + 1]);

    std::vector<double> bounds(steps.size() + 1, 0.0);
    for (std::size_t i = 0; i < steps.size(); ++i) bounds[i + 1] = bounds[i] + rng.range(5.0, 30.0);
    if (cfg.jitter_s > 0.0) {
        for (std::size_t i = 1; i < steps.size(); ++i)
            bounds[i] += rng.range(-cfg.jitter_s, cfg.jitter_s);
        for (std::size_t i = 1; i < bounds.size(); ++i)
            bounds[i] = std::max(bounds[i], bounds[i - 1] + 0.1);
    }
    video.duration_s = quantize_number(bounds.back() + 2.0);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        video.segments.push_back({steps[i], quantize_number(bounds[i]), quantize_number(bounds[i + 1])});
    }
    return video;
}

inline ProposalSet synth_proposals(const SynthConfig& cfg, SplitMix64& rng, const VideoAnnotation& video,
                                   int total_steps) {
    ProposalSet set;
    set.video_id = video.video_id;
    set.duration_s = video.duration_s;
    for (const auto& seg : video.segments) {
        for (int r = 0; r < cfg.proposals_per_segment; ++r) {
            Proposal p;
            p.start_s = seg.start_s + (cfg.jitter_s > 0.0 ? rng.range(-cfg.jitter_s, cfg.jitter_s) : 0.0);
            p.end_s = seg.end_s + (cfg.jitter_s > 0.0 ? rng.range(-cfg.jitter_s, cfg.jitter_s) : 0.0);
            p.start_s = std::max(0.0, std::min(p.start_s, video.duration_s - 0.2));
            p.end_s = std::max(p.start_s + 0.2, std::min(p.end_s, video.duration_s));
            p.scores.assign(total_steps, 0.0);
            p.scores[seg.step_id] = 0.5 + 0.5 * rng.uniform();
            for (int noise = 0; noise < 2; ++noise)
                p.scores[rng.below(total_steps)] += 0.05 * rng.uniform();
            if (cfg.n_tasks > 1 && cfg.confusion_prob > 0.0 && rng.uniform() < cfg.confusion_prob) {
                int other_task = static_cast<int>(rng.below(cfg.n_tasks - 1));
                if (other_task >= video.task_id) ++other_task;
                const int foreign =
                    other_task * cfg.steps_per_task + static_cast<int>(rng.below(cfg.steps_per_task));
                p.scores[foreign] += 0.6 * p.scores[seg.step_id];
                p.scores[seg.step_id] *= 0.4;
            }
            p.start_s = quantize_number(p.start_s);
            p.end_s = quantize_number(p.end_s);
            for (double& s : p.scores) s = quantize_number(s);
            set.proposals.push_back(std::move(p));
        }
    }
    return set;
}

} // namespace detail

/// Deterministic synthetic corpus: lexicon, train/test annotations following
/// each task's canonical step order (after drops and swaps), and noisy
/// detector proposals for the test split. Every value is a pure function of
/// the config; per-video streams are keyed by (seed, video index).
inline Corpus generate_corpus(const SynthConfig& cfg) {
    validate_synth_config(cfg);
    Corpus corpus;
    corpus.lexicon.domains.push_back({0, "synthetic"});
    for (int j = 0; j < cfg.n_tasks; ++j) {
        corpus.lexicon.tasks.push_back({j, "task_" + std::to_string(j), 0});
        for (int i = 0; i < cfg.steps_per_task; ++i) {
            corpus.lexicon.steps.push_back(
                {j * cfg.steps_per_task + i, "step_" + std::to_string(j) + "_" + std::to_string(i), j});
        }
    }

    const int total_steps = cfg.n_tasks * cfg.steps_per_task;
    for (int v = 0; v < cfg.n_videos; ++v) {
        SplitMix64 rng = video_stream(cfg.seed, static_cast<std::uint64_t>(v));
        corpus.train.videos.push_back(detail::synth_video(cfg, rng, detail::synth_video_id("train", v)));
    }
    for (int v = 0; v < cfg.n_videos; ++v) {
        SplitMix64 rng = video_stream(cfg.seed, static_cast<std::uint64_t>(cfg.n_videos + v));
        VideoAnnotation video = detail::synth_video(cfg, rng, detail::synth_video_id("test", v));
        corpus.proposals.push_back(detail::synth_proposals(cfg, rng, video, total_steps));
        corpus.test.videos.push_back(std::move(video));
    }

    validate_lexicon(corpus.lexicon);
    validate_annotations(corpus.train, &corpus.lexicon);
    validate_annotations(corpus.test, &corpus.lexicon);
    for (const auto& p : corpus.proposals) validate_proposal_set(p, total_steps);
    return corpus;
}

inline void write_corpus(const std::string& dir, const Corpus& corpus) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_lexicon((base / "lexicon.json").string(), corpus.lexicon);
    write_annotations((base / "train_annotations.json").string(), corpus.train);
    write_annotations((base / "test_annotations.json").string(), corpus.test);
    write_proposals((base / "test_proposals.json").string(), corpus.proposals);
}

/// Brute-force mAP used to cross-check the metrics module. Builds the full
/// precision/recall sequence per class by rescanning ground truth for every
/// ranked detection; intended for small instances only.
inline double oracle_map(const DetectionSet& detections, const AnnotationSet& annotations, double alpha) {
    std::vector<int> classes;
    for (const auto& v : annotations.videos)
        for (const auto& seg : v.segments) classes.push_back(seg.step_id);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.empty()) throw ValidationError("empty evaluation (no class has ground truth)");

    double ap_sum = 0.0;
    for (int class_id : classes) {
        struct Cand {
            double score;
            int video_idx;  // for the ground-truth lookup, not the rank order
            double start_s;
            double end_s;
        };
        std::vector<Cand> cands;
        for (std::size_t v = 0; v < detections.videos.size(); ++v) {
            for (const auto& d : detections.videos[v].detections)
                if (d.step_id == class_id) cands.push_back({d.score, static_cast<int>(v), d.start_s, d.end_s});
        }
        // Rank: score descending, ties by video id then interval.
        std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
            if (a.score != b.score) return a.score > b.score;
            const std::string& va = detections.videos[a.video_idx].video_id;
            const std::string& vb = detections.videos[b.video_idx].video_id;
            if (va != vb) return va < vb;
            if (a.start_s != b.start_s) return a.start_s < b.start_s;
            return a.end_s < b.end_s;
        });

        // Ground truth per detection-set video plus the total count.
        int n_gt = 0;
        std::vector<std::vector<AnnotatedSegment>> gt_per_video(detections.videos.size());
        for (const auto& av : annotations.videos) {
            std::vector<AnnotatedSegment> segs;
            for (const auto& seg : av.segments)
                if (seg.step_id == class_id) segs.push_back(seg);
            n_gt += static_cast<int>(segs.size());
            for (std::size_t v = 0; v < detections.videos.size(); ++v)
                if (detections.videos[v].video_id == av.video_id) gt_per_video[v] = segs;
        }
        if (n_gt == 0) continue;  // class with detections only would be skipped upstream too

        std::vector<std::vector<bool>> used(gt_per_video.size());
        for (std::size_t v = 0; v < gt_per_video.size(); ++v) used[v].assign(gt_per_video[v].size(), false);

        std::vector<double> precision;
        std::vector<bool> hit;
        int tp = 0;
        for (std::size_t rank = 0; rank < cands.size(); ++rank) {
            const auto& c = cands[rank];
            const auto& gts = gt_per_video[c.video_idx];
            double best = 0.0;
            int best_g = -1;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (used[c.video_idx][g]) continue;
                const double inter = std::min(gts[g].end_s, c.end_s) - std::max(gts[g].start_s, c.start_s);
                const double uni = std::max(gts[g].end_s, c.end_s) - std::min(gts[g].start_s, c.start_s);
                const double overlap = inter > 0.0 ? inter / uni : 0.0;
                if (overlap > best) {
                    best = overlap;
                    best_g = static_cast<int>(g);
                }
            }
            const bool is_tp = best_g >= 0 && best >= alpha;
            if (is_tp) {
                used[c.video_idx][best_g] = true;
                ++tp;
            }
            hit.push_back(is_tp);
            precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
        }
        double ap = 0.0;
        for (std::size_t rank = 0; rank < hit.size(); ++rank)
            if (hit[rank]) ap += precision[rank];
        ap_sum += ap / static_cast<double>(n_gt);
    }
    return ap_sum / static_cast<double>(classes.size());
}

/// Dense re-implementation of the watershed sweep: every threshold is
/// evaluated by scanning a fresh boolean mask. Reference for watershed_group.
inline SegmentList oracle_watershed(const CurveSet& curves, const TimeGrid& grid, const WatershedConfig& cfg) {
    if (!(cfg.lo_frac > 0.0) || !(cfg.hi_frac > cfg.lo_frac) || cfg.hi_frac > 1.0)
        throw ValidationError("watershed thresholds need 0 < lo_frac < hi_frac <= 1");
    if (!(cfg.step_frac > 0.0)) throw ValidationError("watershed step_frac must be > 0");
    if (curves.num_slots != grid.slots) throw ValidationError("curve set does not match grid");
    double peak = 0.0;
    for (double v : curves.actionness) peak = std::max(peak, v);
    if (!(peak > 0.0)) throw ValidationError("no signal (all-zero actionness)");

    const int n_thresholds =
        static_cast<int>(std::llround((cfg.hi_frac - cfg.lo_frac) / cfg.step_frac)) + 1;

    auto segments_at = [&](double threshold) {
        std::vector<bool> mask(curves.num_slots);
        for (int m = 0; m < curves.num_slots; ++m) mask[m] = curves.actionness[m] > threshold;
        std::vector<std::pair<int, int>> runs;
        for (int m = 0; m < curves.num_slots; ++m) {
            if (!mask[m]) continue;
            int end = m;
            while (end + 1 < curves.num_slots && mask[end + 1]) ++end;
            runs.emplace_back(m, end);
            m = end;
        }
        return runs;
    };

    std::vector<std::pair<int, int>> chosen;
    for (int i = 0; i < n_thresholds; ++i) {
        const double threshold = (cfg.hi_frac - i * cfg.step_frac) * peak;
        chosen = segments_at(threshold);
        bool done = false;
        if (!chosen.empty()) {
            if (cfg.criterion == WatershedCriterion::avg_gap) {
                if (chosen.size() >= 2) {
                    double gaps = 0.0;
                    for (std::size_t l = 1; l < chosen.size(); ++l)
                        gaps += static_cast<double>(chosen[l].first - chosen[l - 1].second - 1);
                    done = gaps / static_cast<double>(chosen.size() - 1) < cfg.theta_gap;
                }
            } else {
                double lens = 0.0;
                for (const auto& r : chosen) lens += static_cast<double>(r.second - r.first + 1);
                done = lens / static_cast<double>(chosen.size()) > cfg.theta_len;
            }
        }
        if (done) break;
    }

    const double width = grid.slot_width();
    SegmentList out;
    for (const auto& [first, last] : chosen) {
        Segment seg;
        seg.start_s = first * width;
        seg.end_s = (last + 1) * width;
        seg.scores.assign(curves.num_steps, 0.0);
        for (int k = 0; k < curves.num_steps; ++k) {
            double sum = 0.0;
            for (int m = first; m <= last; ++m) sum += curves.at(m, k) * width;
            seg.scores[k] = sum;
        }
        out.push_back(std::move(seg));
    }
    return out;
}

} // namespace steploc
