#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "steploc/types.hpp"
#include "steploc/watershed.hpp"

namespace steploc {

/// First-order step transition statistics built from training annotation
/// sequences. `counts[i][j]` is the number of times step j directly follows
/// step i; `probs` is the row-normalized form (rows with no observations stay
/// all-zero); `first_step_prior[i]` is the fraction of training videos whose
/// first segment is step i.
struct TransitionModel {
    int num_steps = 0;
    std::vector<double> counts;            // row-major K x K
    std::vector<double> probs;             // row-major K x K
    std::vector<double> first_step_prior;  // K

    double count_at(int from, int to) const {
        return counts[static_cast<std::size_t>(from) * num_steps + to];
    }
    double prob_at(int from, int to) const {
        return probs[static_cast<std::size_t>(from) * num_steps + to];
    }
};

inline TransitionModel build_transition(const AnnotationSet& train, int num_steps) {
    for (const auto& v : train.videos) {
        for (const auto& seg : v.segments) {
            if (seg.step_id >= num_steps)
                throw ValidationError("video " + v.video_id + ": step id " + std::to_string(seg.step_id) +
                                      " out of range for K=" + std::to_string(num_steps));
        }
    }
    TransitionModel model;
    model.num_steps = num_steps;
    const std::size_t kk = static_cast<std::size_t>(num_steps) * num_steps;
    model.counts.assign(kk, 0.0);
    model.probs.assign(kk, 0.0);
    model.first_step_prior.assign(num_steps, 0.0);

    for (const auto& v : train.videos) {
        if (!v.segments.empty()) model.first_step_prior[v.segments.front().step_id] += 1.0;
        for (std::size_t i = 0; i + 1 < v.segments.size(); ++i) {
            const int from = v.segments[i].step_id;
            const int to = v.segments[i + 1].step_id;
            model.counts[static_cast<std::size_t>(from) * num_steps + to] += 1.0;
        }
    }
    if (!train.videos.empty()) {
        for (double& p : model.first_step_prior) p /= static_cast<double>(train.videos.size());
    }
    for (int i = 0; i < num_steps; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < num_steps; ++j) row_sum += model.count_at(i, j);
        if (row_sum > 0.0) {
            for (int j = 0; j < num_steps; ++j)
                model.probs[static_cast<std::size_t>(i) * num_steps + j] = model.count_at(i, j) / row_sum;
        }
    }
    return model;
}

enum class Fusion { weighted_sum, rms, geometric, max_pool };

namespace detail {

inline std::vector<double> fuse_scores(const std::vector<double>& s1, const std::vector<double>& s2,
                                       double lambda1, double lambda2, Fusion fusion) {
    std::vector<double> out(s1.size());
    switch (fusion) {
    case Fusion::weighted_sum:
        for (std::size_t k = 0; k < s1.size(); ++k) out[k] = lambda1 * s1[k] + lambda2 * s2[k];
        break;
    case Fusion::rms:
        for (std::size_t k = 0; k < s1.size(); ++k)
            out[k] = std::sqrt(lambda1 * s1[k] * s1[k] + lambda2 * s2[k] * s2[k]);
        break;
    case Fusion::geometric:
        for (std::size_t k = 0; k < s1.size(); ++k)
            out[k] = std::pow(s1[k], lambda1) * std::pow(s2[k], lambda2);
        break;
    case Fusion::max_pool:
        for (std::size_t k = 0; k < s1.size(); ++k) out[k] = std::max(s1[k], s2[k]);
        break;
    }
    return out;
}

} // namespace detail

/// Blend each segment's integrated step score with the ordering prior: the
/// first segment sees the first-step prior, later segments see the previous
/// refined score propagated through the transition matrix
/// (next[j] = sum_i prev[i] * probs[i][j]). Intervals are unchanged.
inline SegmentList refine_segments(const SegmentList& segments, const TransitionModel& model,
                                   double lambda1, double lambda2, Fusion fusion) {
    if (std::abs(lambda1 + lambda2 - 1.0) > 1e-9 || lambda1 < 0.0 || lambda2 < 0.0)
        throw ValidationError("lambda1+lambda2 must equal 1 with both >= 0");
    SegmentList out;
    out.reserve(segments.size());
    std::vector<double> prev;
    for (std::size_t l = 0; l < segments.size(); ++l) {
        const auto& seg = segments[l];
        if (static_cast<int>(seg.scores.size()) != model.num_steps)
            throw ValidationError("segment score length " + std::to_string(seg.scores.size()) +
                                  " does not match transition model K=" + std::to_string(model.num_steps));
        std::vector<double> prior;
        if (l == 0) {
            prior = model.first_step_prior;
        } else {
            prior.assign(model.num_steps, 0.0);
            for (int i = 0; i < model.num_steps; ++i) {
                if (prev[i] == 0.0) continue;
                for (int j = 0; j < model.num_steps; ++j) prior[j] += prev[i] * model.prob_at(i, j);
            }
        }
        Segment refined{seg.start_s, seg.end_s, detail::fuse_scores(seg.scores, prior, lambda1, lambda2, fusion)};
        prev = refined.scores;
        out.push_back(std::move(refined));
    }
    return out;
}

} // namespace steploc
