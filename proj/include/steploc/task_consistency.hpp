#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "steploc/lexicon.hpp"
#include "steploc/types.hpp"

namespace steploc {

enum class Aggregate { sum, average };

struct TcConfig {
    double gamma = std::exp(-2.0);  // attenuation applied to steps outside the predicted task
    Aggregate aggregate = Aggregate::sum;
};

struct TcResult {
    int predicted_task = 0;
    std::vector<double> video_score;  // per-step aggregate
    std::vector<double> task_scores;  // per-task aggregate
    ProposalSet refined;
};

inline std::vector<double> aggregate_video_score(const ProposalSet& set) {
    if (set.proposals.empty()) throw ValidationError("video " + set.video_id + ": no proposals");
    std::vector<double> out(set.proposals.front().scores.size(), 0.0);
    for (const auto& p : set.proposals) {
        if (p.scores.size() != out.size())
            throw ValidationError("video " + set.video_id + ": inconsistent score lengths");
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += p.scores[k];
    }
    return out;
}

inline std::vector<double> task_score(const std::vector<double>& video_score, const MembershipMatrix& membership,
                                      Aggregate mode) {
    if (static_cast<int>(video_score.size()) != membership.num_steps)
        throw ValidationError("video score length does not match membership matrix");
    std::vector<double> out(membership.num_tasks, 0.0);
    for (int k = 0; k < membership.num_steps; ++k) out[membership.task_of[k]] += video_score[k];
    if (mode == Aggregate::average) {
        for (int j = 0; j < membership.num_tasks; ++j)
            out[j] /= static_cast<double>(membership.steps_per_task[j]);
    }
    return out;
}

/// Mask vector over steps: 1 on the predicted task's steps, gamma elsewhere.
inline std::vector<double> refine_mask(int task, const MembershipMatrix& membership, double gamma) {
    if (task < 0 || task >= membership.num_tasks)
        throw ValidationError("unknown task id " + std::to_string(task));
    if (gamma < 0.0 || gamma > 1.0) throw ValidationError("gamma must be in [0, 1]");
    std::vector<double> mask(membership.num_steps, gamma);
    for (int k = 0; k < membership.num_steps; ++k)
        if (membership.task_of[k] == task) mask[k] = 1.0;
    return mask;
}

/// Two-stage task-consistency refinement: aggregate proposal scores into a
/// task prediction, then attenuate every step outside the predicted task by
/// gamma. Intervals and predicted-task step scores are untouched.
inline TcResult apply_tc(const ProposalSet& set, const Lexicon& lexicon, const TcConfig& cfg) {
    const MembershipMatrix membership = build_membership(lexicon);
    TcResult result;
    result.video_score = aggregate_video_score(set);
    result.task_scores = task_score(result.video_score, membership, cfg.aggregate);

    int best = 0;
    for (int j = 1; j < membership.num_tasks; ++j)
        if (result.task_scores[j] > result.task_scores[best]) best = j;  // ties keep the lowest id
    result.predicted_task = best;

    const std::vector<double> mask = refine_mask(best, membership, cfg.gamma);
    result.refined = set;
    for (auto& p : result.refined.proposals)
        for (std::size_t k = 0; k < p.scores.size(); ++k) p.scores[k] *= mask[k];
    return result;
}

} // namespace steploc
