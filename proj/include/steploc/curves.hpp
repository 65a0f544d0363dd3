#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "steploc/types.hpp"

namespace steploc {

/// Uniform discretization of [0, duration_s] into `slots` bins.
struct TimeGrid {
    double duration_s = 0.0;
    int slots = 0;

    TimeGrid(double duration, int num_slots) : duration_s(duration), slots(num_slots) {
        if (!(duration > 0.0)) throw ValidationError("time grid duration must be > 0");
        if (num_slots < 2) throw ValidationError("time grid needs at least 2 slots");
    }

    double slot_width() const { return duration_s / slots; }
    double center(int m) const { return (m + 0.5) * slot_width(); }
};

enum class Distribution { gaussian, triangle };

struct CurveConfig {
    Distribution dist = Distribution::gaussian;
    double beta = 1.0;  // std-dev factor: sigma = beta * (end - start) / 2
};

/// Per-slot step score curves for one video plus their per-slot sum
/// (the actionness signal the watershed runs on).
struct CurveSet {
    int num_slots = 0;
    int num_steps = 0;
    std::vector<double> values;      // row-major slots x steps
    std::vector<double> actionness;  // per-slot sum over steps

    double at(int slot, int step) const {
        return values[static_cast<std::size_t>(slot) * num_steps + step];
    }
    double& at(int slot, int step) {
        return values[static_cast<std::size_t>(slot) * num_steps + step];
    }
};

/// Shape weight of a proposal's interval at time t, before multiplying by the
/// step score. Gaussian: normal density centered on the interval midpoint with
/// sigma = beta * half_length. Triangle: |t - mid| / length inside the
/// interval, zero outside (peaks at the endpoints, zero at the midpoint).
inline double curve_shape(double start_s, double end_s, double t, const CurveConfig& cfg) {
    const double length = end_s - start_s;
    if (!(length > 0.0)) throw ValidationError("zero-length interval");
    const double mid = 0.5 * (start_s + end_s);
    if (cfg.dist == Distribution::gaussian) {
        if (!(cfg.beta > 0.0)) throw ValidationError("beta must be > 0");
        const double sigma = cfg.beta * 0.5 * length;
        const double z = (t - mid) / sigma;
        return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    }
    if (t < start_s || t > end_s) return 0.0;
    return std::abs(t - mid) / length;
}

/// Unit-peak Gaussian used to weight the variation integral toward the middle
/// of a proposal (value 1 at the midpoint).
inline double midpoint_weight(double start_s, double end_s, double t, const CurveConfig& cfg) {
    const double length = end_s - start_s;
    if (!(length > 0.0)) throw ValidationError("zero-length interval");
    const double mid = 0.5 * (start_s + end_s);
    const double sigma = cfg.beta * 0.5 * length;
    const double z = (t - mid) / sigma;
    return std::exp(-0.5 * z * z);
}

inline CurveSet proposal_curve(const Proposal& p, const TimeGrid& grid, const CurveConfig& cfg) {
    if (!(p.end_s > p.start_s)) throw ValidationError("zero-length interval");
    CurveSet out;
    out.num_slots = grid.slots;
    out.num_steps = static_cast<int>(p.scores.size());
    out.values.assign(static_cast<std::size_t>(out.num_slots) * out.num_steps, 0.0);
    out.actionness.assign(out.num_slots, 0.0);
    for (int m = 0; m < grid.slots; ++m) {
        const double shape = curve_shape(p.start_s, p.end_s, grid.center(m), cfg);
        if (shape == 0.0) continue;
        for (int k = 0; k < out.num_steps; ++k) out.at(m, k) = p.scores[k] * shape;
    }
    for (int m = 0; m < grid.slots; ++m) {
        double sum = 0.0;
        for (int k = 0; k < out.num_steps; ++k) sum += out.at(m, k);
        out.actionness[m] = sum;
    }
    return out;
}

inline CurveSet accumulate(const ProposalSet& set, const TimeGrid& grid, const CurveConfig& cfg) {
    if (set.proposals.empty()) throw ValidationError("video " + set.video_id + ": no proposals");
    const int num_steps = static_cast<int>(set.proposals.front().scores.size());
    CurveSet out;
    out.num_slots = grid.slots;
    out.num_steps = num_steps;
    out.values.assign(static_cast<std::size_t>(grid.slots) * num_steps, 0.0);
    out.actionness.assign(grid.slots, 0.0);
    for (const auto& p : set.proposals) {
        if (static_cast<int>(p.scores.size()) != num_steps)
            throw ValidationError("video " + set.video_id + ": inconsistent score lengths");
        for (int m = 0; m < grid.slots; ++m) {
            const double shape = curve_shape(p.start_s, p.end_s, grid.center(m), cfg);
            if (shape == 0.0) continue;
            for (int k = 0; k < num_steps; ++k) out.at(m, k) += p.scores[k] * shape;
        }
    }
    for (int m = 0; m < grid.slots; ++m) {
        double sum = 0.0;
        for (int k = 0; k < num_steps; ++k) sum += out.at(m, k);
        out.actionness[m] = sum;
    }
    return out;
}

} // namespace steploc
