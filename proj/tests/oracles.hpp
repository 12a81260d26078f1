#pragma once

// Independent brute-force implementations of the evaluation metrics, kept
// deliberately separate from the library code paths they check: projections
// go through normalized parameters, interval unions use inclusion-exclusion,
// masks are dense boolean grids.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "linetrack/evaluate.hpp"

namespace oracle {

struct Seg {
    double x0, y0, x1, y1;
};

inline double seg_len(const Seg& s) { return std::hypot(s.x1 - s.x0, s.y1 - s.y0); }

inline double angle_deg_mod180(const Seg& a, const Seg& b) {
    const double ta = std::atan2(a.y1 - a.y0, a.x1 - a.x0);
    const double tb = std::atan2(b.y1 - b.y0, b.x1 - b.x0);
    double d = std::fmod(std::abs(ta - tb) * 180.0 / 3.14159265358979323846, 180.0);
    return std::min(d, 180.0 - d);
}

// projection of p onto t as a normalized [0,1] interval of t, plus the
// perpendicular distance from t's center to p's line
struct Proj {
    double lo, hi, dist;
};

inline Proj project(const Seg& p, const Seg& t) {
    const double tl2 = (t.x1 - t.x0) * (t.x1 - t.x0) + (t.y1 - t.y0) * (t.y1 - t.y0);
    auto param = [&](double x, double y) {
        return ((x - t.x0) * (t.x1 - t.x0) + (y - t.y0) * (t.y1 - t.y0)) / tl2;
    };
    double a = param(p.x0, p.y0), b = param(p.x1, p.y1);
    if (a > b) std::swap(a, b);
    a = std::max(0.0, a);
    b = std::min(1.0, b);
    if (b < a) b = a;
    const double cx = (t.x0 + t.x1) / 2, cy = (t.y0 + t.y1) / 2;
    const double pl = seg_len(p);
    const double dist = std::abs((p.y1 - p.y0) * cx - (p.x1 - p.x0) * cy + p.x1 * p.y0 - p.y1 * p.x0) / pl;
    return {a, b, dist};
}

struct Match {
    std::size_t pred, target;
};

inline std::vector<Match> match(const std::vector<Seg>& preds, const std::vector<Seg>& targets,
                                const linetrack::VectorMatchParams& params) {
    std::vector<Match> out;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double best = 1e300;
        std::size_t arg = 0;
        bool any = false;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            const Proj pr = project(preds[i], targets[j]);
            const double overlap_len = (pr.hi - pr.lo) * seg_len(targets[j]);
            if (overlap_len / seg_len(preds[i]) < params.min_overlap) continue;
            if (pr.dist >= params.max_perp_distance) continue;
            if (angle_deg_mod180(preds[i], targets[j]) > params.max_angle_diff) continue;
            if (pr.dist < best) {
                best = pr.dist;
                arg = j;
                any = true;
            }
        }
        if (any) out.push_back({i, arg});
    }
    return out;
}

// union length of up to ~20 intervals by inclusion-exclusion
inline double union_inclusion_exclusion(const std::vector<std::array<double, 2>>& iv) {
    const std::size_t n = iv.size();
    double total = 0;
    for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
        double lo = -1e300, hi = 1e300;
        int bits = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (mask & (std::size_t(1) << k)) {
                ++bits;
                lo = std::max(lo, iv[k][0]);
                hi = std::min(hi, iv[k][1]);
            }
        const double inter = std::max(0.0, hi - lo);
        total += (bits % 2 == 1 ? 1.0 : -1.0) * inter;
    }
    return total;
}

struct Scores {
    double precision, recall, precision2, fscore, fscore2;
};

inline Scores score(const std::vector<Seg>& preds, const std::vector<Seg>& targets,
                    const linetrack::VectorMatchParams& params) {
    const auto matches = match(preds, targets, params);
    double sum_pred = 0;
    for (const Seg& p : preds) sum_pred += seg_len(p);
    double sum_target = 0;
    for (const Seg& t : targets) sum_target += seg_len(t);

    std::vector<int> frag(targets.size(), 0);
    for (const Match& m : matches) ++frag[m.target];

    double covered = 0, covered2 = 0, unioned = 0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        std::vector<std::array<double, 2>> iv;
        for (const Match& m : matches) {
            if (m.target != j) continue;
            const Proj pr = project(preds[m.pred], targets[j]);
            const double len = (pr.hi - pr.lo) * seg_len(targets[j]);
            covered += len;
            covered2 += len / frag[j];
            iv.push_back({pr.lo, pr.hi});
        }
        unioned += union_inclusion_exclusion(iv) * seg_len(targets[j]);
    }

    Scores s{};
    s.precision = preds.empty() ? 1.0 : covered / sum_pred;
    s.precision2 = preds.empty() ? 1.0 : covered2 / sum_pred;
    s.recall = unioned / sum_target;
    s.fscore = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0;
    s.fscore2 =
        s.precision2 + s.recall > 0 ? 2 * s.precision2 * s.recall / (s.precision2 + s.recall) : 0;
    return s;
}

// ---------------------------------------------------------------------------
// panoptic quality over dense boolean grids
// ---------------------------------------------------------------------------

using Grid = std::vector<std::vector<bool>>;  // [y][x]

inline Grid to_grid(const std::vector<std::uint64_t>& mask, int width, int height) {
    Grid g(static_cast<std::size_t>(height), std::vector<bool>(static_cast<std::size_t>(width)));
    for (std::uint64_t key : mask)
        g[static_cast<std::size_t>(key / std::uint64_t(width))]
         [static_cast<std::size_t>(key % std::uint64_t(width))] = true;
    return g;
}

struct PqOracle {
    double pq;
    int tp, fp, fn;
};

inline PqOracle pq(const linetrack::LabelMasks& pred, const linetrack::LabelMasks& gt) {
    std::vector<Grid> pg, gg;
    for (const auto& m : pred.masks) pg.push_back(to_grid(m, pred.width, pred.height));
    for (const auto& m : gt.masks) gg.push_back(to_grid(m, gt.width, gt.height));

    double iou_sum = 0;
    int tp = 0;
    std::vector<bool> pred_used(pg.size(), false), gt_used(gg.size(), false);
    for (std::size_t i = 0; i < pg.size(); ++i)
        for (std::size_t j = 0; j < gg.size(); ++j) {
            std::size_t inter = 0, uni = 0;
            for (int y = 0; y < pred.height; ++y)
                for (int x = 0; x < pred.width; ++x) {
                    const bool a = pg[i][std::size_t(y)][std::size_t(x)];
                    const bool b = gg[j][std::size_t(y)][std::size_t(x)];
                    inter += a && b;
                    uni += a || b;
                }
            const double iou = uni ? double(inter) / double(uni) : 0.0;
            if (iou > 0.5) {
                pred_used[i] = true;
                gt_used[j] = true;
                iou_sum += iou;
                ++tp;
            }
        }
    int fp = 0, fn = 0;
    for (bool u : pred_used) fp += !u;
    for (bool u : gt_used) fn += !u;
    const double denom = tp + 0.5 * fp + 0.5 * fn;
    return {denom > 0 ? iou_sum / denom : 1.0, tp, fp, fn};
}

}  // namespace oracle
