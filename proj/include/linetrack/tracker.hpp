#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "linetrack/error.hpp"
#include "linetrack/observation.hpp"

namespace linetrack {

/// A tracker's estimate of its next observation. Same attributes as an
/// Observation, minus the scene index.
struct Prediction {
    double position = 0.0;
    double thickness = 1.0;
    double luminance = 0.0;
};

struct AttributeSigmas {
    double slope = 0.0;
    double thickness = 0.0;
    double luminance = 0.0;
};

enum class TrackerKind { LastObservation, Sma, Ema, DoubleExponential, OneEuro, Kalman };

inline const char* tracker_kind_name(TrackerKind k) {
    switch (k) {
        case TrackerKind::LastObservation: return "last-obs";
        case TrackerKind::Sma: return "sma";
        case TrackerKind::Ema: return "ema";
        case TrackerKind::DoubleExponential: return "double-exp";
        case TrackerKind::OneEuro: return "one-euro";
        case TrackerKind::Kalman: return "kalman";
    }
    return "?";
}

inline TrackerKind tracker_kind_from_name(const std::string& name) {
    for (TrackerKind k : {TrackerKind::LastObservation, TrackerKind::Sma, TrackerKind::Ema,
                          TrackerKind::DoubleExponential, TrackerKind::OneEuro, TrackerKind::Kalman})
        if (name == tracker_kind_name(k)) return k;
    throw ConfigError("unknown tracker '" + name +
                      "' (valid: last-obs, sma, ema, double-exp, one-euro, kalman)");
}

struct TrackerParams {
    int sma_window = 30;        ///< SMA buffer cap
    int ema_horizon = 16;       ///< EMA/SMA smoothing: alpha = 2 / (min(t, horizon) + 1)
    double double_exp_alpha = 0.6;
    double one_euro_min_cutoff = 1.0;
    double one_euro_beta = 0.007;
    double one_euro_d_cutoff = 1.0;
    double kalman_process_noise = 1e-5;               ///< Q = I4 * this
    std::array<double, 3> kalman_measurement_noise = {1.0, 1.0, 4.0};  ///< R diagonal
    int stats_window = 30;      ///< history window for attribute sigmas
    double sigma_floor_slope = 0.5;
    double sigma_floor_thickness = 0.5;
    double sigma_floor_luminance = 5.0;

    void validate() const {
        if (sma_window < 1) throw ConfigError("sma_window must be >= 1");
        if (ema_horizon < 1) throw ConfigError("ema_horizon must be >= 1");
        if (double_exp_alpha <= 0 || double_exp_alpha >= 1)
            throw ConfigError("double_exp_alpha must be in (0, 1)");
        if (one_euro_min_cutoff <= 0) throw ConfigError("one_euro_min_cutoff must be > 0");
        if (one_euro_beta < 0) throw ConfigError("one_euro_beta must be >= 0");
        if (one_euro_d_cutoff <= 0) throw ConfigError("one_euro_d_cutoff must be > 0");
        if (kalman_process_noise <= 0) throw ConfigError("kalman_process_noise must be > 0");
        for (double r : kalman_measurement_noise)
            if (r <= 0) throw ConfigError("kalman measurement noise must be > 0");
        if (stats_window < 1) throw ConfigError("stats_window must be >= 1");
        if (sigma_floor_slope < 0 || sigma_floor_thickness < 0 || sigma_floor_luminance < 0)
            throw ConfigError("sigma floors must be >= 0");
    }
};

namespace detail {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 mat4_identity() {
    Mat4 m{};
    for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
    return m;
}

// Constant-velocity transition: position += slope, everything else held.
inline constexpr Mat4 kTransition{{{1, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};

inline Mat4 mat4_mul(const Mat4& a, const Mat4& b) {
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            const double aik = a[i][k];
            for (int j = 0; j < 4; ++j) r[i][j] += aik * b[k][j];
        }
    return r;
}

inline Mat4 mat4_mul_transposed(const Mat4& a, const Mat4& b) {  // a * b^T
    Mat4 r{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0;
            for (int k = 0; k < 4; ++k) s += a[i][k] * b[j][k];
            r[i][j] = s;
        }
    return r;
}

inline std::array<std::array<double, 3>, 3> mat3_inverse(const std::array<std::array<double, 3>, 3>& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    std::array<std::array<double, 3>, 3> inv;
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return inv;
}

// alpha for a first-order low-pass at cutoff fc sampled every dt scenes
inline double euro_alpha(double fc, double dt) {
    const double tau = 1.0 / (2.0 * std::numbers::pi * fc);
    return 1.0 / (1.0 + tau / dt);
}

}  // namespace detail

namespace tracker_state {

struct LastObservation {};  // prediction comes straight from spans.back()

struct Sma {
    std::deque<Observation> buffer;
    double slope_ema = 0.0;
};

struct Ema {
    double thickness = 0.0;
    double luminance = 0.0;
    double slope_ema = 0.0;
};

struct DoubleExponential {
    // Brown smoothing per attribute: position, thickness, luminance
    std::array<double, 3> s1{};
    std::array<double, 3> s2{};
};

struct OneEuro {
    struct Channel {
        double value = 0.0;
        double rate = 0.0;
    };
    std::array<Channel, 3> ch{};  // position, thickness, luminance
};

struct Kalman {
    detail::Vec4 s{};  // [position, slope, thickness, luminance]
    detail::Mat4 p{};
};

}  // namespace tracker_state

/// One hypothesized linear object: kind-specific filter state plus the list
/// of matched spans. Single-owner mutable value; predict() never mutates.
class Tracker {
  public:
    Tracker(TrackerKind kind, const TrackerParams& params, const Observation& first)
        : kind_(kind), params_(params), first_scene_(first.scene), last_scene_(first.scene) {
        spans_.push_back(first);
        switch (kind) {
            case TrackerKind::LastObservation:
                state_ = tracker_state::LastObservation{};
                break;
            case TrackerKind::Sma: {
                tracker_state::Sma s;
                s.buffer.push_back(first);
                state_ = std::move(s);
                break;
            }
            case TrackerKind::Ema:
                state_ = tracker_state::Ema{first.thickness, first.luminance, 0.0};
                break;
            case TrackerKind::DoubleExponential: {
                tracker_state::DoubleExponential s;
                s.s1 = {first.position, first.thickness, first.luminance};
                s.s2 = s.s1;
                state_ = s;
                break;
            }
            case TrackerKind::OneEuro: {
                tracker_state::OneEuro s;
                s.ch[0].value = first.position;
                s.ch[1].value = first.thickness;
                s.ch[2].value = first.luminance;
                state_ = s;
                break;
            }
            case TrackerKind::Kalman: {
                tracker_state::Kalman s;
                s.s = {first.position, 0.0, first.thickness, first.luminance};
                s.p = detail::mat4_identity();
                state_ = s;
                break;
            }
        }
    }

    TrackerKind kind() const { return kind_; }
    int first_scene() const { return first_scene_; }
    int last_matched_scene() const { return last_scene_; }
    const std::vector<Observation>& spans() const { return spans_; }
    std::vector<Observation> take_spans() && { return std::move(spans_); }
    double last_position() const { return spans_.back().position; }

    /// Estimate of the next observation at `scene` (> last_matched_scene).
    Prediction predict(int scene) const {
        const int dt = scene - last_scene_;
        const Observation& last = spans_.back();
        return std::visit(
            [&](const auto& st) -> Prediction { return predict_impl(st, last, dt); }, state_);
    }

    /// Absorbs a matched observation. obs.scene must equal `scene`.
    void integrate(const Observation& obs, int scene) {
        const int dt = scene - last_scene_;
        std::visit([&](auto& st) { integrate_impl(st, obs, dt); }, state_);
        spans_.push_back(obs);
        last_scene_ = scene;
    }

    /// The tracker's current direction estimate, in pixels per scene.
    double slope_estimate() const {
        return std::visit(
            [&](const auto& st) -> double { return slope_impl(st); }, state_);
    }

    /// Population standard deviations over the rolling window of matched
    /// observations, floored so a fresh tracker is never degenerate. Slope
    /// samples are successive position differences divided by scene gaps.
    AttributeSigmas attribute_sigmas() const {
        const std::size_t window = static_cast<std::size_t>(params_.stats_window);
        const std::size_t begin = spans_.size() > window ? spans_.size() - window : 0;

        double th_mean = 0, lum_mean = 0;
        std::size_t n = spans_.size() - begin;
        for (std::size_t i = begin; i < spans_.size(); ++i) {
            th_mean += spans_[i].thickness;
            lum_mean += spans_[i].luminance;
        }
        th_mean /= double(n);
        lum_mean /= double(n);
        double th_var = 0, lum_var = 0;
        for (std::size_t i = begin; i < spans_.size(); ++i) {
            th_var += (spans_[i].thickness - th_mean) * (spans_[i].thickness - th_mean);
            lum_var += (spans_[i].luminance - lum_mean) * (spans_[i].luminance - lum_mean);
        }
        th_var /= double(n);
        lum_var /= double(n);

        double slope_var = 0;
        if (n >= 2) {
            std::vector<double> samples;
            samples.reserve(n - 1);
            for (std::size_t i = begin + 1; i < spans_.size(); ++i)
                samples.push_back((spans_[i].position - spans_[i - 1].position) /
                                  double(spans_[i].scene - spans_[i - 1].scene));
            double mean = 0;
            for (double s : samples) mean += s;
            mean /= double(samples.size());
            for (double s : samples) slope_var += (s - mean) * (s - mean);
            slope_var /= double(samples.size());
        }

        return AttributeSigmas{std::max(params_.sigma_floor_slope, std::sqrt(slope_var)),
                               std::max(params_.sigma_floor_thickness, std::sqrt(th_var)),
                               std::max(params_.sigma_floor_luminance, std::sqrt(lum_var))};
    }

  private:
    double ema_alpha(int t) const { return 2.0 / (std::min(t, params_.ema_horizon) + 1.0); }

    // ---- predict ----

    Prediction predict_impl(const tracker_state::LastObservation&, const Observation& last,
                            int) const {
        return {last.position, last.thickness, last.luminance};
    }

    Prediction predict_impl(const tracker_state::Sma& st, const Observation& last, int dt) const {
        double th = 0, lum = 0;
        for (const Observation& o : st.buffer) {
            th += o.thickness;
            lum += o.luminance;
        }
        const double n = double(st.buffer.size());
        return {last.position + dt * st.slope_ema, th / n, lum / n};
    }

    Prediction predict_impl(const tracker_state::Ema& st, const Observation& last, int dt) const {
        return {last.position + dt * st.slope_ema, st.thickness, st.luminance};
    }

    Prediction predict_impl(const tracker_state::DoubleExponential& st, const Observation&,
                            int dt) const {
        const double gain = params_.double_exp_alpha / (1.0 - params_.double_exp_alpha);
        auto level = [&](int a) { return 2.0 * st.s1[a] - st.s2[a]; };
        auto trend = [&](int a) { return gain * (st.s1[a] - st.s2[a]); };
        // position extrapolates with the trend over the whole gap; the other
        // attributes keep their one-step forecast
        return {level(0) + dt * trend(0), level(1) + trend(1), level(2) + trend(2)};
    }

    Prediction predict_impl(const tracker_state::OneEuro& st, const Observation&, int) const {
        return {st.ch[0].value, st.ch[1].value, st.ch[2].value};
    }

    Prediction predict_impl(const tracker_state::Kalman& st, const Observation&, int dt) const {
        detail::Vec4 s = st.s;
        detail::Mat4 p = st.p;
        kalman_time_update(s, p, dt);
        return {s[0], s[2], s[3]};
    }

    // ---- integrate ----

    void integrate_impl(tracker_state::LastObservation&, const Observation&, int) {}

    void integrate_impl(tracker_state::Sma& st, const Observation& obs, int dt) {
        const double slope = (obs.position - spans_.back().position) / double(dt);
        st.slope_ema = blend_slope(st.slope_ema, slope, obs.scene);
        st.buffer.push_back(obs);
        while (st.buffer.size() > static_cast<std::size_t>(params_.sma_window))
            st.buffer.pop_front();
    }

    void integrate_impl(tracker_state::Ema& st, const Observation& obs, int dt) {
        const double a = ema_alpha(obs.scene - first_scene_);
        st.thickness = a * obs.thickness + (1 - a) * st.thickness;
        st.luminance = a * obs.luminance + (1 - a) * st.luminance;
        const double slope = (obs.position - spans_.back().position) / double(dt);
        st.slope_ema = blend_slope(st.slope_ema, slope, obs.scene);
    }

    void integrate_impl(tracker_state::DoubleExponential& st, const Observation& obs, int) {
        const double a = params_.double_exp_alpha;
        const std::array<double, 3> x = {obs.position, obs.thickness, obs.luminance};
        for (int i = 0; i < 3; ++i) {
            st.s1[i] = a * x[i] + (1 - a) * st.s1[i];
            st.s2[i] = a * st.s1[i] + (1 - a) * st.s2[i];
        }
    }

    void integrate_impl(tracker_state::OneEuro& st, const Observation& obs, int dt) {
        const std::array<double, 3> x = {obs.position, obs.thickness, obs.luminance};
        for (int i = 0; i < 3; ++i) {
            auto& ch = st.ch[i];
            const double rate = (x[i] - ch.value) / double(dt);
            const double ad = detail::euro_alpha(params_.one_euro_d_cutoff, double(dt));
            ch.rate = ad * rate + (1 - ad) * ch.rate;
            const double cutoff = params_.one_euro_min_cutoff + params_.one_euro_beta * std::abs(ch.rate);
            const double a = detail::euro_alpha(cutoff, double(dt));
            ch.value = a * x[i] + (1 - a) * ch.value;
        }
    }

    void integrate_impl(tracker_state::Kalman& st, const Observation& obs, int dt) {
        kalman_time_update(st.s, st.p, dt);

        // measurement projection keeps position, thickness, luminance
        static constexpr int rows[3] = {0, 2, 3};
        const std::array<double, 3> innovation = {obs.position - st.s[0], obs.thickness - st.s[2],
                                                  obs.luminance - st.s[3]};
        std::array<std::array<double, 3>, 3> s_cov;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                s_cov[i][j] = st.p[rows[i]][rows[j]] + (i == j ? params_.kalman_measurement_noise[i] : 0.0);
        const auto s_inv = detail::mat3_inverse(s_cov);

        double gain[4][3];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = 0;
                for (int k = 0; k < 3; ++k) v += st.p[i][rows[k]] * s_inv[k][j];
                gain[i][j] = v;
            }
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) st.s[i] += gain[i][j] * innovation[j];

        // Joseph form keeps P symmetric positive-semidefinite
        detail::Mat4 ikh = detail::mat4_identity();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) ikh[i][rows[j]] -= gain[i][j];
        detail::Mat4 p = detail::mat4_mul(ikh, st.p);
        p = detail::mat4_mul_transposed(p, ikh);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double krk = 0;
                for (int k = 0; k < 3; ++k)
                    krk += gain[i][k] * params_.kalman_measurement_noise[k] * gain[j][k];
                p[i][j] += krk;
            }
        st.p = p;
    }

    // ---- slope ----

    double slope_impl(const tracker_state::LastObservation&) const { return 0.0; }
    double slope_impl(const tracker_state::Sma& st) const { return st.slope_ema; }
    double slope_impl(const tracker_state::Ema& st) const { return st.slope_ema; }
    double slope_impl(const tracker_state::DoubleExponential& st) const {
        const double gain = params_.double_exp_alpha / (1.0 - params_.double_exp_alpha);
        return gain * (st.s1[0] - st.s2[0]);
    }
    double slope_impl(const tracker_state::OneEuro& st) const { return st.ch[0].rate; }
    double slope_impl(const tracker_state::Kalman& st) const { return st.s[1]; }

    double blend_slope(double prev, double sample, int scene) const {
        const double a = ema_alpha(scene - first_scene_);
        return a * sample + (1 - a) * prev;
    }

    void kalman_time_update(detail::Vec4& s, detail::Mat4& p, int steps) const {
        for (int n = 0; n < steps; ++n) {
            s[0] += s[1];
            p = detail::mat4_mul(detail::kTransition, p);
            p = detail::mat4_mul_transposed(p, detail::kTransition);
            for (int i = 0; i < 4; ++i) p[i][i] += params_.kalman_process_noise;
        }
    }

  public:
    /// Exposed for the numerics tests: Kalman error covariance, identity
    /// until the first integration of a Kalman tracker.
    const detail::Mat4* kalman_covariance() const {
        if (const auto* st = std::get_if<tracker_state::Kalman>(&state_)) return &st->p;
        return nullptr;
    }
    const detail::Vec4* kalman_state() const {
        if (const auto* st = std::get_if<tracker_state::Kalman>(&state_)) return &st->s;
        return nullptr;
    }

  private:
    TrackerKind kind_;
    TrackerParams params_;
    std::variant<tracker_state::LastObservation, tracker_state::Sma, tracker_state::Ema,
                 tracker_state::DoubleExponential, tracker_state::OneEuro, tracker_state::Kalman>
        state_;
    std::vector<Observation> spans_;
    int first_scene_;
    int last_scene_;
};

inline Tracker init_tracker(TrackerKind kind, const TrackerParams& params, const Observation& obs) {
    return Tracker(kind, params, obs);
}

}  // namespace linetrack
