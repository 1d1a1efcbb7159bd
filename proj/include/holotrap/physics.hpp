#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "holotrap/core.hpp"
#include "holotrap/solver.hpp"
#include "holotrap/target.hpp"

namespace holotrap {

// First-order spot separation produced by a phase grating of period p through
// a lens of focal length f.
inline double trap_spacing(double wavelength, double focal_length, double period) {
    if (!(wavelength > 0 && focal_length > 0 && period > 0))
        throw ConfigError("trap_spacing: all arguments must be positive");
    return wavelength * focal_length / period;
}

// Smallest achievable change of the spot position at separation `spacing`
// when the grating period can only change by one SLM pixel (toward a longer
// period).
inline double position_precision(double spacing, double wavelength,
                                 double focal_length, double slm_pixel) {
    if (!(spacing > 0 && wavelength > 0 && focal_length > 0 && slm_pixel > 0))
        throw ConfigError("position_precision: all arguments must be positive");
    if (!(spacing < wavelength * focal_length / slm_pixel))
        throw ConfigError(
            "position_precision: spacing too large for a one-pixel period step");
    const double period = wavelength * focal_length / spacing;
    return std::abs(spacing -
                    wavelength * focal_length / (period + slm_pixel));
}

// Peak intensity of a Gaussian focus: I0 = 2P/(pi w^2).
inline double peak_intensity(double power, double waist) {
    if (!(power > 0 && waist > 0))
        throw ConfigError("peak_intensity: power and waist must be positive");
    return 2.0 * power / (kPi * waist * waist);
}

// Trap depths scale as P/w^2, so equal depths at two threshold powers imply a
// waist ratio of sqrt(P_test/P_ref).
inline double waist_ratio_from_thresholds(double p_thr_test, double p_thr_ref) {
    if (!(p_thr_test > 0 && p_thr_ref > 0))
        throw ConfigError("waist_ratio_from_thresholds: powers must be positive");
    return std::sqrt(p_thr_test / p_thr_ref);
}

// 1/e^2 intensity radius of a focal spot from the second moment of the
// windowed intensity. The radial profile is cropped at its first local
// minimum (one-pixel annuli) so sidelobes do not inflate the moment, and the
// second moment is corrected for the truncation assuming a Gaussian shape.
inline double estimate_waist(const Eigen::ArrayXXd& intensity, int cx, int cy,
                             const OpticalSystem& sys) {
    sys.validate();
    const int n = static_cast<int>(intensity.rows());
    if (intensity.cols() != n)
        throw ConfigError("estimate_waist: intensity grid must be square");
    const double pitch = sys.focal_pitch();
    const double window_px = 2.0 * sys.airy_zero_radius() / pitch;
    const int r = static_cast<int>(std::ceil(window_px));

    // Peak within the window; it must be positive and interior.
    double peak = 0;
    int pi_ = cx, pj = cy;
    for (int dj = -r; dj <= r; ++dj) {
        const int j = cy + dj;
        if (j < 0 || j >= n) continue;
        for (int di = -r; di <= r; ++di) {
            const int i = cx + di;
            if (i < 0 || i >= n) continue;
            if (double(di) * di + double(dj) * dj > window_px * window_px) continue;
            if (intensity(i, j) > peak) {
                peak = intensity(i, j);
                pi_ = i;
                pj = j;
            }
        }
    }
    if (!(peak > 0))
        throw DetectionError("estimate_waist: no local maximum in the trap window");
    const double peak_r = std::hypot(double(pi_ - cx), double(pj - cy));
    if (peak_r > window_px - 1.0)
        throw DetectionError("estimate_waist: intensity keeps rising to the window edge");

    // Intensity centroid of the window.
    double m0 = 0, mx = 0, my = 0;
    for (int dj = -r; dj <= r; ++dj) {
        const int j = cy + dj;
        if (j < 0 || j >= n) continue;
        for (int di = -r; di <= r; ++di) {
            const int i = cx + di;
            if (i < 0 || i >= n) continue;
            if (double(di) * di + double(dj) * dj > window_px * window_px) continue;
            m0 += intensity(i, j);
            mx += intensity(i, j) * i;
            my += intensity(i, j) * j;
        }
    }
    const double gx = mx / m0, gy = my / m0;

    // Radial mean profile in one-pixel annuli about the centroid; crop at the
    // first local minimum (for a clean Gaussian the profile is monotone and
    // nothing is cropped). Annuli are centered on integer radii: no lattice
    // distance hits a half-integer edge, so bin membership is stable against
    // last-ulp centroid noise.
    const int nbins = static_cast<int>(std::ceil(window_px)) + 1;
    std::vector<double> prof_sum(nbins, 0.0);
    std::vector<long> prof_cnt(nbins, 0);
    for (int dj = -r; dj <= r; ++dj) {
        const int j = cy + dj;
        if (j < 0 || j >= n) continue;
        for (int di = -r; di <= r; ++di) {
            const int i = cx + di;
            if (i < 0 || i >= n) continue;
            if (double(di) * di + double(dj) * dj > window_px * window_px) continue;
            const double rho = std::hypot(i - gx, j - gy);
            const int b = std::min(static_cast<int>(std::floor(rho + 0.5)), nbins - 1);
            prof_sum[b] += intensity(i, j);
            prof_cnt[b] += 1;
        }
    }
    struct ProfBin {
        double edge;  // outer radius of the annulus, pixels
        double mean;
    };
    std::vector<ProfBin> prof;
    prof.reserve(nbins);
    for (int b = 0; b < nbins; ++b)
        if (prof_cnt[b] > 0)
            prof.push_back({static_cast<double>(b) + 0.5, prof_sum[b] / prof_cnt[b]});
    double crop_px = window_px;
    for (size_t b = 1; b + 1 < prof.size(); ++b)
        if (prof[b].mean < prof[b - 1].mean && prof[b].mean <= prof[b + 1].mean) {
            crop_px = prof[b].edge;
            break;
        }

    // Second moment within the crop radius.
    double s0 = 0, s2 = 0;
    for (int dj = -r; dj <= r; ++dj) {
        const int j = cy + dj;
        if (j < 0 || j >= n) continue;
        for (int di = -r; di <= r; ++di) {
            const int i = cx + di;
            if (i < 0 || i >= n) continue;
            const double rho = std::hypot(i - gx, j - gy);
            if (rho > crop_px) continue;
            s0 += intensity(i, j);
            s2 += intensity(i, j) * rho * rho;
        }
    }
    if (!(s0 > 0) || !(s2 > 0))
        throw DetectionError("estimate_waist: degenerate intensity in the trap window");
    const double m2 = s2 / s0 * pitch * pitch;  // meters^2
    const double crop = crop_px * pitch;

    // For a Gaussian exp(-2 rho^2/w^2) truncated at radius R the measured
    // second moment is (w^2/2) * g(u) with u = 2R^2/w^2 and
    // g(u) = 1 - u e^-u / (1 - e^-u); invert by fixed-point iteration.
    double w2 = 2.0 * m2;
    for (int it = 0; it < 200; ++it) {
        const double u = 2.0 * crop * crop / w2;
        double g = 1.0;
        if (u < 700.0) {
            const double eu = std::exp(-u);
            g = 1.0 - u * eu / (1.0 - eu);
        }
        const double next = 2.0 * m2 / g;
        if (std::abs(next - w2) <= 1e-16 * w2) {
            w2 = next;
            break;
        }
        w2 = next;
    }
    return std::sqrt(w2);
}

// Per-trap evaluation entry. Powers are fractions of the total delivered
// power; positions come from the intensity centroid of the trap window.
struct TrapEntry {
    double x = 0;
    double y = 0;
    double peak_relative = 0;   // window peak / grid peak
    double waist = 0;           // meters; 0 when no spot was detectable
    double depth_relative = 0;  // proportional to peak intensity at fixed wavelength
    double power_share = 0;     // window power / total grid power
    double power = 0;           // watts reaching this trap
    bool above_threshold = false;
};

struct TrapReport {
    std::vector<TrapEntry> traps;
    double zeroth_order_intensity = 0;  // center-window power share
    double efficiency = 0;
    double uniformity_deviation = 0;
    double total_power = 0;
    std::string label;
};

struct LoadingModel {
    double p_single = 0.5;
    double threshold_power_per_trap = 4e-3;
    long long trials = 100000;
    std::uint64_t seed = 0;
    std::vector<double> p_overrides;  // optional per-trap probabilities

    void validate() const {
        if (!(p_single >= 0 && p_single <= 1))
            throw ConfigError("loading model: p_single must be in [0, 1]");
        if (threshold_power_per_trap < 0)
            throw ConfigError("loading model: threshold power must be >= 0");
        if (trials < 1)
            throw ConfigError("loading model: trials must be >= 1");
        for (double p : p_overrides)
            if (!(p >= 0 && p <= 1))
                throw ConfigError("loading model: override probabilities must be in [0, 1]");
    }
};

// Full evaluation of a focal intensity map against a requested layout.
inline TrapReport evaluate(const Eigen::ArrayXXd& focal_intensity,
                           const TrapSpec& spec, const OpticalSystem& sys,
                           const LoadingModel& loading, double total_power) {
    sys.validate();
    loading.validate();
    if (total_power < 0)
        throw ConfigError("evaluate: total power must be >= 0");
    const int n = sys.grid_size;
    if (focal_intensity.rows() != n || focal_intensity.cols() != n)
        throw ConfigError("evaluate: intensity grid does not match system grid");

    TrapReport report;
    report.label = spec.label;
    report.total_power = total_power;
    const double total = focal_intensity.sum();
    const double grid_peak = focal_intensity.maxCoeff();
    const double radius_px = sys.airy_zero_radius() / sys.focal_pitch();
    const double pitch = sys.focal_pitch();

    std::vector<double> normalized;  // shares per unit weight, weighted traps only
    normalized.reserve(spec.traps.size());
    for (const auto& t : spec.traps) {
        const SnappedTrap s = detail::snap_point(t.x, t.y, t.weight, sys);
        TrapEntry e;
        const int r = static_cast<int>(std::ceil(radius_px));
        double w0 = 0, wx = 0, wy = 0, wpk = 0;
        for (int dj = -r; dj <= r; ++dj) {
            const int j = s.iy + dj;
            if (j < 0 || j >= n) continue;
            for (int di = -r; di <= r; ++di) {
                const int i = s.ix + di;
                if (i < 0 || i >= n) continue;
                if (double(di) * di + double(dj) * dj > radius_px * radius_px)
                    continue;
                const double v = focal_intensity(i, j);
                w0 += v;
                wx += v * i;
                wy += v * j;
                wpk = std::max(wpk, v);
            }
        }
        if (w0 > 0) {
            e.x = (wx / w0 - n / 2) * pitch;
            e.y = (wy / w0 - n / 2) * pitch;
        } else {
            e.x = (s.ix - n / 2) * pitch;
            e.y = (s.iy - n / 2) * pitch;
        }
        e.power_share = total > 0 ? w0 / total : 0.0;
        e.power = e.power_share * total_power;
        e.peak_relative = grid_peak > 0 ? wpk / grid_peak : 0.0;
        e.depth_relative = e.peak_relative;
        e.above_threshold = e.power >= loading.threshold_power_per_trap &&
                            e.power > 0;
        try {
            e.waist = estimate_waist(focal_intensity, s.ix, s.iy, sys);
        } catch (const DetectionError&) {
            e.waist = 0;
        }
        report.efficiency += e.power_share;
        if (s.weight > 0) normalized.push_back(e.power_share / s.weight);
        report.traps.push_back(std::move(e));
    }

    if (!normalized.empty()) {
        double mean = 0;
        for (double v : normalized) mean += v;
        mean /= static_cast<double>(normalized.size());
        if (mean > 0)
            for (double v : normalized)
                report.uniformity_deviation = std::max(
                    report.uniformity_deviation, std::abs(v - mean) / mean);
    }

    if (total > 0)
        report.zeroth_order_intensity =
            detail::window_power(focal_intensity, n / 2, n / 2, radius_px) / total;
    return report;
}

namespace detail {

// 64-bit finalizer with good avalanche behavior; used as a counter-based
// generator so any (seed, trap, trial) triple can be evaluated independently.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double unit_uniform(std::uint64_t seed, std::uint64_t trap,
                           std::uint64_t trial) {
    const std::uint64_t h = mix64(seed ^ mix64(trial ^ mix64(trap)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace detail

struct OccupancyStats {
    std::vector<double> per_trap_frequency;
    double joint_frequency = 0;  // fraction of trials with every trap occupied
    double mean_atoms = 0;
    long long trials = 0;
};

// Collisional-blockade loading: each above-threshold trap holds one atom with
// probability p per trial, independently; below-threshold traps stay empty.
// Identical (seed, layout) inputs give identical statistics on any platform
// or trial partitioning.
inline OccupancyStats load_sim(const TrapReport& report, const LoadingModel& loading) {
    loading.validate();
    const size_t ntraps = report.traps.size();
    if (!loading.p_overrides.empty() && loading.p_overrides.size() != ntraps)
        throw ConfigError("load_sim: override list must match the trap count");

    std::vector<double> p(ntraps, loading.p_single);
    if (!loading.p_overrides.empty()) p = loading.p_overrides;
    for (size_t t = 0; t < ntraps; ++t)
        if (!report.traps[t].above_threshold) p[t] = 0.0;

    OccupancyStats stats;
    stats.trials = loading.trials;
    stats.per_trap_frequency.assign(ntraps, 0.0);
    std::vector<long long> counts(ntraps, 0);
    long long joint = 0, atoms = 0;
    for (long long trial = 0; trial < loading.trials; ++trial) {
        bool all = ntraps > 0;
        for (size_t t = 0; t < ntraps; ++t) {
            const bool occupied =
                detail::unit_uniform(loading.seed, static_cast<std::uint64_t>(t),
                                     static_cast<std::uint64_t>(trial)) < p[t];
            if (occupied) {
                ++counts[t];
                ++atoms;
            } else {
                all = false;
            }
        }
        if (all) ++joint;
    }
    for (size_t t = 0; t < ntraps; ++t)
        stats.per_trap_frequency[t] =
            static_cast<double>(counts[t]) / static_cast<double>(loading.trials);
    stats.joint_frequency =
        static_cast<double>(joint) / static_cast<double>(loading.trials);
    stats.mean_atoms =
        static_cast<double>(atoms) / static_cast<double>(loading.trials);
    return stats;
}

}  // namespace holotrap
