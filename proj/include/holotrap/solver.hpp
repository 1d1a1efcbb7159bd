#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "holotrap/core.hpp"
#include "holotrap/fourier.hpp"
#include "holotrap/target.hpp"

namespace holotrap {

enum class InitMode { seeded_random, flat, quadratic };

// Focal-plane amplitude constraint applied each iteration: `multiply`
// reshapes the achieved amplitude by the target (gentler, preserves achieved
// structure), `replace` substitutes the target amplitude outright.
enum class UpdateRule { multiply, replace };

struct SolverConfig {
    int iterations = 4;
    InitMode init_mode = InitMode::seeded_random;
    std::uint64_t seed = 0;
    UpdateRule update_rule = UpdateRule::multiply;

    void validate() const {
        if (iterations < 1)
            throw ConfigError("solver config: iterations must be >= 1");
    }
};

// Phase-only SLM pattern, values in (-pi, pi], unit amplitude implied on the
// whole grid.
template <class Scalar>
struct PhaseMask {
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> phase;
    Scalar pitch = 0;

    int size() const { return static_cast<int>(phase.rows()); }
};

using PhaseMaskd = PhaseMask<double>;

// Metrics of the focal field produced by the mask *entering* an iteration;
// iteration 1 therefore describes the initial mask.
struct IterationStats {
    int iteration = 0;
    std::vector<double> trap_intensities;  // window power / total power
    double zeroth_order_intensity = 0;     // center window power / total power
    double efficiency = 0;                 // sum of trap window shares
    double uniformity_deviation = 0;       // max |I_i - mean| / mean, weight-normalized
    double focal_error = 0;                // L2 distance of unit-normalized amplitudes
};

struct ConvergenceReport {
    std::vector<IterationStats> iterations;
    int trap_count = 0;
};

inline PhaseMaskd init_phase(InitMode mode, std::uint64_t seed,
                             const OpticalSystem& sys) {
    sys.validate();
    const int n = sys.grid_size;
    PhaseMaskd mask;
    mask.phase = Eigen::ArrayXXd::Zero(n, n);
    mask.pitch = sys.slm_pitch;
    switch (mode) {
        case InitMode::flat:
            break;
        case InitMode::seeded_random: {
            std::mt19937_64 gen(seed);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double u =
                        static_cast<double>(gen() >> 11) * 0x1.0p-53;
                    mask.phase(i, j) = kPi - 2.0 * kPi * u;
                }
            break;
        }
        case InitMode::quadratic: {
            const double r_edge = (n / 2) * sys.slm_pitch;
            for (int j = 0; j < n; ++j) {
                const double y = (j - n / 2) * sys.slm_pitch;
                for (int i = 0; i < n; ++i) {
                    const double x = (i - n / 2) * sys.slm_pitch;
                    const double r2 = (x * x + y * y) / (r_edge * r_edge);
                    mask.phase(i, j) = wrap_phase(-kPi + 2.0 * kPi * r2);
                }
            }
            break;
        }
    }
    return mask;
}

namespace detail {

// Sum of |F|^2 over a circular window, clipped at the grid edge.
inline double window_power(const Eigen::ArrayXXd& intensity, int cx, int cy,
                           double radius_px) {
    const int n = static_cast<int>(intensity.rows());
    const int r = static_cast<int>(std::ceil(radius_px));
    const double r2 = radius_px * radius_px;
    double acc = 0;
    for (int dj = -r; dj <= r; ++dj) {
        const int j = cy + dj;
        if (j < 0 || j >= n) continue;
        for (int di = -r; di <= r; ++di) {
            const int i = cx + di;
            if (i < 0 || i >= n) continue;
            if (double(di) * di + double(dj) * dj <= r2) acc += intensity(i, j);
        }
    }
    return acc;
}

}  // namespace detail

// Trap metrics of one focal field against the requested layout. The window
// around each snapped trap center has the radius of the first diffraction
// zero.
inline IterationStats measure_iteration(const ComplexFieldd& focal,
                                        const TargetAmplitude& target,
                                        const TrapSpec& spec,
                                        const OpticalSystem& sys) {
    Eigen::ArrayXXd intensity = focal.samples.array().abs2();
    const double total = intensity.sum();
    if (!(total > 0))
        throw DetectionError("measure_iteration: focal field carries no power");
    const double radius_px = sys.airy_zero_radius() / sys.focal_pitch();
    const int n = sys.grid_size;

    IterationStats stats;
    stats.trap_intensities.reserve(spec.traps.size());
    std::vector<double> normalized;  // shares per unit weight, weighted traps only
    normalized.reserve(spec.traps.size());
    for (const auto& t : spec.traps) {
        const SnappedTrap s = detail::snap_point(t.x, t.y, t.weight, sys);
        const double share =
            detail::window_power(intensity, s.ix, s.iy, radius_px) / total;
        stats.trap_intensities.push_back(share);
        if (s.weight > 0) normalized.push_back(share / s.weight);
        stats.efficiency += share;
    }
    if (!normalized.empty()) {
        double mean = 0;
        for (double v : normalized) mean += v;
        mean /= static_cast<double>(normalized.size());
        if (mean > 0)
            for (double v : normalized)
                stats.uniformity_deviation = std::max(stats.uniformity_deviation,
                                                      std::abs(v - mean) / mean);
    }
    stats.zeroth_order_intensity =
        detail::window_power(intensity, n / 2, n / 2, radius_px) / total;

    const Eigen::ArrayXXd amp = intensity.sqrt();
    const double amp_norm = std::sqrt(total);
    const double tgt_norm = std::sqrt(target.grid.square().sum());
    stats.focal_error =
        std::sqrt((amp / amp_norm - target.grid / tgt_norm).square().sum());
    return stats;
}

template <class Scalar>
struct StepResult {
    PhaseMask<Scalar> next;
    ComplexField<Scalar> focal;  // focal field of the mask that entered the step
};

// One iteration of the iterative Fourier-transform loop. The SLM-plane
// amplitude is identically 1 on the whole grid; only the phase evolves.
inline StepResult<double> gs_step(const PhaseMaskd& mask,
                                  const TargetAmplitude& target,
                                  const OpticalSystem& sys, UpdateRule rule) {
    const int n = sys.grid_size;
    if (mask.size() != n)
        throw ConfigError("gs_step: mask grid does not match system grid");
    if (target.grid.rows() != n || target.grid.cols() != n)
        throw ConfigError("gs_step: target grid does not match system grid");

    ComplexFieldd slm =
        ComplexFieldd::zeros(n, sys.slm_pitch, sys.wavelength, Plane::slm);
    slm.samples =
        (mask.phase.cast<std::complex<double>>() * std::complex<double>(0, 1))
            .exp()
            .matrix();

    ComplexFieldd focal = propagate_to_focal(slm, sys);

    // Replace / reshape the focal amplitude, keep the focal phase. Pixels with
    // zero amplitude get phase factor 1 so the output stays well-defined.
    Eigen::ArrayXXd abs_f = focal.samples.array().abs();
    Eigen::ArrayXXcd phase_factor(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            phase_factor(i, j) =
                abs_f(i, j) > 0 ? focal.samples(i, j) / abs_f(i, j)
                                : std::complex<double>(1, 0);

    Eigen::ArrayXXd new_amp;
    if (rule == UpdateRule::multiply)
        new_amp = target.grid * abs_f;
    else
        new_amp = target.grid;
    const double norm2 = new_amp.square().sum();
    if (!(norm2 > 0))
        throw DetectionError("gs_step: amplitude update is identically zero");
    // Rescale so the constrained field carries the full grid energy N^2.
    new_amp *= std::sqrt(double(n) * double(n) / norm2);

    ComplexFieldd constrained = focal;
    constrained.samples = (new_amp * phase_factor).matrix();

    ComplexFieldd back = propagate_to_slm(constrained, sys);

    StepResult<double> out;
    out.next.pitch = mask.pitch;
    out.next.phase = back.samples.array().arg();
    out.focal = std::move(focal);
    return out;
}

struct SolveResult {
    PhaseMaskd mask;
    ConvergenceReport report;
};

// Runs the solver for the configured number of iterations and records, for
// each iteration, the metrics of the field its entering mask produces.
inline SolveResult solve(const TrapSpec& spec, const OpticalSystem& sys,
                         const SolverConfig& cfg) {
    cfg.validate();
    spec.validate();
    sys.validate();
    const TargetAmplitude target = build_target(spec, sys);

    SolveResult result;
    result.report.trap_count = static_cast<int>(spec.traps.size());
    result.mask = init_phase(cfg.init_mode, cfg.seed, sys);
    for (int k = 1; k <= cfg.iterations; ++k) {
        StepResult<double> step = gs_step(result.mask, target, sys, cfg.update_rule);
        IterationStats stats = measure_iteration(step.focal, target, spec, sys);
        stats.iteration = k;
        result.report.iterations.push_back(std::move(stats));
        result.mask = std::move(step.next);
    }
    return result;
}

}  // namespace holotrap
