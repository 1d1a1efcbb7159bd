#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "holotrap/core.hpp"
#include "holotrap/fourier.hpp"

namespace holotrap {

// One requested trap site in the focal plane. Positions are in meters,
// relative to the optical axis; weight is a relative intensity weight.
struct Trap {
    double x = 0;
    double y = 0;
    double weight = 1.0;
};

struct TrapSpec {
    std::vector<Trap> traps;
    double zeroth_order_weight = 0.0;
    std::string label;

    // Weights are relative intensities; zero-weight entries are legal (a site
    // to evaluate without requesting light there), but something must carry
    // weight — either a trap or the deliberate zeroth-order spot.
    void validate() const {
        if (zeroth_order_weight < 0)
            throw ConfigError("trap spec: zeroth-order weight must be >= 0");
        bool any = zeroth_order_weight > 0;
        for (const auto& t : traps) {
            if (t.weight < 0)
                throw ConfigError("trap spec: trap weights must be >= 0");
            any = any || t.weight > 0;
        }
        if (!any)
            throw ConfigError("trap spec: at least one positive weight is required");
    }
};

// A trap center snapped to the focal sampling grid.
struct SnappedTrap {
    int ix = 0;
    int iy = 0;
    double weight = 1.0;
    double residual = 0.0;  // meters between requested and snapped center
};

namespace detail {

// Pixel index whose center is nearest to coordinate x (ties toward the lower
// index). Pixel i sits at (i - N/2) * pitch.
inline int snap_index(double x, double pitch, int n) {
    return static_cast<int>(std::ceil(double(n) / 2 + x / pitch - 0.5));
}

inline SnappedTrap snap_point(double x, double y, double w,
                              const OpticalSystem& sys) {
    const double pitch = sys.focal_pitch();
    const int n = sys.grid_size;
    SnappedTrap s;
    s.ix = snap_index(x, pitch, n);
    s.iy = snap_index(y, pitch, n);
    if (s.ix < 0 || s.ix >= n || s.iy < 0 || s.iy >= n)
        throw ConfigError("snap: trap position outside the field of view");
    const double dx = x - (s.ix - n / 2) * pitch;
    const double dy = y - (s.iy - n / 2) * pitch;
    s.residual = std::hypot(dx, dy);
    s.weight = w;
    return s;
}

}  // namespace detail

// Snaps every requested trap (plus the weighted zeroth order, if any) to the
// focal grid. Throws if a trap falls outside the field of view.
inline std::vector<SnappedTrap> snap_traps(const TrapSpec& spec,
                                           const OpticalSystem& sys) {
    spec.validate();
    sys.validate();
    std::vector<SnappedTrap> out;
    out.reserve(spec.traps.size() + 1);
    for (const auto& t : spec.traps)
        out.push_back(detail::snap_point(t.x, t.y, t.weight, sys));
    if (spec.zeroth_order_weight > 0)
        out.push_back(detail::snap_point(0.0, 0.0, spec.zeroth_order_weight, sys));
    return out;
}

// Circular pupil indicator sampled on the SLM-plane grid: 1 inside the
// aperture, 0 outside.
inline Eigen::ArrayXXd pupil_amplitude(const OpticalSystem& sys) {
    sys.validate();
    const int n = sys.grid_size;
    const double radius = sys.pupil_diameter / 2;
    Eigen::ArrayXXd amp(n, n);
    for (int j = 0; j < n; ++j) {
        const double y = (j - n / 2) * sys.slm_pitch;
        for (int i = 0; i < n; ++i) {
            const double x = (i - n / 2) * sys.slm_pitch;
            amp(i, j) = (x * x + y * y <= radius * radius) ? 1.0 : 0.0;
        }
    }
    return amp;
}

// Focal-plane amplitude of a single on-axis spot through the full pupil,
// normalized to 1 at its center. This is the diffraction-limited spot shape
// on this exact grid, so targets built from it are consistent with what the
// optics can actually produce.
inline Eigen::ArrayXXd focal_kernel(const OpticalSystem& sys) {
    const int n = sys.grid_size;
    ComplexFieldd pupil = ComplexFieldd::zeros(n, sys.slm_pitch, sys.wavelength,
                                               Plane::slm);
    pupil.samples = pupil_amplitude(sys).cast<std::complex<double>>().matrix();
    ComplexFieldd focal = propagate_to_focal(pupil, sys);
    Eigen::ArrayXXd kernel = focal.samples.real().array();
    const double center = kernel(n / 2, n / 2);
    if (!(center > 0))
        throw ConfigError("focal_kernel: aperture produces no on-axis amplitude");
    return kernel / center;
}

// Real non-negative focal-plane target amplitude, max-normalized.
struct TargetAmplitude {
    Eigen::ArrayXXd grid;
    double pitch = 0;
    bool overlap_warning = false;
};

// Builds the target by placing a copy of the diffraction-limited spot shape
// at each snapped trap center, scaled by sqrt(weight). Placement is cyclic
// and runs in a canonical center order, so the result is bit-identical under
// trap reordering and exact under whole-pixel translation.
inline TargetAmplitude build_target(const TrapSpec& spec, const OpticalSystem& sys) {
    const int n = sys.grid_size;
    std::vector<SnappedTrap> snapped = snap_traps(spec, sys);
    std::sort(snapped.begin(), snapped.end(), [](const SnappedTrap& a,
                                                 const SnappedTrap& b) {
        if (a.ix != b.ix) return a.ix < b.ix;
        if (a.iy != b.iy) return a.iy < b.iy;
        return a.weight < b.weight;
    });

    const Eigen::ArrayXXd kernel = focal_kernel(sys);
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(n, n);
    const int c = n / 2;
    for (const auto& s : snapped) {
        if (s.weight == 0) continue;
        const double scale = std::sqrt(s.weight);
        const int di = s.ix - c;
        const int dj = s.iy - c;
        for (int j = 0; j < n; ++j) {
            const int js = (j - dj % n + n) % n;
            for (int i = 0; i < n; ++i) {
                const int is = (i - di % n + n) % n;
                acc(i, j) += scale * kernel(is, js);
            }
        }
    }

    TargetAmplitude target;
    target.grid = acc.abs();
    const double peak = target.grid.maxCoeff();
    if (!(peak > 0))
        throw ConfigError("build_target: target amplitude is identically zero");
    target.grid /= peak;
    target.pitch = sys.focal_pitch();

    // Lit spots closer than one diffraction zero blur together; flag, not
    // fatal. Zero-weight sites carry no light and cannot overlap anything.
    const double min_sep = sys.airy_zero_radius() / sys.focal_pitch();
    for (size_t a = 0; a < snapped.size() && !target.overlap_warning; ++a) {
        if (snapped[a].weight == 0) continue;
        for (size_t b = a + 1; b < snapped.size(); ++b) {
            if (snapped[b].weight == 0) continue;
            const double dx = snapped[a].ix - snapped[b].ix;
            const double dy = snapped[a].iy - snapped[b].iy;
            if (std::hypot(dx, dy) < min_sep) {
                target.overlap_warning = true;
                break;
            }
        }
    }
    return target;
}

}  // namespace holotrap
