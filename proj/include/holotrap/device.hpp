#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "holotrap/core.hpp"
#include "holotrap/solver.hpp"

namespace holotrap {

// Physical phase modulator: finite phase range that shrinks with wavelength,
// 8-bit addressing, finite active area, intensity ceiling.
struct DeviceModel {
    int pixels_per_side = 480;
    double active_side = 20e-3;
    double max_phase_at_reference = 2.1 * kPi;
    double reference_wavelength = 633e-9;
    int gray_levels = 256;           // <= 0 means continuous phase control
    double max_intensity = 2000.0;   // W/m^2
    double modulated_diameter = 0;   // meters; 0 means "match the pupil"

    double pixel_pitch() const { return active_side / pixels_per_side; }

    void validate() const {
        if (pixels_per_side < 2 || pixels_per_side % 2 != 0)
            throw ConfigError("device: pixels per side must be even and >= 2");
        if (active_side <= 0)
            throw ConfigError("device: active side must be positive");
        if (max_phase_at_reference <= 0 || reference_wavelength <= 0)
            throw ConfigError("device: phase range and reference wavelength must be positive");
        if (modulated_diameter < 0)
            throw ConfigError("device: modulated diameter must be >= 0");
        if (max_intensity <= 0)
            throw ConfigError("device: intensity limit must be positive");
    }
};

// Device with full 2*pi range and continuous levels at the given wavelength;
// useful as the loss-free baseline in comparisons.
inline DeviceModel ideal_device(double wavelength) {
    DeviceModel dev;
    dev.max_phase_at_reference = 2.0 * kPi;
    dev.reference_wavelength = wavelength;
    dev.gray_levels = 0;
    return dev;
}

struct BeamProfile {
    double waist_at_slm = 2.3e-3;  // amplitude ~ exp(-r^2/w^2); infinity = flat
    double power = 10e-3;
    bool polarization_ok = true;

    void validate() const {
        if (!(waist_at_slm > 0))
            throw ConfigError("beam: waist must be positive");
        if (!(power > 0))
            throw ConfigError("beam: power must be positive");
    }
};

// Largest phase stroke the device reaches at the given wavelength; scales
// inversely with wavelength from the calibrated reference point.
inline double max_phase(const DeviceModel& dev, double wavelength) {
    dev.validate();
    if (!(wavelength > 0))
        throw ConfigError("max_phase: wavelength must be positive");
    // ratio first: at the reference wavelength the range is exact, not one
    // rounding away from it
    return dev.max_phase_at_reference * (dev.reference_wavelength / wavelength);
}

// Realistic SLM-plane field for a requested mask: Gaussian illumination
// truncated to the active square intersected with the modulated disk, and the
// requested phase saturated into the reachable range, then quantized. The
// saturation is what generates a physical zeroth order once the range is
// below 2*pi. `gain` scales the requested phase before saturation.
inline ComplexFieldd apply_device(const PhaseMaskd& mask, const DeviceModel& dev,
                                  const BeamProfile& beam, const OpticalSystem& sys,
                                  double gain = 1.0) {
    dev.validate();
    beam.validate();
    sys.validate();
    const int n = sys.grid_size;
    if (mask.size() != n)
        throw ConfigError("apply_device: mask grid does not match system grid");

    if (std::isfinite(beam.waist_at_slm)) {
        const double peak = 2.0 * beam.power /
                            (kPi * beam.waist_at_slm * beam.waist_at_slm);
        if (peak > dev.max_intensity) {
            std::ostringstream msg;
            msg << "apply_device: beam peak intensity " << peak
                << " W/m^2 exceeds the device limit " << dev.max_intensity
                << " W/m^2";
            throw DeviceDamageError(msg.str());
        }
    }

    const double phi_max = max_phase(dev, sys.wavelength);
    const double step =
        dev.gray_levels > 1 ? phi_max / (dev.gray_levels - 1) : 0.0;
    const double half_active = dev.active_side / 2;
    const double mod_radius =
        (dev.modulated_diameter > 0 ? dev.modulated_diameter
                                    : sys.pupil_diameter) /
        2;
    const double w = beam.waist_at_slm;

    ComplexFieldd out =
        ComplexFieldd::zeros(n, sys.slm_pitch, sys.wavelength, Plane::slm);
    for (int j = 0; j < n; ++j) {
        const double y = (j - n / 2) * sys.slm_pitch;
        for (int i = 0; i < n; ++i) {
            const double x = (i - n / 2) * sys.slm_pitch;
            const bool inside = std::abs(x) <= half_active &&
                                std::abs(y) <= half_active &&
                                x * x + y * y <= mod_radius * mod_radius;
            if (!inside) continue;
            const double amp =
                std::isfinite(w) ? std::exp(-(x * x + y * y) / (w * w)) : 1.0;
            // Shift the (-pi, pi] request to a non-negative stroke, saturate
            // into the reachable range, quantize with round-half-up.
            double stroke = gain * mask.phase(i, j) + kPi;
            stroke = std::min(std::max(stroke, 0.0), phi_max);
            if (step > 0) stroke = std::floor(stroke / step + 0.5) * step;
            const double phi = stroke - kPi;
            out.samples(i, j) = amp * std::complex<double>(std::cos(phi), std::sin(phi));
        }
    }
    return out;
}

// Adds the quadratic phase of a thin lens of focal length f_lens, wrapped
// back into (-pi, pi]. Adding f and then -f restores the original mask; two
// lens terms compose by adding their 1/f powers.
inline PhaseMaskd add_lens_phase(const PhaseMaskd& mask, double f_lens,
                                 const OpticalSystem& sys) {
    sys.validate();
    if (f_lens == 0) throw ConfigError("add_lens_phase: focal length must be nonzero");
    const int n = sys.grid_size;
    if (mask.size() != n)
        throw ConfigError("add_lens_phase: mask grid does not match system grid");
    PhaseMaskd out = mask;
    for (int j = 0; j < n; ++j) {
        const double y = (j - n / 2) * sys.slm_pitch;
        for (int i = 0; i < n; ++i) {
            const double x = (i - n / 2) * sys.slm_pitch;
            const double lens = -kPi * (x * x + y * y) / (sys.wavelength * f_lens);
            out.phase(i, j) = wrap_phase(mask.phase(i, j) + lens);
        }
    }
    return out;
}

namespace detail {

// Gray mapping used for hologram images: 0 at -pi, 255 at +pi, round-half-up.
inline int phase_to_gray(double phi) {
    const int g = static_cast<int>(std::floor((phi + kPi) / (2.0 * kPi) * 255.0 + 0.5));
    return std::min(std::max(g, 0), 255);
}

inline double gray_to_phase(int g) { return g / 255.0 * 2.0 * kPi - kPi; }

}  // namespace detail

// Writes the central device crop of the mask as a binary 8-bit PGM, gray 0
// meaning -pi and gray 255 meaning +pi regardless of the device's reachable
// range (saturation is a property of apply_device, not of the image).
inline void export_hologram(const PhaseMaskd& mask, const std::string& path,
                            const DeviceModel& dev = DeviceModel{}) {
    dev.validate();
    const int n = mask.size();
    const int d = dev.pixels_per_side;
    if (n < d || (n - d) % 2 != 0)
        throw ConfigError("export_hologram: mask grid smaller than the device crop");
    const int off = (n - d) / 2;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("export_hologram: cannot open " + path);
    out << "P5\n" << d << " " << d << "\n255\n";
    std::string row(static_cast<size_t>(d), '\0');
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j)
            row[static_cast<size_t>(j)] = static_cast<char>(
                static_cast<unsigned char>(detail::phase_to_gray(mask.phase(off + i, off + j))));
        out.write(row.data(), d);
    }
    if (!out)
        throw std::runtime_error("export_hologram: write failed for " + path);
}

// Reads a binary PGM written by export_hologram back into phase values in
// [-pi, pi]; the round trip errs by at most one gray step.
inline PhaseMaskd import_hologram(const std::string& path,
                                  double pitch = 20e-3 / 480.0) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("import_hologram: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5")
        throw std::runtime_error("import_hologram: not a binary PGM: " + path);
    int width = 0, height = 0, maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width < 1 || height < 1 || maxval != 255)
        throw std::runtime_error("import_hologram: unsupported PGM header in " + path);
    in.get();  // single whitespace byte after the header
    if (width != height)
        throw std::runtime_error("import_hologram: image must be square: " + path);
    PhaseMaskd mask;
    mask.phase = Eigen::ArrayXXd::Zero(width, width);
    mask.pitch = pitch;
    std::string row(static_cast<size_t>(width), '\0');
    for (int i = 0; i < height; ++i) {
        in.read(row.data(), width);
        if (!in)
            throw std::runtime_error("import_hologram: truncated pixel data in " + path);
        for (int j = 0; j < width; ++j)
            mask.phase(i, j) = detail::gray_to_phase(
                static_cast<unsigned char>(row[static_cast<size_t>(j)]));
    }
    return mask;
}

// Embeds a smaller mask (for example an imported device image) in the center
// of an N x N grid, zero phase outside.
inline PhaseMaskd embed_center(const PhaseMaskd& mask, int new_size) {
    const int n = mask.size();
    if (new_size < n || (new_size - n) % 2 != 0)
        throw ConfigError("embed_center: new size must be >= mask size, same parity");
    PhaseMaskd out;
    out.phase = Eigen::ArrayXXd::Zero(new_size, new_size);
    out.pitch = mask.pitch;
    const int off = (new_size - n) / 2;
    out.phase.block(off, off, n, n) = mask.phase;
    return out;
}

}  // namespace holotrap
