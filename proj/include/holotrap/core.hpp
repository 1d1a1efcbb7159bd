#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace holotrap {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Thrown when a field/grid combination violates a precondition.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a propagation distance would alias the sampled kernel.
struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when the beam would exceed the device intensity limit.
struct DeviceDamageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a requested measurement cannot be made on the data.
struct DetectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Plane { slm, focal, intermediate };

// Fixed optical train: SLM/pupil plane Fourier-conjugate to the focal plane
// of the objective. The focal sample pitch is always derived, never stored.
struct OpticalSystem {
    double wavelength = 810e-9;
    double focal_length = 3.55e-3;
    double pupil_diameter = 5e-3;
    double numerical_aperture = 0.7;
    double beam_waist_at_slm = 2.3e-3;
    int grid_size = 512;
    double slm_pitch = 20e-3 / 480;

    double focal_pitch() const {
        return wavelength * focal_length / (grid_size * slm_pitch);
    }
    double field_of_view() const { return grid_size * focal_pitch(); }
    double airy_zero_radius() const {
        return 1.22 * wavelength * focal_length / pupil_diameter;
    }

    void validate() const {
        if (wavelength <= 0 || focal_length <= 0 || pupil_diameter <= 0 ||
            beam_waist_at_slm <= 0 || slm_pitch <= 0)
            throw ConfigError("optical system: all lengths must be positive");
        if (numerical_aperture <= 0 || numerical_aperture >= 1)
            throw ConfigError("optical system: numerical aperture must be in (0, 1)");
        if (grid_size < 2 || grid_size % 2 != 0)
            throw ConfigError("optical system: grid size must be even and >= 2");
    }
};

// Sampled scalar field on a square grid. Zero spatial frequency sits at
// index (N/2, N/2) in every stored grid.
template <class Scalar>
struct ComplexField {
    using Complex = std::complex<Scalar>;
    using Grid = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

    Grid samples;
    Scalar pitch = 0;
    Scalar wavelength = 0;
    Plane plane_tag = Plane::intermediate;

    int size() const { return static_cast<int>(samples.rows()); }

    void validate() const {
        if (samples.rows() < 2 || samples.rows() != samples.cols())
            throw ConfigError("field: grid must be square with N >= 2");
        if (pitch <= 0 || wavelength <= 0)
            throw ConfigError("field: pitch and wavelength must be positive");
    }

    static ComplexField zeros(int n, Scalar pitch, Scalar wavelength, Plane tag) {
        ComplexField f;
        f.samples = Grid::Zero(n, n);
        f.pitch = pitch;
        f.wavelength = wavelength;
        f.plane_tag = tag;
        return f;
    }
};

using ComplexFieldd = ComplexField<double>;

template <class Scalar>
Scalar energy(const ComplexField<Scalar>& f) {
    return f.samples.squaredNorm();
}

// Wraps into (-pi, pi].
template <class Scalar>
Scalar wrap_phase(Scalar x) {
    Scalar w = std::remainder(x, Scalar(2) * Scalar(kPi));
    if (w <= -Scalar(kPi)) w += Scalar(2) * Scalar(kPi);
    return w;
}

}  // namespace holotrap
