#include <complex>
#include <random>

#include "doctest.h"
#include "holotrap/fourier.hpp"

using namespace holotrap;

namespace {

OpticalSystem small_system(int n = 64) {
    OpticalSystem sys;
    sys.grid_size = n;
    return sys;
}

ComplexFieldd random_field(int n, std::uint64_t seed, Plane tag = Plane::slm) {
    OpticalSystem sys = small_system(n);
    ComplexFieldd f = ComplexFieldd::zeros(n, sys.slm_pitch, sys.wavelength, tag);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            f.samples(i, j) = std::complex<double>(gauss(gen), gauss(gen));
    return f;
}

}  // namespace

TEST_CASE("phase wrapping lands in the principal branch") {
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(kPi) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(wrap_phase(-kPi) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(wrap_phase(3.0 * kPi) == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(wrap_phase(2.0 * kPi + 0.25) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(wrap_phase(-2.0 * kPi - 0.25) == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("optical system exposes the derived focal scales") {
    OpticalSystem sys;
    CHECK(sys.focal_pitch() == doctest::Approx(0.134789e-6).epsilon(1e-4));
    CHECK(sys.airy_zero_radius() == doctest::Approx(0.70162e-6).epsilon(1e-4));
    CHECK(sys.field_of_view() == doctest::Approx(512 * sys.focal_pitch()).epsilon(1e-12));

    OpticalSystem odd = sys;
    odd.grid_size = 511;
    CHECK_THROWS_AS(odd.validate(), ConfigError);
    OpticalSystem bad_na = sys;
    bad_na.numerical_aperture = 1.5;
    CHECK_THROWS_AS(bad_na.validate(), ConfigError);
}

TEST_CASE("complex fields validate their shape") {
    ComplexFieldd f = ComplexFieldd::zeros(16, 1e-5, 810e-9, Plane::slm);
    CHECK_NOTHROW(f.validate());
    f.pitch = 0;
    CHECK_THROWS_AS(f.validate(), ConfigError);
    f.pitch = 1e-5;
    f.samples.resize(16, 8);
    CHECK_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("forward transform preserves total energy") {
    ComplexFieldd f = random_field(64, 11);
    OpticalSystem sys = small_system(64);
    ComplexFieldd g = propagate_to_focal(f, sys);
    CHECK(energy(g) == doctest::Approx(energy(f)).epsilon(1e-12));
}

TEST_CASE("inverse transform restores the input field") {
    ComplexFieldd f = random_field(64, 12);
    OpticalSystem sys = small_system(64);
    ComplexFieldd g = propagate_to_slm(propagate_to_focal(f, sys), sys);
    double worst = 0;
    for (int j = 0; j < 64; ++j)
        for (int i = 0; i < 64; ++i)
            worst = std::max(worst, std::abs(g.samples(i, j) - f.samples(i, j)));
    CHECK(worst < 1e-12);
}

TEST_CASE("center delta transforms to a flat field") {
    const int n = 8;
    OpticalSystem sys = small_system(n);
    ComplexFieldd f = ComplexFieldd::zeros(n, sys.slm_pitch, sys.wavelength, Plane::slm);
    f.samples(n / 2, n / 2) = 1.0;
    ComplexFieldd g = propagate_to_focal(f, sys);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            CHECK(g.samples(i, j).real() == doctest::Approx(1.0 / n).epsilon(1e-14));
            CHECK(std::abs(g.samples(i, j).imag()) < 1e-15);
        }
}

TEST_CASE("one-pixel shift produces an alternating phase ramp") {
    const int n = 8;
    OpticalSystem sys = small_system(n);
    ComplexFieldd f = ComplexFieldd::zeros(n, sys.slm_pitch, sys.wavelength, Plane::slm);
    f.samples(n / 2 + 1, n / 2) = 1.0;
    ComplexFieldd g = propagate_to_focal(f, sys);
    // shift by one sample -> phase falls by 2*pi/n per frequency step
    for (int i = 0; i < n; ++i) {
        const double expect = -2.0 * kPi / n * (i - n / 2);
        const std::complex<double> want =
            std::complex<double>(std::cos(expect), std::sin(expect)) / double(n);
        CHECK(std::abs(g.samples(i, n / 2) - want) < 1e-14);
    }
}

TEST_CASE("focal grid pitch follows the lens scaling") {
    OpticalSystem sys = small_system(64);
    ComplexFieldd f = random_field(64, 13);
    ComplexFieldd g = propagate_to_focal(f, sys);
    const double expect = sys.wavelength * sys.focal_length / (64 * sys.slm_pitch);
    CHECK(g.pitch == doctest::Approx(expect).epsilon(1e-15));
    CHECK(g.plane_tag == Plane::focal);
    ComplexFieldd h = propagate_to_slm(g, sys);
    CHECK(h.pitch == doctest::Approx(sys.slm_pitch).epsilon(1e-15));
    CHECK(h.plane_tag == Plane::slm);
}

TEST_CASE("propagation rejects mismatched grids and wrong plane tags") {
    OpticalSystem sys = small_system(64);
    ComplexFieldd f = random_field(32, 14);
    CHECK_THROWS_AS(propagate_to_focal(f, sys), ConfigError);
    ComplexFieldd g = random_field(64, 15, Plane::focal);
    CHECK_THROWS_AS(propagate_to_focal(g, sys), ConfigError);
    ComplexFieldd h = random_field(64, 16, Plane::slm);
    CHECK_THROWS_AS(propagate_to_slm(h, sys), ConfigError);
}

TEST_CASE("free-space propagation preserves energy and is reversible") {
    const int n = 128;
    OpticalSystem sys = small_system(n);
    // compact focal spot: transform of a small centered disk
    ComplexFieldd slm = ComplexFieldd::zeros(n, sys.slm_pitch, sys.wavelength, Plane::slm);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double r = std::hypot(i - n / 2, j - n / 2);
            if (r <= 6.0) slm.samples(i, j) = 1.0;
        }
    ComplexFieldd focal = propagate_to_focal(slm, sys);
    const double zmax = max_fresnel_distance(focal);
    CHECK(zmax > 0);
    const double z = 0.5 * zmax;
    ComplexFieldd moved = fresnel_propagate(focal, z);
    CHECK(energy(moved) == doctest::Approx(energy(focal)).epsilon(1e-12));
    CHECK(moved.plane_tag == Plane::intermediate);
    ComplexFieldd back = fresnel_propagate(moved, -z);
    double worst = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(back.samples(i, j) - focal.samples(i, j)));
    CHECK(worst < 1e-12);
}

TEST_CASE("zero-distance propagation returns the field unchanged") {
    ComplexFieldd f = random_field(32, 17, Plane::focal);
    ComplexFieldd g = fresnel_propagate(f, 0.0);
    CHECK((g.samples - f.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("propagation beyond the alias-free range is rejected") {
    ComplexFieldd f = random_field(64, 18, Plane::focal);
    const double zmax = max_fresnel_distance(f);
    CHECK_THROWS_WITH_AS(fresnel_propagate(f, 2.0 * zmax),
                         doctest::Contains("alias-free limit"), SamplingError);
    CHECK_NOTHROW(fresnel_propagate(f, 0.9 * zmax));
}

TEST_CASE("alias-free range is unbounded for empty or uniform fields") {
    OpticalSystem sys = small_system(32);
    ComplexFieldd empty = ComplexFieldd::zeros(32, sys.slm_pitch, sys.wavelength, Plane::focal);
    CHECK(std::isinf(max_fresnel_distance(empty)));
    ComplexFieldd flat = empty;
    flat.samples.setConstant(std::complex<double>(1.0, 0.0));
    CHECK(std::isinf(max_fresnel_distance(flat)));
}

TEST_CASE("padding centers the field and preserves energy") {
    ComplexFieldd f = random_field(32, 19, Plane::focal);
    ComplexFieldd g = pad_center(f, 64);
    CHECK(g.size() == 64);
    CHECK(g.pitch == f.pitch);
    CHECK(energy(g) == doctest::Approx(energy(f)).epsilon(1e-15));
    CHECK((g.samples.block(16, 16, 32, 32) - f.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(g.samples(0, 0)) == 0.0);
    CHECK_THROWS_AS(pad_center(f, 16), ConfigError);
    CHECK_THROWS_AS(pad_center(f, 65), ConfigError);
}

TEST_CASE("padding widens the alias-free range for a compact field") {
    // Gaussian spot that decays to zero well inside the window: padding adds
    // no edge discontinuity, so the finer frequency sampling doubles the range.
    const int n = 128;
    OpticalSystem sys = small_system(n);
    ComplexFieldd focal =
        ComplexFieldd::zeros(n, sys.focal_pitch(), sys.wavelength, Plane::focal);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double r2 = double(i - n / 2) * (i - n / 2) +
                              double(j - n / 2) * (j - n / 2);
            focal.samples(i, j) = std::exp(-r2 / 16.0);
        }
    const double z1 = max_fresnel_distance(focal);
    const double z2 = max_fresnel_distance(pad_center(focal, 2 * n));
    CHECK(z2 == doctest::Approx(2.0 * z1).epsilon(0.05));
}
