#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "holotrap/core.hpp"

namespace holotrap {
namespace detail {

// Even-N centered layout: moving the origin between corner and center is the
// same quadrant swap in both directions.
template <class Grid>
void quadrant_swap(Grid& g) {
    const int h = static_cast<int>(g.rows()) / 2;
    g.topLeftCorner(h, h).swap(g.bottomRightCorner(h, h));
    g.topRightCorner(h, h).swap(g.bottomLeftCorner(h, h));
}

// In-place 2-D FFT (no scaling): 1-D passes over columns, transpose between.
template <class Scalar, class Grid>
void fft2_inplace(Grid& g) {
    const int n = static_cast<int>(g.rows());
    Eigen::FFT<Scalar> fft;
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> in(n), out(n);
    for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j < n; ++j) {
            in = g.col(j);
            fft.fwd(out, in);
            g.col(j) = out;
        }
        g.transposeInPlace();
    }
}

// Unitary centered transform: swap -> FFT2 -> swap, scaled by 1/N.
template <class Scalar, class Grid>
Grid centered_unitary_fft(Grid g) {
    quadrant_swap(g);
    fft2_inplace<Scalar>(g);
    quadrant_swap(g);
    g /= std::complex<Scalar>(Scalar(g.rows()), 0);
    return g;
}

// The centered unitary transform is symmetric, so its inverse is its
// elementwise conjugate sandwich; this reuses the forward plan.
template <class Scalar, class Grid>
Grid centered_unitary_ifft(Grid g) {
    g = g.conjugate().eval();
    g = centered_unitary_fft<Scalar>(std::move(g));
    return g.conjugate().eval();
}

}  // namespace detail

// Lens Fourier transform, SLM/pupil plane to back focal plane. Unitary, so
// total energy is preserved exactly.
template <class Scalar>
ComplexField<Scalar> propagate_to_focal(const ComplexField<Scalar>& field,
                                        const OpticalSystem& sys) {
    field.validate();
    sys.validate();
    if (field.size() != sys.grid_size)
        throw ConfigError("propagate_to_focal: field grid does not match system grid");
    if (field.plane_tag != Plane::slm)
        throw ConfigError("propagate_to_focal: field is not tagged as an SLM-plane field");
    ComplexField<Scalar> out;
    out.samples = detail::centered_unitary_fft<Scalar>(field.samples);
    out.pitch = static_cast<Scalar>(sys.focal_pitch());
    out.wavelength = field.wavelength;
    out.plane_tag = Plane::focal;
    return out;
}

// Inverse lens transform, focal plane back to the SLM/pupil plane.
template <class Scalar>
ComplexField<Scalar> propagate_to_slm(const ComplexField<Scalar>& field,
                                      const OpticalSystem& sys) {
    field.validate();
    sys.validate();
    if (field.size() != sys.grid_size)
        throw ConfigError("propagate_to_slm: field grid does not match system grid");
    if (field.plane_tag != Plane::focal)
        throw ConfigError("propagate_to_slm: field is not tagged as a focal-plane field");
    ComplexField<Scalar> out;
    out.samples = detail::centered_unitary_ifft<Scalar>(field.samples);
    out.pitch = static_cast<Scalar>(sys.slm_pitch);
    out.wavelength = field.wavelength;
    out.plane_tag = Plane::slm;
    return out;
}

// Largest |z| for which the sampled paraxial kernel stays alias-free for this
// particular field. Uses the band actually occupied by the field: the kernel's
// local frequency at radius f is lambda*z*f, and the phase step between
// adjacent frequency samples must stay below pi out to the occupied radius.
template <class Scalar>
Scalar max_fresnel_distance(const ComplexField<Scalar>& field) {
    field.validate();
    const int n = field.size();
    auto spec = detail::centered_unitary_fft<Scalar>(field.samples);
    const Scalar total = spec.squaredNorm();
    if (total <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();

    struct Bin {
        Scalar r2;
        Scalar e;
    };
    std::vector<Bin> bins;
    bins.reserve(static_cast<size_t>(n) * n);
    const Scalar df = Scalar(1) / (Scalar(n) * field.pitch);
    for (int j = 0; j < n; ++j) {
        const Scalar fy = Scalar(j - n / 2) * df;
        for (int i = 0; i < n; ++i) {
            const Scalar fx = Scalar(i - n / 2) * df;
            bins.push_back({fx * fx + fy * fy, std::norm(spec(i, j))});
        }
    }
    std::sort(bins.begin(), bins.end(),
              [](const Bin& a, const Bin& b) { return a.r2 < b.r2; });
    const Scalar want = (Scalar(1) - Scalar(1e-10)) * total;
    Scalar acc = 0, band2 = 0;
    for (const auto& b : bins) {
        acc += b.e;
        band2 = b.r2;
        if (acc >= want) break;
    }
    if (band2 <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    const Scalar band = std::sqrt(band2);
    return Scalar(n) * field.pitch / (Scalar(2) * field.wavelength * band);
}

// Free-space propagation over a short axial distance via the paraxial
// transfer function exp(-i pi lambda z f^2). Unit modulus, so energy is
// conserved; the constant piston term is omitted.
template <class Scalar>
ComplexField<Scalar> fresnel_propagate(const ComplexField<Scalar>& field,
                                       Scalar distance) {
    field.validate();
    if (distance == Scalar(0)) return field;
    const Scalar zmax = max_fresnel_distance(field);
    if (std::abs(distance) > zmax) {
        std::ostringstream msg;
        msg << "fresnel_propagate: |distance| " << std::abs(distance)
            << " m exceeds the alias-free limit " << zmax
            << " m for this field; reduce the distance or pad the grid";
        throw SamplingError(msg.str());
    }
    const int n = field.size();
    const Scalar df = Scalar(1) / (Scalar(n) * field.pitch);
    auto spec = detail::centered_unitary_fft<Scalar>(field.samples);
    for (int j = 0; j < n; ++j) {
        const Scalar fy = Scalar(j - n / 2) * df;
        for (int i = 0; i < n; ++i) {
            const Scalar fx = Scalar(i - n / 2) * df;
            const Scalar phase =
                -Scalar(kPi) * field.wavelength * distance * (fx * fx + fy * fy);
            spec(i, j) *= std::complex<Scalar>(std::cos(phase), std::sin(phase));
        }
    }
    ComplexField<Scalar> out;
    out.samples = detail::centered_unitary_ifft<Scalar>(std::move(spec));
    out.pitch = field.pitch;
    out.wavelength = field.wavelength;
    out.plane_tag = Plane::intermediate;
    return out;
}

// Embeds a field in the center of a larger grid (both sizes even). The pitch
// is unchanged; the finer frequency sampling raises the alias-free Fresnel
// range.
template <class Scalar>
ComplexField<Scalar> pad_center(const ComplexField<Scalar>& field, int new_size) {
    field.validate();
    const int n = field.size();
    if (new_size < n || new_size % 2 != 0)
        throw ConfigError("pad_center: new size must be even and >= current size");
    ComplexField<Scalar> out = ComplexField<Scalar>::zeros(
        new_size, field.pitch, field.wavelength, field.plane_tag);
    const int off = (new_size - n) / 2;
    out.samples.block(off, off, n, n) = field.samples;
    return out;
}

}  // namespace holotrap
