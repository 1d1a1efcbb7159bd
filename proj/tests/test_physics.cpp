#include <cmath>

#include "doctest.h"
#include "holotrap/physics.hpp"

using namespace holotrap;

namespace {

// intensity of a Gaussian focus with 1/e^2 radius `waist`, centered on a pixel
Eigen::ArrayXXd gaussian_spot(const OpticalSystem& sys, int cx, int cy,
                              double waist, double scale = 1.0) {
    const int n = sys.grid_size;
    const double pitch = sys.focal_pitch();
    Eigen::ArrayXXd intensity = Eigen::ArrayXXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double r2 = (double(i - cx) * (i - cx) + double(j - cy) * (j - cy)) *
                              pitch * pitch;
            intensity(i, j) += scale * std::exp(-2.0 * r2 / (waist * waist));
        }
    return intensity;
}

TrapReport fake_report(std::initializer_list<bool> flags) {
    TrapReport report;
    for (bool f : flags) {
        TrapEntry e;
        e.above_threshold = f;
        report.traps.push_back(e);
    }
    return report;
}

}  // namespace

TEST_CASE("grating periods map to the documented spot separations") {
    const double wl = 810e-9, f = 3.55e-3;
    CHECK(trap_spacing(wl, f, 575.1e-6) == doctest::Approx(5.00e-6).epsilon(1e-3));
    CHECK(trap_spacing(wl, f, 718.9e-6) == doctest::Approx(4.00e-6).epsilon(1e-3));
    CHECK(trap_spacing(wl, f, 1150.2e-6) == doctest::Approx(2.50e-6).epsilon(1e-3));
    CHECK_THROWS_AS(trap_spacing(wl, f, 0.0), ConfigError);
}

TEST_CASE("one-pixel period steps bound the position precision") {
    const double wl = 810e-9, f = 3.55e-3, pixel = 40e-6;
    const double prec = position_precision(4e-6, wl, f, pixel);
    CHECK(prec == doctest::Approx(0.2108e-6).epsilon(1e-3));
    CHECK(prec > 0.20e-6);
    CHECK(prec < 0.31e-6);
    // a one-pixel grating cannot be made longer: spacing at the device limit
    CHECK_THROWS_AS(position_precision(75e-6, wl, f, pixel), ConfigError);
    CHECK_THROWS_AS(position_precision(0.0, wl, f, pixel), ConfigError);
}

TEST_CASE("gaussian peak intensity follows 2P over pi w squared") {
    // 10 mW at 0.9 um waist is 786 kW/cm^2
    const double peak = peak_intensity(10e-3, 0.9e-6);
    CHECK(peak == doctest::Approx(7.8595e9).epsilon(1e-3));
    CHECK(peak * 1e-7 == doctest::Approx(786.0).epsilon(1e-3));  // kW/cm^2
    CHECK_THROWS_AS(peak_intensity(0.0, 1e-6), ConfigError);
    CHECK_THROWS_AS(peak_intensity(1e-3, 0.0), ConfigError);
}

TEST_CASE("threshold powers convert to waist ratios by square root") {
    const double ratio = waist_ratio_from_thresholds(1.3225, 1.0);
    CHECK(std::abs(ratio - 1.15) <= 1e-12);
    for (double a : {0.5, 2.0, 7.3})
        CHECK(waist_ratio_from_thresholds(a, 1.0) *
                  waist_ratio_from_thresholds(1.0, a) ==
              doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(waist_ratio_from_thresholds(0.0, 1.0), ConfigError);
}

TEST_CASE("waist estimation recovers a synthetic gaussian") {
    OpticalSystem sys;
    const int c = sys.grid_size / 2;
    Eigen::ArrayXXd spot = gaussian_spot(sys, c, c, 0.9e-6);
    CHECK(estimate_waist(spot, c, c, sys) ==
          doctest::Approx(0.9e-6).epsilon(2e-3));
}

TEST_CASE("waist estimation tolerates sub-pixel center offsets") {
    OpticalSystem sys;
    const int n = sys.grid_size, c = n / 2;
    const double pitch = sys.focal_pitch();
    Eigen::ArrayXXd spot = Eigen::ArrayXXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double dx = (i - c) * pitch - 0.5 * pitch;
            const double dy = (j - c) * pitch;
            spot(i, j) = std::exp(-2.0 * (dx * dx + dy * dy) / (0.9e-6 * 0.9e-6));
        }
    CHECK(estimate_waist(spot, c, c, sys) ==
          doctest::Approx(0.9e-6).epsilon(2e-3));
}

TEST_CASE("waist estimation is exactly intensity-scale invariant") {
    OpticalSystem sys;
    const int c = sys.grid_size / 2;
    Eigen::ArrayXXd spot = gaussian_spot(sys, c, c, 0.9e-6);
    const double w1 = estimate_waist(spot, c, c, sys);
    const double w2 = estimate_waist(Eigen::ArrayXXd(17.3 * spot), c, c, sys);
    CHECK(std::abs(w2 - w1) <= 1e-12 * w1);
}

TEST_CASE("the diffraction-limited spot waist lands in the expected band") {
    OpticalSystem sys;
    const int c = sys.grid_size / 2;
    Eigen::ArrayXXd airy = focal_kernel(sys).square();
    const double w = estimate_waist(airy, c, c, sys);
    // 0.84 * lambda f / D, with a [0.8, 1.0] acceptance band
    const double ref = 0.84 * sys.wavelength * sys.focal_length / sys.pupil_diameter;
    CHECK(w > 0.8 * ref);
    CHECK(w <= 1.0 * ref);
}

TEST_CASE("waist estimation reports undetectable spots") {
    OpticalSystem sys;
    const int n = sys.grid_size, c = n / 2;
    Eigen::ArrayXXd dark = Eigen::ArrayXXd::Zero(n, n);
    CHECK_THROWS_AS(estimate_waist(dark, c, c, sys), DetectionError);
    // a pure gradient has its window maximum at the rim: no spot there
    Eigen::ArrayXXd ramp(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) ramp(i, j) = 1.0 + i;
    CHECK_THROWS_AS(estimate_waist(ramp, c, c, sys), DetectionError);
}

TEST_CASE("evaluation reports positions, powers and flags per trap") {
    OpticalSystem sys;
    TrapSpec spec;
    spec.traps.push_back({-5e-6, 0, 1.0});
    spec.traps.push_back({5e-6, 0, 1.0});
    Eigen::ArrayXXd field = gaussian_spot(sys, 219, 256, 0.9e-6) +
                            gaussian_spot(sys, 293, 256, 0.9e-6);
    LoadingModel loading;  // 4 mW threshold
    TrapReport report = evaluate(field, spec, sys, loading, 40e-3);
    REQUIRE(report.traps.size() == 2);
    const double pitch = sys.focal_pitch();
    CHECK(std::abs(report.traps[0].x - (-5e-6)) < pitch);
    CHECK(std::abs(report.traps[1].x - 5e-6) < pitch);
    CHECK(std::abs(report.traps[0].y) < pitch / 4);
    // the measurement window (first diffraction zero) holds ~70% of a 0.9 um
    // Gaussian: 1 - exp(-2 R^2/w^2) with R = 5.21 px, w = 6.68 px
    for (const auto& t : report.traps) {
        CHECK(t.power_share == doctest::Approx(0.352).epsilon(0.05));
        CHECK(t.power == doctest::Approx(14.1e-3).epsilon(0.05));
        CHECK(t.above_threshold);
        CHECK(t.peak_relative == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(t.waist == doctest::Approx(0.9e-6).epsilon(2e-3));
    }
    CHECK(report.uniformity_deviation < 1e-6);
    CHECK(report.efficiency == doctest::Approx(0.703).epsilon(0.05));
    CHECK(report.total_power == 40e-3);
}

TEST_CASE("evaluation of an empty layout yields an empty trap list") {
    OpticalSystem sys;
    TrapSpec spec;
    spec.zeroth_order_weight = 1.0;
    Eigen::ArrayXXd field = gaussian_spot(sys, 256, 256, 0.9e-6);
    TrapReport report = evaluate(field, spec, sys, LoadingModel{}, 10e-3);
    CHECK(report.traps.empty());
    CHECK(report.efficiency == 0.0);
    CHECK(report.zeroth_order_intensity > 0.6);
}

TEST_CASE("evaluation of a dark field raises no flags") {
    OpticalSystem sys;
    TrapSpec spec;
    spec.traps.push_back({-5e-6, 0, 1.0});
    spec.traps.push_back({5e-6, 0, 1.0});
    Eigen::ArrayXXd dark = Eigen::ArrayXXd::Zero(sys.grid_size, sys.grid_size);
    TrapReport report = evaluate(dark, spec, sys, LoadingModel{}, 40e-3);
    REQUIRE(report.traps.size() == 2);
    for (const auto& t : report.traps) {
        CHECK_FALSE(t.above_threshold);
        CHECK(t.power == 0.0);
        CHECK(t.waist == 0.0);
    }
    CHECK(report.zeroth_order_intensity == 0.0);
    CHECK(report.uniformity_deviation == 0.0);
}

TEST_CASE("loading is deterministic per seed and sensitive to it") {
    TrapReport report = fake_report({true, true, true});
    LoadingModel loading;
    loading.trials = 20000;
    loading.seed = 7;
    OccupancyStats a = load_sim(report, loading);
    OccupancyStats b = load_sim(report, loading);
    CHECK(a.joint_frequency == b.joint_frequency);
    CHECK(a.mean_atoms == b.mean_atoms);
    CHECK(a.per_trap_frequency == b.per_trap_frequency);
    loading.seed = 8;
    OccupancyStats c = load_sim(report, loading);
    CHECK(a.joint_frequency != c.joint_frequency);
}

TEST_CASE("occupancy statistics match the blockade model") {
    TrapReport report = fake_report({true, true, true});
    LoadingModel loading;
    loading.trials = 100000;
    loading.seed = 7;
    OccupancyStats stats = load_sim(report, loading);
    CHECK(stats.trials == 100000);
    // independent p = 0.5 per trap: 3-sigma binomial bands
    const double sigma = std::sqrt(0.25 / 100000);
    for (double f : stats.per_trap_frequency) {
        CHECK(f > 0.5 - 3 * sigma);
        CHECK(f < 0.5 + 3 * sigma);
    }
    CHECK(stats.joint_frequency == doctest::Approx(0.125).epsilon(0.04));
    CHECK(stats.mean_atoms == doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("a two-trap pair loads one atom on average") {
    TrapReport report = fake_report({true, true});
    LoadingModel loading;
    loading.trials = 100000;
    loading.seed = 7;
    OccupancyStats stats = load_sim(report, loading);
    CHECK(stats.mean_atoms == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("below-threshold traps never load") {
    TrapReport report = fake_report({true, false, true});
    LoadingModel loading;
    loading.trials = 50000;
    loading.seed = 3;
    OccupancyStats stats = load_sim(report, loading);
    CHECK(stats.per_trap_frequency[1] == 0.0);
    CHECK(stats.joint_frequency == 0.0);
    CHECK(stats.per_trap_frequency[0] > 0.4);
    CHECK(stats.per_trap_frequency[2] > 0.4);
}

TEST_CASE("probability overrides replace the global loading probability") {
    TrapReport report = fake_report({true, true});
    LoadingModel loading;
    loading.trials = 1000;
    loading.p_overrides = {1.0, 0.0};
    OccupancyStats stats = load_sim(report, loading);
    CHECK(stats.per_trap_frequency[0] == 1.0);
    CHECK(stats.per_trap_frequency[1] == 0.0);
    CHECK(stats.joint_frequency == 0.0);
    CHECK(stats.mean_atoms == 1.0);

    loading.p_overrides = {1.0};
    CHECK_THROWS_AS(load_sim(report, loading), ConfigError);
    loading.p_overrides = {1.0, 2.0};
    CHECK_THROWS_AS(load_sim(report, loading), ConfigError);
}

TEST_CASE("an empty report produces empty occupancy statistics") {
    TrapReport report;
    LoadingModel loading;
    loading.trials = 100;
    OccupancyStats stats = load_sim(report, loading);
    CHECK(stats.per_trap_frequency.empty());
    CHECK(stats.joint_frequency == 0.0);
    CHECK(stats.mean_atoms == 0.0);
}
