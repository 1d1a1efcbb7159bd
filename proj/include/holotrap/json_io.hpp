#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "holotrap/core.hpp"
#include "holotrap/device.hpp"
#include "holotrap/physics.hpp"
#include "holotrap/solver.hpp"
#include "holotrap/target.hpp"

namespace holotrap {

using nlohmann::json;

namespace detail {

// Configs fail loudly on typos: any key outside the schema is an error.
inline void require_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw ConfigError("config: '" + where + "' must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: key '") + key + "' has the wrong type");
    }
}

}  // namespace detail

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
    }
}

// Trap layout file: positions in micrometers, optional weights, optional
// deliberate zeroth-order weight, optional label.
inline TrapSpec load_trap_spec(const std::string& path) {
    const json j = load_json_file(path);
    detail::require_keys(j, path, {"traps", "zeroth_order_weight", "label"});
    TrapSpec spec;
    spec.label = detail::get_or<std::string>(j, "label", "");
    spec.zeroth_order_weight = detail::get_or<double>(j, "zeroth_order_weight", 0.0);
    if (!j.contains("traps") || !j.at("traps").is_array())
        throw ConfigError("config: '" + path + "' must contain a 'traps' array");
    for (const auto& t : j.at("traps")) {
        detail::require_keys(t, path + " traps[]", {"x_um", "y_um", "weight"});
        Trap trap;
        trap.x = detail::get_or<double>(t, "x_um", 0.0) * 1e-6;
        trap.y = detail::get_or<double>(t, "y_um", 0.0) * 1e-6;
        trap.weight = detail::get_or<double>(t, "weight", 1.0);
        spec.traps.push_back(trap);
    }
    spec.validate();
    return spec;
}

inline InitMode parse_init_mode(const std::string& s) {
    if (s == "seeded_random") return InitMode::seeded_random;
    if (s == "flat") return InitMode::flat;
    if (s == "quadratic") return InitMode::quadratic;
    throw ConfigError("config: unknown init_mode '" + s + "'");
}

inline UpdateRule parse_update_rule(const std::string& s) {
    if (s == "multiply") return UpdateRule::multiply;
    if (s == "replace") return UpdateRule::replace;
    throw ConfigError("config: unknown update_rule '" + s + "'");
}

// Complete run description: every length key carries its unit as a suffix;
// everything is stored in SI internally.
struct RunConfig {
    OpticalSystem system;
    DeviceModel device;
    BeamProfile beam;
    SolverConfig solver;
    LoadingModel loading;
    double gain = 1.0;
    double total_power = 10e-3;
    std::string trap_spec_path;
    TrapSpec traps;
    std::string output_dir = "out";
};

inline RunConfig load_run_config(const std::string& path) {
    const json j = load_json_file(path);
    detail::require_keys(j, path,
                         {"optical_system", "device", "beam", "solver", "loading",
                          "evaluate", "trap_spec", "output_dir"});
    RunConfig cfg;

    if (j.contains("optical_system")) {
        const json& s = j.at("optical_system");
        detail::require_keys(s, "optical_system",
                             {"wavelength_nm", "focal_length_mm", "pupil_diameter_mm",
                              "numerical_aperture", "grid_size", "slm_pitch_um"});
        cfg.system.wavelength = detail::get_or<double>(s, "wavelength_nm", 810.0) * 1e-9;
        cfg.system.focal_length =
            detail::get_or<double>(s, "focal_length_mm", 3.55) * 1e-3;
        cfg.system.pupil_diameter =
            detail::get_or<double>(s, "pupil_diameter_mm", 5.0) * 1e-3;
        cfg.system.numerical_aperture =
            detail::get_or<double>(s, "numerical_aperture", 0.7);
        cfg.system.grid_size = detail::get_or<int>(s, "grid_size", 512);
        if (s.contains("slm_pitch_um"))
            cfg.system.slm_pitch = s.at("slm_pitch_um").get<double>() * 1e-6;
    }

    if (j.contains("device")) {
        const json& d = j.at("device");
        detail::require_keys(d, "device",
                             {"pixels_per_side", "active_side_mm",
                              "max_phase_at_reference_pi", "reference_wavelength_nm",
                              "gray_levels", "max_intensity_mw_per_cm2",
                              "modulated_diameter_mm"});
        cfg.device.pixels_per_side = detail::get_or<int>(d, "pixels_per_side", 480);
        cfg.device.active_side = detail::get_or<double>(d, "active_side_mm", 20.0) * 1e-3;
        cfg.device.max_phase_at_reference =
            detail::get_or<double>(d, "max_phase_at_reference_pi", 2.1) * kPi;
        cfg.device.reference_wavelength =
            detail::get_or<double>(d, "reference_wavelength_nm", 633.0) * 1e-9;
        cfg.device.gray_levels = detail::get_or<int>(d, "gray_levels", 256);
        cfg.device.max_intensity =
            detail::get_or<double>(d, "max_intensity_mw_per_cm2", 200.0) * 10.0;
        cfg.device.modulated_diameter =
            detail::get_or<double>(d, "modulated_diameter_mm", 0.0) * 1e-3;
    }

    // The SLM pitch follows the device geometry unless given explicitly.
    if (!(j.contains("optical_system") &&
          j.at("optical_system").contains("slm_pitch_um")))
        cfg.system.slm_pitch = cfg.device.pixel_pitch();

    if (j.contains("beam")) {
        const json& b = j.at("beam");
        detail::require_keys(b, "beam",
                             {"waist_at_slm_mm", "power_mw", "polarization_ok"});
        cfg.beam.waist_at_slm = detail::get_or<double>(b, "waist_at_slm_mm", 2.3) * 1e-3;
        cfg.beam.power = detail::get_or<double>(b, "power_mw", 10.0) * 1e-3;
        cfg.beam.polarization_ok = detail::get_or<bool>(b, "polarization_ok", true);
    }

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        detail::require_keys(s, "solver",
                             {"iterations", "init_mode", "seed", "update_rule"});
        cfg.solver.iterations = detail::get_or<int>(s, "iterations", 4);
        cfg.solver.init_mode = parse_init_mode(
            detail::get_or<std::string>(s, "init_mode", "seeded_random"));
        cfg.solver.seed = detail::get_or<std::uint64_t>(s, "seed", 0);
        cfg.solver.update_rule = parse_update_rule(
            detail::get_or<std::string>(s, "update_rule", "multiply"));
    }

    if (j.contains("loading")) {
        const json& l = j.at("loading");
        detail::require_keys(l, "loading",
                             {"p_single", "threshold_power_per_trap_mw", "trials",
                              "seed", "p_overrides"});
        cfg.loading.p_single = detail::get_or<double>(l, "p_single", 0.5);
        cfg.loading.threshold_power_per_trap =
            detail::get_or<double>(l, "threshold_power_per_trap_mw", 4.0) * 1e-3;
        cfg.loading.trials = detail::get_or<long long>(l, "trials", 100000);
        cfg.loading.seed = detail::get_or<std::uint64_t>(l, "seed", 0);
        cfg.loading.p_overrides =
            detail::get_or<std::vector<double>>(l, "p_overrides", {});
    }

    if (j.contains("evaluate")) {
        const json& e = j.at("evaluate");
        detail::require_keys(e, "evaluate", {"total_power_mw", "gain"});
        cfg.total_power = detail::get_or<double>(e, "total_power_mw", 10.0) * 1e-3;
        cfg.gain = detail::get_or<double>(e, "gain", 1.0);
    }

    if (!j.contains("trap_spec"))
        throw ConfigError("config: 'trap_spec' (path to a trap layout file) is required");
    cfg.trap_spec_path = j.at("trap_spec").get<std::string>();
    std::filesystem::path p(cfg.trap_spec_path);
    if (p.is_relative())
        p = std::filesystem::path(path).parent_path() / p;
    if (!std::filesystem::exists(p))
        throw ConfigError("config: trap spec file does not exist: " + p.string());
    cfg.trap_spec_path = p.string();
    cfg.traps = load_trap_spec(cfg.trap_spec_path);

    cfg.output_dir = detail::get_or<std::string>(j, "output_dir", "out");

    cfg.system.validate();
    cfg.device.validate();
    cfg.beam.validate();
    cfg.solver.validate();
    cfg.loading.validate();
    return cfg;
}

inline json convergence_to_json(const ConvergenceReport& report,
                                const std::string& label) {
    json iters = json::array();
    for (const auto& it : report.iterations) {
        json e;
        e["iteration"] = it.iteration;
        e["trap_intensities"] = it.trap_intensities;
        e["zeroth_order_intensity"] = it.zeroth_order_intensity;
        e["efficiency"] = it.efficiency;
        e["uniformity_deviation"] = it.uniformity_deviation;
        e["focal_error"] = it.focal_error;
        iters.push_back(std::move(e));
    }
    json out;
    out["label"] = label;
    out["trap_count"] = report.trap_count;
    out["iterations"] = std::move(iters);
    return out;
}

inline json report_to_json(const TrapReport& report) {
    json traps = json::array();
    for (const auto& t : report.traps) {
        json e;
        e["x_um"] = t.x * 1e6;
        e["y_um"] = t.y * 1e6;
        e["peak_relative"] = t.peak_relative;
        e["waist_um"] = t.waist * 1e6;
        e["depth_relative"] = t.depth_relative;
        e["power_share"] = t.power_share;
        e["power_mw"] = t.power * 1e3;
        e["above_threshold"] = t.above_threshold;
        traps.push_back(std::move(e));
    }
    json out;
    out["label"] = report.label;
    out["total_power_mw"] = report.total_power * 1e3;
    out["efficiency"] = report.efficiency;
    out["uniformity_deviation"] = report.uniformity_deviation;
    out["zeroth_order_intensity"] = report.zeroth_order_intensity;
    out["traps"] = std::move(traps);
    return out;
}

inline TrapReport report_from_json(const json& j) {
    detail::require_keys(j, "report",
                         {"label", "total_power_mw", "efficiency",
                          "uniformity_deviation", "zeroth_order_intensity", "traps"});
    TrapReport report;
    report.label = detail::get_or<std::string>(j, "label", "");
    report.total_power = detail::get_or<double>(j, "total_power_mw", 0.0) * 1e-3;
    report.efficiency = detail::get_or<double>(j, "efficiency", 0.0);
    report.uniformity_deviation = detail::get_or<double>(j, "uniformity_deviation", 0.0);
    report.zeroth_order_intensity =
        detail::get_or<double>(j, "zeroth_order_intensity", 0.0);
    if (j.contains("traps"))
        for (const auto& t : j.at("traps")) {
            detail::require_keys(t, "report traps[]",
                                 {"x_um", "y_um", "peak_relative", "waist_um",
                                  "depth_relative", "power_share", "power_mw",
                                  "above_threshold"});
            TrapEntry e;
            e.x = detail::get_or<double>(t, "x_um", 0.0) * 1e-6;
            e.y = detail::get_or<double>(t, "y_um", 0.0) * 1e-6;
            e.peak_relative = detail::get_or<double>(t, "peak_relative", 0.0);
            e.waist = detail::get_or<double>(t, "waist_um", 0.0) * 1e-6;
            e.depth_relative = detail::get_or<double>(t, "depth_relative", 0.0);
            e.power_share = detail::get_or<double>(t, "power_share", 0.0);
            e.power = detail::get_or<double>(t, "power_mw", 0.0) * 1e-3;
            e.above_threshold = detail::get_or<bool>(t, "above_threshold", false);
            report.traps.push_back(e);
        }
    return report;
}

inline json occupancy_to_json(const OccupancyStats& stats, std::uint64_t seed) {
    json out;
    out["trials"] = stats.trials;
    out["seed"] = seed;
    out["per_trap_frequency"] = stats.per_trap_frequency;
    out["joint_frequency"] = stats.joint_frequency;
    out["mean_atoms"] = stats.mean_atoms;
    return out;
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

}  // namespace holotrap
