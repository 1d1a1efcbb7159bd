#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "holotrap/device.hpp"
#include "holotrap/fourier.hpp"
#include "holotrap/json_io.hpp"
#include "holotrap/physics.hpp"
#include "holotrap/solver.hpp"

namespace holotrap::cli {
namespace {

namespace fs = std::filesystem;

RunConfig load_with_overrides(const std::string& config_path, const Overrides& ov) {
    RunConfig cfg = load_run_config(config_path);
    if (ov.has_seed) cfg.solver.seed = ov.seed;
    if (ov.has_iterations) cfg.solver.iterations = ov.iterations;
    if (!ov.out.empty()) cfg.output_dir = ov.out;
    cfg.solver.validate();
    return cfg;
}

Eigen::ArrayXXd device_focal_intensity(const PhaseMaskd& mask, const RunConfig& cfg) {
    ComplexFieldd slm =
        apply_device(mask, cfg.device, cfg.beam, cfg.system, cfg.gain);
    ComplexFieldd focal = propagate_to_focal(slm, cfg.system);
    return focal.samples.array().abs2();
}

// Runs `body`, mapping exceptions to the documented exit codes.
template <class Fn>
int guarded(Fn&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

void write_grid_csv(const Eigen::ArrayXXd& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char buf[48];
    const int rows = static_cast<int>(grid.rows());
    const int cols = static_cast<int>(grid.cols());
    std::string line;
    for (int i = 0; i < rows; ++i) {
        line.clear();
        for (int j = 0; j < cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.12g", grid(i, j));
            if (j) line += ',';
            line += buf;
        }
        line += '\n';
        out << line;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Eigen::ArrayXXd read_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open intensity map: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("intensity map is empty: " + path);
    const size_t cols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != cols)
            throw ConfigError("intensity map has ragged rows: " + path);
    Eigen::ArrayXXd grid(static_cast<int>(rows.size()), static_cast<int>(cols));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols; ++j)
            grid(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return grid;
}

void write_intensity_pgm(const Eigen::ArrayXXd& grid, const std::string& path) {
    const int rows = static_cast<int>(grid.rows());
    const int cols = static_cast<int>(grid.cols());
    const double peak = grid.maxCoeff();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "P5\n" << cols << " " << rows << "\n255\n";
    std::string row(static_cast<size_t>(cols), '\0');
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double v = peak > 0 ? grid(i, j) / peak : 0.0;
            int g = static_cast<int>(std::floor(v * 255.0 + 0.5));
            g = std::min(std::max(g, 0), 255);
            row[static_cast<size_t>(j)] = static_cast<char>(static_cast<unsigned char>(g));
        }
        out.write(row.data(), cols);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

int cmd_design(const std::string& config_path, const Overrides& ov) {
    return guarded([&]() {
        RunConfig cfg = load_with_overrides(config_path, ov);
        fs::create_directories(cfg.output_dir);

        SolveResult result = solve(cfg.traps, cfg.system, cfg.solver);

        const std::string holo = (fs::path(cfg.output_dir) / "hologram.pgm").string();
        const std::string ipgm = (fs::path(cfg.output_dir) / "intensity.pgm").string();
        const std::string icsv = (fs::path(cfg.output_dir) / "intensity.csv").string();
        const std::string conv = (fs::path(cfg.output_dir) / "convergence.json").string();

        export_hologram(result.mask, holo, cfg.device);
        const Eigen::ArrayXXd intensity = device_focal_intensity(result.mask, cfg);
        write_intensity_pgm(intensity, ipgm);
        write_grid_csv(intensity, icsv);
        write_json_file(convergence_to_json(result.report, cfg.traps.label), conv);

        const IterationStats& last = result.report.iterations.back();
        std::printf("iteration %d: efficiency %.4f uniformity %.4f focal_error %.4f\n",
                    last.iteration, last.efficiency, last.uniformity_deviation,
                    last.focal_error);
        for (const std::string& p : {holo, ipgm, icsv, conv})
            std::printf("wrote %s\n", p.c_str());
        return 0;
    });
}

int cmd_evaluate(const std::string& config_path, const std::string& hologram_path,
                 const std::string& intensity_path, const Overrides& ov) {
    return guarded([&]() {
        if (hologram_path.empty() == intensity_path.empty())
            throw ConfigError(
                "evaluate: exactly one of --hologram or --intensity is required");
        RunConfig cfg = load_with_overrides(config_path, ov);
        fs::create_directories(cfg.output_dir);

        Eigen::ArrayXXd intensity;
        if (!hologram_path.empty()) {
            PhaseMaskd mask = import_hologram(hologram_path, cfg.system.slm_pitch);
            if (mask.size() > cfg.system.grid_size)
                throw ConfigError("evaluate: hologram is larger than the system grid");
            if (mask.size() < cfg.system.grid_size)
                mask = embed_center(mask, cfg.system.grid_size);
            intensity = device_focal_intensity(mask, cfg);
        } else {
            intensity = read_grid_csv(intensity_path);
            if (intensity.rows() != cfg.system.grid_size ||
                intensity.cols() != cfg.system.grid_size)
                throw ConfigError("evaluate: intensity map does not match the system grid");
        }

        TrapReport report =
            evaluate(intensity, cfg.traps, cfg.system, cfg.loading, cfg.total_power);
        const std::string rpath = (fs::path(cfg.output_dir) / "report.json").string();
        write_json_file(report_to_json(report), rpath);

        for (size_t t = 0; t < report.traps.size(); ++t) {
            const TrapEntry& e = report.traps[t];
            std::printf(
                "trap %zu: x %+.3f um y %+.3f um power %.3f mW waist %.3f um %s\n",
                t + 1, e.x * 1e6, e.y * 1e6, e.power * 1e3, e.waist * 1e6,
                e.above_threshold ? "above-threshold" : "below-threshold");
        }
        std::printf("zeroth-order share %.4f efficiency %.4f uniformity %.4f\n",
                    report.zeroth_order_intensity, report.efficiency,
                    report.uniformity_deviation);
        std::printf("wrote %s\n", rpath.c_str());
        return 0;
    });
}

int cmd_loadsim(const std::string& config_path, const std::string& report_path,
                const Overrides& ov) {
    return guarded([&]() {
        if (report_path.empty())
            throw ConfigError("loadsim: --report is required");
        RunConfig cfg = load_with_overrides(config_path, ov);
        if (ov.has_seed) cfg.loading.seed = ov.seed;
        fs::create_directories(cfg.output_dir);

        TrapReport report = report_from_json(load_json_file(report_path));
        OccupancyStats stats = load_sim(report, cfg.loading);

        const std::string spath =
            (fs::path(cfg.output_dir) / "loading_stats.json").string();
        write_json_file(occupancy_to_json(stats, cfg.loading.seed), spath);

        std::printf("trap  occupancy\n");
        for (size_t t = 0; t < stats.per_trap_frequency.size(); ++t)
            std::printf("%-5zu %.4f\n", t + 1, stats.per_trap_frequency[t]);
        std::printf("joint %.4f  mean atoms %.4f  trials %lld\n",
                    stats.joint_frequency, stats.mean_atoms, stats.trials);
        std::printf("wrote %s\n", spath.c_str());
        return 0;
    });
}

int cmd_export(const std::string& config_path, const Overrides& ov) {
    return guarded([&]() {
        RunConfig cfg = load_with_overrides(config_path, ov);
        fs::create_directories(cfg.output_dir);
        SolveResult result = solve(cfg.traps, cfg.system, cfg.solver);
        const std::string holo = (fs::path(cfg.output_dir) / "hologram.pgm").string();
        export_hologram(result.mask, holo, cfg.device);
        std::printf("wrote %s\n", holo.c_str());
        return 0;
    });
}

}  // namespace holotrap::cli
