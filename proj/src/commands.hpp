#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace holotrap::cli {

// Flag overrides shared by the subcommands; unset fields keep config values.
struct Overrides {
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool has_iterations = false;
    int iterations = 0;
    std::string out;
};

// Each command returns a process exit code: 0 success, 1 runtime failure,
// 2 usage/config error. Errors are reported on stderr.
int cmd_design(const std::string& config_path, const Overrides& ov);
int cmd_evaluate(const std::string& config_path, const std::string& hologram_path,
                 const std::string& intensity_path, const Overrides& ov);
int cmd_loadsim(const std::string& config_path, const std::string& report_path,
                const Overrides& ov);
int cmd_export(const std::string& config_path, const Overrides& ov);

// Grid I/O shared by commands and tests.
void write_grid_csv(const Eigen::ArrayXXd& grid, const std::string& path);
Eigen::ArrayXXd read_grid_csv(const std::string& path);
void write_intensity_pgm(const Eigen::ArrayXXd& grid, const std::string& path);

}  // namespace holotrap::cli
