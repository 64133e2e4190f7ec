#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

// Shared helpers for the test suites. Tests run host-side, so the host math
// library is fair game here as the reference oracle.

namespace testutil {

inline double rel_err(double got, double want) {
    if (want == 0.0) return std::abs(got);
    return std::abs(got - want) / std::abs(want);
}

// Relative comparison with a small absolute floor for near-zero values.
inline bool close_rel(double got, double want, double tol, double abs_floor = 1e-9) {
    return std::abs(got - want) <= tol * std::max(std::abs(want), abs_floor / tol);
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("tinyzone_test_" + name);
    std::filesystem::create_directories(dir);
    return dir;
}

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout only
};

inline CommandResult run_command(const std::string& cmd) {
    CommandResult result;
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!pipe) return result;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) result.output.append(buf, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

} // namespace testutil
