#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tinyzone/client.hpp"
#include "tinyzone/worldsim.hpp"

// Shared-memory size tuning: sweep transfer delay over candidate sizes, fit
// the power law y = alpha * x^beta on log-log axes, and pick the size where
// the fitted delay's derivative reaches the balance threshold.

namespace tinyzone {

constexpr std::uint64_t kShmUnitBytes = 4096;  // sizes are counted in 4 KB units
constexpr double kDefaultDerivativeThreshold = -0.01;  // seconds per unit

struct SweepPoint {
    std::uint64_t shm_units = 0;
    double delay_s = 0.0;
};

struct FitResult {
    double alpha = 0.0;
    double beta = 0.0;
    double r_squared = 0.0;
};

struct OptimalShm {
    std::uint64_t units = 0;
    std::uint64_t bytes = 0;
    double units_exact = 0.0;        // analytic solution before rounding
    double predicted_delay_s = 0.0;  // fitted delay at the chosen size
};

using SessionFactory = std::function<Session(std::uint64_t shm_bytes)>;

// Runs a full build + weight stream per candidate size and records the
// simulated transfer delay (the one-time open/build charges are excluded).
std::vector<SweepPoint> sweep_transfer(const SessionFactory& factory, const NetworkSpec& spec,
                                       const EncryptedBlob& blob,
                                       const std::vector<std::uint64_t>& unit_list);

// Closed-form delay for a chunked transfer under the cost model; used by the
// CLI when no live session is wanted.
double simulate_transfer_delay_s(const InvokeCostModel& model, std::uint64_t total_bytes,
                                 std::uint64_t chunk_bytes);

// Least squares on (ln x, ln y); requires >= 2 distinct x, positive y, and a
// decreasing trend (beta < 0).
FitResult fit_power_law(const std::vector<SweepPoint>& points);

// Solves alpha*beta*x^(beta-1) = threshold, rounds to the nearest whole unit
// (clamped to >= 1), and reports the fitted delay at that size.
OptimalShm optimal_shm_size(const FitResult& fit, double threshold = kDefaultDerivativeThreshold);

std::vector<std::uint64_t> default_unit_sweep();  // {1, 2, 4, ..., 4096}

} // namespace tinyzone
