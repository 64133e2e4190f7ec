#include "tinyzone/shmtuner.hpp"

#include "tinyzone/tinymath.hpp"

namespace tinyzone {

std::vector<SweepPoint> sweep_transfer(const SessionFactory& factory, const NetworkSpec& spec,
                                       const EncryptedBlob& blob,
                                       const std::vector<std::uint64_t>& unit_list) {
    if (unit_list.empty()) throw DomainError("sweep_transfer: empty unit list");
    for (std::size_t i = 0; i < unit_list.size(); ++i) {
        if (unit_list[i] == 0) throw DomainError("sweep_transfer: zero unit count");
        if (i > 0 && unit_list[i] <= unit_list[i - 1])
            throw DomainError("sweep_transfer: unit list must be strictly ascending");
    }

    std::vector<SweepPoint> points;
    points.reserve(unit_list.size());
    for (std::uint64_t units : unit_list) {
        std::uint64_t shm_bytes = units * kShmUnitBytes;
        Session session = factory(shm_bytes);
        build_remote_network(session, spec);
        double before_ms = session.ledger().total_invoke_ms;
        stream_weights(session, spec, blob, shm_bytes);
        double delay_s = (session.ledger().total_invoke_ms - before_ms) / 1000.0;
        points.push_back({units, delay_s});
        session.close();
    }
    return points;
}

double simulate_transfer_delay_s(const InvokeCostModel& model, std::uint64_t total_bytes,
                                 std::uint64_t chunk_bytes) {
    if (chunk_bytes == 0) throw DomainError("simulate_transfer_delay_s: zero chunk");
    std::uint64_t chunks = (total_bytes + chunk_bytes - 1) / chunk_bytes;
    return static_cast<double>(chunks) * model.t_fixed_ms / 1000.0 +
           static_cast<double>(total_bytes) / model.copy_bandwidth;
}

FitResult fit_power_law(const std::vector<SweepPoint>& points) {
    if (points.size() < 2) throw FitError("fit_power_law: need at least 2 points");

    double n = static_cast<double>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const SweepPoint& p : points) {
        if (p.shm_units == 0) throw FitError("fit_power_law: zero size");
        if (!(p.delay_s > 0.0)) throw FitError("fit_power_law: delays must be positive");
        double lx = t_log(static_cast<double>(p.shm_units));
        double ly = t_log(p.delay_s);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw FitError("fit_power_law: x values must be distinct");

    FitResult fit;
    fit.beta = (n * sxy - sx * sy) / denom;
    double intercept = (sy - fit.beta * sx) / n;
    fit.alpha = t_exp(intercept);
    if (fit.beta >= 0.0) throw FitError("fit_power_law: no decreasing trend (beta >= 0)");

    double mean_y = sy / n;
    double ss_tot = 0, ss_res = 0;
    for (const SweepPoint& p : points) {
        double lx = t_log(static_cast<double>(p.shm_units));
        double ly = t_log(p.delay_s);
        double fy = intercept + fit.beta * lx;
        ss_tot += (ly - mean_y) * (ly - mean_y);
        ss_res += (ly - fy) * (ly - fy);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

OptimalShm optimal_shm_size(const FitResult& fit, double threshold) {
    if (!(fit.beta < 0.0)) throw DomainError("optimal_shm_size: beta must be negative");
    if (!(threshold < 0.0)) throw DomainError("optimal_shm_size: threshold must be negative");
    if (!(fit.alpha > 0.0)) throw DomainError("optimal_shm_size: alpha must be positive");

    // d/dx (alpha x^beta) = alpha*beta*x^(beta-1) = threshold
    double ratio = threshold / (fit.alpha * fit.beta);
    double x_exact = t_pow(ratio, 1.0 / (fit.beta - 1.0));

    OptimalShm out;
    out.units_exact = x_exact;
    double rounded = t_floor(x_exact + 0.5);
    out.units = rounded < 1.0 ? 1 : static_cast<std::uint64_t>(rounded);
    out.bytes = out.units * kShmUnitBytes;
    out.predicted_delay_s = fit.alpha * t_pow(static_cast<double>(out.units), fit.beta);
    return out;
}

std::vector<std::uint64_t> default_unit_sweep() {
    std::vector<std::uint64_t> units;
    for (std::uint64_t u = 1; u <= 4096; u *= 2) units.push_back(u);
    return units;
}

} // namespace tinyzone
