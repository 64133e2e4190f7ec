#include "tinyzone/worldsim.hpp"

#include <algorithm>

namespace tinyzone {

double invoke_cost_ms(const InvokeCostModel& model, double tee_ram_mb, bool remap,
                      std::uint64_t payload_bytes) {
    double copy_ms = 1000.0 * static_cast<double>(payload_bytes) / model.copy_bandwidth;
    if (remap) return model.t_fixed_ms + model.t_per_mb_ms * tee_ram_mb + copy_ms;
    return model.t_fixed_ms + copy_ms;
}

Session::Session(MemoryPlan plan, InvokeCostModel cost_model, SessionOptions options)
    : plan_(std::move(plan)),
      cost_model_(cost_model),
      remap_per_invoke_(options.remap_per_invoke),
      page_tables_mapped_(!options.remap_per_invoke),
      shm_(plan_.shm_size, 0),
      ta_(options.device_key, options.legacy_random_init) {
    // Optimized mode maps the page tables once at open; remap mode pays per
    // invoke instead.
    if (!remap_per_invoke_) ledger_.total_invoke_ms += cost_model_.t_per_mb_ms * tee_ram_mb();
}

std::vector<std::uint8_t> Session::invoke(TaCommand cmd, std::span<const std::uint8_t> payload) {
    if (!open_) throw ProtocolError("invoke on closed session");
    if (payload.size() > shm_.size())
        throw CapacityError("invoke payload of " + std::to_string(payload.size()) +
                            " bytes exceeds shared memory of " + std::to_string(shm_.size()));

    // Normal world stages the payload in shared memory; the TA reads it there.
    std::copy(payload.begin(), payload.end(), shm_.begin());
    std::vector<std::uint8_t> response =
        ta_.handle(cmd, std::span<const std::uint8_t>(shm_.data(), payload.size()));

    if (response.size() > shm_.size())
        throw CapacityError("invoke response exceeds shared memory");
    std::copy(response.begin(), response.end(), shm_.begin());

    ledger_.invoke_count += 1;
    ledger_.total_invoke_ms += invoke_cost_ms(cost_model_, tee_ram_mb(), remap_per_invoke_, payload.size());
    ledger_.bytes_in += payload.size();
    ledger_.bytes_out += response.size();
    return response;
}

CostLedger Session::close() {
    if (!open_) throw ProtocolError("session already closed");
    ta_.destroy();
    std::fill(shm_.begin(), shm_.end(), std::uint8_t{0});
    page_tables_mapped_ = false;
    open_ = false;
    return ledger_;
}

Session open_session(const MemoryPlan& plan, const InvokeCostModel& cost_model,
                     bool remap_per_invoke) {
    return open_session(plan, cost_model, SessionOptions{remap_per_invoke, 0, false});
}

Session open_session(const MemoryPlan& plan, const InvokeCostModel& cost_model,
                     SessionOptions options) {
    return Session(plan, cost_model, options);
}

} // namespace tinyzone
