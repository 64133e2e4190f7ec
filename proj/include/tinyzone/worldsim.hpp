#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tinyzone/memlayout.hpp"
#include "tinyzone/secure_world.hpp"
#include "tinyzone/wire.hpp"

// REE<->TEE session lifecycle with a calibrated cost model. Two modes: the
// remap mode pays the page-table remap on every invoke; the optimized mode
// maps once when the session opens and each invoke costs only the fixed
// switch plus the shared-memory copy.

namespace tinyzone {

struct InvokeCostModel {
    double t_fixed_ms = 0.142;        // invoke with no remap
    double t_per_mb_ms = 0.1138840;   // remap cost per MB of secure memory
    double copy_bandwidth = 200.0e6;  // shared-memory copy rate, bytes/second
};

double invoke_cost_ms(const InvokeCostModel& model, double tee_ram_mb, bool remap,
                      std::uint64_t payload_bytes);

struct CostLedger {
    std::uint64_t invoke_count = 0;
    double total_invoke_ms = 0.0;
    std::uint64_t bytes_in = 0;
    std::uint64_t bytes_out = 0;
};

struct SessionOptions {
    bool remap_per_invoke = false;
    std::uint64_t device_key = 0;
    bool legacy_random_init = false;
};

class Session {
public:
    Session(MemoryPlan plan, InvokeCostModel cost_model, SessionOptions options);

    // Copies the payload through shared memory, charges the cost model, and
    // dispatches to the trusted application. Only successful invokes are
    // recorded in the ledger.
    std::vector<std::uint8_t> invoke(TaCommand cmd, std::span<const std::uint8_t> payload);

    // Destroys secure state; further invokes are protocol errors.
    CostLedger close();

    bool is_open() const { return open_; }
    const CostLedger& ledger() const { return ledger_; }
    const MemoryPlan& plan() const { return plan_; }
    const InvokeCostModel& cost_model() const { return cost_model_; }
    double tee_ram_mb() const { return static_cast<double>(plan_.tee_ram) / (1024.0 * 1024.0); }
    bool remap_per_invoke() const { return remap_per_invoke_; }

    // Test hooks: contents of the shared buffer and the TA state.
    std::span<const std::uint8_t> shared_buffer() const { return shm_; }
    const SecureWorld& secure_state() const { return ta_; }

private:
    MemoryPlan plan_;
    InvokeCostModel cost_model_;
    bool remap_per_invoke_;
    bool page_tables_mapped_;
    bool open_ = true;
    std::vector<std::uint8_t> shm_;
    CostLedger ledger_;
    SecureWorld ta_;
};

Session open_session(const MemoryPlan& plan, const InvokeCostModel& cost_model,
                     bool remap_per_invoke);
Session open_session(const MemoryPlan& plan, const InvokeCostModel& cost_model,
                     SessionOptions options);

} // namespace tinyzone
