#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tinyzone/netspec.hpp"

// Physical memory planning for the secure/shared/normal split: model memory
// demand, page-table count, the three-region prioritized layout, and
// priority-based access decisions (TZASC-style region semantics).

namespace tinyzone {

struct MemCost {
    std::uint64_t m_s = 0;          // model parameter storage, bytes
    std::uint64_t f_gc = 0;         // forward-pass buffers, bytes
    std::uint64_t param_count = 0;  // parameter tensor entries
};

enum class AccessClass : std::uint8_t { normal = 0, shared = 1, secure = 2 };

const char* access_class_name(AccessClass a);

struct Region {
    int id = 0;
    std::uint64_t base = 0;
    std::uint64_t size = 0;
    AccessClass access = AccessClass::normal;
    int priority = 0;  // higher wins on overlap

    std::uint64_t end() const { return base + size; }
    bool contains(std::uint64_t addr) const { return addr >= base && addr < end(); }
};

struct MemoryPlan {
    std::uint64_t total_ram = 0;
    std::vector<Region> regions;
    std::uint64_t tee_ram = 0;
    std::uint64_t shm_size = 0;
    std::uint64_t num_pgt = 0;
};

enum class World : std::uint8_t { secure, non_secure };

enum class AccessReason : std::uint8_t {
    normal_any_world,    // normal region, both worlds may access
    shared_any_world,    // shared region, both worlds may access
    secure_world,        // secure region accessed from the secure world
    nonsecure_in_secure, // denied: non-secure access into the secure region
};

struct AccessVerdict {
    bool allowed = false;
    int deciding_region = -1;
    AccessReason reason = AccessReason::normal_any_world;
};

struct OverlapReport {
    int region_a = 0;  // lower region id of the pair
    int region_b = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;  // half-open
    int winner = 0;         // id of the higher-priority region
};

// Bytes needed to host the model entirely in secure memory: parameters plus
// forward buffers (input, every layer output, and the largest im2col scratch).
MemCost model_memory_cost(const NetworkSpec& net);

std::uint64_t tee_ram_size(const MemCost& cost, std::uint64_t tee_core_bytes);

// One page-table entry maps 2 MB, so floor(mb / 2) + 1 entries cover the range.
std::uint64_t num_page_tables(double tee_ram_mb);

// Secure region pinned to the top of RAM with maximum priority, shared region
// immediately below it, normal region 0 spanning everything.
MemoryPlan plan_layout(std::uint64_t total_ram, std::uint64_t tee_ram, std::uint64_t shm_size);

AccessVerdict check_access(const MemoryPlan& plan, std::uint64_t addr, World world);

std::vector<OverlapReport> detect_overlaps(const MemoryPlan& plan);

} // namespace tinyzone
