#include "tinyzone/memlayout.hpp"

#include <algorithm>

namespace tinyzone {

const char* access_class_name(AccessClass a) {
    switch (a) {
        case AccessClass::normal: return "normal";
        case AccessClass::shared: return "shared";
        case AccessClass::secure: return "secure";
    }
    return "?";
}

MemCost model_memory_cost(const NetworkSpec& net) {
    auto dims = resolve_shapes(net);  // throws ShapeError on unresolved shapes

    MemCost cost;
    std::uint64_t max_workspace = 0;
    std::uint64_t output_bytes = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        cost.param_count += layer_param_count(net.layers[i], dims[i].in_c, dims[i].in_h, dims[i].in_w);
        output_bytes += 4ull * dims[i].out_c * dims[i].out_h * dims[i].out_w;
        max_workspace = std::max<std::uint64_t>(max_workspace, 4 * dims[i].workspace_floats);
    }
    cost.m_s = 4 * cost.param_count;
    std::uint64_t input_bytes = 4ull * net.c * net.h * net.w;
    cost.f_gc = input_bytes + output_bytes + max_workspace;
    return cost;
}

std::uint64_t tee_ram_size(const MemCost& cost, std::uint64_t tee_core_bytes) {
    return cost.m_s + cost.f_gc + tee_core_bytes;
}

std::uint64_t num_page_tables(double tee_ram_mb) {
    if (!(tee_ram_mb > 0.0)) throw DomainError("num_page_tables: size must be positive");
    return static_cast<std::uint64_t>(tee_ram_mb / 2.0) + 1;
}

MemoryPlan plan_layout(std::uint64_t total_ram, std::uint64_t tee_ram, std::uint64_t shm_size) {
    if (total_ram == 0 || tee_ram == 0 || shm_size == 0)
        throw DomainError("plan_layout: sizes must be non-zero");
    if (tee_ram + shm_size > total_ram || tee_ram + shm_size < tee_ram)
        throw CapacityError("plan_layout: secure + shared exceeds total RAM");

    MemoryPlan plan;
    plan.total_ram = total_ram;
    plan.tee_ram = tee_ram;
    plan.shm_size = shm_size;
    plan.num_pgt = num_page_tables(static_cast<double>(tee_ram) / (1024.0 * 1024.0));

    std::uint64_t secure_base = total_ram - tee_ram;
    plan.regions = {
        {0, 0, total_ram, AccessClass::normal, 0},
        {1, secure_base - shm_size, shm_size, AccessClass::shared, 1},
        {2, secure_base, tee_ram, AccessClass::secure, 2},
    };
    return plan;
}

AccessVerdict check_access(const MemoryPlan& plan, std::uint64_t addr, World world) {
    if (addr >= plan.total_ram) throw AddressError("check_access: address beyond total RAM");

    const Region* deciding = nullptr;
    for (const Region& r : plan.regions) {
        if (!r.contains(addr)) continue;
        if (deciding == nullptr || r.priority > deciding->priority) deciding = &r;
    }
    if (deciding == nullptr) throw AddressError("check_access: address not covered by any region");

    AccessVerdict v;
    v.deciding_region = deciding->id;
    switch (deciding->access) {
        case AccessClass::secure:
            if (world == World::secure) {
                v.allowed = true;
                v.reason = AccessReason::secure_world;
            } else {
                v.allowed = false;
                v.reason = AccessReason::nonsecure_in_secure;
            }
            break;
        case AccessClass::shared:
            v.allowed = true;
            v.reason = AccessReason::shared_any_world;
            break;
        case AccessClass::normal:
            // The secure world may read normal memory; both worlds pass.
            v.allowed = true;
            v.reason = AccessReason::normal_any_world;
            break;
    }
    return v;
}

std::vector<OverlapReport> detect_overlaps(const MemoryPlan& plan) {
    std::vector<OverlapReport> out;
    for (std::size_t i = 0; i < plan.regions.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.regions.size(); ++j) {
            const Region& a = plan.regions[i];
            const Region& b = plan.regions[j];
            std::uint64_t begin = std::max(a.base, b.base);
            std::uint64_t end = std::min(a.end(), b.end());
            if (begin >= end) continue;
            OverlapReport rep;
            rep.region_a = std::min(a.id, b.id);
            rep.region_b = std::max(a.id, b.id);
            rep.begin = begin;
            rep.end = end;
            rep.winner = (a.priority > b.priority) ? a.id : b.id;
            out.push_back(rep);
        }
    }
    std::sort(out.begin(), out.end(), [](const OverlapReport& x, const OverlapReport& y) {
        return std::pair(x.region_a, x.region_b) < std::pair(y.region_a, y.region_b);
    });
    return out;
}

} // namespace tinyzone
