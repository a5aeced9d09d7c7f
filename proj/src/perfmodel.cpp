#include "ehw/perfmodel.hpp"

#include <algorithm>

namespace ehw {

namespace {

constexpr std::int64_t kSnapshotWriteBytes = 16;

struct WorstCaseUnit {
    std::int64_t fetch_bytes = 0;
    std::int64_t macs = 0;
    std::int64_t out_bytes = 0;
};

WorstCaseUnit worst_case_unit(const LayerSpec& layer, const Shape3& in_shape,
                              const TileConfig& tile) {
    WorstCaseUnit u;
    switch (layer.kind) {
    case LayerKind::Conv2D: {
        std::int64_t halo = static_cast<std::int64_t>(layer.s * (tile.t_h - 1) + layer.k) *
                            (layer.s * (tile.t_w - 1) + layer.k) * layer.c_in;
        std::int64_t w = static_cast<std::int64_t>(tile.t_cout) * layer.c_in * layer.k * layer.k;
        u.fetch_bytes = (halo + w) * 2;
        u.macs = static_cast<std::int64_t>(tile.t_cout) * tile.t_h * tile.t_w * layer.k *
                 layer.k * layer.c_in;
        u.out_bytes = static_cast<std::int64_t>(tile.t_cout) * tile.t_h * tile.t_w * 2;
        break;
    }
    case LayerKind::FullyConnected: {
        u.fetch_bytes = (static_cast<std::int64_t>(layer.n_in) +
                         static_cast<std::int64_t>(tile.t_cout) * layer.n_in) * 2;
        u.macs = static_cast<std::int64_t>(tile.t_cout) * layer.n_in;
        u.out_bytes = static_cast<std::int64_t>(tile.t_cout) * 2;
        break;
    }
    case LayerKind::MaxPool2D: {
        u.fetch_bytes = static_cast<std::int64_t>(in_shape.c) * in_shape.h * in_shape.w * 2;
        u.macs = 0;
        Shape3 out = conv_output_shape(layer, in_shape);
        u.out_bytes = static_cast<std::int64_t>(out.c) * out.h * out.w * 2;
        break;
    }
    }
    return u;
}

} // namespace

UnitCost unit_cost(const LayerSpec& layer, const Shape3& in_shape, const Shape3& out_shape,
                   const TileConfig& tile, const CostParams& costs) {
    (void)out_shape;
    WorstCaseUnit u = worst_case_unit(layer, in_shape, tile);
    UnitCost c;
    c.energy = costs.e_nvm_rd * u.fetch_bytes + costs.e_mac * u.macs;
    c.time = costs.t_nvm_rd * u.fetch_bytes + costs.t_mac * u.macs;
    return c;
}

UnitCost preservation_cost(const LayerSpec& layer, const Shape3& out_shape,
                           const TileConfig& tile, int batch_size, const CostParams& costs) {
    if (batch_size < 1) throw Error(ErrorKind::Parameter, "batch size must be >= 1");
    std::int64_t out_bytes;
    if (layer.kind == LayerKind::MaxPool2D) {
        // Single untiled unit; the batch never holds more than one pool output.
        out_bytes = static_cast<std::int64_t>(out_shape.c) * out_shape.h * out_shape.w * 2;
    } else {
        std::int64_t per_unit = layer.kind == LayerKind::FullyConnected
                                    ? static_cast<std::int64_t>(tile.t_cout) * 2
                                    : static_cast<std::int64_t>(tile.t_cout) * tile.t_h *
                                          tile.t_w * 2;
        out_bytes = static_cast<std::int64_t>(batch_size) * per_unit;
    }
    UnitCost c;
    c.energy = costs.e_nvm_wr * (out_bytes + kSnapshotWriteBytes);
    c.time = costs.t_nvm_wr * (out_bytes + kSnapshotWriteBytes);
    return c;
}

Feasibility feasible(const NetworkSpec& net, const ExecutionDesign& design,
                     const PowerParams& power, const CostParams& costs) {
    validate_design(net, design);
    if (power.e_budget <= 0) return {false, "energy budget must be positive", -1};

    auto shapes = layer_shapes(net);
    std::int64_t e_recovery = costs.e_nvm_rd * kSnapshotWriteBytes;

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const LayerSpec& l = net.layers[li];
        const TileConfig& tile = design.tiles[li];
        UnitCost uc = unit_cost(l, shapes[li], shapes[li + 1], tile, costs);
        UnitCost pres1 = preservation_cost(l, shapes[li + 1], tile, 1, costs);
        std::int64_t need = e_recovery + uc.energy + pres1.energy;
        if (need > power.e_budget) {
            return {false,
                    "energy-infeasible at layer " + std::to_string(li) + " (cycle needs " +
                        std::to_string(need) + " eu, budget " +
                        std::to_string(power.e_budget) + ")",
                    static_cast<int>(li)};
        }
        VMFootprint fp = tile_footprint(l, shapes[li], shapes[li + 1], tile, design.batch_size);
        if (fp.total_bytes > costs.vm_capacity) {
            return {false,
                    "vm-infeasible at layer " + std::to_string(li) + " (footprint " +
                        std::to_string(fp.total_bytes) + " B, capacity " +
                        std::to_string(costs.vm_capacity) + " B)",
                    static_cast<int>(li)};
        }
    }
    return {};
}

PerfEstimate predict(const NetworkSpec& net, const ExecutionDesign& design,
                     const PowerParams& power, const CostParams& costs) {
    Feasibility feas = feasible(net, design, power, costs);
    if (!feas.ok) throw Error(ErrorKind::Infeasible, feas.reason);

    auto sched = unit_schedule(net, design);
    PerfEstimate est;

    const std::int64_t e_recovery = costs.e_nvm_rd * kSnapshotWriteBytes;
    const std::int64_t t_recovery = costs.t_nvm_rd * kSnapshotWriteBytes;

    std::int64_t on_ticks = 0;
    std::int64_t energy = power.e_budget - e_recovery;
    std::int64_t cycle_energy = e_recovery;
    est.cycles = 1;
    on_ticks += power.t_boot + t_recovery;

    std::int64_t pending_bytes = 0;
    int pending_count = 0;
    std::int64_t vm_peak = 0;

    auto start_cycle = [&]() {
        est.max_cycle_energy = std::max(est.max_cycle_energy, cycle_energy);
        est.cycles++;
        energy = power.e_budget - e_recovery;
        cycle_energy = e_recovery;
        on_ticks += power.t_boot + t_recovery;
    };
    auto preserve = [&]() {
        std::int64_t bytes = pending_bytes + kSnapshotWriteBytes;
        energy -= costs.e_nvm_wr * bytes;
        cycle_energy += costs.e_nvm_wr * bytes;
        on_ticks += costs.t_nvm_wr * bytes;
        est.preservation_energy_total += costs.e_nvm_wr * bytes;
        est.preservations++;
        pending_bytes = 0;
        pending_count = 0;
    };

    for (const auto& layer_units : sched) {
        for (const UnitGeom& u : layer_units) {
            std::int64_t e_unit = costs.e_nvm_rd * u.fetch_bytes + costs.e_mac * u.macs;
            std::int64_t t_unit = costs.t_nvm_rd * u.fetch_bytes + costs.t_mac * u.macs;
            std::int64_t e_pres = costs.e_nvm_wr * (pending_bytes + u.out_bytes +
                                                    kSnapshotWriteBytes);
            if (energy < e_unit + e_pres) {
                if (pending_count > 0) preserve();
                start_cycle();
            }
            energy -= e_unit;
            cycle_energy += e_unit;
            on_ticks += t_unit;
            est.fetch_energy_total += costs.e_nvm_rd * u.fetch_bytes;
            est.compute_energy_total += costs.e_mac * u.macs;
            pending_bytes += u.out_bytes;
            pending_count++;

            // Working set while the unit runs: fetched tile + batched outputs
            // + snapshot staging.
            vm_peak = std::max(vm_peak, u.fetch_bytes + pending_bytes + 16);

            if (pending_count == design.batch_size || u.last_of_layer) preserve();
        }
    }
    est.max_cycle_energy = std::max(est.max_cycle_energy, cycle_energy);
    est.vm_peak_bytes = vm_peak;
    est.latency_ticks = on_ticks + (est.cycles - 1) * power.t_recharge;
    return est;
}

} // namespace ehw
