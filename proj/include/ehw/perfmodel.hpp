#ifndef EHW_PERFMODEL_HPP
#define EHW_PERFMODEL_HPP

#include <cstdint>
#include <string>

#include "ehw/exec.hpp"
#include "ehw/intermittent.hpp"
#include "ehw/model.hpp"

namespace ehw {

struct PerfEstimate {
    std::int64_t latency_ticks = 0;
    std::int64_t cycles = 0;
    std::int64_t max_cycle_energy = 0;
    std::int64_t preservation_energy_total = 0;
    std::int64_t fetch_energy_total = 0;
    std::int64_t compute_energy_total = 0;
    std::int64_t vm_peak_bytes = 0;
    std::int64_t preservations = 0;
};

struct UnitCost {
    std::int64_t energy = 0;
    std::int64_t time = 0;
};

// Worst-case (unclamped-tile) cost of one atomic unit.
UnitCost unit_cost(const LayerSpec& layer, const Shape3& in_shape, const Shape3& out_shape,
                   const TileConfig& tile, const CostParams& costs);

// Cost of one batch preservation: S tile outputs plus the 16-byte snapshot.
UnitCost preservation_cost(const LayerSpec& layer, const Shape3& out_shape,
                           const TileConfig& tile, int batch_size, const CostParams& costs);

struct Feasibility {
    bool ok = true;
    std::string reason;  // names the violated constraint and layer
    int layer = -1;

    explicit operator bool() const { return ok; }
};

// A design is feasible iff every layer's recovery + worst-case unit + batch-of-1
// preservation fits the cycle budget, and its VM footprint fits vm_capacity.
Feasibility feasible(const NetworkSpec& net, const ExecutionDesign& design,
                     const PowerParams& power, const CostParams& costs);

// Fault-free analytic replay of the simulator's packing rule. Exact: equal to
// simulate(..., faults = {}) in latency_ticks, cycles and max_cycle_energy.
PerfEstimate predict(const NetworkSpec& net, const ExecutionDesign& design,
                     const PowerParams& power, const CostParams& costs);

} // namespace ehw

#endif
