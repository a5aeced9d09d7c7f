#ifndef EHW_INTERMITTENT_HPP
#define EHW_INTERMITTENT_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ehw/exec.hpp"
#include "ehw/model.hpp"

namespace ehw {

struct PowerParams {
    std::int64_t e_budget = 0;    // energy units available per power cycle
    std::int64_t t_recharge = 0;  // ticks to refill the buffer from empty
    std::int64_t t_boot = 0;      // fixed power-up overhead, ticks
};

struct CostParams {
    std::int64_t e_mac = 0;
    std::int64_t t_mac = 0;
    std::int64_t e_nvm_rd = 0;  // per byte
    std::int64_t t_nvm_rd = 0;
    std::int64_t e_nvm_wr = 0;
    std::int64_t t_nvm_wr = 0;
    std::int64_t vm_capacity = 2048;  // bytes
};

// 16-byte progress record, little-endian fields, checksum = 16-bit sum of the
// preceding 14 bytes. Two alternating NVM slots make commits crash-atomic.
struct ProgressSnapshot {
    std::uint16_t version = 0;
    std::uint16_t layer_idx = 0;
    std::uint16_t i0 = 0, i1 = 0, i2 = 0;  // inter-tile loop indices, outermost first
    std::uint16_t committed_units = 0;

    bool operator==(const ProgressSnapshot&) const = default;
};

inline constexpr std::uint16_t kSnapshotMagic = 0xE7A5;
inline constexpr std::size_t kSnapshotBytes = 16;

std::array<std::uint8_t, kSnapshotBytes> pack_snapshot(const ProgressSnapshot& s);

// Returns the snapshot to resume from: the checksum-valid slot with the larger
// version, or the zero snapshot on first boot. Throws Error(State) when both
// slots hold damaged non-zero records (impossible under the commit protocol).
ProgressSnapshot recover(std::span<const std::uint8_t> snapshot_area);

struct FaultTrace {
    std::vector<std::int64_t> ticks;  // strictly increasing power-cut instants
};

FaultTrace make_fault_trace(std::uint64_t seed, std::int64_t mean_interval_ticks,
                            std::int64_t horizon_ticks);

// Simulated non-volatile memory: the double-buffered snapshot area plus one
// byte region per layer holding committed tile outputs (int16, little-endian).
struct NvmImage {
    std::array<std::uint8_t, 2 * kSnapshotBytes> snapshot_area{};
    std::vector<std::vector<std::uint8_t>> layer_output_bytes;
};

struct RecoveryEvent {
    std::int64_t tick = 0;
    ProgressSnapshot snapshot;
};

struct SimResult {
    QTensor output;
    std::int64_t latency_ticks = 0;
    std::int64_t cycles = 0;  // count of power-on intervals
    std::vector<std::int64_t> per_cycle_energy;
    std::int64_t preservations = 0;
    std::int64_t recoveries = 0;
    std::int64_t lost_units = 0;
    int argmax = 0;
    NvmImage nvm;
    std::vector<RecoveryEvent> recovery_log;
};

// Runs tiled inference across simulated power cycles with batch-S progress
// preservation and double-buffered snapshots. Throws Error(Infeasible) when
// the design cannot complete a unit plus its preservation within the budget.
SimResult simulate(const NetworkSpec& net, const QTensor& input,
                   const ExecutionDesign& design, const PowerParams& power,
                   const CostParams& costs, const FaultTrace& faults);

} // namespace ehw

#endif
