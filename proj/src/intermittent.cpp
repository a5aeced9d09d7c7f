#include "ehw/intermittent.hpp"

#include <algorithm>

#include "ehw/perfmodel.hpp"

namespace ehw {

namespace {

std::uint16_t slot_checksum(std::span<const std::uint8_t> bytes14) {
    std::uint32_t sum = 0;
    for (std::uint8_t b : bytes14) sum += b;
    return static_cast<std::uint16_t>(sum & 0xFFFF);
}

void put_u16(std::uint8_t* dst, std::uint16_t v) {
    dst[0] = static_cast<std::uint8_t>(v & 0xFF);
    dst[1] = static_cast<std::uint8_t>((v >> 8) & 0xFF);
}

std::uint16_t get_u16(const std::uint8_t* src) {
    return static_cast<std::uint16_t>(src[0] | (src[1] << 8));
}

enum class SlotState { Fresh, Valid, Corrupt };

SlotState classify_slot(std::span<const std::uint8_t> slot, ProgressSnapshot& out) {
    bool all_zero = std::all_of(slot.begin(), slot.end(), [](std::uint8_t b) { return b == 0; });
    if (all_zero) return SlotState::Fresh;
    if (get_u16(slot.data()) != kSnapshotMagic) return SlotState::Corrupt;
    if (slot_checksum(slot.subspan(0, 14)) != get_u16(slot.data() + 14)) {
        return SlotState::Corrupt;
    }
    out.version = get_u16(slot.data() + 2);
    out.layer_idx = get_u16(slot.data() + 4);
    out.i0 = get_u16(slot.data() + 6);
    out.i1 = get_u16(slot.data() + 8);
    out.i2 = get_u16(slot.data() + 10);
    out.committed_units = get_u16(slot.data() + 12);
    return SlotState::Valid;
}

} // namespace

std::array<std::uint8_t, kSnapshotBytes> pack_snapshot(const ProgressSnapshot& s) {
    std::array<std::uint8_t, kSnapshotBytes> out{};
    put_u16(out.data() + 0, kSnapshotMagic);
    put_u16(out.data() + 2, s.version);
    put_u16(out.data() + 4, s.layer_idx);
    put_u16(out.data() + 6, s.i0);
    put_u16(out.data() + 8, s.i1);
    put_u16(out.data() + 10, s.i2);
    put_u16(out.data() + 12, s.committed_units);
    put_u16(out.data() + 14, slot_checksum({out.data(), 14}));
    return out;
}

ProgressSnapshot recover(std::span<const std::uint8_t> snapshot_area) {
    if (snapshot_area.size() != 2 * kSnapshotBytes) {
        throw Error(ErrorKind::Parameter, "snapshot area must be 32 bytes");
    }
    ProgressSnapshot a, b;
    SlotState sa = classify_slot(snapshot_area.subspan(0, kSnapshotBytes), a);
    SlotState sb = classify_slot(snapshot_area.subspan(kSnapshotBytes, kSnapshotBytes), b);

    if (sa == SlotState::Corrupt && sb == SlotState::Corrupt) {
        throw Error(ErrorKind::State, "both snapshot slots are damaged");
    }
    if (sa == SlotState::Valid && sb == SlotState::Valid) {
        return b.version > a.version ? b : a;
    }
    if (sa == SlotState::Valid) return a;
    if (sb == SlotState::Valid) return b;
    return ProgressSnapshot{};  // first boot
}

FaultTrace make_fault_trace(std::uint64_t seed, std::int64_t mean_interval_ticks,
                            std::int64_t horizon_ticks) {
    if (mean_interval_ticks <= 0) {
        throw Error(ErrorKind::Parameter, "mean fault interval must be positive");
    }
    SplitMix64 rng(seed);
    FaultTrace trace;
    std::int64_t tick = 0;
    std::uint64_t m = static_cast<std::uint64_t>(mean_interval_ticks);
    while (true) {
        // Geometric gap with mean m via Bernoulli(1/m) trials; integer-only so
        // the sequence is identical on every platform.
        std::int64_t gap = 1;
        while (rng.next() % m != 0) ++gap;
        tick += gap;
        if (tick >= horizon_ticks) break;
        trace.ticks.push_back(tick);
    }
    return trace;
}

namespace {

struct FlatUnit {
    UnitGeom geom;
    std::int64_t e_unit;
    std::int64_t t_unit;
};

struct PendingUnit {
    std::size_t unit_index;           // global index
    std::vector<std::int16_t> data;   // row-major tile region
};

// Serializes one pending unit's elements in region row-major order.
std::vector<std::int16_t> gather_region(const QTensor& t, const UnitGeom& u) {
    std::vector<std::int16_t> out;
    out.reserve(static_cast<std::size_t>(u.tc) * u.th * u.tw);
    for (int c = u.c0; c < u.c0 + u.tc; ++c)
        for (int h = u.h0; h < u.h0 + u.th; ++h)
            for (int w = u.w0; w < u.w0 + u.tw; ++w) out.push_back(t.at(c, h, w));
    return out;
}

class Simulator {
public:
    Simulator(const NetworkSpec& net, const QTensor& input, const ExecutionDesign& design,
              const PowerParams& power, const CostParams& costs, const FaultTrace& faults)
        : net_(net), input_(input), power_(power), costs_(costs),
          faults_(faults.ticks), computer_(net) {
        auto feas = feasible(net, design, power, costs);
        if (!feas.ok) throw Error(ErrorKind::Infeasible, feas.reason);
        if (input.channels != net.input_shape.c || input.height != net.input_shape.h ||
            input.width != net.input_shape.w || input.frac_bits != net.frac_bits) {
            throw Error(ErrorKind::Input, "input tensor does not match network input");
        }
        for (std::size_t i = 1; i < faults_.size(); ++i) {
            if (faults_[i] <= faults_[i - 1]) {
                throw Error(ErrorKind::Parameter, "fault trace must be strictly increasing");
            }
        }
        batch_size_ = design.batch_size;

        auto sched = unit_schedule(net, design);
        layer_unit_start_.resize(sched.size());
        layer_block_dims_.resize(sched.size());
        for (std::size_t li = 0; li < sched.size(); ++li) {
            layer_unit_start_[li] = units_.size();
            int d0 = 0, d1 = 0, d2 = 0;
            for (const auto& g : sched[li]) {
                d0 = std::max(d0, g.block[0] + 1);
                d1 = std::max(d1, g.block[1] + 1);
                d2 = std::max(d2, g.block[2] + 1);
                FlatUnit u;
                u.geom = g;
                u.e_unit = costs.e_nvm_rd * g.fetch_bytes + costs.e_mac * g.macs;
                u.t_unit = costs.t_nvm_rd * g.fetch_bytes + costs.t_mac * g.macs;
                units_.push_back(std::move(u));
            }
            layer_block_dims_[li] = {d0, d1, d2};
        }
        if (units_.size() > 65535) {
            throw Error(ErrorKind::Parameter,
                        "too many atomic units for 16-bit progress counters");
        }

        const auto& shapes = computer_.shapes();
        result_.nvm.layer_output_bytes.resize(net.layers.size());
        vm_out_.reserve(net.layers.size());
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            const Shape3& s = shapes[li + 1];
            result_.nvm.layer_output_bytes[li].assign(
                static_cast<std::size_t>(s.c) * s.h * s.w * 2, 0);
            vm_out_.emplace_back(s.c, s.h, s.w, net.frac_bits);
        }
    }

    SimResult run() {
        while (!done_) {
            run_cycle();
            if (!done_) {
                result_.per_cycle_energy.push_back(cycle_energy_);
                now_ += power_.t_recharge;  // off interval
            }
        }
        result_.per_cycle_energy.push_back(cycle_energy_);
        result_.latency_ticks = now_;
        result_.output = decode_layer_output(static_cast<int>(net_.layers.size()) - 1);
        result_.argmax = classify(result_.output);
        return std::move(result_);
    }

private:
    // --- clock / fault machinery -------------------------------------------

    // Runs `count` micro-ops of (t_per, e_per) each. Returns false when a
    // fault cuts power mid-phase; `completed` holds the finished op count and
    // now_ sits at the fault tick.
    bool run_phase(std::int64_t count, std::int64_t t_per, std::int64_t e_per,
                   std::int64_t& completed) {
        completed = count;
        std::int64_t end = now_ + count * t_per;
        if (fault_idx_ < faults_.size()) {
            std::int64_t f = faults_[fault_idx_];
            // Ops whose interval ends at or before the cut still complete; a
            // fault exactly at phase end is left for the next phase to trip on.
            std::int64_t k = count;
            if (f <= end) {
                k = t_per > 0 ? std::min(count, (f - now_) / t_per)
                              : (now_ < f ? count : 0);
            }
            if (k < count) {
                completed = k;
                consume(k, t_per, e_per);
                now_ = f;
                fault_idx_++;
                return false;
            }
        }
        consume(count, t_per, e_per);
        return true;
    }

    void consume(std::int64_t ops, std::int64_t t_per, std::int64_t e_per) {
        now_ += ops * t_per;
        std::int64_t e = ops * e_per;
        if (e > energy_) throw Error(ErrorKind::State, "energy accounting underflow");
        energy_ -= e;
        cycle_energy_ += e;
    }

    // --- NVM commit ---------------------------------------------------------

    // Byte stream of one preservation: pending tile outputs then the snapshot.
    // Applies exactly the durable prefix when a fault strikes mid-write.
    bool preserve(const ProgressSnapshot& snap) {
        std::vector<std::pair<std::uint8_t*, std::uint8_t>> stream;
        for (const auto& p : pending_) {
            const UnitGeom& g = units_[p.unit_index].geom;
            auto& region = result_.nvm.layer_output_bytes[g.layer];
            const Shape3 s = out_shape(g.layer);
            std::size_t di = 0;
            for (int c = g.c0; c < g.c0 + g.tc; ++c) {
                for (int h = g.h0; h < g.h0 + g.th; ++h) {
                    for (int w = g.w0; w < g.w0 + g.tw; ++w) {
                        std::size_t elem =
                            (static_cast<std::size_t>(c) * s.h + h) * s.w + w;
                        std::uint16_t v = static_cast<std::uint16_t>(p.data[di++]);
                        stream.emplace_back(&region[2 * elem], static_cast<std::uint8_t>(v & 0xFF));
                        stream.emplace_back(&region[2 * elem + 1],
                                            static_cast<std::uint8_t>((v >> 8) & 0xFF));
                    }
                }
            }
        }
        auto packed = pack_snapshot(snap);
        std::uint8_t* slot =
            result_.nvm.snapshot_area.data() + ((snap.version - 1) % 2) * kSnapshotBytes;
        for (std::size_t i = 0; i < kSnapshotBytes; ++i) {
            stream.emplace_back(slot + i, packed[i]);
        }

        std::int64_t written = 0;
        bool ok = run_phase(static_cast<std::int64_t>(stream.size()), costs_.t_nvm_wr,
                            costs_.e_nvm_wr, written);
        for (std::int64_t i = 0; i < written; ++i) *stream[i].first = stream[i].second;
        if (!ok) return false;

        committed_ = snap;
        pending_.clear();
        pending_bytes_ = 0;
        result_.preservations++;
        return true;
    }

    // --- layer data ---------------------------------------------------------

    Shape3 out_shape(int layer) const { return computer_.shapes()[layer + 1]; }

    QTensor decode_layer_output(int layer) const {
        const Shape3 s = out_shape(layer);
        QTensor t(s.c, s.h, s.w, net_.frac_bits);
        const auto& bytes = result_.nvm.layer_output_bytes[layer];
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            t.data[i] = static_cast<std::int16_t>(
                static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8)));
        }
        return t;
    }

    const QTensor& layer_input(int layer) {
        if (layer == 0) return input_;
        if (input_cache_layer_ != layer) {
            input_cache_ = decode_layer_output(layer - 1);
            input_cache_layer_ = layer;
        }
        return input_cache_;
    }

    // --- resume bookkeeping --------------------------------------------------

    std::size_t snapshot_position(const ProgressSnapshot& s) const {
        if (s.layer_idx >= net_.layers.size()) return units_.size();  // complete
        const auto& dims = layer_block_dims_[s.layer_idx];
        std::size_t within =
            (static_cast<std::size_t>(s.i0) * dims[1] + s.i1) * dims[2] + s.i2;
        return layer_unit_start_[s.layer_idx] + within;
    }

    // A torn snapshot write can survive the 16-bit sum check as an old/new
    // byte hybrid; the progress fields then disagree with the unit schedule.
    bool semantically_valid(const ProgressSnapshot& s) const {
        if (s.layer_idx > net_.layers.size()) return false;
        if (s.layer_idx == net_.layers.size()) {
            return s.i0 == 0 && s.i1 == 0 && s.i2 == 0 &&
                   s.committed_units == units_.size();
        }
        const auto& dims = layer_block_dims_[s.layer_idx];
        if (s.i0 >= dims[0] || s.i1 >= dims[1] || s.i2 >= dims[2]) return false;
        return snapshot_position(s) == s.committed_units;
    }

    ProgressSnapshot schedule_checked_recover() const {
        const auto& area = result_.nvm.snapshot_area;
        ProgressSnapshot a, b;
        SlotState sa = classify_slot(std::span(area).subspan(0, kSnapshotBytes), a);
        SlotState sb = classify_slot(std::span(area).subspan(kSnapshotBytes, kSnapshotBytes), b);
        if (sa == SlotState::Valid && !semantically_valid(a)) sa = SlotState::Corrupt;
        if (sb == SlotState::Valid && !semantically_valid(b)) sb = SlotState::Corrupt;
        if (sa == SlotState::Corrupt && sb == SlotState::Corrupt) {
            throw Error(ErrorKind::State, "both snapshot slots are damaged");
        }
        if (sa == SlotState::Valid && sb == SlotState::Valid) {
            return b.version > a.version ? b : a;
        }
        if (sa == SlotState::Valid) return a;
        if (sb == SlotState::Valid) return b;
        return ProgressSnapshot{};
    }

    ProgressSnapshot snapshot_for_position(std::size_t pos, std::uint32_t version) const {
        if (version > 65535) {
            // A wrapped version would make recovery prefer the stale slot
            // forever; stop rather than livelock.
            throw Error(ErrorKind::State, "snapshot version space exhausted");
        }
        ProgressSnapshot s;
        s.version = static_cast<std::uint16_t>(version);
        s.committed_units = static_cast<std::uint16_t>(pos);
        if (pos >= units_.size()) {
            s.layer_idx = static_cast<std::uint16_t>(net_.layers.size());
            return s;
        }
        const UnitGeom& g = units_[pos].geom;
        s.layer_idx = static_cast<std::uint16_t>(g.layer);
        s.i0 = static_cast<std::uint16_t>(g.block[0]);
        s.i1 = static_cast<std::uint16_t>(g.block[1]);
        s.i2 = static_cast<std::uint16_t>(g.block[2]);
        return s;
    }

    // --- one power cycle ------------------------------------------------------

    void run_cycle() {
        result_.cycles++;
        energy_ = power_.e_budget;
        cycle_energy_ = 0;
        pending_.clear();
        pending_bytes_ = 0;

        // Stale faults landed while we were off; power cannot be cut twice.
        while (fault_idx_ < faults_.size() && faults_[fault_idx_] < now_) fault_idx_++;

        std::int64_t ops = 0;
        if (!run_phase(power_.t_boot, 1, 0, ops)) return;
        if (!run_phase(static_cast<std::int64_t>(kSnapshotBytes), costs_.t_nvm_rd,
                       costs_.e_nvm_rd, ops)) {
            return;
        }
        ProgressSnapshot snap = schedule_checked_recover();
        result_.recoveries++;
        result_.recovery_log.push_back({now_, snap});
        std::size_t pos = snapshot_position(snap);
        committed_ = snap;

        while (pos < units_.size()) {
            const FlatUnit& u = units_[pos];
            std::int64_t e_pres =
                costs_.e_nvm_wr * (pending_bytes_ + u.geom.out_bytes +
                                   static_cast<std::int64_t>(kSnapshotBytes));
            if (energy_ < u.e_unit + e_pres) {
                // Not enough for this unit plus its preservation: flush what we
                // have and sleep.
                if (!pending_.empty()) {
                    auto s = snapshot_for_position(pos, committed_.version + 1);
                    if (!preserve(s)) {
                        abort_cycle();
                        return;
                    }
                }
                return;  // voluntary power-down
            }

            bool fetched_and_computed =
                run_phase(u.geom.fetch_bytes, costs_.t_nvm_rd, costs_.e_nvm_rd, ops) &&
                run_phase(u.geom.macs, costs_.t_mac, costs_.e_mac, ops);
            if (!fetched_and_computed) {
                abort_cycle();
                return;
            }

            QTensor& out = vm_out_[u.geom.layer];
            computer_.compute(u.geom.layer, u.geom, layer_input(u.geom.layer), out);
            pending_.push_back({pos, gather_region(out, u.geom)});
            pending_bytes_ += u.geom.out_bytes;
            pos++;

            if (static_cast<int>(pending_.size()) == batch_size_ || u.geom.last_of_layer) {
                auto s = snapshot_for_position(pos, committed_.version + 1);
                if (!preserve(s)) {
                    abort_cycle();
                    return;
                }
            }
        }
        done_ = true;
    }

    void abort_cycle() {
        // Abrupt fault: everything in VM since the last commit is gone.
        result_.lost_units += static_cast<std::int64_t>(pending_.size());
        pending_.clear();
        pending_bytes_ = 0;
    }

    const NetworkSpec& net_;
    const QTensor& input_;
    PowerParams power_;
    CostParams costs_;
    std::vector<std::int64_t> faults_;
    detail::UnitComputer computer_;
    int batch_size_ = 1;

    std::vector<FlatUnit> units_;
    std::vector<std::size_t> layer_unit_start_;
    std::vector<std::array<int, 3>> layer_block_dims_;

    std::vector<QTensor> vm_out_;  // volatile staging, rebuilt after loss
    QTensor input_cache_;
    int input_cache_layer_ = -1;

    std::vector<PendingUnit> pending_;
    std::int64_t pending_bytes_ = 0;
    ProgressSnapshot committed_;

    std::int64_t now_ = 0;
    std::int64_t energy_ = 0;
    std::int64_t cycle_energy_ = 0;
    std::size_t fault_idx_ = 0;
    bool done_ = false;

    SimResult result_;
};

} // namespace

SimResult simulate(const NetworkSpec& net, const QTensor& input, const ExecutionDesign& design,
                   const PowerParams& power, const CostParams& costs, const FaultTrace& faults) {
    Simulator sim(net, input, design, power, costs, faults);
    return sim.run();
}

} // namespace ehw
