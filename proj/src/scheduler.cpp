#include "ehw/scheduler.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "ehw/perfmodel.hpp"

namespace ehw {

namespace {

constexpr std::int64_t kSnapshotIoBytes = 16;

struct WcLayer {
    std::int64_t units = 0;
    UnitCost unit;        // worst-case per unit
    std::int64_t out_bytes = 0;  // worst-case per unit
};

std::vector<WcLayer> worst_case_layers(const TaskSpec& task, const CostParams& costs) {
    auto shapes = layer_shapes(task.net);
    std::vector<WcLayer> out;
    for (std::size_t li = 0; li < task.net.layers.size(); ++li) {
        const LayerSpec& l = task.net.layers[li];
        const TileConfig& t = task.design.tiles[li];
        WcLayer w;
        w.units = unit_count(l, shapes[li + 1], t);
        w.unit = unit_cost(l, shapes[li], shapes[li + 1], t, costs);
        switch (l.kind) {
        case LayerKind::Conv2D:
            w.out_bytes = static_cast<std::int64_t>(t.t_cout) * t.t_h * t.t_w * 2;
            break;
        case LayerKind::FullyConnected:
            w.out_bytes = static_cast<std::int64_t>(t.t_cout) * 2;
            break;
        case LayerKind::MaxPool2D: {
            const Shape3& s = shapes[li + 1];
            w.out_bytes = static_cast<std::int64_t>(s.c) * s.h * s.w * 2;
            break;
        }
        }
        out.push_back(w);
    }
    return out;
}

} // namespace

std::int64_t task_wcet(const TaskSpec& task, const PowerParams& power,
                       const CostParams& costs) {
    Feasibility feas = feasible(task.net, task.design, power, costs);
    if (!feas.ok) throw Error(ErrorKind::Infeasible, feas.reason);

    auto layers = worst_case_layers(task, costs);
    const std::int64_t e_recovery = costs.e_nvm_rd * kSnapshotIoBytes;
    const int batch = task.design.batch_size;

    std::int64_t active = 0;
    std::int64_t energy = power.e_budget - e_recovery;
    std::int64_t pending_bytes = 0;
    int pending_count = 0;

    auto preserve = [&](std::int64_t* sink_energy) {
        std::int64_t bytes = pending_bytes + kSnapshotIoBytes;
        *sink_energy -= costs.e_nvm_wr * bytes;
        active += costs.t_nvm_wr * bytes;
        pending_bytes = 0;
        pending_count = 0;
    };

    for (const WcLayer& l : layers) {
        for (std::int64_t i = 0; i < l.units; ++i) {
            std::int64_t e_pres =
                costs.e_nvm_wr * (pending_bytes + l.out_bytes + kSnapshotIoBytes);
            if (energy < l.unit.energy + e_pres) {
                if (pending_count > 0) preserve(&energy);
                energy = power.e_budget - e_recovery;
            }
            energy -= l.unit.energy;
            active += l.unit.time;
            pending_bytes += l.out_bytes;
            pending_count++;
            if (pending_count == batch || i + 1 == l.units) preserve(&energy);
        }
    }
    return active;
}

std::int64_t sbf(const PowerParams& power, const CostParams& costs, std::int64_t delta,
                 std::int64_t tau) {
    if (delta < 0) throw Error(ErrorKind::Parameter, "delta must be >= 0");
    std::int64_t theta =
        (power.e_budget - kSnapshotIoBytes * costs.e_nvm_rd) * tau - power.t_boot;
    if (theta <= 0) {
        throw Error(ErrorKind::Supply, "energy budget cannot sustain recovery plus boot");
    }
    std::int64_t pi =
        theta + power.t_boot + power.t_recharge + kSnapshotIoBytes * costs.t_nvm_rd;
    std::int64_t blackout = 2 * (pi - theta);
    if (delta < blackout) return 0;
    std::int64_t q = (delta - blackout) / pi;
    std::int64_t r = (delta - blackout) % pi;
    return q * theta + std::min(theta, r);
}

std::int64_t dbf(const TaskSet& tasks, const std::vector<std::int64_t>& wcets,
                 std::int64_t delta) {
    if (tasks.size() != wcets.size()) {
        throw Error(ErrorKind::Parameter, "wcet list length != task count");
    }
    std::int64_t total = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (delta >= tasks[i].deadline) {
            total += ((delta - tasks[i].deadline) / tasks[i].period + 1) * wcets[i];
        }
    }
    return total;
}

std::int64_t hyperperiod(const TaskSet& tasks) {
    std::int64_t h = 1;
    for (const auto& t : tasks) {
        h = std::lcm(h, t.period);
        if (h > 100000000) {
            throw Error(ErrorKind::Parameter, "hyperperiod too large for the test-point sweep");
        }
    }
    return h;
}

SchedVerdict schedulable_edf(const TaskSet& tasks, const PowerParams& power,
                             const CostParams& costs, std::int64_t tau) {
    SchedVerdict v;
    if (tasks.empty()) {
        v.schedulable = true;
        v.witness = "empty task set";
        return v;
    }
    for (const auto& t : tasks) {
        if (t.period <= 0 || t.deadline <= 0 || t.deadline > t.period || t.offset < 0) {
            throw Error(ErrorKind::Parameter,
                        "task " + std::to_string(t.id) + " has invalid timing parameters");
        }
    }

    std::vector<std::int64_t> wcets;
    for (const auto& t : tasks) wcets.push_back(task_wcet(t, power, costs));
    v.wcet = wcets;

    std::int64_t theta =
        (power.e_budget - kSnapshotIoBytes * costs.e_nvm_rd) * tau - power.t_boot;
    if (theta <= 0) {
        throw Error(ErrorKind::Supply, "energy budget cannot sustain recovery plus boot");
    }
    std::int64_t blackout =
        power.t_boot + power.t_recharge + kSnapshotIoBytes * costs.t_nvm_rd;

    // The proactive policy sleeps when the next unit plus its batch
    // preservation no longer fits, stranding at most that reservation per
    // cycle; the sleep may also flush a partial batch, whose snapshot write
    // is work no task WCET accounts for. Both come off the per-cycle supply.
    std::int64_t max_reserve_e = 0;
    for (const auto& task : tasks) {
        auto shapes = layer_shapes(task.net);
        for (std::size_t li = 0; li < task.net.layers.size(); ++li) {
            UnitCost uc = unit_cost(task.net.layers[li], shapes[li], shapes[li + 1],
                                    task.design.tiles[li], costs);
            UnitCost pc = preservation_cost(task.net.layers[li], shapes[li + 1],
                                            task.design.tiles[li], task.design.batch_size,
                                            costs);
            max_reserve_e = std::max(max_reserve_e, uc.energy + pc.energy);
        }
    }
    std::int64_t theta_eff =
        theta - (max_reserve_e + kSnapshotIoBytes * costs.e_nvm_wr) * tau;
    if (theta_eff <= 0) {
        v.schedulable = false;
        v.witness = "per-cycle supply cannot absorb one unit-plus-preservation reservation";
        return v;
    }
    std::int64_t pi_eff = theta_eff + blackout;
    auto supply = [&](std::int64_t delta) {
        std::int64_t bo = 2 * (pi_eff - theta_eff);
        if (delta < bo) return static_cast<std::int64_t>(0);
        return (delta - bo) / pi_eff * theta_eff + std::min(theta_eff, (delta - bo) % pi_eff);
    };

    std::int64_t h = hyperperiod(tasks);
    std::int64_t max_d = 0;
    for (const auto& t : tasks) max_d = std::max(max_d, t.deadline);
    std::int64_t limit = h + max_d;

    std::set<std::int64_t> points;
    for (const auto& t : tasks) {
        for (std::int64_t d = t.deadline; d <= limit; d += t.period) points.insert(d);
    }

    std::int64_t min_slack = std::numeric_limits<std::int64_t>::max();
    std::int64_t tightest = 0;
    for (std::int64_t delta : points) {
        std::int64_t blocking = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].deadline > delta) blocking = std::max(blocking, wcets[i]);
        }
        std::int64_t demand = dbf(tasks, wcets, delta) + blocking;
        std::int64_t avail = supply(delta);
        if (demand > avail) {
            v.schedulable = false;
            v.witness_delta = delta;
            v.witness = "demand " + std::to_string(demand) + " exceeds supply " +
                        std::to_string(avail) + " at delta " + std::to_string(delta);
            return v;
        }
        if (avail - demand < min_slack) {
            min_slack = avail - demand;
            tightest = delta;
        }
    }
    v.schedulable = true;
    v.witness_delta = tightest;
    v.witness = "minimum slack " + std::to_string(min_slack) + " at delta " +
                std::to_string(tightest);
    return v;
}

namespace {

struct SimUnit {
    std::int64_t e = 0, t = 0, out_bytes = 0;
    bool last_of_layer = false;
};

struct Job {
    int task_index;
    std::int64_t job_index;
    std::int64_t release;
    std::int64_t deadline;
    std::size_t pos = 0;  // next unit
    std::int64_t active = 0;
    std::int64_t pending_bytes = 0;
    int pending_count = 0;
};

} // namespace

ScheduleTrace simulate_schedule(const TaskSet& tasks, const PowerParams& power,
                                const CostParams& costs, std::int64_t horizon) {
    ScheduleTrace trace;
    if (tasks.empty()) return trace;

    // Per-task actual unit cost sequences (one inference each).
    std::vector<std::vector<SimUnit>> task_units(tasks.size());
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        Feasibility feas = feasible(tasks[ti].net, tasks[ti].design, power, costs);
        if (!feas.ok) throw Error(ErrorKind::Infeasible, feas.reason);
        for (const auto& layer_units : unit_schedule(tasks[ti].net, tasks[ti].design)) {
            for (const UnitGeom& g : layer_units) {
                SimUnit u;
                u.e = costs.e_nvm_rd * g.fetch_bytes + costs.e_mac * g.macs;
                u.t = costs.t_nvm_rd * g.fetch_bytes + costs.t_mac * g.macs;
                u.out_bytes = g.out_bytes;
                u.last_of_layer = g.last_of_layer;
                task_units[ti].push_back(u);
            }
        }
    }

    // All jobs released before the horizon.
    std::vector<Job> jobs;
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        for (std::int64_t r = tasks[ti].offset; r < horizon; r += tasks[ti].period) {
            jobs.push_back({static_cast<int>(ti), (r - tasks[ti].offset) / tasks[ti].period,
                            r, r + tasks[ti].deadline});
        }
    }
    std::vector<bool> done(jobs.size(), false);
    std::vector<std::int64_t> completion(jobs.size(), -1);

    const std::int64_t e_recovery = costs.e_nvm_rd * kSnapshotIoBytes;
    const std::int64_t t_recovery = costs.t_nvm_rd * kSnapshotIoBytes;

    std::int64_t now = 0;
    std::int64_t energy = 0;
    bool powered = false;
    int current = -1;  // running job (non-preemptive)

    auto next_release_after = [&](std::int64_t t) {
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (!done[i] && jobs[i].release > t) best = std::min(best, jobs[i].release);
        }
        return best;
    };
    auto pick_edf = [&]() {
        int best = -1;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (done[i] || jobs[i].release > now) continue;
            if (best < 0 || jobs[i].deadline < jobs[best].deadline ||
                (jobs[i].deadline == jobs[best].deadline &&
                 tasks[jobs[i].task_index].id < tasks[jobs[best].task_index].id)) {
                best = static_cast<int>(i);
            }
        }
        return best;
    };

    while (now < horizon) {
        if (!powered) {
            // boot + one snapshot recovery per power-on
            trace.cycles++;
            now += power.t_boot + t_recovery;
            energy = power.e_budget - e_recovery;
            powered = true;
            continue;
        }
        if (current < 0) current = pick_edf();
        if (current < 0) {
            std::int64_t nr = next_release_after(now);
            if (nr == std::numeric_limits<std::int64_t>::max()) break;
            now = nr;  // idle on, no draw
            continue;
        }

        Job& j = jobs[current];
        const auto& units = task_units[j.task_index];
        const SimUnit& u = units[j.pos];
        std::int64_t e_pres =
            costs.e_nvm_wr * (j.pending_bytes + u.out_bytes + kSnapshotIoBytes);
        if (energy < u.e + e_pres) {
            if (j.pending_count > 0) {
                std::int64_t bytes = j.pending_bytes + kSnapshotIoBytes;
                energy -= costs.e_nvm_wr * bytes;
                now += costs.t_nvm_wr * bytes;
                j.active += costs.t_nvm_wr * bytes;
                j.pending_bytes = 0;
                j.pending_count = 0;
            }
            powered = false;
            now += power.t_recharge;
            continue;
        }

        energy -= u.e;
        now += u.t;
        j.active += u.t;
        j.pending_bytes += u.out_bytes;
        j.pending_count++;
        j.pos++;
        if (j.pending_count == tasks[j.task_index].design.batch_size || u.last_of_layer) {
            std::int64_t bytes = j.pending_bytes + kSnapshotIoBytes;
            energy -= costs.e_nvm_wr * bytes;
            now += costs.t_nvm_wr * bytes;
            j.active += costs.t_nvm_wr * bytes;
            j.pending_bytes = 0;
            j.pending_count = 0;
        }
        if (j.pos == units.size()) {
            done[current] = true;
            completion[current] = now;
            current = -1;
        }
    }

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        JobRecord r;
        r.task_id = tasks[jobs[i].task_index].id;
        r.job = jobs[i].job_index;
        r.release = jobs[i].release;
        r.deadline = jobs[i].deadline;
        r.completion = completion[i];
        r.active_ticks = jobs[i].active;
        trace.jobs.push_back(r);
        bool missed = completion[i] > jobs[i].deadline ||
                      (completion[i] < 0 && jobs[i].deadline <= horizon);
        if (missed) {
            trace.misses.push_back(
                {r.task_id, r.job, r.deadline, r.completion});
        }
    }
    return trace;
}

} // namespace ehw
