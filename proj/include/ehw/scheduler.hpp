#ifndef EHW_SCHEDULER_HPP
#define EHW_SCHEDULER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ehw/exec.hpp"
#include "ehw/intermittent.hpp"
#include "ehw/model.hpp"

namespace ehw {

struct TaskSpec {
    int id = 0;
    NetworkSpec net;
    ExecutionDesign design;
    std::int64_t period = 0;    // T
    std::int64_t deadline = 0;  // D, 0 < D <= T
    std::int64_t offset = 0;    // first release
};

using TaskSet = std::vector<TaskSpec>;

// Worst-case active on-ticks of one inference: unit plus preservation time
// under the fault-free packing with unclamped tile costs. Boot, recovery and
// recharge are supply-side and excluded.
std::int64_t task_wcet(const TaskSpec& task, const PowerParams& power,
                       const CostParams& costs);

// Supply bound function of the on/off power cycle as a periodic resource:
// Theta effective ticks per Pi-long cycle, worst-case phase 2*(Pi - Theta).
// tau converts energy units to ticks under the uniform-draw assumption.
std::int64_t sbf(const PowerParams& power, const CostParams& costs, std::int64_t delta,
                 std::int64_t tau = 1);

// EDF demand bound of the task set in a window of length delta.
std::int64_t dbf(const TaskSet& tasks, const std::vector<std::int64_t>& wcets,
                 std::int64_t delta);

struct SchedVerdict {
    bool schedulable = false;
    std::int64_t witness_delta = 0;
    std::string witness;
    std::vector<std::int64_t> wcet;  // per task, in task order
};

// Non-preemptive EDF test over all points D_i + k*T_i up to hyperperiod+max D:
// dbf(delta) + blocking(delta) <= supply(delta). The supply curve discounts
// one worst-case reservation (unit + batch preservation) per cycle, which the
// proactive sleep policy may strand.
SchedVerdict schedulable_edf(const TaskSet& tasks, const PowerParams& power,
                             const CostParams& costs, std::int64_t tau = 1);

struct JobRecord {
    int task_id = 0;
    std::int64_t job = 0;  // index within the task
    std::int64_t release = 0;
    std::int64_t deadline = 0;    // absolute
    std::int64_t completion = -1; // -1 = unfinished at horizon
    std::int64_t active_ticks = 0;
};

struct DeadlineMiss {
    int task_id = 0;
    std::int64_t job = 0;
    std::int64_t deadline = 0;
    std::int64_t completion = -1;
};

struct ScheduleTrace {
    std::vector<JobRecord> jobs;
    std::vector<DeadlineMiss> misses;
    std::int64_t cycles = 0;
};

// Discrete-event validation oracle: runs jobs non-preemptively under EDF
// (ties to the lower task id) on one intermittent processor, one snapshot
// recovery per power-on, unit-level costs identical to the simulator's.
ScheduleTrace simulate_schedule(const TaskSet& tasks, const PowerParams& power,
                                const CostParams& costs, std::int64_t horizon);

std::int64_t hyperperiod(const TaskSet& tasks);

} // namespace ehw

#endif
