#include <doctest.h>

#include "ehw/scheduler.hpp"
#include "testutil.hpp"

using namespace ehw;
using namespace ehw::testutil;

namespace {

TaskSpec worked_task(std::int64_t period, std::int64_t deadline, std::int64_t offset = 0,
                     int id = 0) {
    TaskSpec t;
    t.id = id;
    t.net = worked_net();
    t.design = worked_design();
    t.period = period;
    t.deadline = deadline;
    t.offset = offset;
    return t;
}

} // namespace

TEST_CASE("worked example WCET is 44 (60 minus recovery)") {
    TaskSpec t = worked_task(1000, 1000);
    CHECK(task_wcet(t, worked_power(), unit_costs()) == 44);
}

TEST_CASE("doubling time coefficients doubles the WCET") {
    TaskSpec t = worked_task(1000, 1000);
    CostParams c = unit_costs();
    std::int64_t base = task_wcet(t, worked_power(), c);
    c.t_mac *= 2;
    c.t_nvm_rd *= 2;
    c.t_nvm_wr *= 2;
    CHECK(task_wcet(t, worked_power(), c) == 2 * base);
}

TEST_CASE("a single pool-layer net costs only its preservation under zero read time") {
    NetworkSpec net;
    net.input_shape = {1, 4, 4};
    net.frac_bits = 8;
    net.layers.push_back(LayerSpec::pool(2, 2));
    net.weights.emplace_back();
    net.biases.emplace_back();
    net.output_classes = 4;

    ExecutionDesign d;
    d.tiles.push_back(TileConfig{});
    d.batch_size = 1;

    CostParams c = unit_costs();
    c.t_mac = c.t_nvm_rd = 0;  // pool has zero MACs; silence the fetch clock too
    TaskSpec t;
    t.net = net;
    t.design = d;
    t.period = t.deadline = 1000;
    // one unit: output 4 elements = 8 bytes, plus the 16-byte snapshot
    CHECK(task_wcet(t, worked_power(100), c) == 24);
}

TEST_CASE("infeasible task designs are rejected") {
    TaskSpec t = worked_task(100, 100);
    CHECK_THROWS_AS(task_wcet(t, worked_power(20), unit_costs()), Error);
}

TEST_CASE("sbf worked points") {
    // budget 60, costs 1, boot 0, recharge 40: theta 44, pi 100, blackout 112
    PowerParams p = worked_power(60, 40);
    CostParams c = unit_costs();
    CHECK(sbf(p, c, 0) == 0);
    CHECK(sbf(p, c, 112) == 0);
    CHECK(sbf(p, c, 112 + 100) == 44);
    CHECK(sbf(p, c, 112 + 44) == 44);   // saturates within the on window
    CHECK(sbf(p, c, 112 + 10) == 10);
    for (std::int64_t d = 500; d < 900; d += 37) {
        CHECK(sbf(p, c, d + 100) == sbf(p, c, d) + 44);  // periodicity
        CHECK(sbf(p, c, d + 1) >= sbf(p, c, d));
    }
    PowerParams starved{16, 0, 0};
    CHECK_THROWS_AS(sbf(starved, c, 100), Error);
}

TEST_CASE("dbf worked points") {
    TaskSet ts;
    ts.push_back(worked_task(10, 5, 0, 0));
    ts.push_back(worked_task(20, 8, 0, 1));
    std::vector<std::int64_t> wcets = {3, 4};
    CHECK(dbf(ts, wcets, 4) == 0);   // below every deadline
    CHECK(dbf(ts, wcets, 5) == 3);   // one job of task 0
    CHECK(dbf(ts, wcets, 8) == 7);
    // hand sum at the hyperperiod: floor((20-5)/10)+1 = 2 jobs of task 0,
    // floor((20-8)/20)+1 = 1 job of task 1
    CHECK(dbf(ts, wcets, 20) == 2 * 3 + 1 * 4);
}

TEST_CASE("single comfortable task is schedulable and simulates cleanly") {
    TaskSet ts;
    ts.push_back(worked_task(1000, 1000));
    PowerParams p = worked_power(200, 40);
    SchedVerdict v = schedulable_edf(ts, p, unit_costs());
    CHECK(v.schedulable);
    REQUIRE(v.wcet.size() == 1);
    CHECK(v.wcet[0] == 44);  // the whole run still packs into one cycle

    ScheduleTrace trace = simulate_schedule(ts, p, unit_costs(), 2000);
    CHECK(trace.misses.empty());
    for (const auto& j : trace.jobs) {
        CHECK(j.active_ticks <= v.wcet[0]);
        CHECK(j.completion >= 0);
    }
}

TEST_CASE("a task whose deadline precedes its supply is not schedulable") {
    TaskSet ts;
    ts.push_back(worked_task(200, 50));  // blackout alone is 2*56 with recharge 40
    SchedVerdict v = schedulable_edf(ts, worked_power(200, 40), unit_costs());
    CHECK(!v.schedulable);
    CHECK(v.witness_delta == 50);
}

TEST_CASE("a budget that cannot absorb one stranded reservation is refused") {
    // theta 44 but unit+pres(4)+snapshot reservation is 45
    TaskSet ts;
    ts.push_back(worked_task(1000, 1000));
    SchedVerdict v = schedulable_edf(ts, worked_power(60, 40), unit_costs());
    CHECK(!v.schedulable);
    CHECK(v.witness.find("reservation") != std::string::npos);
}

TEST_CASE("empty task set is schedulable with an empty trace") {
    TaskSet ts;
    CHECK(schedulable_edf(ts, worked_power(), unit_costs()).schedulable);
    CHECK(simulate_schedule(ts, worked_power(), unit_costs(), 1000).jobs.empty());
}

TEST_CASE("overload produces a miss within the horizon") {
    // task demands 44 active ticks per 80 while a cycle supplies 44 per 100
    TaskSet ts;
    ts.push_back(worked_task(80, 80));
    PowerParams p = worked_power(60, 40);
    SchedVerdict v = schedulable_edf(ts, p, unit_costs());
    CHECK(!v.schedulable);
    ScheduleTrace trace = simulate_schedule(ts, p, unit_costs(), 4000);
    CHECK(!trace.misses.empty());
}

namespace {

TaskSet random_taskset(SplitMix64& rng, PowerParams& power, CostParams& costs) {
    int n = 2 + static_cast<int>(rng.next_below(3));
    // uniform draw so tau = 1 is exact for the supply model
    costs = CostParams{};
    costs.e_mac = costs.t_mac = 1 + static_cast<std::int64_t>(rng.next_below(2));
    costs.e_nvm_rd = costs.t_nvm_rd = 1;
    costs.e_nvm_wr = costs.t_nvm_wr = 1 + static_cast<std::int64_t>(rng.next_below(2));
    costs.vm_capacity = 4096;

    TaskSet ts;
    std::int64_t e_need = 0;
    for (int i = 0; i < n; ++i) {
        TaskSpec t;
        t.id = i;
        NetworkSpec net;
        net.frac_bits = 8;
        int dim = 2 + static_cast<int>(rng.next_below(3));
        net.input_shape = {1, dim, dim};
        int c_out = 1 + static_cast<int>(rng.next_below(2));
        net.layers.push_back(LayerSpec::conv(1, c_out, 1, 1, 0));
        net.weights.push_back(random_weights(rng, c_out, 1, 1, 8));
        net.biases.emplace_back();
        net.output_classes = c_out * dim * dim;
        t.net = net;
        t.design = random_design(rng, net, 4);
        static const std::int64_t periods[] = {400, 800, 1600, 3200};
        t.period = periods[rng.next_below(4)];
        t.deadline = rng.next_below(2) ? t.period : t.period / 2;
        t.offset = static_cast<std::int64_t>(rng.next_below(3)) * 50;
        ts.push_back(t);

        auto shapes = layer_shapes(net);
        UnitCost uc = unit_cost(net.layers[0], shapes[0], shapes[1], t.design.tiles[0], costs);
        UnitCost pc = preservation_cost(net.layers[0], shapes[1], t.design.tiles[0], 1, costs);
        e_need = std::max(e_need, 16 * costs.e_nvm_rd + uc.energy + pc.energy);
    }
    power.e_budget = e_need + 20 + static_cast<std::int64_t>(rng.next_below(120));
    power.t_recharge = static_cast<std::int64_t>(rng.next_below(60));
    power.t_boot = static_cast<std::int64_t>(rng.next_below(4));
    return ts;
}

} // namespace

TEST_CASE("verdict 'schedulable' implies zero simulated misses") {
    SplitMix64 rng(4242);
    int schedulable_seen = 0;
    for (int i = 0; i < 60; ++i) {
        PowerParams power;
        CostParams costs;
        TaskSet ts = random_taskset(rng, power, costs);
        SchedVerdict v;
        try {
            v = schedulable_edf(ts, power, costs);
        } catch (const Error&) {
            continue;  // supply error: budget too small for the uniform model
        }
        std::int64_t max_off = 0, max_d = 0;
        for (const auto& t : ts) {
            max_off = std::max(max_off, t.offset);
            max_d = std::max(max_d, t.deadline);
        }
        ScheduleTrace trace =
            simulate_schedule(ts, power, costs, hyperperiod(ts) + max_off + max_d);
        if (v.schedulable) {
            schedulable_seen++;
            CHECK(trace.misses.empty());
        }
        // WCET dominance up to one extra snapshot write: a job dispatched
        // mid-cycle crosses one more power-down boundary than the solo
        // full-budget walk, flushing one partial batch it otherwise wouldn't.
        for (const auto& j : trace.jobs) {
            CHECK(j.active_ticks <=
                  v.wcet[static_cast<std::size_t>(j.task_id)] + 16 * costs.t_nvm_wr);
        }
    }
    CHECK(schedulable_seen > 5);  // the distribution must exercise the yes side
}

TEST_CASE("dbf and the internal supply curve are monotone") {
    TaskSet ts;
    ts.push_back(worked_task(100, 80, 0, 0));
    ts.push_back(worked_task(150, 150, 10, 1));
    std::vector<std::int64_t> wcets = {7, 9};
    PowerParams p = worked_power(60, 40);
    for (std::int64_t d = 0; d < 600; d += 13) {
        CHECK(dbf(ts, wcets, d + 13) >= dbf(ts, wcets, d));
        CHECK(sbf(p, unit_costs(), d + 13) >= sbf(p, unit_costs(), d));
    }
}
