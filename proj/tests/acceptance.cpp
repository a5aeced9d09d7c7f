// Acceptance suite: runs every release criterion and prints one line each.
// Exit status is the number of failing criteria.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ehw/artifacts.hpp"
#include "ehw/explorer.hpp"
#include "ehw/intermittent.hpp"
#include "ehw/perfmodel.hpp"
#include "ehw/scheduler.hpp"
#include "testutil.hpp"

using namespace ehw;
using namespace ehw::testutil;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void run_criterion(int number, const std::string& name,
                   const std::function<bool(std::string&)>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
    std::printf("[%s] %2d. %s (%lld ms)%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                static_cast<long long>(ms), detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) failures++;
}

// --- 1. tiling equivalence -------------------------------------------------

bool tiling_equivalence(std::string& detail) {
    SplitMix64 rng(20260808);
    for (int i = 0; i < 200; ++i) {
        NetworkSpec net = random_network(rng, {4, 16, 4, true});
        QTensor input = random_input(rng, net);
        ExecutionDesign design = random_design(rng, net);
        QTensor ref = run_reference(net, input);
        TiledResult tiled = run_tiled(net, input, design);
        if (!(tiled.output == ref)) {
            detail = "mismatch at pair " + std::to_string(i);
            return false;
        }
    }
    return true;
}

// --- 2. crash consistency ---------------------------------------------------

bool crash_consistency(std::string& detail) {
    SplitMix64 rng(777001);
    for (int nc = 0; nc < 21; ++nc) {
        NetworkSpec net;
        QTensor input{};
        ExecutionDesign design;
        PowerParams power;
        CostParams costs;
        if (nc == 0) {
            net = worked_net();
            input = worked_input();
            design = worked_design();
            power = worked_power();
            costs = unit_costs();
        } else {
            net = random_network(rng, {2, 5, 2, true});
            input = random_input(rng, net);
            design = random_design(rng, net, 4);
            auto pc = random_feasible_params(rng, net, design);
            power = pc.first;
            costs = pc.second;
        }
        SimResult clean = simulate(net, input, design, power, costs, {});
        QTensor expect = run_reference(net, input);
        if (!(clean.output == expect)) {
            detail = "fault-free output mismatch at net " + std::to_string(nc);
            return false;
        }
        for (int t = 0; t < 1000; ++t) {
            FaultTrace f = make_fault_trace(rng.next(), 1 + rng.next_below(150),
                                            2 * clean.latency_ticks + 1);
            SimResult r = simulate(net, input, design, power, costs, f);
            if (!(r.output == expect)) {
                detail = "output diverged, net " + std::to_string(nc) + " trace " +
                         std::to_string(t);
                return false;
            }
            for (auto e : r.per_cycle_energy) {
                if (e > power.e_budget) {
                    detail = "cycle energy " + std::to_string(e) + " over budget";
                    return false;
                }
            }
        }
    }
    return true;
}

// --- 3. snapshot atomicity ---------------------------------------------------

bool snapshot_atomicity(std::string& detail) {
    // the worked run preserves during [36, 60); inject at every tick offset
    SimResult clean = simulate(worked_net(), worked_input(), worked_design(), worked_power(),
                               unit_costs(), {});
    for (std::int64_t tick = 36; tick < 60; ++tick) {
        FaultTrace f;
        f.ticks = {tick};
        SimResult r = simulate(worked_net(), worked_input(), worked_design(), worked_power(),
                               unit_costs(), f);
        if (r.recovery_log.size() != 2 || r.recovery_log[1].snapshot.version != 0 ||
            r.recovery_log[1].snapshot.committed_units != 0) {
            detail = "tick " + std::to_string(tick) + " did not recover the prior snapshot";
            return false;
        }
        if (!(r.output == clean.output)) {
            detail = "tick " + std::to_string(tick) + " corrupted the result";
            return false;
        }
    }
    return true;
}

// --- 4. model exactness -------------------------------------------------------

bool model_exactness(std::string& detail) {
    PerfEstimate worked = predict(worked_net(), worked_design(), worked_power(), unit_costs());
    if (worked.latency_ticks != 60 || worked.cycles != 1) {
        detail = "worked example predicted " + std::to_string(worked.latency_ticks) +
                 " ticks, " + std::to_string(worked.cycles) + " cycles";
        return false;
    }
    SplitMix64 rng(31337);
    for (int i = 0; i < 500; ++i) {
        NetworkSpec net = random_network(rng, {3, 8, 3, true});
        QTensor input = random_input(rng, net);
        ExecutionDesign design = random_design(rng, net, 6);
        auto [power, costs] = random_feasible_params(rng, net, design);
        PerfEstimate e = predict(net, design, power, costs);
        SimResult r = simulate(net, input, design, power, costs, {});
        std::int64_t max_e =
            *std::max_element(r.per_cycle_energy.begin(), r.per_cycle_energy.end());
        if (e.latency_ticks != r.latency_ticks || e.cycles != r.cycles ||
            e.max_cycle_energy != max_e) {
            detail = "instance " + std::to_string(i) + ": predict " +
                     std::to_string(e.latency_ticks) + "/" + std::to_string(e.cycles) + "/" +
                     std::to_string(e.max_cycle_energy) + " vs sim " +
                     std::to_string(r.latency_ticks) + "/" + std::to_string(r.cycles) + "/" +
                     std::to_string(max_e);
            return false;
        }
    }
    return true;
}

// --- 5. explorer optimality ---------------------------------------------------

BestDesign brute_force_best(const NetworkSpec& net, const PowerParams& power,
                            const CostParams& costs, std::int64_t l_req,
                            const DesignCaps& caps) {
    using Key = std::vector<std::int64_t>;
    BestDesign best;
    Key best_key;
    std::vector<ExecutionDesign> all;
    enumerate_designs(net, caps, [&](const ExecutionDesign& d) {
        all.push_back(d);
        return true;
    });
    for (auto it = all.rbegin(); it != all.rend(); ++it) {
        if (!feasible(net, *it, power, costs).ok) continue;
        PerfEstimate est = predict(net, *it, power, costs);
        if (est.latency_ticks > l_req) continue;
        Key k{est.latency_ticks, it->batch_size};
        for (const auto& t : it->tiles) {
            k.push_back(t.t_cout);
            k.push_back(t.t_h);
            k.push_back(t.t_w);
            k.push_back(loop_order_index(t.loop_order));
        }
        if (!best.found || k < best_key) {
            best.found = true;
            best.design = *it;
            best.estimate = est;
            best_key = k;
        }
    }
    return best;
}

bool explorer_optimality(std::string& detail) {
    SplitMix64 rng(90210);
    int nontrivial = 0;
    for (int i = 0; i < 50; ++i) {
        NetworkSpec net = random_network(rng, {2, 6, 2, false});
        ExecutionDesign probe = random_design(rng, net, 1);
        auto [power, costs] = random_feasible_params(rng, net, probe);
        costs.vm_capacity += 1024;

        DesignCaps caps;
        auto draw = [&](int lo, int hi) {
            std::vector<int> v;
            int n = 1 + static_cast<int>(rng.next_below(3));
            for (int k = 0; k < n; ++k) {
                v.push_back(lo + static_cast<int>(rng.next_below(hi - lo + 1)));
            }
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            return v;
        };
        caps.t_cout = draw(1, 4);
        caps.t_h = draw(1, 6);
        caps.t_w = draw(1, 6);
        caps.order_indices = {0, static_cast<int>(rng.next_below(6))};
        caps.batch_sizes = draw(1, 6);
        if (design_space_size(net, caps) > 10000) {
            i--;
            continue;
        }
        std::int64_t l_req = 1 << 30;
        BestDesign got = best_design(net, power, costs, l_req, caps);
        BestDesign want = brute_force_best(net, power, costs, l_req, caps);
        if (got.found != want.found) {
            detail = "space " + std::to_string(i) + ": found flag differs";
            return false;
        }
        if (got.found) {
            nontrivial++;
            if (!(got.design == want.design) ||
                got.estimate.latency_ticks != want.estimate.latency_ticks) {
                detail = "space " + std::to_string(i) + ": argmin differs";
                return false;
            }
        }
    }
    if (nontrivial < 25) {
        detail = "too few feasible spaces (" + std::to_string(nontrivial) + ")";
        return false;
    }
    return true;
}

// --- 6. hyper-tile property -----------------------------------------------------

bool hyper_tile(std::string& detail) {
    SplitMix64 rng(6);
    for (int i = 0; i < 50; ++i) {
        NetworkSpec net = random_network(rng, {3, 8, 3, true});
        ExecutionDesign design = random_design(rng, net, 1);
        auto [power, costs] = random_feasible_params(rng, net, design);
        costs.vm_capacity += 4096;
        std::int64_t prev = -1;
        int prev_s = 0;
        for (int s = 1; s <= 16; ++s) {
            design.batch_size = s;
            if (!feasible(net, design, power, costs).ok) break;
            std::int64_t lat = predict(net, design, power, costs).latency_ticks;
            if (prev >= 0 && lat > prev) {
                detail = "net " + std::to_string(i) + ": latency " + std::to_string(prev) +
                         " at S=" + std::to_string(prev_s) + " rose to " +
                         std::to_string(lat) + " at S=" + std::to_string(s);
                return false;
            }
            prev = lat;
            prev_s = s;
        }
    }
    return true;
}

// --- 7. NAS determinism + oracle -------------------------------------------------

bool nas_search(std::string& detail) {
    SearchSpace space;
    space.input_shape = {1, 8, 8};
    space.num_classes = 4;
    space.stage_counts = {1};
    space.depths = {1};
    space.channels = {4, 8};
    space.kernels = {1, 3};
    space.weight_seed = 3;
    PowerParams power{1 << 20, 10, 0};
    CostParams costs = unit_costs();
    costs.vm_capacity = 4096;
    RewardParams rp;
    rp.latency_requirement = 1 << 26;
    DesignCaps caps = DesignCaps::nas_defaults();

    EvolveParams ep;
    ep.population = 16;
    ep.generations = 4;
    SearchResult a = evolve(space, power, costs, rp, 11, ep, caps);
    SearchResult b = evolve(space, power, costs, rp, 11, ep, caps);
    if (to_json(a) != to_json(b)) {
        detail = "same-seed searches differ";
        return false;
    }
    if (!a.found) {
        detail = "toy search found nothing";
        return false;
    }

    // exhaustive oracle over the four architectures
    NetworkSpec sup = make_supernet(space, 1);
    double best_score = -1e18;
    ArchConfig best_arch;
    for (int c : space.channels) {
        for (int k : space.kernels) {
            ArchConfig arch;
            arch.stages = {{1, c, k}};
            NetworkSpec net = extract_subnet(sup, arch);
            BestDesign bd = best_design(net, power, costs, rp.latency_requirement, caps);
            if (!bd.found) continue;
            double score = surrogate_accuracy(net) -
                           static_cast<double>(bd.estimate.latency_ticks) /
                               static_cast<double>(rp.latency_requirement);
            if (score > best_score) {
                best_score = score;
                best_arch = arch;
            }
        }
    }
    if (!(a.arch == best_arch)) {
        detail = "evolve missed the exhaustive optimum";
        return false;
    }
    if (!feasible(a.net, a.design, power, costs).ok ||
        a.estimate.latency_ticks > rp.latency_requirement) {
        detail = "winning design violates its own constraints";
        return false;
    }
    return true;
}

// --- 8. scheduler soundness --------------------------------------------------------

bool scheduler_soundness(std::string& detail) {
    SplitMix64 rng(112358);
    int schedulable_count = 0;
    for (int i = 0; i < 500; ++i) {
        CostParams costs;
        costs.e_mac = costs.t_mac = 1 + static_cast<std::int64_t>(rng.next_below(2));
        costs.e_nvm_rd = costs.t_nvm_rd = 1;
        costs.e_nvm_wr = costs.t_nvm_wr = 1 + static_cast<std::int64_t>(rng.next_below(2));
        costs.vm_capacity = 4096;

        TaskSet ts;
        std::int64_t e_need = 0;
        int n = 2 + static_cast<int>(rng.next_below(3));
        for (int k = 0; k < n; ++k) {
            TaskSpec t;
            t.id = k;
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
            UnitCost uc =
                unit_cost(net.layers[0], shapes[0], shapes[1], t.design.tiles[0], costs);
            UnitCost pc =
                preservation_cost(net.layers[0], shapes[1], t.design.tiles[0], 1, costs);
            e_need = std::max(e_need, 16 * costs.e_nvm_rd + uc.energy + pc.energy);
        }
        PowerParams power;
        power.e_budget = e_need + 20 + static_cast<std::int64_t>(rng.next_below(150));
        power.t_recharge = static_cast<std::int64_t>(rng.next_below(80));
        power.t_boot = static_cast<std::int64_t>(rng.next_below(4));

        SchedVerdict v;
        try {
            v = schedulable_edf(ts, power, costs);
        } catch (const Error&) {
            continue;
        }
        if (!v.schedulable) continue;
        schedulable_count++;

        std::int64_t max_off = 0, max_d = 0;
        for (const auto& t : ts) {
            max_off = std::max(max_off, t.offset);
            max_d = std::max(max_d, t.deadline);
        }
        ScheduleTrace trace =
            simulate_schedule(ts, power, costs, hyperperiod(ts) + max_off + max_d);
        if (!trace.misses.empty()) {
            detail = "set " + std::to_string(i) + ": schedulable verdict but " +
                     std::to_string(trace.misses.size()) + " miss(es)";
            return false;
        }
    }
    if (schedulable_count < 20) {
        detail = "only " + std::to_string(schedulable_count) + " schedulable sets drawn";
        return false;
    }
    detail = std::to_string(schedulable_count) + " schedulable sets, zero misses";
    return true;
}

// --- 9. artifact round-trips and goldens ---------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool artifacts_roundtrip(std::string& detail) {
    SplitMix64 rng(987);
    fs::path dir = fs::temp_directory_path() / "ehw_acceptance" / "csv";
    for (int i = 0; i < 25; ++i) {
        NetworkSpec net = random_network(rng, {3, 8, 3, true});
        if (network_from_json(to_json(net)) != net) {
            detail = "net json round trip failed";
            return false;
        }
        ExecutionDesign d = random_design(rng, net);
        if (design_from_json(to_json(d)) != d) {
            detail = "design json round trip failed";
            return false;
        }
        fs::remove_all(dir);
        fs::create_directories(dir);
        dump_csv(net, dir);
        NetworkSpec back = apply_csv_weights(net, load_csv(dir));
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            if (net.weights[l] != back.weights[l]) {
                detail = "csv round trip failed at layer " + std::to_string(l);
                return false;
            }
        }
    }

    // goldens frozen in tests/golden
    NetworkSpec wn = worked_net();
    fs::remove_all(dir);
    fs::create_directories(dir);
    dump_csv(wn, dir);
    if (slurp(dir / "layer0.csv") != slurp(fs::path(EHW_GOLDEN_DIR) / "layer0.csv")) {
        detail = "csv golden drifted";
        return false;
    }

    // the malformed inputs the loader must name precisely
    struct Bad {
        const char* content;
        const char* what;
    };
    Bad bads[] = {
        {"# shape: 1,1,1\n256\n", "malformed shape line"},
        {"# shape: 1,2,1,1,8\n256\n", "row length mismatch"},
        {"# shape: 1,2,1,1,8\n256,abc\n", "non-integer cell"},
    };
    for (const Bad& b : bads) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "layer0.csv") << b.content;
        try {
            load_csv(dir);
            detail = std::string("accepted: ") + b.what;
            return false;
        } catch (const Error&) {
        }
    }
    return true;
}

// --- 10. end-to-end pipeline over the CLI ----------------------------------------------

int run_cli(const std::string& args) {
    std::string cmd = std::string(EHW_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

bool pipeline(std::string& detail) {
    fs::path dir = fs::temp_directory_path() / "ehw_acceptance" / "pipeline";
    fs::remove_all(dir);
    fs::create_directories(dir);

    SearchSpace space;
    space.input_shape = {1, 12, 12};
    space.num_classes = 4;
    space.stage_counts = {1, 2};
    space.depths = {1, 2};
    space.channels = {4, 8};
    space.kernels = {1, 3};
    space.weight_seed = 21;
    save_json_file(dir / "space.json", to_json(space));
    PowerParams power{1 << 18, 25, 2};
    save_json_file(dir / "power.json", to_json(power));
    CostParams costs = unit_costs();
    costs.vm_capacity = 8192;
    save_json_file(dir / "costs.json", to_json(costs));
    RewardParams rp;
    rp.latency_requirement = 1 << 24;
    save_json_file(dir / "reward.json", to_json(rp));
    json ep;
    ep["population"] = 8;
    ep["generations"] = 3;
    save_json_file(dir / "evolve.json", ep);

    std::string base = "--space " + (dir / "space.json").string() + " --power " +
                       (dir / "power.json").string() + " --costs " +
                       (dir / "costs.json").string() + " --reward " +
                       (dir / "reward.json").string() + " --evolve " +
                       (dir / "evolve.json").string() + " --seed 7 --out ";
    if (run_cli("nas " + base + (dir / "sol.json").string()) != 0) {
        detail = "nas subcommand failed";
        return false;
    }
    if (run_cli("nas " + base + (dir / "sol2.json").string()) != 0) {
        detail = "nas rerun failed";
        return false;
    }
    if (slurp(dir / "sol.json") != slurp(dir / "sol2.json")) {
        detail = "same-seed nas runs produced different files";
        return false;
    }

    if (run_cli("dump --solution " + (dir / "sol.json").string() + " --format header --out " +
                (dir / "model.h").string()) != 0) {
        detail = "header dump failed";
        return false;
    }
    if (run_cli("dump --solution " + (dir / "sol.json").string() + " --format csv --out " +
                (dir / "weights").string()) != 0) {
        detail = "csv dump failed";
        return false;
    }
    if (run_cli("simulate --solution " + (dir / "sol.json").string() + " --power " +
                (dir / "power.json").string() + " --costs " + (dir / "costs.json").string() +
                " --input-seed 3 --out " + (dir / "sim.json").string()) != 0) {
        detail = "simulate failed";
        return false;
    }

    SearchResult sol = search_result_from_json(load_json_file(dir / "sol.json"));
    if (!sol.found) {
        detail = "nas reported no feasible solution";
        return false;
    }
    json sim = load_json_file(dir / "sim.json");
    std::int64_t latency = sim.at("latency_ticks").get<std::int64_t>();
    if (latency > rp.latency_requirement) {
        detail = "simulated latency exceeds the requirement";
        return false;
    }

    // the CLI's --input-seed convention: uniform int16 in [-256, 255]
    QTensor input(sol.net.input_shape.c, sol.net.input_shape.h, sol.net.input_shape.w,
                  sol.net.frac_bits);
    SplitMix64 irng(3);
    for (auto& v : input.data) {
        v = static_cast<std::int16_t>(static_cast<std::int64_t>(irng.next() % 512) - 256);
    }
    QTensor expect = run_reference(sol.net, input);
    QTensor got = tensor_from_json(sim.at("output"));
    if (!(got == expect)) {
        detail = "simulated output differs from the reference executor";
        return false;
    }

    // the dumped artifacts must reflect the solution bit-exactly
    std::string header = slurp(dir / "model.h");
    if (header != dump_header(sol.net, sol.design)) {
        detail = "dumped header does not match the solution";
        return false;
    }
    NetworkSpec back = apply_csv_weights(sol.net, load_csv(dir / "weights"));
    for (std::size_t l = 0; l < sol.net.layers.size(); ++l) {
        if (sol.net.weights[l] != back.weights[l]) {
            detail = "dumped csv weights do not round trip";
            return false;
        }
    }
    return true;
}

} // namespace

int main() {
    std::printf("acceptance suite\n");
    run_criterion(1, "tiling equivalence (200 random pairs, bit-exact)", tiling_equivalence);
    run_criterion(2, "crash consistency (21 nets x 1000 fault traces)", crash_consistency);
    run_criterion(3, "snapshot atomicity (exhaustive preservation-window faults)",
                  snapshot_atomicity);
    run_criterion(4, "model exactness (500 instances + worked example)", model_exactness);
    run_criterion(5, "explorer optimality (50 spaces vs brute force)", explorer_optimality);
    run_criterion(6, "hyper-tile latency monotone in S (50 nets)", hyper_tile);
    run_criterion(7, "NAS determinism and exhaustive-optimum toy search", nas_search);
    run_criterion(8, "scheduler soundness (500 task sets)", scheduler_soundness);
    run_criterion(9, "artifact round-trips, goldens, malformed-input rejection",
                  artifacts_roundtrip);
    run_criterion(10, "end-to-end nas -> dump -> simulate pipeline", pipeline);
    if (failures == 0) {
        std::printf("all criteria passed\n");
    } else {
        std::printf("%d criterion(s) failed\n", failures);
    }
    return failures;
}
