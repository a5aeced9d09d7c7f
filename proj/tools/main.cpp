#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ehw/artifacts.hpp"
#include "ehw/explorer.hpp"
#include "ehw/intermittent.hpp"
#include "ehw/perfmodel.hpp"
#include "ehw/scheduler.hpp"

namespace {

using namespace ehw;
namespace fs = std::filesystem;

// Relative config paths may be resolved against EHW_CONFIG_DIR.
fs::path resolve_config(const std::string& p) {
    fs::path path(p);
    if (path.is_absolute() || fs::exists(path)) return path;
    if (const char* dir = std::getenv("EHW_CONFIG_DIR")) {
        fs::path alt = fs::path(dir) / path;
        if (fs::exists(alt)) return alt;
    }
    return path;
}

json load_config(const std::string& p) { return load_json_file(resolve_config(p)); }

void write_result(const std::string& out_path, const json& j) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        save_json_file(out_path, j);
    }
}

QTensor seeded_input(const NetworkSpec& net, std::uint64_t seed) {
    QTensor t(net.input_shape.c, net.input_shape.h, net.input_shape.w, net.frac_bits);
    SplitMix64 rng(seed);
    for (auto& v : t.data) {
        v = static_cast<std::int16_t>(static_cast<std::int64_t>(rng.next() % 512) - 256);
    }
    return t;
}

struct NetDesignArgs {
    std::string net_path, design_path, solution_path;

    void attach(CLI::App* cmd) {
        auto* n = cmd->add_option("--net", net_path, "network JSON");
        auto* d = cmd->add_option("--design", design_path, "execution design JSON");
        auto* s = cmd->add_option("--solution", solution_path,
                                  "search-result JSON providing net and design");
        n->excludes(s);
        d->excludes(s);
    }

    std::pair<NetworkSpec, ExecutionDesign> load() const {
        if (!solution_path.empty()) {
            SearchResult sol = search_result_from_json(load_config(solution_path));
            if (!sol.found) {
                throw Error(ErrorKind::Infeasible, "solution file holds no feasible result");
            }
            return {sol.net, sol.design};
        }
        if (net_path.empty() || design_path.empty()) {
            throw Error(ErrorKind::Parameter, "--net and --design (or --solution) required");
        }
        return {network_from_json(load_config(net_path)),
                design_from_json(load_config(design_path))};
    }
};

int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::Infeasible:
    case ErrorKind::Supply:
        return 3;
    case ErrorKind::State:
        return 1;
    default:
        return 2;
    }
}

const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Input: return "input";
    case ErrorKind::Design: return "design";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Supply: return "supply";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::State: return "state";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intermittent inference workbench"};
    app.require_subcommand(1);

    // ---- infer ----
    auto* infer = app.add_subcommand("infer", "run reference and tiled executors, check match");
    NetDesignArgs infer_nd;
    infer_nd.attach(infer);
    std::string infer_input, infer_out;
    std::uint64_t infer_input_seed = 1;
    bool infer_stats = false;
    infer->add_option("--input", infer_input, "input tensor JSON");
    infer->add_option("--input-seed", infer_input_seed, "seeded deterministic input");
    infer->add_option("--out", infer_out, "output JSON path (default stdout)");
    infer->add_flag("--stats", infer_stats, "include tile stats");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "intermittent execution across power cycles");
    NetDesignArgs sim_nd;
    sim_nd.attach(sim);
    std::string sim_power, sim_costs, sim_input, sim_faults, sim_out, sim_nvm_out;
    std::uint64_t sim_input_seed = 1, sim_fault_seed = 0;
    std::int64_t sim_fault_mean = 0, sim_fault_horizon = 0;
    sim->add_option("--power", sim_power, "power params JSON")->required();
    sim->add_option("--costs", sim_costs, "cost params JSON")->required();
    sim->add_option("--input", sim_input, "input tensor JSON");
    sim->add_option("--input-seed", sim_input_seed, "seeded deterministic input");
    sim->add_option("--faults", sim_faults, "fault trace JSON");
    sim->add_option("--fault-seed", sim_fault_seed, "generate a fault trace with this seed");
    sim->add_option("--fault-mean", sim_fault_mean, "mean ticks between generated faults");
    sim->add_option("--fault-horizon", sim_fault_horizon,
                    "fault horizon (default: 2x fault-free latency)");
    sim->add_option("--nvm-out", sim_nvm_out, "write the final raw NVM image here");
    sim->add_option("--out", sim_out, "output JSON path (default stdout)");

    // ---- predict ----
    auto* pred = app.add_subcommand("predict", "closed-form latency/energy estimate");
    NetDesignArgs pred_nd;
    pred_nd.attach(pred);
    std::string pred_power, pred_costs, pred_out;
    pred->add_option("--power", pred_power, "power params JSON")->required();
    pred->add_option("--costs", pred_costs, "cost params JSON")->required();
    pred->add_option("--out", pred_out, "output JSON path (default stdout)");

    // ---- explore ----
    auto* expl = app.add_subcommand("explore", "search execution designs for lowest latency");
    std::string expl_net, expl_power, expl_costs, expl_caps, expl_out;
    std::int64_t expl_lreq = 0;
    expl->add_option("--net", expl_net, "network JSON")->required();
    expl->add_option("--power", expl_power, "power params JSON")->required();
    expl->add_option("--costs", expl_costs, "cost params JSON")->required();
    expl->add_option("--lreq", expl_lreq, "latency requirement, ticks")->required();
    expl->add_option("--caps", expl_caps, "design caps JSON (default: full caps)");
    std::int64_t expl_max_designs = 1000000;
    expl->add_option("--max-designs", expl_max_designs,
                     "refuse spaces larger than this (guards runaway searches)");
    expl->add_option("--out", expl_out, "output JSON path (default stdout)");

    // ---- nas ----
    auto* nas = app.add_subcommand("nas", "evolutionary architecture search");
    std::string nas_space, nas_power, nas_costs, nas_reward, nas_evolve, nas_caps, nas_out;
    std::uint64_t nas_seed = 1;
    nas->add_option("--space", nas_space, "search space JSON")->required();
    nas->add_option("--power", nas_power, "power params JSON")->required();
    nas->add_option("--costs", nas_costs, "cost params JSON")->required();
    nas->add_option("--reward", nas_reward, "reward params JSON")->required();
    nas->add_option("--evolve", nas_evolve, "evolve params JSON (optional)");
    nas->add_option("--caps", nas_caps, "design caps JSON (default: nas caps)");
    nas->add_option("--seed", nas_seed, "search seed");
    nas->add_option("--out", nas_out, "output JSON path (default stdout)");

    // ---- sched ----
    auto* sched = app.add_subcommand("sched", "EDF schedulability analysis");
    std::string sched_taskset, sched_power, sched_costs, sched_out;
    std::int64_t sched_tau = 1, sched_horizon = 0;
    bool sched_sim = false;
    sched->add_option("--taskset", sched_taskset, "task set JSON")->required();
    sched->add_option("--power", sched_power, "power params JSON")->required();
    sched->add_option("--costs", sched_costs, "cost params JSON")->required();
    sched->add_option("--tau", sched_tau, "ticks per energy unit for the supply model");
    sched->add_flag("--simulate", sched_sim, "also run the schedule simulator");
    sched->add_option("--horizon", sched_horizon,
                      "simulation horizon (default: hyperperiod + max offset + max deadline)");
    sched->add_option("--out", sched_out, "output JSON path (default stdout)");

    // ---- dump ----
    auto* dump = app.add_subcommand("dump", "emit deployable artifacts");
    NetDesignArgs dump_nd;
    dump_nd.attach(dump);
    std::string dump_format = "header", dump_out;
    dump->add_option("--format", dump_format, "header | csv | json")
        ->check(CLI::IsMember({"header", "csv", "json"}));
    dump->add_option("--out", dump_out, "output file (csv: directory)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*infer) {
            auto [net, design] = infer_nd.load();
            QTensor input = infer_input.empty()
                                ? seeded_input(net, infer_input_seed)
                                : tensor_from_json(load_config(infer_input));
            QTensor ref = run_reference(net, input);
            TiledResult tiled = run_tiled(net, input, design);
            json j;
            j["match"] = ref == tiled.output;
            j["argmax"] = classify(ref);
            j["output"] = to_json(ref);
            if (infer_stats) j["tile_stats"] = to_json(tiled.stats);
            write_result(infer_out, j);
            return j["match"].get<bool>() ? 0 : 1;
        }

        if (*sim) {
            auto [net, design] = sim_nd.load();
            PowerParams power = power_from_json(load_config(sim_power));
            CostParams costs = costs_from_json(load_config(sim_costs));
            QTensor input = sim_input.empty() ? seeded_input(net, sim_input_seed)
                                              : tensor_from_json(load_config(sim_input));
            FaultTrace faults;
            if (!sim_faults.empty()) {
                faults = faults_from_json(load_config(sim_faults));
            } else if (sim_fault_mean > 0) {
                std::int64_t horizon = sim_fault_horizon;
                if (horizon <= 0) {
                    horizon = 2 * predict(net, design, power, costs).latency_ticks;
                }
                faults = make_fault_trace(sim_fault_seed, sim_fault_mean, horizon);
            }
            SimResult r = simulate(net, input, design, power, costs, faults);
            if (!sim_nvm_out.empty()) {
                auto bytes = nvm_image_bytes(r.nvm);
                std::ofstream out(sim_nvm_out, std::ios::binary);
                if (!out) throw Error(ErrorKind::Io, "cannot write " + sim_nvm_out);
                out.write(reinterpret_cast<const char*>(bytes.data()),
                          static_cast<std::streamsize>(bytes.size()));
            }
            write_result(sim_out, to_json(r));
            return 0;
        }

        if (*pred) {
            auto [net, design] = pred_nd.load();
            PowerParams power = power_from_json(load_config(pred_power));
            CostParams costs = costs_from_json(load_config(pred_costs));
            write_result(pred_out, to_json(predict(net, design, power, costs)));
            return 0;
        }

        if (*expl) {
            NetworkSpec net = network_from_json(load_config(expl_net));
            PowerParams power = power_from_json(load_config(expl_power));
            CostParams costs = costs_from_json(load_config(expl_costs));
            DesignCaps caps = expl_caps.empty() ? DesignCaps::defaults()
                                                : caps_from_json(load_config(expl_caps));
            std::int64_t space_size = design_space_size(net, caps);
            if (space_size > expl_max_designs) {
                throw Error(ErrorKind::Parameter,
                            "design space holds " + std::to_string(space_size) +
                                " candidates (limit " + std::to_string(expl_max_designs) +
                                "); restrict --caps or raise --max-designs");
            }
            BestDesign bd = best_design(net, power, costs, expl_lreq, caps);
            json j;
            j["found"] = bd.found;
            if (bd.found) {
                j["design"] = to_json(bd.design);
                j["estimate"] = to_json(bd.estimate);
            }
            write_result(expl_out, j);
            return bd.found ? 0 : 3;
        }

        if (*nas) {
            SearchSpace space = space_from_json(load_config(nas_space));
            PowerParams power = power_from_json(load_config(nas_power));
            CostParams costs = costs_from_json(load_config(nas_costs));
            RewardParams rp = reward_params_from_json(load_config(nas_reward));
            EvolveParams ep;
            if (!nas_evolve.empty()) ep = evolve_params_from_json(load_config(nas_evolve));
            DesignCaps caps = nas_caps.empty() ? DesignCaps::nas_defaults()
                                               : caps_from_json(load_config(nas_caps));
            SearchResult r = evolve(space, power, costs, rp, nas_seed, ep, caps);
            write_result(nas_out, to_json(r));
            return r.found ? 0 : 3;
        }

        if (*sched) {
            TaskSet tasks = taskset_from_json(load_config(sched_taskset));
            PowerParams power = power_from_json(load_config(sched_power));
            CostParams costs = costs_from_json(load_config(sched_costs));
            SchedVerdict v = schedulable_edf(tasks, power, costs, sched_tau);
            json j = to_json(v);
            if (sched_sim) {
                std::int64_t horizon = sched_horizon;
                if (horizon <= 0) {
                    std::int64_t max_off = 0, max_d = 0;
                    for (const auto& t : tasks) {
                        max_off = std::max(max_off, t.offset);
                        max_d = std::max(max_d, t.deadline);
                    }
                    horizon = hyperperiod(tasks) + max_off + max_d;
                }
                j["simulation"] = to_json(simulate_schedule(tasks, power, costs, horizon));
            }
            write_result(sched_out, j);
            return 0;
        }

        if (*dump) {
            auto [net, design] = dump_nd.load();
            if (dump_format == "header") {
                std::ofstream out(dump_out);
                if (!out) throw Error(ErrorKind::Io, "cannot write " + dump_out);
                out << dump_header(net, design);
            } else if (dump_format == "csv") {
                dump_csv(net, dump_out);
            } else {
                json j;
                j["net"] = to_json(net);
                j["design"] = to_json(design);
                save_json_file(dump_out, j);
            }
            return 0;
        }
    } catch (const Error& e) {
        json err;
        err["error"] = {{"kind", kind_name(e.kind())}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"kind", "internal"}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        return 1;
    }
    return 0;
}
