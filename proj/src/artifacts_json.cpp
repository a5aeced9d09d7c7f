#include <fstream>
#include <set>

#include "ehw/artifacts.hpp"

namespace ehw {

namespace {

// Path-tracking strict reader: every object must list its keys, unknown keys
// are rejected, and error messages carry the JSON path.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorKind::Schema, path_ + ": " + msg);
    }

    void require_object(std::initializer_list<const char*> required,
                        std::initializer_list<const char*> optional = {}) const {
        if (!j_->is_object()) fail("expected object");
        std::set<std::string> allowed;
        for (const char* k : required) {
            if (!j_->contains(k)) fail("missing required key \"" + std::string(k) + "\"");
            allowed.insert(k);
        }
        for (const char* k : optional) allowed.insert(k);
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            if (!allowed.count(it.key())) fail("unknown key \"" + it.key() + "\"");
        }
    }

    bool has(const char* key) const { return j_->contains(key); }

    Reader at(const char* key) const { return Reader((*j_)[key], path_ + "." + key); }
    Reader at(std::size_t i) const {
        return Reader((*j_)[i], path_ + "[" + std::to_string(i) + "]");
    }

    std::size_t array_size() const {
        if (!j_->is_array()) fail("expected array");
        return j_->size();
    }

    std::int64_t as_int() const {
        if (!j_->is_number_integer()) fail("expected integer");
        return j_->get<std::int64_t>();
    }
    int as_int32(std::int64_t lo, std::int64_t hi) const {
        std::int64_t v = as_int();
        if (v < lo || v > hi) {
            fail("value " + std::to_string(v) + " out of range [" + std::to_string(lo) +
                 ", " + std::to_string(hi) + "]");
        }
        return static_cast<int>(v);
    }
    double as_double() const {
        if (!j_->is_number()) fail("expected number");
        return j_->get<double>();
    }
    std::string as_string() const {
        if (!j_->is_string()) fail("expected string");
        return j_->get<std::string>();
    }
    std::uint64_t as_uint64() const {
        if (!j_->is_number_unsigned() && !j_->is_number_integer()) fail("expected integer");
        if (j_->is_number_integer() && j_->get<std::int64_t>() < 0) fail("expected >= 0");
        return j_->get<std::uint64_t>();
    }

    std::vector<int> as_int_list(std::int64_t lo, std::int64_t hi) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < array_size(); ++i) out.push_back(at(i).as_int32(lo, hi));
        return out;
    }
    std::vector<std::int64_t> as_int64_list() const {
        std::vector<std::int64_t> out;
        for (std::size_t i = 0; i < array_size(); ++i) out.push_back(at(i).as_int());
        return out;
    }

    const json& raw() const { return *j_; }
    const std::string& path() const { return path_; }

private:
    const json* j_;
    std::string path_;
};

Shape3 shape_from(const Reader& r) {
    if (r.array_size() != 3) r.fail("shape must be [c, h, w]");
    return {r.at(std::size_t{0}).as_int32(1, 1 << 20), r.at(std::size_t{1}).as_int32(1, 1 << 20),
            r.at(std::size_t{2}).as_int32(1, 1 << 20)};
}

QTensor tensor_from(const Reader& r) {
    r.require_object({"shape", "frac_bits", "data"});
    Shape3 s = shape_from(r.at("shape"));
    QTensor t(s.c, s.h, s.w, r.at("frac_bits").as_int32(0, 15));
    Reader data = r.at("data");
    if (data.array_size() != t.data.size()) {
        data.fail("expected " + std::to_string(t.data.size()) + " elements");
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        t.data[i] = static_cast<std::int16_t>(data.at(i).as_int32(-32768, 32767));
    }
    return t;
}

// Weight payload without an explicit shape (the layer spec implies it).
QTensor weights_from(const Reader& r, int c, int h, int w) {
    r.require_object({"frac_bits", "data"});
    QTensor t(c, h, w, r.at("frac_bits").as_int32(0, 30));
    Reader data = r.at("data");
    if (data.array_size() != t.data.size()) {
        data.fail("expected " + std::to_string(t.data.size()) + " elements");
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        t.data[i] = static_cast<std::int16_t>(data.at(i).as_int32(-32768, 32767));
    }
    return t;
}

json weights_to_json(const QTensor& t) {
    json j;
    j["frac_bits"] = t.frac_bits;
    j["data"] = t.data;
    return j;
}

} // namespace

json to_json(const QTensor& t) {
    json j;
    j["shape"] = {t.channels, t.height, t.width};
    j["frac_bits"] = t.frac_bits;
    j["data"] = t.data;
    return j;
}

QTensor tensor_from_json(const json& j) { return tensor_from(Reader(j, "$")); }

json to_json(const NetworkSpec& net) {
    json j;
    j["input_shape"] = {net.input_shape.c, net.input_shape.h, net.input_shape.w};
    j["frac_bits"] = net.frac_bits;
    j["output_classes"] = net.output_classes;
    j["layers"] = json::array();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        json jl;
        switch (l.kind) {
        case LayerKind::Conv2D:
            jl["kind"] = "conv2d";
            jl["c_in"] = l.c_in;
            jl["c_out"] = l.c_out;
            jl["k"] = l.k;
            jl["s"] = l.s;
            jl["p"] = l.p;
            break;
        case LayerKind::MaxPool2D:
            jl["kind"] = "maxpool2d";
            jl["w"] = l.w;
            jl["s"] = l.s;
            break;
        case LayerKind::FullyConnected:
            jl["kind"] = "fc";
            jl["n_in"] = l.n_in;
            jl["n_out"] = l.n_out;
            break;
        }
        if (net.weights[i].has_value()) jl["weights"] = weights_to_json(*net.weights[i]);
        if (net.biases[i].has_value()) jl["bias"] = weights_to_json(*net.biases[i]);
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

NetworkSpec network_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"input_shape", "frac_bits", "output_classes", "layers"});
    NetworkSpec net;
    net.input_shape = shape_from(r.at("input_shape"));
    net.frac_bits = r.at("frac_bits").as_int32(0, 15);
    net.output_classes = r.at("output_classes").as_int32(0, 1 << 20);

    Reader layers = r.at("layers");
    for (std::size_t i = 0; i < layers.array_size(); ++i) {
        Reader rl = layers.at(i);
        std::string kind = rl.at("kind").as_string();
        LayerSpec l;
        if (kind == "conv2d") {
            rl.require_object({"kind", "c_in", "c_out", "k", "s", "p"},
                              {"weights", "bias"});
            l = LayerSpec::conv(rl.at("c_in").as_int32(1, 1 << 16),
                                rl.at("c_out").as_int32(1, 1 << 16),
                                rl.at("k").as_int32(1, 255), rl.at("s").as_int32(1, 255),
                                rl.at("p").as_int32(0, 255));
        } else if (kind == "maxpool2d") {
            rl.require_object({"kind", "w", "s"});
            l = LayerSpec::pool(rl.at("w").as_int32(1, 255), rl.at("s").as_int32(1, 255));
        } else if (kind == "fc") {
            rl.require_object({"kind", "n_in", "n_out"}, {"weights", "bias"});
            l = LayerSpec::fc(rl.at("n_in").as_int32(1, 1 << 24),
                              rl.at("n_out").as_int32(1, 1 << 24));
        } else {
            rl.at("kind").fail("unknown layer kind \"" + kind + "\"");
        }
        net.layers.push_back(l);

        if (rl.has("weights")) {
            int c = l.kind == LayerKind::Conv2D ? l.c_out : l.n_out;
            int h = l.kind == LayerKind::Conv2D ? l.c_in : l.n_in;
            int w = l.kind == LayerKind::Conv2D ? l.k * l.k : 1;
            net.weights.push_back(weights_from(rl.at("weights"), c, h, w));
        } else {
            net.weights.emplace_back();
        }
        if (rl.has("bias")) {
            int c = l.kind == LayerKind::Conv2D ? l.c_out : l.n_out;
            net.biases.push_back(weights_from(rl.at("bias"), c, 1, 1));
        } else {
            net.biases.emplace_back();
        }
    }
    return net;
}

json to_json(const ExecutionDesign& d) {
    json j;
    j["batch_size"] = d.batch_size;
    j["tiles"] = json::array();
    for (const TileConfig& t : d.tiles) {
        json jt;
        jt["t_cout"] = t.t_cout;
        jt["t_h"] = t.t_h;
        jt["t_w"] = t.t_w;
        jt["order"] = loop_order_name(t.loop_order);
        j["tiles"].push_back(std::move(jt));
    }
    return j;
}

ExecutionDesign design_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"batch_size", "tiles"});
    ExecutionDesign d;
    d.batch_size = r.at("batch_size").as_int32(1, 1 << 20);
    Reader tiles = r.at("tiles");
    for (std::size_t i = 0; i < tiles.array_size(); ++i) {
        Reader rt = tiles.at(i);
        rt.require_object({"t_cout", "t_h", "t_w", "order"});
        TileConfig t;
        t.t_cout = rt.at("t_cout").as_int32(1, 1 << 20);
        t.t_h = rt.at("t_h").as_int32(1, 1 << 20);
        t.t_w = rt.at("t_w").as_int32(1, 1 << 20);
        try {
            t.loop_order = loop_order_from_name(rt.at("order").as_string());
        } catch (const Error& e) {
            rt.at("order").fail(e.what());
        }
        d.tiles.push_back(t);
    }
    return d;
}

json to_json(const PowerParams& p) {
    return json{{"e_budget", p.e_budget}, {"t_recharge", p.t_recharge}, {"t_boot", p.t_boot}};
}

PowerParams power_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"e_budget", "t_recharge", "t_boot"});
    PowerParams p;
    p.e_budget = r.at("e_budget").as_int();
    p.t_recharge = r.at("t_recharge").as_int();
    p.t_boot = r.at("t_boot").as_int();
    if (p.e_budget <= 0) r.at("e_budget").fail("must be > 0");
    if (p.t_recharge < 0) r.at("t_recharge").fail("must be >= 0");
    if (p.t_boot < 0) r.at("t_boot").fail("must be >= 0");
    return p;
}

json to_json(const CostParams& c) {
    return json{{"e_mac", c.e_mac},       {"t_mac", c.t_mac},
                {"e_nvm_rd", c.e_nvm_rd}, {"t_nvm_rd", c.t_nvm_rd},
                {"e_nvm_wr", c.e_nvm_wr}, {"t_nvm_wr", c.t_nvm_wr},
                {"vm_capacity", c.vm_capacity}};
}

CostParams costs_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object(
        {"e_mac", "t_mac", "e_nvm_rd", "t_nvm_rd", "e_nvm_wr", "t_nvm_wr", "vm_capacity"});
    CostParams c;
    c.e_mac = r.at("e_mac").as_int();
    c.t_mac = r.at("t_mac").as_int();
    c.e_nvm_rd = r.at("e_nvm_rd").as_int();
    c.t_nvm_rd = r.at("t_nvm_rd").as_int();
    c.e_nvm_wr = r.at("e_nvm_wr").as_int();
    c.t_nvm_wr = r.at("t_nvm_wr").as_int();
    c.vm_capacity = r.at("vm_capacity").as_int();
    const char* names[] = {"e_mac", "t_mac", "e_nvm_rd", "t_nvm_rd", "e_nvm_wr", "t_nvm_wr"};
    std::int64_t vals[] = {c.e_mac, c.t_mac, c.e_nvm_rd, c.t_nvm_rd, c.e_nvm_wr, c.t_nvm_wr};
    for (int i = 0; i < 6; ++i) {
        if (vals[i] < 0) r.at(names[i]).fail("must be >= 0");
    }
    if (c.vm_capacity <= 0) r.at("vm_capacity").fail("must be > 0");
    return c;
}

json to_json(const FaultTrace& f) { return json{{"ticks", f.ticks}}; }

FaultTrace faults_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"ticks"});
    FaultTrace f;
    f.ticks = r.at("ticks").as_int64_list();
    for (std::size_t i = 0; i < f.ticks.size(); ++i) {
        if (f.ticks[i] < 0 || (i > 0 && f.ticks[i] <= f.ticks[i - 1])) {
            r.at("ticks").at(i).fail("ticks must be non-negative and strictly increasing");
        }
    }
    return f;
}

json to_json(const TaskSpec& t) {
    json j;
    j["id"] = t.id;
    j["period"] = t.period;
    j["deadline"] = t.deadline;
    j["offset"] = t.offset;
    j["net"] = to_json(t.net);
    j["design"] = to_json(t.design);
    return j;
}

TaskSpec task_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"id", "period", "deadline", "offset", "net", "design"});
    TaskSpec t;
    t.id = r.at("id").as_int32(0, 1 << 20);
    t.period = r.at("period").as_int();
    t.deadline = r.at("deadline").as_int();
    t.offset = r.at("offset").as_int();
    if (t.period <= 0) r.at("period").fail("must be > 0");
    if (t.deadline <= 0 || t.deadline > t.period) {
        r.at("deadline").fail("must satisfy 0 < deadline <= period");
    }
    if (t.offset < 0) r.at("offset").fail("must be >= 0");
    t.net = network_from_json(r.at("net").raw());
    t.design = design_from_json(r.at("design").raw());
    return t;
}

json to_json(const TaskSet& ts) {
    json j;
    j["tasks"] = json::array();
    for (const auto& t : ts) j["tasks"].push_back(to_json(t));
    return j;
}

TaskSet taskset_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"tasks"});
    TaskSet ts;
    Reader tasks = r.at("tasks");
    for (std::size_t i = 0; i < tasks.array_size(); ++i) {
        ts.push_back(task_from_json(tasks.at(i).raw()));
    }
    return ts;
}

json to_json(const DesignCaps& c) {
    json j;
    j["t_cout"] = c.t_cout;
    j["t_h"] = c.t_h;
    j["t_w"] = c.t_w;
    json orders = json::array();
    for (int oi : c.order_indices) orders.push_back(loop_order_name(all_loop_orders()[oi]));
    j["orders"] = orders;
    j["batch_sizes"] = c.batch_sizes;
    j["uniform_tiles"] = c.uniform_tiles;
    return j;
}

DesignCaps caps_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"t_cout", "t_h", "t_w", "orders", "batch_sizes"}, {"uniform_tiles"});
    DesignCaps c;
    c.t_cout = r.at("t_cout").as_int_list(1, 1 << 20);
    c.t_h = r.at("t_h").as_int_list(1, 1 << 20);
    c.t_w = r.at("t_w").as_int_list(1, 1 << 20);
    Reader orders = r.at("orders");
    for (std::size_t i = 0; i < orders.array_size(); ++i) {
        try {
            c.order_indices.push_back(loop_order_index(
                loop_order_from_name(orders.at(i).as_string())));
        } catch (const Error& e) {
            orders.at(i).fail(e.what());
        }
    }
    c.batch_sizes = r.at("batch_sizes").as_int_list(1, 1 << 20);
    if (r.has("uniform_tiles")) {
        if (!r.at("uniform_tiles").raw().is_boolean()) r.at("uniform_tiles").fail("expected bool");
        c.uniform_tiles = r.at("uniform_tiles").raw().get<bool>();
    }
    return c;
}

json to_json(const SearchSpace& s) {
    json j;
    j["input_shape"] = {s.input_shape.c, s.input_shape.h, s.input_shape.w};
    j["classes"] = s.num_classes;
    j["stage_counts"] = s.stage_counts;
    j["depths"] = s.depths;
    j["channels"] = s.channels;
    j["kernels"] = s.kernels;
    j["frac_bits"] = s.frac_bits;
    j["weight_seed"] = s.weight_seed;
    return j;
}

SearchSpace space_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"input_shape", "classes", "stage_counts", "depths", "channels",
                      "kernels", "frac_bits", "weight_seed"});
    SearchSpace s;
    s.input_shape = shape_from(r.at("input_shape"));
    s.num_classes = r.at("classes").as_int32(1, 1 << 16);
    s.stage_counts = r.at("stage_counts").as_int_list(1, 16);
    s.depths = r.at("depths").as_int_list(1, 16);
    s.channels = r.at("channels").as_int_list(1, 1 << 12);
    s.kernels = r.at("kernels").as_int_list(1, 15);
    for (int k : s.kernels) {
        if (k % 2 == 0) r.at("kernels").fail("kernels must be odd");
    }
    s.frac_bits = r.at("frac_bits").as_int32(0, 15);
    s.weight_seed = r.at("weight_seed").as_uint64();
    if (s.stage_counts.empty() || s.depths.empty() || s.channels.empty() || s.kernels.empty()) {
        r.fail("search space lists must not be empty");
    }
    return s;
}

json to_json(const RewardParams& p) {
    return json{{"ema_decay", p.ema_decay},
                {"latency_requirement", p.latency_requirement},
                {"latency_sign", p.latency_sign}};
}

RewardParams reward_params_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"ema_decay", "latency_requirement", "latency_sign"});
    RewardParams p;
    p.ema_decay = r.at("ema_decay").as_double();
    p.latency_requirement = r.at("latency_requirement").as_int();
    p.latency_sign = r.at("latency_sign").as_int32(-1, 1);
    if (p.ema_decay <= 0.0 || p.ema_decay >= 1.0) r.at("ema_decay").fail("must be in (0, 1)");
    if (p.latency_requirement <= 0) r.at("latency_requirement").fail("must be > 0");
    if (p.latency_sign == 0) r.at("latency_sign").fail("must be -1 or +1");
    return p;
}

json to_json(const EvolveParams& e) {
    return json{{"population", e.population},
                {"generations", e.generations},
                {"mutation_rate", e.mutation_rate},
                {"tournament", e.tournament},
                {"elitism", e.elitism}};
}

EvolveParams evolve_params_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({}, {"population", "generations", "mutation_rate", "tournament",
                          "elitism"});
    EvolveParams e;
    if (r.has("population")) e.population = r.at("population").as_int32(1, 4096);
    if (r.has("generations")) e.generations = r.at("generations").as_int32(1, 100000);
    if (r.has("mutation_rate")) {
        e.mutation_rate = r.at("mutation_rate").as_double();
        if (e.mutation_rate < 0.0 || e.mutation_rate > 1.0) {
            r.at("mutation_rate").fail("must be in [0, 1]");
        }
    }
    if (r.has("tournament")) e.tournament = r.at("tournament").as_int32(1, 4096);
    if (r.has("elitism")) e.elitism = r.at("elitism").as_int32(0, 4096);
    return e;
}

json to_json(const PerfEstimate& e) {
    return json{{"latency_ticks", e.latency_ticks},
                {"cycles", e.cycles},
                {"max_cycle_energy", e.max_cycle_energy},
                {"preservation_energy_total", e.preservation_energy_total},
                {"fetch_energy_total", e.fetch_energy_total},
                {"compute_energy_total", e.compute_energy_total},
                {"vm_peak_bytes", e.vm_peak_bytes},
                {"preservations", e.preservations}};
}

json to_json(const SimResult& r) {
    json j;
    j["latency_ticks"] = r.latency_ticks;
    j["cycles"] = r.cycles;
    j["per_cycle_energy"] = r.per_cycle_energy;
    j["preservations"] = r.preservations;
    j["recoveries"] = r.recoveries;
    j["lost_units"] = r.lost_units;
    j["argmax"] = r.argmax;
    j["output"] = to_json(r.output);
    return j;
}

json to_json(const TileStats& s) {
    json j;
    j["layers"] = json::array();
    for (const auto& l : s.layers) {
        json jl;
        jl["layer"] = l.layer;
        jl["units"] = l.units;
        jl["unit_macs"] = l.unit_macs;
        jl["unit_fetch_bytes"] = l.unit_fetch_bytes;
        jl["unit_out_bytes"] = l.unit_out_bytes;
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

json to_json(const SchedVerdict& v) {
    return json{{"schedulable", v.schedulable},
                {"witness_delta", v.witness_delta},
                {"witness", v.witness},
                {"wcet", v.wcet}};
}

json to_json(const ScheduleTrace& t) {
    json j;
    j["cycles"] = t.cycles;
    j["jobs"] = json::array();
    for (const auto& r : t.jobs) {
        j["jobs"].push_back(json{{"task_id", r.task_id},
                                 {"job", r.job},
                                 {"release", r.release},
                                 {"deadline", r.deadline},
                                 {"completion", r.completion},
                                 {"active_ticks", r.active_ticks}});
    }
    j["misses"] = json::array();
    for (const auto& m : t.misses) {
        j["misses"].push_back(json{{"task_id", m.task_id},
                                   {"job", m.job},
                                   {"deadline", m.deadline},
                                   {"completion", m.completion}});
    }
    return j;
}

json to_json(const ArchConfig& a) {
    json j;
    j["stages"] = json::array();
    for (const auto& s : a.stages) {
        j["stages"].push_back(
            json{{"depth", s.depth}, {"channels", s.channels}, {"kernel", s.kernel}});
    }
    return j;
}

ArchConfig arch_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"stages"});
    ArchConfig a;
    Reader stages = r.at("stages");
    for (std::size_t i = 0; i < stages.array_size(); ++i) {
        Reader rs = stages.at(i);
        rs.require_object({"depth", "channels", "kernel"});
        StageConfig s;
        s.depth = rs.at("depth").as_int32(1, 16);
        s.channels = rs.at("channels").as_int32(1, 1 << 12);
        s.kernel = rs.at("kernel").as_int32(1, 15);
        a.stages.push_back(s);
    }
    return a;
}

json to_json(const SearchResult& r) {
    json j;
    j["found"] = r.found;
    if (r.found) {
        j["arch"] = to_json(r.arch);
        j["net"] = to_json(r.net);
        j["design"] = to_json(r.design);
        j["estimate"] = to_json(r.estimate);
        j["accuracy"] = r.accuracy;
        j["reward"] = r.reward;
    }
    j["history"] = json::array();
    for (const auto& g : r.history) {
        j["history"].push_back(json{{"generation", g.generation},
                                    {"feasible_count", g.feasible_count},
                                    {"best_reward", g.best_reward},
                                    {"best_accuracy", g.best_accuracy},
                                    {"best_latency_ticks", g.best_latency_ticks}});
    }
    return j;
}

SearchResult search_result_from_json(const json& j) {
    Reader r(j, "$");
    r.require_object({"found", "history"},
                     {"arch", "net", "design", "estimate", "accuracy", "reward"});
    SearchResult res;
    if (!r.at("found").raw().is_boolean()) r.at("found").fail("expected bool");
    res.found = r.at("found").raw().get<bool>();
    if (res.found) {
        res.arch = arch_from_json(r.at("arch").raw());
        res.net = network_from_json(r.at("net").raw());
        res.design = design_from_json(r.at("design").raw());
        Reader re = r.at("estimate");
        re.require_object({"latency_ticks", "cycles", "max_cycle_energy",
                           "preservation_energy_total", "fetch_energy_total",
                           "compute_energy_total", "vm_peak_bytes", "preservations"});
        res.estimate.latency_ticks = re.at("latency_ticks").as_int();
        res.estimate.cycles = re.at("cycles").as_int();
        res.estimate.max_cycle_energy = re.at("max_cycle_energy").as_int();
        res.estimate.preservation_energy_total = re.at("preservation_energy_total").as_int();
        res.estimate.fetch_energy_total = re.at("fetch_energy_total").as_int();
        res.estimate.compute_energy_total = re.at("compute_energy_total").as_int();
        res.estimate.vm_peak_bytes = re.at("vm_peak_bytes").as_int();
        res.estimate.preservations = re.at("preservations").as_int();
        res.accuracy = r.at("accuracy").as_double();
        res.reward = r.at("reward").as_double();
    }
    Reader hist = r.at("history");
    for (std::size_t i = 0; i < hist.array_size(); ++i) {
        Reader rg = hist.at(i);
        rg.require_object({"generation", "feasible_count", "best_reward", "best_accuracy",
                           "best_latency_ticks"});
        GenerationStats g;
        g.generation = rg.at("generation").as_int32(0, 1 << 30);
        g.feasible_count = rg.at("feasible_count").as_int32(0, 1 << 30);
        g.best_reward = rg.at("best_reward").as_double();
        g.best_accuracy = rg.at("best_accuracy").as_double();
        g.best_latency_ticks = rg.at("best_latency_ticks").as_int();
        res.history.push_back(g);
    }
    return res;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::Parse, "malformed JSON in " + path.string());
    return j;
}

void save_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<std::uint8_t> nvm_image_bytes(const NvmImage& nvm) {
    std::vector<std::uint8_t> out(nvm.snapshot_area.begin(), nvm.snapshot_area.end());
    for (const auto& region : nvm.layer_output_bytes) {
        out.insert(out.end(), region.begin(), region.end());
    }
    return out;
}

} // namespace ehw
