#include "ehw/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ehw {

namespace {

std::vector<int> clamp_options(const std::vector<int>& values, int dim) {
    std::vector<int> out;
    for (int v : values) {
        int c = std::min(v, dim);
        if (c >= 1 && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct LayerOptions {
    bool tiled = false;  // pool layers are untiled
    std::vector<int> t_cout, t_h, t_w;
    std::vector<int> orders;
};

struct SpaceView {
    std::vector<LayerOptions> layers;
    std::vector<int> batch_sizes;
    // Full output dims per layer, used for uniform-tile clamping.
    std::vector<Shape3> tiled_dims;
};

SpaceView build_space(const NetworkSpec& net, const DesignCaps& caps) {
    require_valid(net);
    if (caps.t_cout.empty() || caps.t_h.empty() || caps.t_w.empty() ||
        caps.order_indices.empty() || caps.batch_sizes.empty()) {
        throw Error(ErrorKind::Parameter, "design caps must not be empty");
    }
    SpaceView view;
    auto shapes = layer_shapes(net);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const LayerSpec& l = net.layers[li];
        LayerOptions opt;
        Shape3 dims{1, 1, 1};
        if (l.kind != LayerKind::MaxPool2D) {
            opt.tiled = true;
            dims = l.kind == LayerKind::FullyConnected ? Shape3{l.n_out, 1, 1}
                                                       : shapes[li + 1];
            opt.t_cout = clamp_options(caps.t_cout, dims.c);
            opt.t_h = clamp_options(caps.t_h, dims.h);
            opt.t_w = clamp_options(caps.t_w, dims.w);
            opt.orders = caps.order_indices;
            std::sort(opt.orders.begin(), opt.orders.end());
            opt.orders.erase(std::unique(opt.orders.begin(), opt.orders.end()),
                             opt.orders.end());
            for (int o : opt.orders) {
                if (o < 0 || o > 5) throw Error(ErrorKind::Parameter, "order index out of range");
            }
        }
        view.layers.push_back(std::move(opt));
        view.tiled_dims.push_back(dims);
    }
    view.batch_sizes = caps.batch_sizes;
    std::sort(view.batch_sizes.begin(), view.batch_sizes.end());
    view.batch_sizes.erase(std::unique(view.batch_sizes.begin(), view.batch_sizes.end()),
                           view.batch_sizes.end());
    for (int s : view.batch_sizes) {
        if (s < 1) throw Error(ErrorKind::Parameter, "batch size must be >= 1");
    }
    return view;
}

TileConfig pool_tile() { return TileConfig{1, 1, 1, all_loop_orders()[0]}; }

} // namespace

DesignCaps DesignCaps::defaults() {
    DesignCaps c;
    for (int v = 1; v <= 8; ++v) {
        c.t_cout.push_back(v);
        c.t_h.push_back(v);
        c.t_w.push_back(v);
    }
    c.order_indices = {0, 1, 2, 3, 4, 5};
    for (int s = 1; s <= 16; ++s) c.batch_sizes.push_back(s);
    return c;
}

DesignCaps DesignCaps::nas_defaults() {
    DesignCaps c;
    c.t_cout = {1, 2, 4, 8};
    c.t_h = {1, 2, 4, 8};
    c.t_w = {1, 2, 4, 8};
    c.order_indices = {0};
    c.batch_sizes = {1, 2, 4, 8, 16};
    c.uniform_tiles = true;
    return c;
}

void enumerate_designs(const NetworkSpec& net, const DesignCaps& caps,
                       const std::function<bool(const ExecutionDesign&)>& fn) {
    SpaceView view = build_space(net, caps);
    const auto& orders = all_loop_orders();
    std::size_t nl = view.layers.size();

    if (caps.uniform_tiles) {
        auto uniq = [](std::vector<int> v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            return v;
        };
        auto tcs = uniq(caps.t_cout), ths = uniq(caps.t_h), tws = uniq(caps.t_w);
        auto ois = uniq(caps.order_indices);
        for (int oi : ois) {
            if (oi < 0 || oi > 5) throw Error(ErrorKind::Parameter, "order index out of range");
        }
        for (int s : view.batch_sizes) {
            for (int tc : tcs) {
                for (int th : ths) {
                    for (int tw : tws) {
                        for (int oi : ois) {
                            ExecutionDesign d;
                            d.batch_size = s;
                            for (std::size_t li = 0; li < nl; ++li) {
                                if (!view.layers[li].tiled) {
                                    d.tiles.push_back(pool_tile());
                                    continue;
                                }
                                const Shape3& dims = view.tiled_dims[li];
                                TileConfig t;
                                t.t_cout = std::min(tc, dims.c);
                                t.t_h = std::min(th, dims.h);
                                t.t_w = std::min(tw, dims.w);
                                t.loop_order = orders[oi];
                                d.tiles.push_back(t);
                            }
                            if (!fn(d)) return;
                        }
                    }
                }
            }
        }
        return;
    }

    // Odometer over (per tiled layer: t_cout, t_h, t_w, order), outermost S.
    struct Digit {
        const std::vector<int>* options;
        int pos = 0;
    };
    for (int s : view.batch_sizes) {
        std::vector<Digit> digits;
        for (const auto& l : view.layers) {
            if (!l.tiled) continue;
            digits.push_back({&l.t_cout});
            digits.push_back({&l.t_h});
            digits.push_back({&l.t_w});
            digits.push_back({&l.orders});
        }
        bool more = true;
        while (more) {
            ExecutionDesign d;
            d.batch_size = s;
            std::size_t di = 0;
            for (const auto& l : view.layers) {
                if (!l.tiled) {
                    d.tiles.push_back(pool_tile());
                    continue;
                }
                TileConfig t;
                t.t_cout = (*digits[di].options)[digits[di].pos]; di++;
                t.t_h = (*digits[di].options)[digits[di].pos]; di++;
                t.t_w = (*digits[di].options)[digits[di].pos]; di++;
                t.loop_order = orders[(*digits[di].options)[digits[di].pos]]; di++;
                d.tiles.push_back(t);
            }
            if (!fn(d)) return;
            // increment, last digit fastest
            more = false;
            for (std::size_t i = digits.size(); i-- > 0;) {
                if (++digits[i].pos < static_cast<int>(digits[i].options->size())) {
                    more = true;
                    break;
                }
                digits[i].pos = 0;
            }
            if (digits.empty()) more = false;  // single (pool-only) design per S
        }
    }
}

std::int64_t design_space_size(const NetworkSpec& net, const DesignCaps& caps) {
    SpaceView view = build_space(net, caps);
    std::int64_t per_s = 1;
    if (caps.uniform_tiles) {
        auto uniq = [](std::vector<int> v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
            return v.size();
        };
        per_s = static_cast<std::int64_t>(uniq(caps.t_cout)) * uniq(caps.t_h) *
                uniq(caps.t_w) * uniq(caps.order_indices);
    } else {
        for (const auto& l : view.layers) {
            if (!l.tiled) continue;
            per_s *= static_cast<std::int64_t>(l.t_cout.size()) * l.t_h.size() *
                     l.t_w.size() * l.orders.size();
        }
    }
    return per_s * static_cast<std::int64_t>(view.batch_sizes.size());
}

BestDesign best_design(const NetworkSpec& net, const PowerParams& power,
                       const CostParams& costs, std::int64_t l_req, const DesignCaps& caps) {
    BestDesign best;
    std::int64_t best_latency = std::numeric_limits<std::int64_t>::max();
    enumerate_designs(net, caps, [&](const ExecutionDesign& d) {
        if (!feasible(net, d, power, costs).ok) return true;
        PerfEstimate est = predict(net, d, power, costs);
        if (est.latency_ticks > l_req) return true;
        // Enumeration order is (S, lex), so strict improvement implements the
        // smaller-S-then-lexicographic tie break.
        if (est.latency_ticks < best_latency) {
            best_latency = est.latency_ticks;
            best.found = true;
            best.design = d;
            best.estimate = est;
        }
        return true;
    });
    return best;
}

namespace {

void validate_space(const SearchSpace& space) {
    if (space.stage_counts.empty() || space.depths.empty() || space.channels.empty() ||
        space.kernels.empty()) {
        throw Error(ErrorKind::Parameter, "search space lists must not be empty");
    }
    for (int v : space.stage_counts) {
        if (v < 1) throw Error(ErrorKind::Parameter, "stage counts must be >= 1");
    }
    for (int v : space.depths) {
        if (v < 1) throw Error(ErrorKind::Parameter, "depths must be >= 1");
    }
    for (int v : space.channels) {
        if (v < 1) throw Error(ErrorKind::Parameter, "channels must be >= 1");
    }
    for (int v : space.kernels) {
        if (v < 1 || v % 2 == 0) throw Error(ErrorKind::Parameter, "kernels must be odd");
    }
    if (space.num_classes < 1) throw Error(ErrorKind::Parameter, "classes must be >= 1");
    if (space.frac_bits < 0 || space.frac_bits > 15) {
        throw Error(ErrorKind::Parameter, "frac_bits must be in [0, 15]");
    }
}

} // namespace

NetworkSpec make_supernet(const SearchSpace& space, int n_stages) {
    validate_space(space);
    if (n_stages < 1) throw Error(ErrorKind::Parameter, "stage count must be >= 1");
    int d_max = *std::max_element(space.depths.begin(), space.depths.end());
    int c_max = *std::max_element(space.channels.begin(), space.channels.end());
    int k_max = *std::max_element(space.kernels.begin(), space.kernels.end());

    NetworkSpec net;
    net.input_shape = space.input_shape;
    net.frac_bits = space.frac_bits;
    net.output_classes = space.num_classes;

    SplitMix64 rng(space.weight_seed * 1000003ULL + static_cast<std::uint64_t>(n_stages));
    auto fill = [&](QTensor& t) {
        for (auto& v : t.data) {
            // uniform in [-64, 63]: small weights keep accumulators far from
            // saturation for typical inputs
            v = static_cast<std::int16_t>(static_cast<std::int64_t>(rng.next() % 128) - 64);
        }
    };

    Shape3 cur = space.input_shape;
    for (int s = 0; s < n_stages; ++s) {
        for (int d = 0; d < d_max; ++d) {
            LayerSpec conv = LayerSpec::conv(cur.c, c_max, k_max, 1, (k_max - 1) / 2);
            QTensor w(c_max, cur.c, k_max * k_max, space.frac_bits);
            fill(w);
            net.layers.push_back(conv);
            net.weights.push_back(std::move(w));
            net.biases.emplace_back();
            cur = conv_output_shape(conv, cur);
        }
        LayerSpec pool = LayerSpec::pool(2, 2);
        if (cur.h < 2 || cur.w < 2) {
            throw Error(ErrorKind::Parameter,
                        "input too small for " + std::to_string(n_stages) + " stages");
        }
        net.layers.push_back(pool);
        net.weights.emplace_back();
        net.biases.emplace_back();
        cur = conv_output_shape(pool, cur);
    }

    int n_in = cur.c * cur.h * cur.w;
    LayerSpec fc = LayerSpec::fc(n_in, space.num_classes);
    QTensor w(space.num_classes, n_in, 1, space.frac_bits);
    fill(w);
    net.layers.push_back(fc);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back();

    require_valid(net);
    return net;
}

namespace {

struct StageLayers {
    std::vector<int> conv_indices;
    int pool_index = -1;
};

// Groups a supernet's layers into stages (convs then one pool), ending with fc.
std::vector<StageLayers> stage_structure(const NetworkSpec& net, int& fc_index) {
    std::vector<StageLayers> stages;
    StageLayers cur;
    fc_index = -1;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        switch (net.layers[i].kind) {
        case LayerKind::Conv2D:
            cur.conv_indices.push_back(static_cast<int>(i));
            break;
        case LayerKind::MaxPool2D:
            cur.pool_index = static_cast<int>(i);
            stages.push_back(cur);
            cur = {};
            break;
        case LayerKind::FullyConnected:
            fc_index = static_cast<int>(i);
            break;
        }
    }
    if (fc_index < 0 || !cur.conv_indices.empty()) {
        throw Error(ErrorKind::Parameter, "supernet must be conv stages + pools + final fc");
    }
    return stages;
}

} // namespace

NetworkSpec extract_subnet(const NetworkSpec& supernet, const ArchConfig& arch) {
    require_valid(supernet);
    int fc_index = -1;
    auto stages = stage_structure(supernet, fc_index);
    if (arch.stages.size() != stages.size()) {
        throw Error(ErrorKind::Parameter,
                    "arch has " + std::to_string(arch.stages.size()) + " stages, supernet " +
                        std::to_string(stages.size()));
    }

    NetworkSpec net;
    net.input_shape = supernet.input_shape;
    net.frac_bits = supernet.frac_bits;
    net.output_classes = supernet.output_classes;

    std::vector<int> kept_prev(supernet.input_shape.c);
    for (int i = 0; i < supernet.input_shape.c; ++i) kept_prev[i] = i;

    for (std::size_t si = 0; si < stages.size(); ++si) {
        const StageConfig& cfg = arch.stages[si];
        const auto& convs = stages[si].conv_indices;
        if (cfg.depth < 1 || cfg.depth > static_cast<int>(convs.size())) {
            throw Error(ErrorKind::Parameter, "arch depth exceeds supernet stage depth");
        }
        for (int j = 0; j < cfg.depth; ++j) {
            const LayerSpec& sup = supernet.layers[convs[j]];
            const QTensor& sw = *supernet.weights[convs[j]];
            if (cfg.kernel > sup.k || cfg.kernel % 2 == 0 || cfg.kernel < 1) {
                throw Error(ErrorKind::Parameter, "arch kernel exceeds supernet kernel");
            }
            if (cfg.channels > sup.c_out || cfg.channels < 1) {
                throw Error(ErrorKind::Parameter, "arch channels exceed supernet channels");
            }
            int crop = (sup.k - cfg.kernel) / 2;
            int c_in = static_cast<int>(kept_prev.size());

            // Input-sliced, center-cropped candidate weights for every output
            // channel; ranking happens on exactly what would survive.
            auto sliced = [&](int co, int ci_new, int kh, int kw) {
                return sw.at(co, kept_prev[ci_new],
                             (kh + crop) * sup.k + (kw + crop));
            };
            std::vector<std::pair<std::int64_t, int>> rank;  // (-l1, index) asc
            for (int co = 0; co < sup.c_out; ++co) {
                std::int64_t l1 = 0;
                for (int ci = 0; ci < c_in; ++ci)
                    for (int kh = 0; kh < cfg.kernel; ++kh)
                        for (int kw = 0; kw < cfg.kernel; ++kw)
                            l1 += std::abs(static_cast<std::int64_t>(sliced(co, ci, kh, kw)));
                rank.emplace_back(-l1, co);
            }
            std::sort(rank.begin(), rank.end());
            std::vector<int> kept;
            for (int i = 0; i < cfg.channels; ++i) kept.push_back(rank[i].second);
            std::sort(kept.begin(), kept.end());

            QTensor w(cfg.channels, c_in, cfg.kernel * cfg.kernel, sw.frac_bits);
            for (int co = 0; co < cfg.channels; ++co)
                for (int ci = 0; ci < c_in; ++ci)
                    for (int kh = 0; kh < cfg.kernel; ++kh)
                        for (int kw = 0; kw < cfg.kernel; ++kw)
                            w.at(co, ci, kh * cfg.kernel + kw) =
                                sw.at(kept[co], kept_prev[ci],
                                      (kh + crop) * sup.k + (kw + crop));

            LayerSpec conv =
                LayerSpec::conv(c_in, cfg.channels, cfg.kernel, 1, (cfg.kernel - 1) / 2);
            net.layers.push_back(conv);
            net.weights.push_back(std::move(w));
            if (supernet.biases[convs[j]].has_value()) {
                const QTensor& sb = *supernet.biases[convs[j]];
                QTensor b(cfg.channels, 1, 1, sb.frac_bits);
                for (int co = 0; co < cfg.channels; ++co) b.data[co] = sb.data[kept[co]];
                net.biases.push_back(std::move(b));
            } else {
                net.biases.emplace_back();
            }
            kept_prev = kept;
        }
        net.layers.push_back(supernet.layers[stages[si].pool_index]);
        net.weights.emplace_back();
        net.biases.emplace_back();
    }

    // fc head: keep the flattened inputs of surviving channels.
    const LayerSpec& sup_fc = supernet.layers[fc_index];
    const QTensor& sw = *supernet.weights[fc_index];
    auto shapes = layer_shapes(supernet);
    const Shape3& pre_fc = shapes[fc_index];
    int hw = pre_fc.h * pre_fc.w;
    int n_in = static_cast<int>(kept_prev.size()) * hw;

    QTensor w(sup_fc.n_out, n_in, 1, sw.frac_bits);
    for (int o = 0; o < sup_fc.n_out; ++o) {
        int idx = 0;
        for (int c : kept_prev)
            for (int pos = 0; pos < hw; ++pos)
                w.at(o, idx++, 0) = sw.at(o, c * hw + pos, 0);
    }
    net.layers.push_back(LayerSpec::fc(n_in, sup_fc.n_out));
    net.weights.push_back(std::move(w));
    if (supernet.biases[fc_index].has_value()) {
        net.biases.push_back(*supernet.biases[fc_index]);
    } else {
        net.biases.emplace_back();
    }

    require_valid(net);
    return net;
}

double surrogate_accuracy_from_params(std::int64_t total_params) {
    double acc = 0.30 + 0.08 * std::log2(1.0 + static_cast<double>(total_params) / 1000.0);
    return std::min(0.95, acc);
}

double surrogate_accuracy(const NetworkSpec& net) {
    return surrogate_accuracy_from_params(count_params(net).total);
}

double reward(double accuracy, double ema, std::int64_t latency_ticks,
              const RewardParams& params) {
    if (params.latency_requirement <= 0) {
        throw Error(ErrorKind::Parameter, "latency requirement must be positive");
    }
    double lat_term = static_cast<double>(latency_ticks) /
                      static_cast<double>(params.latency_requirement);
    return accuracy - ema + params.latency_sign * lat_term;
}

namespace {

struct Candidate {
    ArchConfig arch;
    bool feasible = false;
    NetworkSpec net;
    ExecutionDesign design;
    PerfEstimate estimate;
    double accuracy = 0.0;
    double score = 0.0;  // accuracy + sign * latency / l_req; ema-free
};

ArchConfig random_arch(SplitMix64& rng, const SearchSpace& space) {
    ArchConfig a;
    int n = space.stage_counts[rng.next_below(space.stage_counts.size())];
    for (int i = 0; i < n; ++i) {
        StageConfig s;
        s.depth = space.depths[rng.next_below(space.depths.size())];
        s.channels = space.channels[rng.next_below(space.channels.size())];
        s.kernel = space.kernels[rng.next_below(space.kernels.size())];
        a.stages.push_back(s);
    }
    return a;
}

ArchConfig mutate(SplitMix64& rng, const SearchSpace& space, const ArchConfig& parent,
                  double rate) {
    auto hit = [&]() {
        return static_cast<double>(rng.next() >> 11) * 0x1.0p-53 < rate;
    };
    ArchConfig a = parent;
    if (hit()) {
        int n = space.stage_counts[rng.next_below(space.stage_counts.size())];
        while (static_cast<int>(a.stages.size()) > n) a.stages.pop_back();
        while (static_cast<int>(a.stages.size()) < n) {
            StageConfig s;
            s.depth = space.depths[rng.next_below(space.depths.size())];
            s.channels = space.channels[rng.next_below(space.channels.size())];
            s.kernel = space.kernels[rng.next_below(space.kernels.size())];
            a.stages.push_back(s);
        }
    }
    for (auto& s : a.stages) {
        if (hit()) s.depth = space.depths[rng.next_below(space.depths.size())];
        if (hit()) s.channels = space.channels[rng.next_below(space.channels.size())];
        if (hit()) s.kernel = space.kernels[rng.next_below(space.kernels.size())];
    }
    return a;
}

} // namespace

SearchResult evolve(const SearchSpace& space, const PowerParams& power,
                    const CostParams& costs, const RewardParams& reward_params,
                    std::uint64_t seed, const EvolveParams& params, const DesignCaps& caps,
                    const AccuracyFn& accuracy) {
    validate_space(space);
    if (params.generations < 1 || params.population < 1 || params.tournament < 1 ||
        params.elitism < 0) {
        throw Error(ErrorKind::Parameter, "evolve parameters out of range");
    }
    if (reward_params.latency_requirement <= 0) {
        throw Error(ErrorKind::Parameter, "latency requirement must be positive");
    }
    AccuracyFn acc_fn = accuracy ? accuracy : AccuracyFn(&surrogate_accuracy);

    // One teacher per stage count, all from the same weight seed.
    std::vector<NetworkSpec> supernets;
    int max_stage_count = *std::max_element(space.stage_counts.begin(), space.stage_counts.end());
    supernets.resize(max_stage_count + 1);
    for (int n : space.stage_counts) supernets[n] = make_supernet(space, n);

    SplitMix64 rng(seed);
    std::vector<ArchConfig> population;
    for (int i = 0; i < params.population; ++i) population.push_back(random_arch(rng, space));

    SearchResult result;
    std::optional<double> ema;
    double best_score = -std::numeric_limits<double>::infinity();

    for (int gen = 0; gen < params.generations; ++gen) {
        std::vector<Candidate> cands(population.size());
        for (std::size_t i = 0; i < population.size(); ++i) {
            Candidate& c = cands[i];
            c.arch = population[i];
            c.net = extract_subnet(supernets[c.arch.stages.size()], c.arch);
            BestDesign bd = best_design(c.net, power, costs,
                                        reward_params.latency_requirement, caps);
            if (!bd.found) continue;
            c.feasible = true;
            c.design = bd.design;
            c.estimate = bd.estimate;
            c.accuracy = acc_fn(c.net);
            double lat_term = static_cast<double>(c.estimate.latency_ticks) /
                              static_cast<double>(reward_params.latency_requirement);
            c.score = c.accuracy + reward_params.latency_sign * lat_term;
        }

        // Rewards use the EMA frozen at generation start; the first feasible
        // child ever seen seeds it with its own accuracy.
        double gen_ema = 0.0;
        bool have_ema = ema.has_value();
        if (!have_ema) {
            for (const auto& c : cands) {
                if (c.feasible) {
                    gen_ema = c.accuracy;
                    have_ema = true;
                    break;
                }
            }
        } else {
            gen_ema = *ema;
        }

        GenerationStats stats;
        stats.generation = gen;
        int best_in_gen = -1;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            const Candidate& c = cands[i];
            if (!c.feasible) continue;
            stats.feasible_count++;
            if (best_in_gen < 0 || c.score > cands[best_in_gen].score) {
                best_in_gen = static_cast<int>(i);
            }
            if (c.score > best_score) {
                best_score = c.score;
                result.found = true;
                result.arch = c.arch;
                result.net = c.net;
                result.design = c.design;
                result.estimate = c.estimate;
                result.accuracy = c.accuracy;
                result.reward = c.score - gen_ema;
            }
        }
        if (best_in_gen >= 0) {
            stats.best_reward = cands[best_in_gen].score - gen_ema;
            stats.best_accuracy = cands[best_in_gen].accuracy;
            stats.best_latency_ticks = cands[best_in_gen].estimate.latency_ticks;
        }
        result.history.push_back(stats);

        // Fold this generation's feasible accuracies into the EMA in index order.
        for (const auto& c : cands) {
            if (!c.feasible) continue;
            if (!ema.has_value()) {
                ema = c.accuracy;
            } else {
                ema = reward_params.ema_decay * *ema +
                      (1.0 - reward_params.ema_decay) * c.accuracy;
            }
        }

        if (gen + 1 == params.generations) break;

        // Breed the next generation: elitism then tournament + mutation.
        // Infeasible candidates carry -inf fitness.
        auto fitness = [&](std::size_t i) {
            return cands[i].feasible ? cands[i].score
                                     : -std::numeric_limits<double>::infinity();
        };
        std::vector<std::size_t> order(cands.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return fitness(a) > fitness(b);
        });

        std::vector<ArchConfig> next;
        for (int e = 0; e < params.elitism && e < static_cast<int>(order.size()); ++e) {
            next.push_back(population[order[e]]);
        }
        while (static_cast<int>(next.size()) < params.population) {
            std::size_t win = rng.next_below(population.size());
            for (int t = 1; t < params.tournament; ++t) {
                std::size_t ch = rng.next_below(population.size());
                if (fitness(ch) > fitness(win)) win = ch;
            }
            next.push_back(mutate(rng, space, population[win], params.mutation_rate));
        }
        population = std::move(next);
    }
    return result;
}

} // namespace ehw
