#ifndef EHW_EXPLORER_HPP
#define EHW_EXPLORER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ehw/exec.hpp"
#include "ehw/intermittent.hpp"
#include "ehw/model.hpp"
#include "ehw/perfmodel.hpp"

namespace ehw {

// Bounds of the execution-design space. Tile candidates are clamped to each
// layer's dimensions and de-duplicated; pool layers are untiled and contribute
// a single fixed entry. With uniform_tiles one tile choice is shared by every
// layer, which keeps deep networks enumerable.
struct DesignCaps {
    std::vector<int> t_cout;
    std::vector<int> t_h;
    std::vector<int> t_w;
    std::vector<int> order_indices;  // into all_loop_orders()
    std::vector<int> batch_sizes;
    bool uniform_tiles = false;

    static DesignCaps defaults();      // t in 1..8, all orders, S in 1..16
    static DesignCaps nas_defaults();  // uniform tiles, {1,2,4,8}, one order, S {1,2,4,8,16}
};

// Yields every design in the capped space in lexicographic order
// (batch size, then per-layer tile fields outer to inner). The callback
// returns false to stop early.
void enumerate_designs(const NetworkSpec& net, const DesignCaps& caps,
                       const std::function<bool(const ExecutionDesign&)>& fn);

// Closed-form size of the enumerated stream.
std::int64_t design_space_size(const NetworkSpec& net, const DesignCaps& caps);

struct BestDesign {
    bool found = false;
    ExecutionDesign design;
    PerfEstimate estimate;
};

// argmin of predicted latency over feasible designs with latency <= l_req.
// Ties break toward smaller batch size, then lexicographic design order.
BestDesign best_design(const NetworkSpec& net, const PowerParams& power,
                       const CostParams& costs, std::int64_t l_req, const DesignCaps& caps);

struct StageConfig {
    int depth = 1;     // convs in the stage
    int channels = 4;  // conv output channels
    int kernel = 3;    // odd
    bool operator==(const StageConfig&) const = default;
    auto operator<=>(const StageConfig&) const = default;
};

struct ArchConfig {
    std::vector<StageConfig> stages;  // each stage ends with a 2x2 stride-2 pool
    bool operator==(const ArchConfig&) const = default;
    auto operator<=>(const ArchConfig&) const = default;
};

struct SearchSpace {
    Shape3 input_shape{3, 32, 32};
    int num_classes = 10;
    std::vector<int> stage_counts{2, 3, 4};
    std::vector<int> depths{1, 2};
    std::vector<int> channels{4, 8, 12, 16};
    std::vector<int> kernels{1, 3, 5};
    int frac_bits = 8;
    std::uint64_t weight_seed = 1;
};

// Maximal teacher network for a stage count: every stage at the space's top
// depth/channels/kernel, deterministic seeded weights.
NetworkSpec make_supernet(const SearchSpace& space, int n_stages);

// Progressive-shrinking extraction: center-crop kernels, keep the top-c output
// channels by L1 weight norm (ties to the lower index), drop trailing convs of
// a stage, and slice downstream input channels to match.
NetworkSpec extract_subnet(const NetworkSpec& supernet, const ArchConfig& arch);

// Deterministic placeholder for a trained-accuracy evaluator.
double surrogate_accuracy_from_params(std::int64_t total_params);
double surrogate_accuracy(const NetworkSpec& net);

using AccuracyFn = std::function<double(const NetworkSpec&)>;

struct RewardParams {
    double ema_decay = 0.9;
    std::int64_t latency_requirement = 0;
    int latency_sign = -1;  // -1 penalizes latency; +1 keeps the literal formula
};

double reward(double accuracy, double ema, std::int64_t latency_ticks,
              const RewardParams& params);

struct GenerationStats {
    int generation = 0;
    int feasible_count = 0;
    double best_reward = 0.0;
    double best_accuracy = 0.0;
    std::int64_t best_latency_ticks = 0;
};

struct SearchResult {
    bool found = false;
    ArchConfig arch;
    NetworkSpec net;
    ExecutionDesign design;
    PerfEstimate estimate;
    double accuracy = 0.0;
    double reward = 0.0;
    std::vector<GenerationStats> history;
};

struct EvolveParams {
    int population = 16;
    int generations = 8;
    double mutation_rate = 0.1;
    int tournament = 3;
    int elitism = 2;
};

// Evolutionary architecture search. Bit-deterministic for a given seed; the
// accuracy evaluator is only consulted for candidates with a feasible design.
SearchResult evolve(const SearchSpace& space, const PowerParams& power,
                    const CostParams& costs, const RewardParams& reward_params,
                    std::uint64_t seed, const EvolveParams& params, const DesignCaps& caps,
                    const AccuracyFn& accuracy = {});

} // namespace ehw

#endif
