#ifndef EHW_EXEC_HPP
#define EHW_EXEC_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ehw/model.hpp"

namespace ehw {

// Inter-tile loop dimensions of one layer's output space.
enum class TileDim { Cout = 0, H = 1, W = 2 };

using LoopOrder = std::array<TileDim, 3>;  // outermost first

// The six permutations in lexicographic order; index 0 is (COUT, H, W).
const std::array<LoopOrder, 6>& all_loop_orders();
int loop_order_index(const LoopOrder& order);          // 0..5
std::string loop_order_name(const LoopOrder& order);   // e.g. "cout,h,w"
LoopOrder loop_order_from_name(const std::string& s);  // throws on bad name

struct TileConfig {
    int t_cout = 1;
    int t_h = 1;
    int t_w = 1;
    LoopOrder loop_order = {TileDim::Cout, TileDim::H, TileDim::W};

    bool operator==(const TileConfig&) const = default;
};

struct ExecutionDesign {
    std::vector<TileConfig> tiles;  // one per layer; pool entries are ignored
    int batch_size = 1;             // S: tile outputs preserved together

    bool operator==(const ExecutionDesign&) const = default;
};

struct VMFootprint {
    std::int64_t input_bytes = 0;
    std::int64_t weight_bytes = 0;
    std::int64_t output_batch_bytes = 0;
    std::int64_t scratch_bytes = 0;
    std::int64_t total_bytes = 0;
};

// One atomic unit: a complete output tile of one layer. Pool layers execute
// untiled as a single unit with zero weight fetch and zero MACs.
struct UnitGeom {
    int layer = 0;
    std::array<int, 3> block{0, 0, 0};  // loop indices, outermost first
    int c0 = 0, h0 = 0, w0 = 0;         // output region origin
    int tc = 0, th = 0, tw = 0;         // output region extent (edge-clamped)
    std::int64_t macs = 0;
    std::int64_t fetch_bytes = 0;   // input halo + weight tile, 2 bytes/element
    std::int64_t out_bytes = 0;     // 2 bytes/element
    bool last_of_layer = false;
};

struct LayerTileStats {
    int layer = 0;
    std::int64_t units = 0;
    std::vector<std::int64_t> unit_macs;
    std::vector<std::int64_t> unit_fetch_bytes;
    std::vector<std::int64_t> unit_out_bytes;
};

struct TileStats {
    std::vector<LayerTileStats> layers;
};

// Throws Error(Design) if the design does not fit the network.
void validate_design(const NetworkSpec& net, const ExecutionDesign& design);

// The per-layer unit sequences in design order. This is the single source of
// unit geometry for the tiled executor, the simulator and the perf model.
std::vector<std::vector<UnitGeom>> unit_schedule(const NetworkSpec& net,
                                                 const ExecutionDesign& design);

// Number of inter-tile units of one layer under `tile` (ceil per dimension).
std::int64_t unit_count(const LayerSpec& layer, const Shape3& out, const TileConfig& tile);

// Plain nested-loop inference; the functional reference for every other
// execution path. Hidden conv/fc layers apply ReLU, the final layer emits raw
// requantized logits.
QTensor run_reference(const NetworkSpec& net, const QTensor& input);

struct TiledResult {
    QTensor output;
    TileStats stats;
};

// Tiled loop-nest executor; output is bit-identical to run_reference.
TiledResult run_tiled(const NetworkSpec& net, const QTensor& input,
                      const ExecutionDesign& design);

// Worst-case (unclamped) VM footprint of one layer under (tile, S).
VMFootprint tile_footprint(const LayerSpec& layer, const Shape3& in_shape,
                           const Shape3& out_shape, const TileConfig& tile, int batch_size);

// argmax over the flattened output; lowest index wins ties.
int classify(const QTensor& logits);

namespace detail {

// Evaluates single units against a fixed network; used by run_tiled and by
// the intermittent simulator, which owns the surrounding storage.
class UnitComputer {
public:
    explicit UnitComputer(const NetworkSpec& net);
    void compute(int layer, const UnitGeom& u, const QTensor& in, QTensor& out) const;
    const std::vector<Shape3>& shapes() const { return shapes_; }

private:
    const NetworkSpec* net_;
    std::vector<Shape3> shapes_;
    std::vector<LayerSpec> fc_as_conv_;
};

} // namespace detail

} // namespace ehw

#endif
