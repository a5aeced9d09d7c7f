#include "ehw/exec.hpp"

#include <algorithm>

namespace ehw {

namespace {

constexpr std::int64_t kBytesPerElem = 2;

// Saturating requantization from the int64 accumulator scale down by `shift`
// bits, rounding half away from zero.
std::int16_t requantize(std::int64_t acc, int shift) {
    std::int64_t y;
    if (shift <= 0) {
        y = acc << -shift;
    } else {
        std::int64_t half = 1LL << (shift - 1);
        y = acc >= 0 ? (acc + half) >> shift : -((-acc + half) >> shift);
    }
    if (y < -32768) y = -32768;
    if (y > 32767) y = 32767;
    return static_cast<std::int16_t>(y);
}

std::int16_t input_at(const QTensor& t, int c, int h, int w) {
    if (h < 0 || h >= t.height || w < 0 || w >= t.width) return 0;  // zero padding
    return t.at(c, h, w);
}

struct LayerCtx {
    const LayerSpec* spec;
    Shape3 in;
    Shape3 out;
    const QTensor* weights;  // null for pool
    const QTensor* bias;     // may be null
    int w_frac;              // weight frac_bits (0 for pool)
};

std::vector<LayerCtx> layer_contexts(const NetworkSpec& net) {
    auto shapes = layer_shapes(net);
    std::vector<LayerCtx> ctx;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        LayerCtx c;
        c.spec = &net.layers[i];
        c.in = shapes[i];
        c.out = shapes[i + 1];
        c.weights = net.weights[i].has_value() ? &*net.weights[i] : nullptr;
        c.bias = net.biases[i].has_value() ? &*net.biases[i] : nullptr;
        c.w_frac = c.weights ? c.weights->frac_bits : 0;
        ctx.push_back(c);
    }
    return ctx;
}

// Computes output element (co, oh, ow) of a conv/fc layer from `in`.
std::int16_t conv_element(const LayerCtx& l, const QTensor& in,
                          int co, int oh, int ow, bool relu) {
    const LayerSpec& s = *l.spec;
    std::int64_t acc = 0;
    for (int ci = 0; ci < s.c_in; ++ci) {
        for (int kh = 0; kh < s.k; ++kh) {
            for (int kw = 0; kw < s.k; ++kw) {
                int ih = oh * s.s - s.p + kh;
                int iw = ow * s.s - s.p + kw;
                std::int64_t w = l.weights->at(co, ci, kh * s.k + kw);
                std::int64_t x = input_at(in, ci, ih, iw);
                acc += w * x;
            }
        }
    }
    if (l.bias) acc += l.bias->data[co];
    // Accumulator sits at w_frac + activation frac; dropping w_frac bits
    // lands on the activation scale.
    std::int16_t y = requantize(acc, l.w_frac);
    if (relu && y < 0) y = 0;
    return y;
}

std::int16_t pool_element(const LayerCtx& l, const QTensor& in, int c, int oh, int ow) {
    const LayerSpec& s = *l.spec;
    std::int16_t best = in.at(c, oh * s.s, ow * s.s);
    for (int dh = 0; dh < s.w; ++dh) {
        for (int dw = 0; dw < s.w; ++dw) {
            best = std::max(best, in.at(c, oh * s.s + dh, ow * s.s + dw));
        }
    }
    return best;
}

// Layer viewed through the tiled executor: fc becomes a 1x1 conv over a
// (n_in, 1, 1) tensor, so only conv geometry remains.
struct TiledDims {
    int c_out, h_out, w_out;  // output space being tiled
    int k, s, c_in;
};

TiledDims tiled_dims(const LayerCtx& l) {
    const LayerSpec& s = *l.spec;
    switch (s.kind) {
    case LayerKind::Conv2D:
        return {l.out.c, l.out.h, l.out.w, s.k, s.s, s.c_in};
    case LayerKind::FullyConnected:
        return {s.n_out, 1, 1, 1, 1, s.n_in};
    case LayerKind::MaxPool2D:
        return {l.out.c, l.out.h, l.out.w, s.w, s.s, l.in.c};
    }
    return {};
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

} // namespace

const std::array<LoopOrder, 6>& all_loop_orders() {
    static const std::array<LoopOrder, 6> orders = {{
        {TileDim::Cout, TileDim::H, TileDim::W},
        {TileDim::Cout, TileDim::W, TileDim::H},
        {TileDim::H, TileDim::Cout, TileDim::W},
        {TileDim::H, TileDim::W, TileDim::Cout},
        {TileDim::W, TileDim::Cout, TileDim::H},
        {TileDim::W, TileDim::H, TileDim::Cout},
    }};
    return orders;
}

int loop_order_index(const LoopOrder& order) {
    const auto& all = all_loop_orders();
    for (int i = 0; i < 6; ++i) {
        if (all[i] == order) return i;
    }
    throw Error(ErrorKind::Design, "loop order is not a permutation of (cout, h, w)");
}

std::string loop_order_name(const LoopOrder& order) {
    std::string out;
    for (int i = 0; i < 3; ++i) {
        if (i) out += ",";
        switch (order[i]) {
        case TileDim::Cout: out += "cout"; break;
        case TileDim::H: out += "h"; break;
        case TileDim::W: out += "w"; break;
        }
    }
    return out;
}

LoopOrder loop_order_from_name(const std::string& s) {
    for (const auto& o : all_loop_orders()) {
        if (loop_order_name(o) == s) return o;
    }
    throw Error(ErrorKind::Parse, "unknown loop order \"" + s + "\"");
}

void validate_design(const NetworkSpec& net, const ExecutionDesign& design) {
    require_valid(net);
    if (design.tiles.size() != net.layers.size()) {
        throw Error(ErrorKind::Design, "design tile list length != layer count");
    }
    if (design.batch_size < 1) {
        throw Error(ErrorKind::Design, "batch size must be >= 1");
    }
    auto ctx = layer_contexts(net);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].kind == LayerKind::MaxPool2D) continue;  // untiled
        TiledDims d = tiled_dims(ctx[i]);
        const TileConfig& t = design.tiles[i];
        loop_order_index(t.loop_order);
        if (t.t_cout < 1 || t.t_cout > d.c_out || t.t_h < 1 || t.t_h > d.h_out ||
            t.t_w < 1 || t.t_w > d.w_out) {
            throw Error(ErrorKind::Design,
                        "tile size out of range at layer " + std::to_string(i));
        }
    }
}

std::int64_t unit_count(const LayerSpec& layer, const Shape3& out, const TileConfig& tile) {
    if (layer.kind == LayerKind::MaxPool2D) return 1;
    int c = layer.kind == LayerKind::FullyConnected ? layer.n_out : out.c;
    int h = layer.kind == LayerKind::FullyConnected ? 1 : out.h;
    int w = layer.kind == LayerKind::FullyConnected ? 1 : out.w;
    return static_cast<std::int64_t>(ceil_div(c, tile.t_cout)) *
           ceil_div(h, tile.t_h) * ceil_div(w, tile.t_w);
}

std::vector<std::vector<UnitGeom>> unit_schedule(const NetworkSpec& net,
                                                 const ExecutionDesign& design) {
    validate_design(net, design);
    auto ctx = layer_contexts(net);
    std::vector<std::vector<UnitGeom>> sched(net.layers.size());

    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const LayerCtx& l = ctx[li];
        TiledDims d = tiled_dims(l);
        auto& units = sched[li];

        if (l.spec->kind == LayerKind::MaxPool2D) {
            UnitGeom u;
            u.layer = static_cast<int>(li);
            u.tc = d.c_out;
            u.th = d.h_out;
            u.tw = d.w_out;
            u.macs = 0;
            u.fetch_bytes = static_cast<std::int64_t>(l.in.c) * l.in.h * l.in.w * kBytesPerElem;
            u.out_bytes = static_cast<std::int64_t>(d.c_out) * d.h_out * d.w_out * kBytesPerElem;
            u.last_of_layer = true;
            units.push_back(u);
            continue;
        }

        const TileConfig& t = design.tiles[li];
        int nblocks[3] = {ceil_div(d.c_out, t.t_cout), ceil_div(d.h_out, t.t_h),
                          ceil_div(d.w_out, t.t_w)};
        int dims[3];
        for (int i = 0; i < 3; ++i) dims[i] = nblocks[static_cast<int>(t.loop_order[i])];

        for (int i0 = 0; i0 < dims[0]; ++i0) {
            for (int i1 = 0; i1 < dims[1]; ++i1) {
                for (int i2 = 0; i2 < dims[2]; ++i2) {
                    int idx[3] = {i0, i1, i2};
                    int block_c = 0, block_h = 0, block_w = 0;
                    for (int i = 0; i < 3; ++i) {
                        switch (t.loop_order[i]) {
                        case TileDim::Cout: block_c = idx[i]; break;
                        case TileDim::H: block_h = idx[i]; break;
                        case TileDim::W: block_w = idx[i]; break;
                        }
                    }
                    UnitGeom u;
                    u.layer = static_cast<int>(li);
                    u.block = {i0, i1, i2};
                    u.c0 = block_c * t.t_cout;
                    u.h0 = block_h * t.t_h;
                    u.w0 = block_w * t.t_w;
                    u.tc = std::min(t.t_cout, d.c_out - u.c0);
                    u.th = std::min(t.t_h, d.h_out - u.h0);
                    u.tw = std::min(t.t_w, d.w_out - u.w0);
                    u.macs = static_cast<std::int64_t>(u.tc) * u.th * u.tw * d.k * d.k * d.c_in;
                    std::int64_t halo = static_cast<std::int64_t>(d.s * (u.th - 1) + d.k) *
                                        (d.s * (u.tw - 1) + d.k) * d.c_in;
                    std::int64_t wbytes = static_cast<std::int64_t>(u.tc) * d.c_in * d.k * d.k;
                    u.fetch_bytes = (halo + wbytes) * kBytesPerElem;
                    u.out_bytes = static_cast<std::int64_t>(u.tc) * u.th * u.tw * kBytesPerElem;
                    units.push_back(u);
                }
            }
        }
        units.back().last_of_layer = true;
    }
    return sched;
}

QTensor run_reference(const NetworkSpec& net, const QTensor& input) {
    require_valid(net);
    if (input.channels != net.input_shape.c || input.height != net.input_shape.h ||
        input.width != net.input_shape.w) {
        throw Error(ErrorKind::Input, "input tensor shape does not match network input");
    }
    if (input.frac_bits != net.frac_bits) {
        throw Error(ErrorKind::Input, "input frac_bits does not match network activation scale");
    }

    auto ctx = layer_contexts(net);
    QTensor cur = input;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const LayerCtx& l = ctx[li];
        bool relu = li + 1 < net.layers.size();
        QTensor next(l.out.c, l.out.h, l.out.w, net.frac_bits);
        switch (l.spec->kind) {
        case LayerKind::Conv2D:
            for (int co = 0; co < l.out.c; ++co)
                for (int oh = 0; oh < l.out.h; ++oh)
                    for (int ow = 0; ow < l.out.w; ++ow)
                        next.at(co, oh, ow) = conv_element(l, cur, co, oh, ow, relu);
            break;
        case LayerKind::MaxPool2D:
            for (int c = 0; c < l.out.c; ++c)
                for (int oh = 0; oh < l.out.h; ++oh)
                    for (int ow = 0; ow < l.out.w; ++ow)
                        next.at(c, oh, ow) = pool_element(l, cur, c, oh, ow);
            break;
        case LayerKind::FullyConnected: {
            // Flattened 1x1 conv over (n_in, 1, 1).
            QTensor flat(l.spec->n_in, 1, 1, cur.frac_bits);
            flat.data = cur.data;
            LayerSpec as_conv = LayerSpec::conv(l.spec->n_in, l.spec->n_out, 1, 1, 0);
            LayerCtx lc = l;
            lc.spec = &as_conv;
            for (int co = 0; co < l.out.c; ++co)
                next.at(co, 0, 0) = conv_element(lc, flat, co, 0, 0, relu);
            break;
        }
        }
        cur = std::move(next);
    }
    return cur;
}

namespace detail {

UnitComputer::UnitComputer(const NetworkSpec& net) : net_(&net) {
    shapes_ = layer_shapes(net);
    // fc layers get a synthetic 1x1-conv spec so one kernel path serves both.
    for (const auto& l : net.layers) {
        if (l.kind == LayerKind::FullyConnected) {
            fc_as_conv_.push_back(LayerSpec::conv(l.n_in, l.n_out, 1, 1, 0));
        } else {
            fc_as_conv_.push_back(l);
        }
    }
}

void UnitComputer::compute(int layer, const UnitGeom& u, const QTensor& in,
                           QTensor& out) const {
    const NetworkSpec& net = *net_;
    LayerCtx l;
    l.spec = &net.layers[layer];
    l.in = shapes_[layer];
    l.out = shapes_[layer + 1];
    l.weights = net.weights[layer].has_value() ? &*net.weights[layer] : nullptr;
    l.bias = net.biases[layer].has_value() ? &*net.biases[layer] : nullptr;
    l.w_frac = l.weights ? l.weights->frac_bits : 0;
    bool relu = layer + 1 < static_cast<int>(net.layers.size());

    switch (l.spec->kind) {
    case LayerKind::Conv2D:
        for (int c = u.c0; c < u.c0 + u.tc; ++c)
            for (int h = u.h0; h < u.h0 + u.th; ++h)
                for (int w = u.w0; w < u.w0 + u.tw; ++w)
                    out.at(c, h, w) = conv_element(l, in, c, h, w, relu);
        break;
    case LayerKind::MaxPool2D:
        for (int c = 0; c < l.out.c; ++c)
            for (int h = 0; h < l.out.h; ++h)
                for (int w = 0; w < l.out.w; ++w)
                    out.at(c, h, w) = pool_element(l, in, c, h, w);
        break;
    case LayerKind::FullyConnected: {
        QTensor flat(l.spec->n_in, 1, 1, in.frac_bits);
        flat.data = in.data;
        LayerCtx lc = l;
        lc.spec = &fc_as_conv_[layer];
        for (int c = u.c0; c < u.c0 + u.tc; ++c)
            out.at(c, 0, 0) = conv_element(lc, flat, c, 0, 0, relu);
        break;
    }
    }
}

} // namespace detail

TiledResult run_tiled(const NetworkSpec& net, const QTensor& input,
                      const ExecutionDesign& design) {
    auto sched = unit_schedule(net, design);
    if (input.channels != net.input_shape.c || input.height != net.input_shape.h ||
        input.width != net.input_shape.w || input.frac_bits != net.frac_bits) {
        throw Error(ErrorKind::Input, "input tensor does not match network input");
    }

    auto shapes = layer_shapes(net);
    detail::UnitComputer computer(net);
    TiledResult result;
    QTensor cur = input;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Shape3& os = shapes[li + 1];
        QTensor out(os.c, os.h, os.w, net.frac_bits);
        LayerTileStats stats;
        stats.layer = static_cast<int>(li);
        for (const UnitGeom& u : sched[li]) {
            computer.compute(static_cast<int>(li), u, cur, out);
            stats.units++;
            stats.unit_macs.push_back(u.macs);
            stats.unit_fetch_bytes.push_back(u.fetch_bytes);
            stats.unit_out_bytes.push_back(u.out_bytes);
        }
        result.stats.layers.push_back(std::move(stats));
        cur = std::move(out);
    }
    result.output = std::move(cur);
    return result;
}

VMFootprint tile_footprint(const LayerSpec& layer, const Shape3& in_shape,
                           const Shape3& out_shape, const TileConfig& tile, int batch_size) {
    VMFootprint f;
    f.scratch_bytes = 16;  // snapshot staging
    switch (layer.kind) {
    case LayerKind::Conv2D: {
        f.input_bytes = static_cast<std::int64_t>(layer.s * (tile.t_h - 1) + layer.k) *
                        (layer.s * (tile.t_w - 1) + layer.k) * layer.c_in * kBytesPerElem;
        f.weight_bytes =
            static_cast<std::int64_t>(tile.t_cout) * layer.c_in * layer.k * layer.k * kBytesPerElem;
        f.output_batch_bytes = static_cast<std::int64_t>(batch_size) * tile.t_cout * tile.t_h *
                               tile.t_w * kBytesPerElem;
        break;
    }
    case LayerKind::FullyConnected: {
        f.input_bytes = static_cast<std::int64_t>(layer.n_in) * kBytesPerElem;
        f.weight_bytes = static_cast<std::int64_t>(tile.t_cout) * layer.n_in * kBytesPerElem;
        f.output_batch_bytes =
            static_cast<std::int64_t>(batch_size) * tile.t_cout * kBytesPerElem;
        break;
    }
    case LayerKind::MaxPool2D: {
        // Untiled single unit: whole input in, whole output buffered once.
        f.input_bytes =
            static_cast<std::int64_t>(in_shape.c) * in_shape.h * in_shape.w * kBytesPerElem;
        f.weight_bytes = 0;
        f.output_batch_bytes =
            static_cast<std::int64_t>(out_shape.c) * out_shape.h * out_shape.w * kBytesPerElem;
        break;
    }
    }
    f.total_bytes = f.input_bytes + f.weight_bytes + f.output_batch_bytes + f.scratch_bytes;
    return f;
}

int classify(const QTensor& logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.data.size(); ++i) {
        if (logits.data[i] > logits.data[best]) best = static_cast<int>(i);
    }
    return best;
}

} // namespace ehw
