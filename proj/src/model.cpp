#include "ehw/model.hpp"

#include <cmath>
#include <sstream>

namespace ehw {

namespace {

void check_frac_bits(int frac_bits) {
    if (frac_bits < 0 || frac_bits > 15) {
        throw Error(ErrorKind::Parameter,
                    "frac_bits must be in [0, 15], got " + std::to_string(frac_bits));
    }
}

std::int64_t weight_count(const LayerSpec& l) {
    switch (l.kind) {
    case LayerKind::Conv2D:
        return static_cast<std::int64_t>(l.c_out) * l.c_in * l.k * l.k;
    case LayerKind::FullyConnected:
        return static_cast<std::int64_t>(l.n_out) * l.n_in;
    case LayerKind::MaxPool2D:
        return 0;
    }
    return 0;
}

} // namespace

std::int16_t quantize_value(double x, int frac_bits) {
    check_frac_bits(frac_bits);
    double scaled = x * static_cast<double>(1 << frac_bits);
    // llround rounds half away from zero, matching the quantization rule.
    long long r = std::llround(scaled);
    if (r < -32768) r = -32768;
    if (r > 32767) r = 32767;
    return static_cast<std::int16_t>(r);
}

std::vector<std::int16_t> quantize(const std::vector<double>& x, int frac_bits) {
    check_frac_bits(frac_bits);
    std::vector<std::int16_t> out;
    out.reserve(x.size());
    for (double v : x) out.push_back(quantize_value(v, frac_bits));
    return out;
}

double dequantize_value(std::int16_t v, int frac_bits) {
    return static_cast<double>(v) / static_cast<double>(1 << frac_bits);
}

std::vector<double> dequantize(const std::vector<std::int16_t>& x, int frac_bits) {
    std::vector<double> out;
    out.reserve(x.size());
    for (std::int16_t v : x) out.push_back(dequantize_value(v, frac_bits));
    return out;
}

Shape3 conv_output_shape(const LayerSpec& layer, const Shape3& in) {
    switch (layer.kind) {
    case LayerKind::Conv2D: {
        if (in.h + 2 * layer.p < layer.k || in.w + 2 * layer.p < layer.k) {
            throw Error(ErrorKind::Input, "kernel larger than padded input");
        }
        int h = (in.h + 2 * layer.p - layer.k) / layer.s + 1;
        int w = (in.w + 2 * layer.p - layer.k) / layer.s + 1;
        return {layer.c_out, h, w};
    }
    case LayerKind::MaxPool2D: {
        if (in.h < layer.w || in.w < layer.w) {
            throw Error(ErrorKind::Input, "pool window larger than input");
        }
        int h = (in.h - layer.w) / layer.s + 1;
        int w = (in.w - layer.w) / layer.s + 1;
        return {in.c, h, w};
    }
    case LayerKind::FullyConnected: {
        if (static_cast<std::int64_t>(in.c) * in.h * in.w != layer.n_in) {
            throw Error(ErrorKind::Input, "fc n_in does not match flattened input");
        }
        return {layer.n_out, 1, 1};
    }
    }
    throw Error(ErrorKind::Parameter, "unknown layer kind");
}

std::vector<Violation> validate_network(const NetworkSpec& net) {
    std::vector<Violation> out;
    auto fail = [&](int layer, const std::string& msg) { out.push_back({layer, msg}); };

    if (net.layers.empty()) {
        fail(-1, "no layers");
        return out;
    }
    if (net.input_shape.c < 1 || net.input_shape.h < 1 || net.input_shape.w < 1) {
        fail(-1, "input shape must be positive");
    }
    if (net.frac_bits < 0 || net.frac_bits > 15) {
        fail(-1, "frac_bits out of [0, 15]");
    }
    if (net.weights.size() != net.layers.size()) {
        fail(-1, "weights list length != layer count");
        return out;
    }
    if (net.biases.size() != net.layers.size()) {
        fail(-1, "biases list length != layer count");
        return out;
    }

    Shape3 cur = net.input_shape;
    bool chain_ok = true;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        int li = static_cast<int>(i);

        switch (l.kind) {
        case LayerKind::Conv2D:
            if (l.k < 1 || l.s < 1 || l.p < 0 || l.c_in < 1 || l.c_out < 1) {
                fail(li, "conv parameters out of range");
            }
            if (l.k % 2 == 0) fail(li, "conv kernel must be odd");
            if (chain_ok && l.c_in != cur.c) {
                fail(li, "conv c_in " + std::to_string(l.c_in) +
                             " != incoming channels " + std::to_string(cur.c));
            }
            break;
        case LayerKind::MaxPool2D:
            if (l.w < 1 || l.s < 1) fail(li, "pool parameters out of range");
            break;
        case LayerKind::FullyConnected:
            if (l.n_in < 1 || l.n_out < 1) fail(li, "fc parameters out of range");
            if (chain_ok && static_cast<std::int64_t>(cur.c) * cur.h * cur.w != l.n_in) {
                fail(li, "fc n_in " + std::to_string(l.n_in) + " != flattened input size");
            }
            break;
        }

        // Weight presence and shape.
        std::int64_t want = weight_count(l);
        const auto& wopt = net.weights[i];
        if (l.kind == LayerKind::MaxPool2D) {
            if (wopt.has_value()) fail(li, "pool layer must not carry weights");
        } else if (!wopt.has_value()) {
            fail(li, "missing weight tensor");
        } else {
            if (wopt->count() != want) {
                fail(li, "weight element count " + std::to_string(wopt->count()) +
                             " != expected " + std::to_string(want));
            }
            bool shape_ok =
                (l.kind == LayerKind::Conv2D &&
                 wopt->channels == l.c_out && wopt->height == l.c_in &&
                 wopt->width == l.k * l.k) ||
                (l.kind == LayerKind::FullyConnected &&
                 wopt->channels == l.n_out && wopt->height == l.n_in && wopt->width == 1);
            if (!shape_ok) fail(li, "weight tensor shape does not match layer spec");
        }

        const auto& bopt = net.biases[i];
        if (bopt.has_value()) {
            if (l.kind == LayerKind::MaxPool2D) {
                fail(li, "pool layer must not carry biases");
            } else {
                int outs = l.kind == LayerKind::Conv2D ? l.c_out : l.n_out;
                if (bopt->count() != outs) fail(li, "bias element count != output count");
                if (wopt.has_value() &&
                    bopt->frac_bits != wopt->frac_bits + net.frac_bits) {
                    fail(li, "bias frac_bits must equal weight frac + activation frac");
                }
            }
        }

        if (chain_ok) {
            try {
                cur = conv_output_shape(l, cur);
            } catch (const Error& e) {
                fail(li, e.what());
                chain_ok = false;
            }
        }
    }

    if (chain_ok) {
        const LayerSpec& last = net.layers.back();
        std::int64_t outs = static_cast<std::int64_t>(cur.c) * cur.h * cur.w;
        if (net.output_classes > 0 && outs != net.output_classes) {
            fail(static_cast<int>(net.layers.size()) - 1,
                 "final output size " + std::to_string(outs) + " != output_classes " +
                     std::to_string(net.output_classes));
        }
        (void)last;
    }
    return out;
}

void require_valid(const NetworkSpec& net) {
    auto v = validate_network(net);
    if (v.empty()) return;
    std::ostringstream os;
    os << "invalid network:";
    for (const auto& x : v) os << " [layer " << x.layer << "] " << x.message << ";";
    throw Error(ErrorKind::Validation, os.str());
}

std::vector<Shape3> layer_shapes(const NetworkSpec& net) {
    std::vector<Shape3> shapes;
    shapes.push_back(net.input_shape);
    Shape3 cur = net.input_shape;
    for (const auto& l : net.layers) {
        cur = conv_output_shape(l, cur);
        shapes.push_back(cur);
    }
    return shapes;
}

OpCounts count_macs(const NetworkSpec& net) {
    require_valid(net);
    OpCounts out;
    auto shapes = layer_shapes(net);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        std::int64_t macs = 0;
        if (l.kind == LayerKind::Conv2D) {
            const Shape3& o = shapes[i + 1];
            macs = static_cast<std::int64_t>(o.h) * o.w * l.c_out * l.k * l.k * l.c_in;
        } else if (l.kind == LayerKind::FullyConnected) {
            macs = static_cast<std::int64_t>(l.n_in) * l.n_out;
        }
        out.per_layer.push_back(macs);
        out.total += macs;
    }
    return out;
}

OpCounts count_params(const NetworkSpec& net) {
    require_valid(net);
    OpCounts out;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        std::int64_t n = weight_count(net.layers[i]);
        if (net.biases[i].has_value()) n += net.biases[i]->count();
        out.per_layer.push_back(n);
        out.total += n;
    }
    return out;
}

} // namespace ehw
