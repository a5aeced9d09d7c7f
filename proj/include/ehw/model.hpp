#ifndef EHW_MODEL_HPP
#define EHW_MODEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ehw/common.hpp"

namespace ehw {

// Fixed-point tensor: int16 storage, value = stored * 2^-frac_bits.
// Layout is row-major over (channels, height, width). Weight tensors reuse
// the same container with shape (c_out, c_in, k*k) for conv and
// (n_out, n_in, 1) for fully-connected layers.
struct QTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    int frac_bits = 0;
    std::vector<std::int16_t> data;

    QTensor() = default;
    QTensor(int c, int h, int w, int frac)
        : channels(c), height(h), width(w), frac_bits(frac),
          data(static_cast<std::size_t>(c) * h * w, 0) {}

    std::int64_t count() const {
        return static_cast<std::int64_t>(channels) * height * width;
    }
    std::int16_t at(int c, int h, int w) const {
        return data[(static_cast<std::size_t>(c) * height + h) * width + w];
    }
    std::int16_t& at(int c, int h, int w) {
        return data[(static_cast<std::size_t>(c) * height + h) * width + w];
    }
    bool operator==(const QTensor&) const = default;
};

enum class LayerKind { Conv2D, MaxPool2D, FullyConnected };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv2D;
    // Conv2D
    int c_in = 0;
    int c_out = 0;
    int k = 1;
    int s = 1;
    int p = 0;
    // MaxPool2D
    int w = 2;
    // FullyConnected
    int n_in = 0;
    int n_out = 0;

    static LayerSpec conv(int c_in, int c_out, int k, int s, int p) {
        LayerSpec l;
        l.kind = LayerKind::Conv2D;
        l.c_in = c_in;
        l.c_out = c_out;
        l.k = k;
        l.s = s;
        l.p = p;
        return l;
    }
    static LayerSpec pool(int w, int s) {
        LayerSpec l;
        l.kind = LayerKind::MaxPool2D;
        l.w = w;
        l.s = s;
        return l;
    }
    static LayerSpec fc(int n_in, int n_out) {
        LayerSpec l;
        l.kind = LayerKind::FullyConnected;
        l.n_in = n_in;
        l.n_out = n_out;
        return l;
    }
    bool operator==(const LayerSpec&) const = default;
};

struct Shape3 {
    int c = 0;
    int h = 0;
    int w = 0;
    bool operator==(const Shape3&) const = default;
};

struct NetworkSpec {
    Shape3 input_shape;
    int frac_bits = 8;   // activation scale, shared by all layers
    int output_classes = 0;
    std::vector<LayerSpec> layers;
    // Indexed by layer; pool layers carry empty optionals. Biases, when
    // present, are stored at the accumulator scale (weight frac + activation
    // frac) and added to the int64 accumulator directly.
    std::vector<std::optional<QTensor>> weights;
    std::vector<std::optional<QTensor>> biases;

    bool operator==(const NetworkSpec&) const = default;
};

// Array quantization with round-half-away-from-zero and int16 saturation.
std::int16_t quantize_value(double x, int frac_bits);
std::vector<std::int16_t> quantize(const std::vector<double>& x, int frac_bits);

double dequantize_value(std::int16_t v, int frac_bits);
std::vector<double> dequantize(const std::vector<std::int16_t>& x, int frac_bits);

// Output shape of one layer applied to `in`. Throws on geometry errors
// (kernel larger than padded input, non-chaining fc, ...).
Shape3 conv_output_shape(const LayerSpec& layer, const Shape3& in);

struct Violation {
    int layer = -1;  // -1 = whole-network problem
    std::string message;
};

// Collects every structural violation; empty result means the net is valid.
std::vector<Violation> validate_network(const NetworkSpec& net);
void require_valid(const NetworkSpec& net);  // throws Error(Validation)

struct OpCounts {
    std::vector<std::int64_t> per_layer;
    std::int64_t total = 0;
};

OpCounts count_macs(const NetworkSpec& net);
OpCounts count_params(const NetworkSpec& net);

// Shapes of every layer boundary: index 0 is the input shape, index i+1 the
// output of layer i. Throws if shapes do not chain.
std::vector<Shape3> layer_shapes(const NetworkSpec& net);

} // namespace ehw

#endif
