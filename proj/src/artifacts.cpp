#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ehw/artifacts.hpp"

namespace ehw {

namespace {

int kind_code(LayerKind k) {
    switch (k) {
    case LayerKind::Conv2D: return 0;
    case LayerKind::MaxPool2D: return 1;
    case LayerKind::FullyConnected: return 2;
    }
    return -1;
}

void emit_array(std::ostream& os, const std::string& name, const QTensor& t) {
    os << "static const int16_t " << name << "[" << t.data.size() << "] = {\n";
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        if (i % 12 == 0) os << " ";
        os << " " << t.data[i] << ",";
        if (i % 12 == 11 || i + 1 == t.data.size()) os << "\n";
    }
    os << "};\n";
}

} // namespace

std::string dump_header(const NetworkSpec& net, const ExecutionDesign& design) {
    validate_design(net, design);
    std::ostringstream os;

    os << "#ifndef EHW_MODEL_H\n#define EHW_MODEL_H\n\n";
    os << "#include <stdint.h>\n\n";
    os << "/* layer kinds: 0 = conv2d, 1 = maxpool2d, 2 = fc */\n\n";

    os << "#define NET_NUM_LAYERS " << net.layers.size() << "\n";
    os << "#define NET_INPUT_C " << net.input_shape.c << "\n";
    os << "#define NET_INPUT_H " << net.input_shape.h << "\n";
    os << "#define NET_INPUT_W " << net.input_shape.w << "\n";
    os << "#define NET_FRAC_BITS " << net.frac_bits << "\n";
    os << "#define NET_OUTPUT_CLASSES " << net.output_classes << "\n";

    os << "\n/* structure */\n";
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        std::string p = "L" + std::to_string(i) + "_";
        os << "#define " << p << "KIND " << kind_code(l.kind) << "\n";
        switch (l.kind) {
        case LayerKind::Conv2D:
            os << "#define " << p << "C_IN " << l.c_in << "\n";
            os << "#define " << p << "C_OUT " << l.c_out << "\n";
            os << "#define " << p << "K " << l.k << "\n";
            os << "#define " << p << "S " << l.s << "\n";
            os << "#define " << p << "P " << l.p << "\n";
            os << "#define " << p << "FRAC_BITS " << net.weights[i]->frac_bits << "\n";
            break;
        case LayerKind::MaxPool2D:
            os << "#define " << p << "W " << l.w << "\n";
            os << "#define " << p << "S " << l.s << "\n";
            break;
        case LayerKind::FullyConnected:
            os << "#define " << p << "N_IN " << l.n_in << "\n";
            os << "#define " << p << "N_OUT " << l.n_out << "\n";
            os << "#define " << p << "FRAC_BITS " << net.weights[i]->frac_bits << "\n";
            break;
        }
    }

    os << "\n/* execution design */\n";
    os << "#define NET_BATCH_S " << design.batch_size << "\n";
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].kind == LayerKind::MaxPool2D) continue;  // untiled
        const TileConfig& t = design.tiles[i];
        std::string p = "L" + std::to_string(i) + "_";
        os << "#define " << p << "TILE_COUT " << t.t_cout << "\n";
        os << "#define " << p << "TILE_H " << t.t_h << "\n";
        os << "#define " << p << "TILE_W " << t.t_w << "\n";
        os << "#define " << p << "LOOP_ORDER \"" << loop_order_name(t.loop_order) << "\"\n";
    }

    os << "\n/* weights, row-major (c_out, c_in, kh, kw) */\n";
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.weights[i].has_value()) continue;
        os << "\n";
        emit_array(os, "l" + std::to_string(i) + "_w", *net.weights[i]);
        if (net.biases[i].has_value()) {
            emit_array(os, "l" + std::to_string(i) + "_b", *net.biases[i]);
        }
    }

    os << "\n#endif /* EHW_MODEL_H */\n";
    return os.str();
}

namespace {

struct CsvDims {
    int c_out, c_in, kh, kw;
};

CsvDims csv_dims(const LayerSpec& l) {
    if (l.kind == LayerKind::Conv2D) return {l.c_out, l.c_in, l.k, l.k};
    return {l.n_out, l.n_in, 1, 1};
}

} // namespace

void dump_csv(const NetworkSpec& net, const std::filesystem::path& dir) {
    require_valid(net);
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.weights[i].has_value()) continue;
        const QTensor& w = *net.weights[i];
        CsvDims d = csv_dims(net.layers[i]);
        std::ofstream out(dir / ("layer" + std::to_string(i) + ".csv"));
        if (!out) throw Error(ErrorKind::Io, "cannot write layer csv in " + dir.string());
        out << "# shape: " << d.c_out << "," << d.c_in << "," << d.kh << "," << d.kw << ","
            << w.frac_bits << "\n";
        std::size_t row_len = static_cast<std::size_t>(d.c_in) * d.kh * d.kw;
        for (int co = 0; co < d.c_out; ++co) {
            for (std::size_t x = 0; x < row_len; ++x) {
                if (x) out << ",";
                out << w.data[co * row_len + x];
            }
            out << "\n";
        }
        if (!out) throw Error(ErrorKind::Io, "write failed in " + dir.string());
    }
}

std::vector<CsvLayerWeights> load_csv(const std::filesystem::path& dir) {
    std::vector<std::pair<int, std::filesystem::path>> files;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("layer", 0) == 0 && name.size() > 9 &&
            name.substr(name.size() - 4) == ".csv") {
            int idx = -1;
            auto num = name.substr(5, name.size() - 9);
            auto [p, e] = std::from_chars(num.data(), num.data() + num.size(), idx);
            if (e == std::errc{} && p == num.data() + num.size()) {
                files.emplace_back(idx, entry.path());
            }
        }
    }
    if (ec) throw Error(ErrorKind::Io, "cannot read directory " + dir.string());
    if (files.empty()) throw Error(ErrorKind::Parse, "no layer files in " + dir.string());
    std::sort(files.begin(), files.end());

    std::vector<CsvLayerWeights> out;
    for (const auto& [idx, path] : files) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
        auto fail = [&](int line, const std::string& msg) {
            throw Error(ErrorKind::Parse,
                        path.string() + ":" + std::to_string(line) + ": " + msg);
        };

        std::string line;
        if (!std::getline(in, line)) fail(1, "missing shape line");
        CsvLayerWeights lw;
        lw.layer = idx;
        int frac = 0;
        {
            const std::string prefix = "# shape: ";
            if (line.rfind(prefix, 0) != 0) fail(1, "malformed shape line");
            std::istringstream ss(line.substr(prefix.size()));
            char c1, c2, c3, c4;
            if (!(ss >> lw.c_out >> c1 >> lw.c_in >> c2 >> lw.kh >> c3 >> lw.kw >> c4 >>
                  frac) ||
                c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || !(ss >> std::ws).eof()) {
                fail(1, "malformed shape line");
            }
            if (lw.c_out < 1 || lw.c_in < 1 || lw.kh < 1 || lw.kw < 1 || frac < 0 ||
                frac > 30) {
                fail(1, "shape values out of range");
            }
        }

        std::size_t row_len = static_cast<std::size_t>(lw.c_in) * lw.kh * lw.kw;
        lw.weights = QTensor(lw.c_out, lw.c_in, lw.kh * lw.kw, frac);
        int row = 0;
        int lineno = 1;
        while (std::getline(in, line)) {
            lineno++;
            if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
            if (row >= lw.c_out) fail(lineno, "more rows than output channels");
            std::size_t col = 0;
            const char* p = line.data();
            const char* end = line.data() + line.size();
            while (true) {
                int v = 0;
                auto [np, e] = std::from_chars(p, end, v);
                if (e != std::errc{}) fail(lineno, "non-integer cell");
                if (v < -32768 || v > 32767) fail(lineno, "cell out of int16 range");
                if (col >= row_len) fail(lineno, "row length mismatch");
                lw.weights.data[row * row_len + col] = static_cast<std::int16_t>(v);
                col++;
                p = np;
                if (p == end) break;
                if (*p != ',') fail(lineno, "non-integer cell");
                p++;
            }
            if (col != row_len) fail(lineno, "row length mismatch");
            row++;
        }
        if (row != lw.c_out) fail(lineno, "fewer rows than output channels");
        out.push_back(std::move(lw));
    }
    return out;
}

NetworkSpec apply_csv_weights(const NetworkSpec& net,
                              const std::vector<CsvLayerWeights>& loaded) {
    NetworkSpec out = net;
    for (const auto& lw : loaded) {
        if (lw.layer < 0 || lw.layer >= static_cast<int>(out.layers.size())) {
            throw Error(ErrorKind::Parameter,
                        "csv layer index " + std::to_string(lw.layer) + " out of range");
        }
        CsvDims d = csv_dims(out.layers[lw.layer]);
        if (d.c_out != lw.c_out || d.c_in != lw.c_in || d.kh != lw.kh || d.kw != lw.kw) {
            throw Error(ErrorKind::Parameter,
                        "csv shape mismatch at layer " + std::to_string(lw.layer));
        }
        out.weights[lw.layer] = lw.weights;
    }
    require_valid(out);
    return out;
}

} // namespace ehw
