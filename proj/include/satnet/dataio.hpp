#ifndef SATNET_DATAIO_HPP
#define SATNET_DATAIO_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "satnet/network.hpp"

namespace satnet {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadMagicError : IoError {
    using IoError::IoError;
};
struct TruncatedError : IoError {
    using IoError::IoError;
};
struct CountMismatchError : IoError {
    using IoError::IoError;
};
struct FormatError : IoError {
    using IoError::IoError;
};

struct Dataset {
    std::vector<Vector> images;  // length 784, pixels in [0,1]
    std::vector<int> labels;     // 0..9
    std::string split;

    std::size_t size() const { return images.size(); }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw TruncatedError("truncated while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

/// Load an MNIST IDX image/label file pair. Pixels are divided by 255 so
/// every value lands in [0,1]; no further normalization is applied.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        const std::string& split = "") {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open image file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open label file: " + labels_path);

    std::uint32_t img_magic = detail::read_be32(img, "image magic");
    if (img_magic != 0x00000803u)
        throw BadMagicError("image file magic mismatch in " + images_path +
                            " (got " + std::to_string(img_magic) + ", want 2051)");
    std::uint32_t lab_magic = detail::read_be32(lab, "label magic");
    if (lab_magic != 0x00000801u)
        throw BadMagicError("label file magic mismatch in " + labels_path +
                            " (got " + std::to_string(lab_magic) + ", want 2049)");

    std::uint32_t n_images = detail::read_be32(img, "image count");
    std::uint32_t rows = detail::read_be32(img, "image rows");
    std::uint32_t cols = detail::read_be32(img, "image cols");
    std::uint32_t n_labels = detail::read_be32(lab, "label count");
    if (n_images != n_labels)
        throw CountMismatchError("image count " + std::to_string(n_images) +
                                 " != label count " + std::to_string(n_labels));

    Dataset ds;
    ds.split = split;
    ds.images.reserve(n_images);
    ds.labels.reserve(n_images);
    const std::size_t pixels = (std::size_t)rows * cols;
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), (std::streamsize)pixels))
            throw TruncatedError("image file truncated at example " + std::to_string(i));
        Vector v(pixels);
        for (std::size_t p = 0; p < pixels; ++p) v[p] = buf[p] / 255.0;
        ds.images.push_back(std::move(v));
        int lb = lab.get();
        if (lb == EOF)
            throw TruncatedError("label file truncated at example " + std::to_string(i));
        if (lb < 0 || lb > 9)
            throw FormatError("label out of range at example " + std::to_string(i));
        ds.labels.push_back(lb);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON header + little-endian float64 blobs, bit-exact round trip
// ---------------------------------------------------------------------------

struct CheckpointMeta {
    std::string regime = "vanilla";
    double final_lambda = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t epochs = 0;
};

namespace detail {

constexpr char kCheckpointMagic[8] = {'S', 'A', 'T', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::json layer_to_json(const Layer& l) {
    nlohmann::json j;
    switch (l.kind) {
        case LayerKind::Dense: j["kind"] = "dense"; break;
        case LayerKind::Conv: j["kind"] = "conv"; break;
        case LayerKind::MaxPool: j["kind"] = "maxpool"; break;
    }
    switch (l.act) {
        case Activation::Sigmoid: j["act"] = "sigmoid"; break;
        case Activation::Relu: j["act"] = "relu"; break;
        case Activation::None: j["act"] = "none"; break;
    }
    j["rows"] = l.weights.rows;
    j["cols"] = l.weights.cols;
    j["in_ch"] = l.in_ch;
    j["out_ch"] = l.out_ch;
    j["in_h"] = l.in_h;
    j["in_w"] = l.in_w;
    j["kernel"] = l.kernel;
    j["window"] = l.window;
    return j;
}

inline Layer layer_from_json(const nlohmann::json& j) {
    Layer l;
    std::string kind = j.at("kind");
    if (kind == "dense") l.kind = LayerKind::Dense;
    else if (kind == "conv") l.kind = LayerKind::Conv;
    else if (kind == "maxpool") l.kind = LayerKind::MaxPool;
    else throw FormatError("unknown layer kind in checkpoint: " + kind);
    std::string act = j.at("act");
    if (act == "sigmoid") l.act = Activation::Sigmoid;
    else if (act == "relu") l.act = Activation::Relu;
    else if (act == "none") l.act = Activation::None;
    else throw FormatError("unknown activation in checkpoint: " + act);
    l.weights = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    l.in_ch = j.at("in_ch");
    l.out_ch = j.at("out_ch");
    l.in_h = j.at("in_h");
    l.in_w = j.at("in_w");
    l.kernel = j.at("kernel");
    l.window = j.at("window");
    return l;
}

static_assert(sizeof(double) == 8);

inline void write_doubles(std::ostream& out, const std::vector<double>& v) {
    // little-endian on every supported target
    out.write(reinterpret_cast<const char*>(v.data()),
              (std::streamsize)(v.size() * sizeof(double)));
}

inline void read_doubles(std::istream& in, std::vector<double>& v,
                         const std::string& what) {
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 (std::streamsize)(v.size() * sizeof(double))))
        throw TruncatedError("checkpoint truncated while reading " + what);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Network& net,
                            const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    nlohmann::json header;
    header["version"] = detail::kCheckpointVersion;
    header["architecture"] = net.descriptor;
    header["regime"] = meta.regime;
    header["final_lambda"] = meta.final_lambda;
    header["seed"] = meta.seed;
    header["epochs"] = meta.epochs;
    header["layers"] = nlohmann::json::array();
    for (const Layer& l : net.layers) header["layers"].push_back(detail::layer_to_json(l));
    std::string hs = header.dump();
    out.write(detail::kCheckpointMagic, 8);
    std::uint64_t len = hs.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(hs.data(), (std::streamsize)hs.size());
    for (const Layer& l : net.layers) {
        if (!l.has_weights()) continue;
        detail::write_doubles(out, l.weights.data);
        detail::write_doubles(out, l.bias);
    }
    if (!out) throw IoError("write failure on checkpoint: " + path);
}

inline std::pair<Network, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    if (!in.read(magic, 8)) throw TruncatedError("checkpoint truncated in magic");
    if (std::string(magic, 8) != std::string(detail::kCheckpointMagic, 8))
        throw BadMagicError("checkpoint magic mismatch in " + path);
    std::uint64_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), 8))
        throw TruncatedError("checkpoint truncated in header length");
    std::string hs(len, '\0');
    if (!in.read(hs.data(), (std::streamsize)len))
        throw TruncatedError("checkpoint truncated in header");
    nlohmann::json header = nlohmann::json::parse(hs);
    if (header.at("version").get<std::uint32_t>() != detail::kCheckpointVersion)
        throw FormatError("checkpoint version mismatch: got " +
                          header.at("version").dump());
    Network net;
    net.descriptor = header.at("architecture");
    for (const auto& jl : header.at("layers"))
        net.layers.push_back(detail::layer_from_json(jl));
    CheckpointMeta meta;
    meta.regime = header.at("regime");
    meta.final_lambda = header.at("final_lambda");
    meta.seed = header.at("seed");
    meta.epochs = header.at("epochs");
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        Layer& l = net.layers[li];
        if (!l.has_weights()) continue;
        detail::read_doubles(in, l.weights.data, "layer " + std::to_string(li) + " weights");
        l.bias.assign(l.weights.rows, 0.0);
        detail::read_doubles(in, l.bias, "layer " + std::to_string(li) + " biases");
    }
    return {std::move(net), meta};
}

// ---------------------------------------------------------------------------
// CSV / JSON result tables
// ---------------------------------------------------------------------------

/// Full-precision decimal representation of a double (round-trips exactly).
inline std::string repr(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw IoError("cannot open CSV for writing: " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << repr(cells[i]);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open JSON for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace satnet

#endif  // SATNET_DATAIO_HPP
