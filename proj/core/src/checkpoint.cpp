#include "graylearn/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "graylearn/csv.hpp"
#include "graylearn/errors.hpp"

namespace graylearn {

namespace {

constexpr char kMagic[4] = {'G', 'L', 'C', 'K'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint64_t take(std::size_t width) {
        if (bytes_.size() - pos_ < width) throw LoadError("checkpoint: truncated file");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += width;
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    double f64() { return std::bit_cast<double>(take(8)); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ModelParams& params) {
    params.validate();
    std::string out(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(params.depth()));
    for (const auto& layer : params.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
        put_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
        for (double v : layer.weight.data()) put_f64(out, v);
        for (double v : layer.bias) put_f64(out, v);
    }
    return out;
}

ModelParams decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw LoadError("checkpoint: bad magic bytes");
    }
    Reader in(bytes);
    in.take(4);
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion) {
        throw LoadError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t depth = in.u32();
    ModelParams params;
    for (std::uint32_t l = 0; l < depth; ++l) {
        const std::size_t rows = in.u32();
        const std::size_t cols = in.u32();
        // Reject sizes the remaining bytes cannot possibly hold before allocating.
        if (rows != 0 && cols + 1 > in.remaining() / 8 / rows) throw LoadError("checkpoint: truncated file");
        Matrix w(rows, cols);
        for (double& v : w.data()) v = in.f64();
        std::vector<double> b(rows);
        for (double& v : b) v = in.f64();
        params.layers.push_back({std::move(w), std::move(b)});
    }
    if (in.remaining() != 0) throw LoadError("checkpoint: trailing bytes after last layer");
    try {
        params.validate();
    } catch (const ShapeError& e) {
        throw LoadError(std::string("checkpoint: ") + e.what());
    }
    return params;
}

void checkpoint_save(const ModelParams& params, const std::string& path) {
    write_file_atomic(path, encode_checkpoint(params));
}

ModelParams checkpoint_load(const std::string& path) {
    std::string bytes;
    try {
        bytes = read_file(path);
    } catch (const ParseError& e) {
        throw LoadError(e.what());
    }
    return decode_checkpoint(bytes);
}

}  // namespace graylearn
