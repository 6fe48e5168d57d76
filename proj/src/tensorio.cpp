#include "camsel/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "camsel/error.hpp"

namespace camsel {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
    return v;
}

bool all_finite(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (dims_.empty() || dims_.size() > 4)
        throw Error(ErrorCode::InvalidArgument, "tensor rank must be 1..4, got " + std::to_string(dims_.size()));
    std::size_t count = 1;
    for (std::size_t d : dims_) {
        if (d == 0) throw Error(ErrorCode::InvalidArgument, "tensor extents must be positive");
        if (d > UINT32_MAX) throw Error(ErrorCode::InvalidArgument, "tensor extent exceeds u32");
        count *= d;
    }
    if (count != data_.size())
        throw Error(ErrorCode::LengthMismatch, "tensor payload has " + std::to_string(data_.size()) +
                                                   " values but dims imply " + std::to_string(count));
    if (!all_finite(data_)) throw Error(ErrorCode::NonFinite, "tensor contains NaN or Inf");
}

ActivationMap::ActivationMap(std::size_t height, std::size_t width, std::vector<float> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (height_ == 0 || width_ == 0) throw Error(ErrorCode::InvalidArgument, "map dimensions must be positive");
    if (values_.size() != height_ * width_)
        throw Error(ErrorCode::LengthMismatch, "map has " + std::to_string(values_.size()) + " values for " +
                                                   std::to_string(height_) + "x" + std::to_string(width_));
    for (float v : values_) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "map contains NaN or Inf");
        if (v < 0.0f || v > 1.0f) throw Error(ErrorCode::OutOfRange, "map value outside [0,1]");
    }
}

ActivationMap ActivationMap::zeros(std::size_t height, std::size_t width) {
    return ActivationMap(height, width, std::vector<float>(height * width, 0.0f));
}

BinaryMask::BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
    if (height_ == 0 || width_ == 0) throw Error(ErrorCode::InvalidArgument, "mask dimensions must be positive");
    if (bits_.size() != height_ * width_) throw Error(ErrorCode::LengthMismatch, "mask size does not match dims");
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    std::vector<std::uint8_t> out;
    out.reserve(kCamtFixedHeader + 4 * t.rank() + 4 * t.size());
    out.insert(out.end(), {'C', 'A', 'M', 'T'});
    out.push_back(kCamtVersion);
    out.push_back(kCamtDtypeF32);
    out.push_back(static_cast<std::uint8_t>(t.rank()));
    out.push_back(0);
    for (std::size_t d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "CAMT", 4) != 0)
        throw Error(ErrorCode::BadMagic, "not a CAMT tensor", origin);
    if (bytes.size() < kCamtFixedHeader) throw Error(ErrorCode::BadHeader, "truncated CAMT header", origin);
    if (bytes[4] != kCamtVersion)
        throw Error(ErrorCode::UnsupportedVersion, "unsupported CAMT version " + std::to_string(bytes[4]), origin);
    if (bytes[5] != kCamtDtypeF32)
        throw Error(ErrorCode::UnsupportedDtype, "unsupported CAMT dtype " + std::to_string(bytes[5]), origin);
    const std::size_t ndim = bytes[6];
    if (ndim < 1 || ndim > 4) throw Error(ErrorCode::BadHeader, "CAMT rank must be 1..4", origin);
    if (bytes[7] != 0) throw Error(ErrorCode::BadHeader, "CAMT reserved byte must be zero", origin);
    const std::size_t payload_off = kCamtFixedHeader + 4 * ndim;
    if (bytes.size() < payload_off) throw Error(ErrorCode::BadHeader, "truncated CAMT dims", origin);

    std::vector<std::size_t> dims(ndim);
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        dims[i] = get_u32(bytes, kCamtFixedHeader + 4 * i);
        if (dims[i] == 0) throw Error(ErrorCode::BadHeader, "CAMT extent is zero", origin);
        count *= dims[i];
    }
    const std::size_t payload = bytes.size() - payload_off;
    if (payload != 4 * count)
        throw Error(ErrorCode::LengthMismatch,
                    "CAMT payload is " + std::to_string(payload) + " bytes, dims need " + std::to_string(4 * count),
                    origin);

    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<float>(get_u32(bytes, payload_off + 4 * i));
    if (!all_finite(data)) throw Error(ErrorCode::NonFinite, "CAMT payload contains NaN or Inf", origin);
    return Tensor(std::move(dims), std::move(data));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open for reading", path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing", path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed", path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return decode_tensor(bytes, path.string());
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    write_file_bytes(path, encode_tensor(t));
}

Tensor map_to_tensor(const ActivationMap& m) {
    return Tensor({m.height(), m.width()}, {m.values().begin(), m.values().end()});
}

ActivationMap tensor_to_map(const Tensor& t) {
    if (t.rank() != 2) throw Error(ErrorCode::DimensionMismatch, "activation map tensor must be rank 2");
    return ActivationMap(t.dims()[0], t.dims()[1], {t.data().begin(), t.data().end()});
}

namespace {

// Cursor over a PGM header: whitespace-separated tokens with '#' comments.
struct PgmHeader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
    const std::string& origin;

    void skip_space() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::size_t number() {
        skip_space();
        std::size_t start = pos;
        std::size_t v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > (1u << 30)) throw Error(ErrorCode::BadHeader, "PGM header value too large", origin);
            ++pos;
        }
        if (pos == start) throw Error(ErrorCode::BadHeader, "malformed PGM header", origin);
        return v;
    }
};

}  // namespace

BinaryMask decode_mask_pgm(std::span<const std::uint8_t> bytes, const std::string& origin) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw Error(ErrorCode::BadHeader, "not a binary PGM (P5)", origin);
    PgmHeader h{bytes, 2, origin};
    const std::size_t width = h.number();
    const std::size_t height = h.number();
    const std::size_t maxval = h.number();
    if (width == 0 || height == 0) throw Error(ErrorCode::BadHeader, "PGM dimensions must be positive", origin);
    if (maxval != 255) throw Error(ErrorCode::BadHeader, "PGM maxval must be 255", origin);
    if (h.pos >= bytes.size() || !std::isspace(bytes[h.pos]))
        throw Error(ErrorCode::BadHeader, "missing whitespace after PGM maxval", origin);
    ++h.pos;
    if (bytes.size() - h.pos < width * height) throw Error(ErrorCode::LengthMismatch, "truncated PGM payload", origin);

    std::vector<std::uint8_t> bits(width * height);
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bytes[h.pos + i] > 127 ? 1 : 0;
    return BinaryMask(height, width, std::move(bits));
}

BinaryMask read_mask_pgm(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return decode_mask_pgm(bytes, path.string());
}

namespace {

std::vector<std::uint8_t> pgm_bytes(std::size_t height, std::size_t width, auto&& pixel) {
    const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + height * width);
    for (std::size_t i = 0; i < height * width; ++i) out.push_back(pixel(i));
    return out;
}

}  // namespace

void write_mask_pgm(const BinaryMask& m, const std::filesystem::path& path) {
    write_file_bytes(path, pgm_bytes(m.height(), m.width(), [&](std::size_t i) -> std::uint8_t {
                         return m.bits()[i] ? 255 : 0;
                     }));
}

std::uint8_t quantize_unit(float v) noexcept {
    const double scaled = std::floor(static_cast<double>(std::clamp(v, 0.0f, 1.0f)) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::min(scaled, 255.0));
}

std::vector<std::uint8_t> encode_map_pgm(const ActivationMap& m) {
    return pgm_bytes(m.height(), m.width(), [&](std::size_t i) { return quantize_unit(m.values()[i]); });
}

void write_map_pgm(const ActivationMap& m, const std::filesystem::path& path) {
    write_file_bytes(path, encode_map_pgm(m));
}

ActivationMap resize_bilinear(const ActivationMap& m, std::size_t height, std::size_t width) {
    if (height == 0 || width == 0) throw Error(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
    if (height == m.height() && width == m.width()) return m;

    auto source_coord = [](std::size_t i, std::size_t src, std::size_t dst) {
        if (dst == 1 || src == 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(src - 1) / static_cast<double>(dst - 1);
    };

    std::vector<float> out(height * width);
    for (std::size_t y = 0; y < height; ++y) {
        const double sy = source_coord(y, m.height(), height);
        const std::size_t y0 = std::min(static_cast<std::size_t>(sy), m.height() - 1);
        const std::size_t y1 = std::min(y0 + 1, m.height() - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double sx = source_coord(x, m.width(), width);
            const std::size_t x0 = std::min(static_cast<std::size_t>(sx), m.width() - 1);
            const std::size_t x1 = std::min(x0 + 1, m.width() - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = (1.0 - fx) * m.at(y0, x0) + fx * m.at(y0, x1);
            const double bottom = (1.0 - fx) * m.at(y1, x0) + fx * m.at(y1, x1);
            const double v = (1.0 - fy) * top + fy * bottom;
            out[y * width + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return ActivationMap(height, width, std::move(out));
}

}  // namespace camsel
