#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace camsel {

/// Dense row-major float32 array of rank 1 to 4. Values are always finite.
class Tensor {
public:
    Tensor(std::vector<std::size_t> dims, std::vector<float> data);

    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::span<const float> data() const noexcept { return data_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    bool operator==(const Tensor&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<float> data_;
};

/// H x W map with every value in [0,1]. All-zero is the "no activation" map.
class ActivationMap {
public:
    ActivationMap(std::size_t height, std::size_t width, std::vector<float> values);

    static ActivationMap zeros(std::size_t height, std::size_t width);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::span<const float> values() const noexcept { return values_; }
    float at(std::size_t y, std::size_t x) const { return values_[y * width_ + x]; }

    bool operator==(const ActivationMap&) const = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<float> values_;
};

class BinaryMask {
public:
    BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    bool at(std::size_t y, std::size_t x) const { return bits_[y * width_ + x] != 0; }
    std::size_t count() const noexcept;

    bool operator==(const BinaryMask&) const = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<std::uint8_t> bits_;  // 0 or 1
};

// CAMT container:
//   "CAMT" | version u8 (=1) | dtype u8 (=1, f32 LE) | ndim u8 | reserved u8 (=0)
//   | ndim x u32 LE dims | row-major f32 LE payload
inline constexpr std::uint8_t kCamtVersion = 1;
inline constexpr std::uint8_t kCamtDtypeF32 = 1;
inline constexpr std::size_t kCamtFixedHeader = 8;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin = {});

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

/// Rank-2 [H,W] tensor view of a map, and back. The reverse direction
/// requires every value in [0,1].
Tensor map_to_tensor(const ActivationMap& m);
ActivationMap tensor_to_map(const Tensor& t);

/// Binary P5 with maxval 255; a pixel is foreground iff its byte is > 127.
BinaryMask read_mask_pgm(const std::filesystem::path& path);
BinaryMask decode_mask_pgm(std::span<const std::uint8_t> bytes, const std::string& origin = {});
void write_mask_pgm(const BinaryMask& m, const std::filesystem::path& path);

/// Writes round-half-up(v * 255) per pixel.
void write_map_pgm(const ActivationMap& m, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_map_pgm(const ActivationMap& m);
std::uint8_t quantize_unit(float v) noexcept;

/// Align-corners bilinear resampling.
ActivationMap resize_bilinear(const ActivationMap& m, std::size_t height, std::size_t width);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace camsel
