#include "doctest.h"

#include <cstring>
#include <random>

#include "../oracles.hpp"
#include "camsel/error.hpp"
#include "camsel/tensorio.hpp"

using namespace camsel;

namespace {

std::vector<std::uint8_t> camt_bytes(std::vector<std::uint32_t> dims, std::vector<float> payload) {
    std::vector<std::uint8_t> b{'C', 'A', 'M', 'T', 1, 1, static_cast<std::uint8_t>(dims.size()), 0};
    for (auto d : dims)
        for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(d >> (8 * i)));
    for (float f : payload) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    return b;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("decode a 2x2 tensor") {
    const auto t = decode_tensor(camt_bytes({2, 2}, {1, 2, 3, 4}));
    CHECK(t.dims() == std::vector<std::size_t>{2, 2});
    CHECK(std::vector<float>(t.data().begin(), t.data().end()) == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("payload shorter than dims") {
    CHECK(code_of([] { decode_tensor(camt_bytes({2, 2}, {1, 2, 3})); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("header errors") {
    auto good = camt_bytes({2}, {1, 2});
    auto bad = good;
    bad[0] = 'X';
    CHECK(code_of([&] { decode_tensor(bad); }) == ErrorCode::BadMagic);
    bad = good;
    bad[4] = 2;
    CHECK(code_of([&] { decode_tensor(bad); }) == ErrorCode::UnsupportedVersion);
    bad = good;
    bad[5] = 7;
    CHECK(code_of([&] { decode_tensor(bad); }) == ErrorCode::UnsupportedDtype);
    bad = good;
    bad[6] = 0;
    CHECK(code_of([&] { decode_tensor(bad); }) == ErrorCode::BadHeader);
    bad = good;
    bad[6] = 5;
    CHECK(code_of([&] { decode_tensor(bad); }) == ErrorCode::BadHeader);
    CHECK(code_of([&] { decode_tensor(std::vector<std::uint8_t>(good.begin(), good.begin() + 9)); }) ==
          ErrorCode::BadHeader);
    CHECK(code_of([] { decode_tensor(camt_bytes({2}, {1, NAN})); }) == ErrorCode::NonFinite);
    CHECK(code_of([] { decode_tensor(camt_bytes({0}, {})); }) == ErrorCode::BadHeader);
}

TEST_CASE("encoding layout") {
    SUBCASE("rank 1 with a single zero is 12+4 bytes") {
        const auto b = encode_tensor(Tensor({1}, {0.0f}));
        CHECK(b.size() == 16);
        CHECK(b == camt_bytes({1}, {0.0f}));
    }
    SUBCASE("[2,3] header and payload") {
        const auto b = encode_tensor(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
        CHECK(b[6] == 2);
        CHECK(b.size() == 8 + 8 + 24);
        CHECK(b[8] == 2);
        CHECK(b[12] == 3);
    }
    SUBCASE("two encodes are identical") {
        const Tensor t({3}, {0.25f, -1.0f, 7.5f});
        CHECK(encode_tensor(t) == encode_tensor(t));
    }
}

TEST_CASE("file round trip is bit exact") {
    const auto dir = oracle::temp_dir("tensorio");
    std::mt19937_64 rng(3);
    std::normal_distribution<float> nd(0.0f, 100.0f);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rank = 1 + rng() % 4;
        std::vector<std::size_t> dims;
        std::size_t total = 1;
        for (std::size_t i = 0; i < rank; ++i) {
            dims.push_back(1 + rng() % 5);
            total *= dims.back();
        }
        std::vector<float> data(total);
        for (float& f : data) f = nd(rng);
        const Tensor t(dims, data);
        const auto path = dir / "t.camt";
        write_tensor(t, path);
        const auto first = read_file_bytes(path);
        const auto back = read_tensor(path);
        CHECK(back == t);
        write_tensor(back, path);
        CHECK(read_file_bytes(path) == first);
    }
}

TEST_CASE("tensor validation") {
    CHECK(code_of([] { Tensor({}, {}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Tensor({1, 1, 1, 1, 1}, {1}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { Tensor({2}, {1}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([] { Tensor({1}, {INFINITY}); }) == ErrorCode::NonFinite);
    CHECK(code_of([] { ActivationMap(1, 1, {1.5f}); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { read_tensor("/nonexistent/x.camt"); }) == ErrorCode::Io);
}

TEST_CASE("PGM masks") {
    const std::string header = "P5\n2 2\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    for (std::uint8_t v : {255, 0, 0, 255}) bytes.push_back(v);
    const auto m = decode_mask_pgm(bytes);
    CHECK(m.at(0, 0));
    CHECK_FALSE(m.at(0, 1));
    CHECK_FALSE(m.at(1, 0));
    CHECK(m.at(1, 1));

    SUBCASE("maxval other than 255") {
        const std::string h2 = "P5\n2 2\n15\n";
        std::vector<std::uint8_t> b2(h2.begin(), h2.end());
        b2.resize(b2.size() + 4, 0);
        CHECK(code_of([&] { decode_mask_pgm(b2); }) == ErrorCode::BadHeader);
    }
    SUBCASE("comments in header") {
        const std::string h3 = "P5\n# made by hand\n2 2\n255\n";
        std::vector<std::uint8_t> b3(h3.begin(), h3.end());
        for (std::uint8_t v : {0, 128, 127, 0}) b3.push_back(v);
        const auto m3 = decode_mask_pgm(b3);
        CHECK(m3.count() == 1);
        CHECK(m3.at(0, 1));
    }
    SUBCASE("file round trip") {
        const auto dir = oracle::temp_dir("pgm");
        write_mask_pgm(m, dir / "m.pgm");
        CHECK(read_mask_pgm(dir / "m.pgm") == m);
    }
}

TEST_CASE("map quantization") {
    CHECK(quantize_unit(0.5f) == 128);
    CHECK(quantize_unit(0.0f) == 0);
    CHECK(quantize_unit(1.0f) == 255);
    const auto b = encode_map_pgm(ActivationMap(1, 2, {0.5f, 1.0f}));
    CHECK(b[b.size() - 2] == 128);
    CHECK(b.back() == 255);
}

TEST_CASE("bilinear resize") {
    SUBCASE("midpoint") {
        const auto r = resize_bilinear(ActivationMap(1, 2, {0.0f, 1.0f}), 1, 3);
        CHECK(r.at(0, 0) == 0.0f);
        CHECK(r.at(0, 1) == doctest::Approx(0.5));
        CHECK(r.at(0, 2) == 1.0f);
    }
    SUBCASE("constants stay constant") {
        for (std::size_t h : {1, 3, 7})
            for (std::size_t w : {1, 2, 9}) {
                const auto r = resize_bilinear(ActivationMap(3, 4, std::vector<float>(12, 0.3f)), h, w);
                for (float v : r.values()) CHECK(v == 0.3f);
            }
    }
    SUBCASE("same size returns equal values") {
        std::mt19937_64 rng(1);
        const auto m = oracle::to_map(oracle::random_grid(rng, 5, 6));
        CHECK(resize_bilinear(m, 5, 6) == m);
    }
    SUBCASE("4x4 to 8x8 matches the per-pixel oracle") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const auto g = oracle::random_grid(rng, 4, 4);
            const auto r = resize_bilinear(oracle::to_map(g), 8, 8);
            const auto want = oracle::bilinear(g, 8, 8);
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t x = 0; x < 8; ++x) {
                    CHECK(std::abs(r.at(y, x) - want[y][x]) <= 1e-6);
                    CHECK(r.at(y, x) >= 0.0f);
                    CHECK(r.at(y, x) <= 1.0f);
                }
        }
    }
}
