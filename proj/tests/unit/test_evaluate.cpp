#include "doctest.h"

#include <fstream>
#include <random>

#include "../oracles.hpp"
#include "camsel/cam.hpp"
#include "camsel/error.hpp"
#include "camsel/evaluate.hpp"
#include "camsel/similarity.hpp"

using namespace camsel;

namespace {

const char* kFixture = CAMSEL_FIXTURE_DIR "/table1.csv";

const std::vector<double> kPublishedTop1{0.3397, 0.2458, 0.2786, 0.2934, 0.4022, 0.5539, 0.404,
                                         0.5408, 0.2207, 0.4744, 0.3829, 0.5077, 0.4773, 0.5181,
                                         0.3494, 0.2437, 0.424, 0.4226, 0.4938, 0.399};

}  // namespace

TEST_CASE("threshold_map") {
    CHECK(threshold_map(ActivationMap::zeros(3, 3), 0.15).count() == 0);
    const auto m = threshold_map(ActivationMap(2, 2, {0.1f, 0.15f, 0.2f, 0.9f}), 0.15);
    CHECK(std::vector<std::uint8_t>(m.bits().begin(), m.bits().end()) == std::vector<std::uint8_t>{0, 1, 1, 1});
    CHECK_THROWS_AS(threshold_map(ActivationMap::zeros(1, 1), 1.5), Error);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = oracle::random_grid(rng, 6, 5);
        const double t = static_cast<double>(rng() % 1000) / 1000.0;
        const auto mask = threshold_map(oracle::to_map(g), t);
        for (std::size_t y = 0; y < 6; ++y)
            for (std::size_t x = 0; x < 5; ++x) CHECK(mask.at(y, x) == (static_cast<float>(g[y][x]) >= t));
    }
}

TEST_CASE("iou examples") {
    const auto a = oracle::mask_from_bits(2, 2, 0b0011);
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, oracle::mask_from_bits(2, 2, 0b1100)) == 0.0);
    CHECK_FALSE(iou(oracle::mask_from_bits(2, 2, 0), oracle::mask_from_bits(2, 2, 0)).has_value());
    // gt = 4 pixels; pred covers 2 of them plus 1 extra
    const auto gt = oracle::mask_from_bits(3, 3, 0b000001111);
    const auto pred = oracle::mask_from_bits(3, 3, 0b000010011);
    CHECK(*iou(pred, gt) == doctest::Approx(0.4));
    CHECK_THROWS_AS(iou(a, oracle::mask_from_bits(1, 4, 0)), Error);
}

TEST_CASE("adding a correct pixel never lowers iou") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint32_t gt_bits = rng() & 0x1ff, pred_bits = rng() & 0x1ff;
        const auto gt = oracle::mask_from_bits(3, 3, gt_bits);
        const auto before = iou(oracle::mask_from_bits(3, 3, pred_bits), gt);
        for (int i = 0; i < 9; ++i) {
            if (!((gt_bits >> i) & 1u)) continue;
            const auto after = iou(oracle::mask_from_bits(3, 3, pred_bits | (1u << i)), gt);
            REQUIRE(after.has_value());
            CHECK(*after >= before.value_or(0.0));
            CHECK(*after <= 1.0);
        }
    }
}

TEST_CASE("miou_per_class") {
    const std::vector<std::string> names{"a", "b", "c"};
    SUBCASE("one image, identical masks") {
        const std::map<std::string, ActivationMap> maps{{"x", ActivationMap(1, 2, {1, 0})}};
        const std::map<std::string, BinaryMask> gts{{"x", oracle::mask_from_bits(1, 2, 0b01)}};
        const auto r = miou_per_class(maps, gts, {{"x", 0}}, names, 0.15);
        CHECK(r.per_class.size() == 1);
        CHECK(r.per_class[0].miou == 1.0);
        CHECK(r.average == 1.0);
    }
    SUBCASE("unweighted class mean") {
        // class a: one sample at 0.2; class b: two samples at 0.6
        std::map<std::string, ActivationMap> maps;
        std::map<std::string, BinaryMask> gts;
        std::map<std::string, std::size_t> cls;
        maps.emplace("a0", ActivationMap(1, 5, {1, 0, 0, 0, 0}));
        gts.emplace("a0", oracle::mask_from_bits(1, 5, 0b11111));
        cls["a0"] = 0;
        for (const char* id : {"b0", "b1"}) {
            maps.emplace(id, ActivationMap(1, 5, {1, 1, 1, 0, 0}));
            gts.emplace(id, oracle::mask_from_bits(1, 5, 0b11111));
            cls[id] = 1;
        }
        const auto r = miou_per_class(maps, gts, cls, names, 0.15);
        CHECK(r.find("a")->miou == doctest::Approx(0.2));
        CHECK(r.find("b")->miou == doctest::Approx(0.6));
        CHECK(r.find("b")->count == 2);
        CHECK(r.find("c") == nullptr);
        CHECK(r.average == doctest::Approx(0.4));
    }
    SUBCASE("matches the flat aggregation oracle") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 10; ++trial) {
            std::map<std::string, ActivationMap> maps;
            std::map<std::string, BinaryMask> gts;
            std::map<std::string, std::size_t> cls;
            std::vector<std::pair<std::size_t, std::optional<double>>> flat;
            for (int i = 0; i < 15; ++i) {
                const std::string id = "s" + std::to_string(i);
                const auto g = oracle::random_grid(rng, 3, 3);
                const auto gt = oracle::mask_from_bits(3, 3, static_cast<std::uint32_t>(rng() & 0x1ff));
                const std::size_t c = rng() % 3;
                maps.emplace(id, oracle::to_map(g));
                gts.emplace(id, gt);
                cls[id] = c;
                std::set<std::size_t> pred;
                for (std::size_t p = 0; p < 9; ++p)
                    if (static_cast<float>(g[p / 3][p % 3]) >= 0.5) pred.insert(p);
                flat.emplace_back(c, oracle::iou_sets(pred, oracle::pixels(gt)));
            }
            const auto r = miou_per_class(maps, gts, cls, names, 0.5);
            CHECK(r.average == doctest::Approx(oracle::flat_miou(flat)).epsilon(1e-12));
        }
    }
    SUBCASE("errors name the sample") {
        const std::map<std::string, ActivationMap> maps{{"x", ActivationMap(1, 2, {1, 0})}};
        try {
            miou_per_class(maps, {}, {{"x", 0}}, names, 0.15);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingInput);
            CHECK(e.context() == "x");
        }
        const std::map<std::string, BinaryMask> empty_gt{{"x", oracle::mask_from_bits(1, 2, 0)}};
        CHECK_THROWS_AS(miou_per_class({{"x", ActivationMap::zeros(1, 2)}}, empty_gt, {{"x", 0}}, names, 0.15),
                        Error);
    }
}

TEST_CASE("published pair matrix") {
    const auto file = read_pair_matrix_csv(kFixture);
    const auto& pm = file.matrix;
    REQUIRE(pm.size() == 20);
    CHECK(pm.class_names()[0] == "aeroplane");
    CHECK_FALSE(pm.at(3, 3).has_value());

    SUBCASE("top-1 picks") {
        const auto aero = topk_select_from_matrix(pm, 0, 1);
        CHECK(pm.class_names()[aero[0]] == "bird");
        CHECK(*pm.at(aero[0], 0) == doctest::Approx(0.3397));
        const auto bike = topk_select_from_matrix(pm, 1, 1);
        CHECK(pm.class_names()[bike[0]] == "dog");
        CHECK(*pm.at(bike[0], 1) == doctest::Approx(0.2458));
        CHECK(topk_select_from_matrix(pm, 4, 19).size() == 19);
        CHECK_THROWS_AS(topk_select_from_matrix(pm, 4, 20), Error);
    }
    SUBCASE("top1 report") {
        const auto r = top1_report(pm);
        REQUIRE(r.per_class.size() == 20);
        for (std::size_t c = 0; c < 20; ++c) CHECK(std::abs(r.per_class[c].miou - kPublishedTop1[c]) <= 1e-4);
        CHECK(std::abs(r.average - 0.3986) <= 5e-4);
        const auto* ref = file.find("Top1");
        REQUIRE(ref != nullptr);
        CHECK(std::abs(*ref->average - 0.3986) <= 1e-9);
        CHECK(std::abs(*file.find("Grad-CAM")->average - 0.2724) <= 1e-9);
    }
    SUBCASE("column permutation permutes the report") {
        std::vector<std::size_t> perm(20);
        std::iota(perm.begin(), perm.end(), 0);
        std::mt19937_64 rng(6);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::string> names(20);
        std::vector<std::optional<double>> values(400);
        for (std::size_t c = 0; c < 20; ++c) {
            names[perm[c]] = pm.class_names()[c];
            for (std::size_t r = 0; r < 20; ++r) values[perm[r] * 20 + perm[c]] = pm.at(r, c);
        }
        const auto a = top1_report(pm);
        const auto b = top1_report(PairMatrix(names, values));
        CHECK(b.average == doctest::Approx(a.average).epsilon(1e-12));
        for (const auto& s : a.per_class) CHECK(b.find(s.name)->miou == s.miou);
    }
}

TEST_CASE("constant pair matrix") {
    std::vector<std::optional<double>> v(16, 0.3);
    const auto r = top1_report(PairMatrix(default_class_names(4), v));
    for (const auto& s : r.per_class) CHECK(s.miou == 0.3);
    CHECK(r.average == doctest::Approx(0.3));
}

TEST_CASE("pair matrix CSV") {
    const auto dir = oracle::temp_dir("pairmatrix");
    std::vector<std::optional<double>> v(9);
    v[1] = 0.5;
    v[3] = 0.25;
    v[5] = 1.0;
    const PairMatrix pm({"a", "b", "c"}, v);
    std::ofstream(dir / "pm.csv") << pair_matrix_csv_text(pm);
    const auto back = read_pair_matrix_csv(dir / "pm.csv").matrix;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(back.at(r, c) == pm.at(r, c));

    std::ofstream(dir / "bad.csv") << "x,a,b\na,-,2.0\nb,0.1,-\n";
    CHECK_THROWS_AS(read_pair_matrix_csv(dir / "bad.csv"), Error);
}

TEST_CASE("top-k fused evaluation") {
    // Target 0 object = 4 pixels. Comparison 1 lights pixels {0,1}, comparison
    // 2 lights {2,3}, comparison 3 lights nothing useful.
    const std::vector<std::string> names{"t", "p", "q", "r"};
    const auto gt = oracle::mask_from_bits(1, 6, 0b001111);
    PairMapSet maps;
    maps["img/0"].emplace(1, ActivationMap(1, 6, {1, 1, 0, 0, 0, 0}));
    maps["img/0"].emplace(2, ActivationMap(1, 6, {0, 0, 1, 1, 0, 0}));
    maps["img/0"].emplace(3, ActivationMap(1, 6, {0, 0, 0, 0, 1, 1}));
    const std::map<std::string, BinaryMask> gts{{"img/0", gt}};
    const std::map<std::string, std::size_t> cls{{"img/0", 0}};

    const auto pm = pair_matrix_from_maps(maps, gts, cls, names, 0.15);
    CHECK(*pm.at(1, 0) == doctest::Approx(0.5));
    CHECK(*pm.at(3, 0) == 0.0);
    CHECK_FALSE(pm.at(0, 1).has_value());

    const auto top1 = topk_fused_eval(1, pm, maps, gts, cls, 0.15);
    CHECK(top1.average == doctest::Approx(top1_report(pm).average));
    const auto top2 = topk_fused_eval(2, pm, maps, gts, cls, 0.15);
    CHECK(top2.average == 1.0);
    CHECK(top2.average > top1.average);
    const auto all = topk_fused_eval(3, pm, maps, gts, cls, 0.15);
    CHECK(all.average < top2.average);

    PairMapSet missing = maps;
    missing["img/0"].erase(2);
    CHECK_THROWS_AS(topk_fused_eval(2, pm, missing, gts, cls, 0.15), Error);
}

TEST_CASE("report serialization") {
    EvalReport r;
    r.per_class = {{"a", 0.5, 2}, {"b", 0.25, 1}};
    r.average = 0.375;
    const auto text = report_csv_text(r);
    CHECK(text.rfind("class,miou,count\n", 0) == 0);
    CHECK(text.find("__avg__,0.375,3\n") != std::string::npos);
    CHECK(to_json(r).at("per_class").size() == 2);
}
