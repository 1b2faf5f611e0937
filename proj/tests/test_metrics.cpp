#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "lusd/error.hpp"
#include "lusd/gmm_backend.hpp"
#include "lusd/image_io.hpp"
#include "lusd/metrics.hpp"
#include "support.hpp"

using namespace lusd;
using nlohmann::json;

namespace {

std::vector<double> grid() { return KGrid{}.points(); }

// Demo-world source and ground-truth images plus a manifest over them.
void write_demo_manifest(const test::TempDir& dir, const std::vector<std::string>& extra_lines = {}) {
    GmmBackend b(make_demo_world());
    write_image(dir / "source.png", b.decode(b.world().components[0].mean));
    write_image(dir / "gt_cat.png", b.decode(b.world().components[1].mean));
    std::ofstream m(dir / "manifest.jsonl");
    m << json{{"id", "cat"},         {"source_image", "source.png"}, {"y_src", kDemoSourcePrompt},
              {"y_tgt", kDemoCatPrompt}, {"y_local", "cat"},          {"ground_truth", "gt_cat.png"},
              {"instruction", "add a cat"}}
             .dump()
      << "\n\n"
      << json{{"id", "dog"}, {"source_image", "source.png"}, {"y_src", kDemoSourcePrompt}, {"y_tgt", kDemoDogPrompt}}
             .dump()
      << "\n";
    for (const std::string& l : extra_lines) m << l << "\n";
}

EngineConfig quick_config() {
    EngineConfig c;
    c.steps = 4;
    c.max_resamples = 4;
    c.t_min = 700;
    c.seed = 9;
    return c;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("cosine similarity") {
    CHECK(cosine({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(cosine({1, 0}, {0, 1}) == 0.0);
    CHECK(cosine({1, 2}, {-1, -2}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(cosine({1, 0}, {1}), ShapeError);
    CHECK_THROWS_AS(cosine({0, 0}, {1, 0}), ShapeError);
}

TEST_CASE("CLIP-R") {
    GmmBackend b(make_demo_world());
    const GridTensor src = b.decode(b.world().components[0].mean);
    CHECK(clip_r(src, src, kDemoCatPrompt, b).value() == 1.0);

    const std::vector<float> e_y = {1.0f, 0.0f};
    const std::vector<float> e_x = {0.3f, static_cast<float>(std::sqrt(1 - 0.09))};
    const std::vector<float> e_src = {0.25f, static_cast<float>(std::sqrt(1 - 0.0625))};
    CHECK(clip_r_from_embeddings(e_x, e_src, e_y).value() == doctest::Approx(1.2).epsilon(1e-6));
    CHECK(clip_r_from_embeddings({0.0f, 1.0f}, e_src, e_y).value() == 0.0);
    CHECK_FALSE(clip_r_from_embeddings(e_x, {0.0f, 1.0f}, e_y).has_value());

    test::ScriptedBackend p;
    p.image_embed = [](const GridTensor& i) { return std::vector<float>{i[0], 1.0f - i[0]}; };
    const GridTensor a(Shape{3, 8, 8}, 0.0f), c(Shape{3, 8, 8}, 1.0f);
    CHECK(clip_r(a, c, "x", p).value() == 0.0);
}

TEST_CASE("success curve") {
    const auto all = success_curve({1.5, 1.5, 1.5}, {1.0, 1.22});
    CHECK(all[0].fraction == 1.0);
    CHECK(all[1].fraction == 1.0);
    CHECK(success_curve({0.9, 1.1}, {1.0})[0].fraction == 0.5);
    CHECK(success_curve({1.0}, {1.0})[0].fraction == 0.0);
    CHECK_THROWS_AS(success_curve({}, {1.0}), Error);
}

TEST_CASE("curves never increase on random score sets") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.8, 1.4);
    const auto g = grid();
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> s(1 + gen() % 50);
        for (double& v : s) v = u(gen);
        const auto c = success_curve(s, g);
        for (std::size_t i = 1; i < c.size(); ++i) REQUIRE(c[i].fraction <= c[i - 1].fraction);
        const double auc = clip_auc(c);
        REQUIRE(auc >= 0.0);
        REQUIRE(auc <= 0.22 + 1e-12);
    }
}

TEST_CASE("k grid") {
    const auto g = grid();
    REQUIRE(g.size() == 23);
    CHECK(g.front() == 1.0);
    CHECK(g.back() == 1.22);
    CHECK_THROWS_AS((KGrid{1.0, 1.225, 0.01}.points()), ConfigError);
}

TEST_CASE("CLIP-AUC") {
    std::vector<CurvePoint> ones, zeros;
    for (double k : grid()) {
        ones.push_back({k, 1.0});
        zeros.push_back({k, 0.0});
    }
    CHECK(clip_auc(ones) == doctest::Approx(0.22).epsilon(1e-12));
    CHECK(clip_auc(zeros) == 0.0);
}

TEST_CASE("thresholded AUC") {
    const std::vector<double> r(40, 1.3);
    for (double c : {0.0, 0.015, 0.5, 2.0}) {
        const auto t = thresholded_auc(std::vector<double>(40, c), r, grid(), 30);
        CHECK(std::fabs(t.value - 0.22 * c) < 1e-9);
        CHECK(t.points == 23);
    }
    // Mean L1 of 0.063 with full success integrates to about 0.014.
    CHECK(thresholded_auc(std::vector<double>(40, 0.063), r, grid(), 30).value == doctest::Approx(0.01386));

    CHECK_THROWS_AS(thresholded_auc(std::vector<double>(40, 1.0), std::vector<double>(40, 0.9), grid(), 30), Error);
    CHECK_THROWS_AS(thresholded_auc(std::vector<double>(10, 1.0), std::vector<double>(10, 1.5), grid(), 30), Error);

    // Half the examples fail beyond k = 1.1: those grid points drop out.
    std::vector<double> mixed(60, 1.5);
    for (int i = 0; i < 40; ++i) mixed[i] = 1.105;
    const auto t = thresholded_auc(std::vector<double>(60, 1.0), mixed, grid(), 30);
    CHECK(t.k_lo == 1.0);
    CHECK(t.k_hi == doctest::Approx(1.10));
    CHECK(t.value == doctest::Approx(0.10));
}

TEST_CASE("thresholded AUC is monotone in the metric") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0), r(0.95, 1.3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> m(50), cr(50);
        for (double& v : m) v = u(gen);
        for (double& v : cr) v = r(gen);
        std::vector<double> up = m;
        for (double& v : up) v += u(gen) * 0.1;
        double a = 0.0, b = 0.0;
        try {
            a = thresholded_auc(m, cr, grid(), 5).value;
            b = thresholded_auc(up, cr, grid(), 5).value;
        } catch (const Error&) {
            continue;
        }
        REQUIRE(b >= a);
    }
}

TEST_CASE("plain L1") {
    const GridTensor black(Shape{3, 4, 4}, 0.0f), white(Shape{3, 4, 4}, 1.0f);
    CHECK(l1_distance(black, black) == 0.0);
    CHECK(l1_distance(black, white) == 1.0);
    GridTensor half = black;
    for (std::size_t i = 0; i < half.size(); i += 2) half[i] = 0.5f;
    CHECK(l1_distance(black, half) == 0.25);
    CHECK_THROWS_AS(l1_distance(black, GridTensor(Shape{3, 2, 2})), ShapeError);
}

TEST_CASE("instruction classification") {
    CHECK(add_keywords().size() + other_keywords().size() == 17);
    for (const std::string& k : add_keywords()) {
        CHECK(classify_instruction("please " + k + " a hat") == InstructionKind::Add);
    }
    for (const std::string& k : other_keywords()) {
        CHECK(classify_instruction("please " + k + " the hat") == InstructionKind::Other);
    }
    CHECK(classify_instruction("add a cat on the sofa") == InstructionKind::Add);
    CHECK(classify_instruction("remove the hat") == InstructionKind::Other);
    CHECK(classify_instruction("photograph the scene") == InstructionKind::Unknown);
    CHECK(classify_instruction("Let there be light") == InstructionKind::Add);
    CHECK(classify_instruction("let the sun be there") == InstructionKind::Unknown);
    CHECK(classify_instruction("make it look like a painting and add a boat") == InstructionKind::Add);
    CHECK(classify_instruction("the address is wrong") == InstructionKind::Unknown);
    CHECK(classify_instruction("Turn the car red.") == InstructionKind::Other);
}

TEST_CASE("manifest loading") {
    test::TempDir dir;
    write_demo_manifest(dir, {"{\"id\": \"broken\"", "{\"id\": \"cat\", \"source_image\": \"s.png\", \"y_src\": "
                                                     "\"a\", \"y_tgt\": \"b\"}",
                              "{\"id\": \"n\", \"source_image\": \"s.png\", \"y_src\": \"a\", \"y_tgt\": \"b\", "
                              "\"nouns\": [\"b\"]}"});
    const auto m = load_manifest(dir / "manifest.jsonl");
    REQUIRE(m.size() == 5);
    REQUIRE(m[0].example);
    CHECK(m[0].example->source_image == dir / "source.png");
    CHECK(m[0].example->y_local.value() == "cat");
    REQUIRE(m[1].example);
    CHECK_FALSE(m[1].example->ground_truth.has_value());
    CHECK_FALSE(m[2].example.has_value());
    CHECK(m[2].line == 4);
    CHECK_FALSE(m[3].example.has_value());
    CHECK(m[3].error.find("duplicate") != std::string::npos);
    CHECK(m[4].example->nouns == std::vector<std::string>{"b"});
    CHECK_THROWS_AS(load_manifest(dir / "missing.jsonl"), IoError);
}

TEST_CASE("benchmark over the demo world") {
    test::TempDir dir;
    write_demo_manifest(dir, {"not json at all"});
    const auto manifest = load_manifest(dir / "manifest.jsonl");
    GmmBackend proto(make_demo_world());

    BenchmarkOptions one;
    one.min_count = 1;
    const EvalReport r1 = run_benchmark(manifest, quick_config(), proto, one);
    REQUIRE(r1.examples.size() == 3);
    CHECK(r1.examples[0].id == "cat");
    CHECK(r1.examples[1].id == "dog");
    CHECK(r1.examples[2].id == "line-4");
    CHECK_FALSE(r1.examples[2].ok);
    CHECK(r1.examples[0].ok);
    CHECK(std::isfinite(r1.examples[0].clip_r.value()));
    CHECK(r1.examples[0].l1_vs_gt.has_value());
    CHECK(r1.examples[0].instruction_kind == InstructionKind::Add);
    CHECK_FALSE(r1.examples[0].y_local_fallback);
    CHECK(r1.examples[1].y_local_fallback);
    CHECK(std::isfinite(r1.clip_auc.value()));
    CHECK(r1.curve.size() == 23);

    BenchmarkOptions four = one;
    four.workers = 4;
    const EvalReport r4 = run_benchmark(manifest, quick_config(), proto, four);
    CHECK(report_json(r1).dump() == report_json(r4).dump());

    const EvalReport again = run_benchmark(manifest, quick_config(), proto, one);
    CHECK(report_json(again).dump() == report_json(r1).dump());

    write_report(r1, dir / "out");
    CHECK(std::filesystem::exists(dir / "out/report.json"));
    CHECK(std::filesystem::exists(dir / "out/report.csv"));
    CHECK(std::filesystem::exists(dir / "out/curve.csv"));
    const json j = json::parse(std::ifstream(dir / "out/report.json"));
    CHECK(j["schema"] == "lusd-eval-report/1");
    CHECK(j["examples"].size() == 3);
}

TEST_CASE("empty manifest gives an empty report with a warning") {
    GmmBackend proto(make_demo_world());
    const EvalReport r = run_benchmark({}, quick_config(), proto, {});
    CHECK(r.examples.empty());
    CHECK_FALSE(r.warnings.empty());
    CHECK_FALSE(r.clip_auc.has_value());
}

}  // TEST_SUITE
