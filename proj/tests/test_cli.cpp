#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "lusd/error.hpp"
#include "lusd/gmm_backend.hpp"
#include "lusd/wire_server.hpp"
#include "support.hpp"

using namespace lusd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run lusd_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

/// Demo backend that reports a different protocol version.
class OtherVersionBackend final : public DenoiserBackend {
public:
    OtherVersionBackend() : inner_(make_demo_world()) {}
    BackendHandshake handshake() override {
        BackendHandshake h = inner_.handshake();
        h.protocol_version = "lusd-wire/9";
        return h;
    }
    GridTensor encode(const GridTensor& i) override { return inner_.encode(i); }
    GridTensor decode(const GridTensor& l) override { return inner_.decode(l); }
    void begin_session(const GridTensor& z) override { inner_.begin_session(z); }
    PredictResponse predict(const PredictRequest& r) override { return inner_.predict(r); }
    std::vector<Token> tokenize(const std::string& t) override { return inner_.tokenize(t); }
    std::vector<float> embed_text(const std::string& t) override { return inner_.embed_text(t); }
    std::vector<float> embed_image(const GridTensor& i) override { return inner_.embed_image(i); }
    std::unique_ptr<DenoiserBackend> clone() const override { return std::make_unique<OtherVersionBackend>(); }

private:
    GmmBackend inner_;
};

const std::vector<std::string> kFast = {"--steps", "5", "--max-resamples", "3", "--t-min", "700"};

std::vector<std::string> edit_args(const fs::path& dir, const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> a = {"edit",         (dir / "source.png").string(), "--src-prompt", kDemoSourcePrompt,
                                  "--tgt-prompt", kDemoCatPrompt,                "--out",        (dir / out).string()};
    a.insert(a.end(), kFast.begin(), kFast.end());
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config precedence: defaults, then file, then flags") {
    test::TempDir dir;
    write_file(dir / "c.toml", "# overrides\nlambda = 0.5\nema_alpha = 0.3\nsteps = 40\n");

    const EngineConfig d = cli::resolve_config(std::nullopt, {});
    CHECK(d.lambda == 0.02);
    CHECK(d.steps == 300);

    const EngineConfig f = cli::resolve_config(dir / "c.toml", {});
    CHECK(f.lambda == 0.5);
    CHECK(f.ema_alpha == 0.3);
    CHECK(f.steps == 40);
    CHECK(f.lr == 2000.0);

    const EngineConfig c = cli::resolve_config(dir / "c.toml", {{"lambda", "0.25"}, {"lr", "100"}});
    CHECK(c.lambda == 0.25);
    CHECK(c.ema_alpha == 0.3);
    CHECK(c.lr == 100.0);

    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, {{"lambda", "abc"}}), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, {{"no_such_key", "1"}}), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, {{"gamma_lo", "0.5"}}), ConfigError);
}

TEST_CASE("precedence is visible in the telemetry config echo") {
    test::TempDir dir;
    REQUIRE(lusd_cli({"demo-world", "--out-dir", dir.path().string()}).code == 0);
    write_file(dir / "c.toml", "lambda = 0.5\nema_alpha = 0.3\n");

    auto args = edit_args(dir.path(), "a.png", {"--config", (dir / "c.toml").string(), "--lambda", "0.25", "--quiet"});
    const Run r = lusd_cli(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.empty());
    const json t = json::parse(slurp(dir / "a.json"));
    CHECK(t["config"]["lambda"] == "0.25");
    CHECK(t["config"]["ema_alpha"] == "0.3");
    CHECK(t["config"]["eta0"] == "0.01");
    CHECK(t["config"]["steps"] == "5");
}

TEST_CASE("usage errors exit 2") {
    CHECK(lusd_cli({}).code == 2);
    CHECK(lusd_cli({"edit", "--bogus"}).code == 2);
    CHECK(lusd_cli({"frobnicate"}).code == 2);
    CHECK(lusd_cli({"--help"}).code == 0);

    test::TempDir dir;
    REQUIRE(lusd_cli({"demo-world", "--out-dir", dir.path().string()}).code == 0);
    const Run bad = lusd_cli(edit_args(dir.path(), "x.png", {"--lambda", "lots"}));
    CHECK(bad.code == 2);
    CHECK(bad.err.find("config error") != std::string::npos);
    CHECK(lusd_cli(edit_args(dir.path(), "x.png", {"--t-min", "990"})).code == 2);
    CHECK_FALSE(fs::exists(dir / "x.png"));
}

TEST_CASE("demo world then edit writes the image and telemetry") {
    test::TempDir dir;
    const Run demo = lusd_cli({"demo-world", "--out-dir", dir.path().string()});
    REQUIRE(demo.code == 0);
    for (const char* f : {"world.json", "source.png", "gt_cat.png", "gt_dog.png", "manifest.jsonl"}) {
        CHECK(fs::exists(dir / f));
    }

    const Run r = lusd_cli(edit_args(dir.path(), "cat.png"));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(dir / "cat.png"));
    CHECK(fs::exists(dir / "cat.json"));
    CHECK(r.out.find("edit tokens: cat") != std::string::npos);
    const json t = json::parse(slurp(dir / "cat.json"));
    CHECK(t["steps"].size() == 5);

    // Explicit nouns and the world file from disk.
    const Run n = lusd_cli(edit_args(dir.path(), "n.png", {"--nouns", "meadow", "--world", (dir / "world.json").string()}));
    CHECK_MESSAGE(n.code == 0, n.err);
}

TEST_CASE("fixed seed gives byte-identical telemetry") {
    test::TempDir dir;
    REQUIRE(lusd_cli({"demo-world", "--out-dir", dir.path().string()}).code == 0);
    REQUIRE(lusd_cli(edit_args(dir.path(), "a.png", {"--seed", "11"})).code == 0);
    REQUIRE(lusd_cli(edit_args(dir.path(), "b.png", {"--seed", "11"})).code == 0);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
}

TEST_CASE("unreachable backend exits 3 and writes nothing") {
    test::TempDir dir;
    REQUIRE(lusd_cli({"demo-world", "--out-dir", dir.path().string()}).code == 0);
    const Run r = lusd_cli(edit_args(dir.path(), "out.png", {"--backend", "http://127.0.0.1:1", "--retries", "0"}));
    CHECK(r.code == 3);
    CHECK_FALSE(fs::exists(dir / "out.png"));
    CHECK_FALSE(fs::exists(dir / "out.json"));
    CHECK_FALSE(fs::exists(dir / ".out.tmp.png"));
    CHECK(lusd_cli({"handshake", "--backend", "http://127.0.0.1:1", "--retries", "0"}).code == 3);
}

TEST_CASE("identical prompts without nouns exit 6") {
    test::TempDir dir;
    REQUIRE(lusd_cli({"demo-world", "--out-dir", dir.path().string()}).code == 0);
    std::vector<std::string> a = {"edit",         (dir / "source.png").string(), "--src-prompt", kDemoSourcePrompt,
                                  "--tgt-prompt", kDemoSourcePrompt,             "--out",        (dir / "o.png").string()};
    const Run r = lusd_cli(a);
    CHECK(r.code == 6);
    CHECK(r.err.find("--nouns") != std::string::npos);
}

TEST_CASE("handshake against a live server") {
    WireServer server(std::make_unique<GmmBackend>(make_demo_world()));
    server.start();
    const Run r = lusd_cli({"handshake", "--backend", server.url()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json j = json::parse(r.out);
    CHECK(j["latent_shape"] == json::array({4, 64, 64}));
    CHECK(j["schedule"]["steps"] == 1000);
    server.stop();

    WireServer other(std::make_unique<OtherVersionBackend>());
    other.start();
    CHECK(lusd_cli({"handshake", "--backend", other.url()}).code == 4);
    other.stop();
}

TEST_CASE("eval writes a report; worker count does not change it") {
    test::TempDir dir;
    REQUIRE(lusd_cli({"demo-world", "--out-dir", dir.path().string()}).code == 0);
    const std::string manifest = (dir / "manifest.jsonl").string();
    auto eval = [&](const std::string& out_dir, const std::string& workers) {
        std::vector<std::string> a = {"eval", manifest, "--out-dir", (dir / out_dir).string(), "--workers", workers,
                                      "--min-count", "1"};
        a.insert(a.end(), kFast.begin(), kFast.end());
        return lusd_cli(a);
    };
    const Run one = eval("r1", "1");
    REQUIRE_MESSAGE(one.code == 0, one.err);
    CHECK(one.out.find("CLIP-AUC") != std::string::npos);
    CHECK(one.out.find("cat") != std::string::npos);
    CHECK(one.out.find("dog") != std::string::npos);
    for (const char* f : {"report.json", "report.csv", "curve.csv"}) CHECK(fs::exists(dir / "r1" / f));

    const Run four = eval("r4", "4");
    REQUIRE(four.code == 0);
    CHECK(slurp(dir / "r1/report.json") == slurp(dir / "r4/report.json"));
    const json j = json::parse(slurp(dir / "r1/report.json"));
    CHECK(j["examples"].size() == 2);
}

}  // TEST_SUITE
