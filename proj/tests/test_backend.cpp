#include <doctest.h>

#include <cmath>

#include "lusd/error.hpp"
#include "lusd/gmm_backend.hpp"
#include "lusd/grad.hpp"
#include "lusd/rng.hpp"
#include "support.hpp"

using namespace lusd;

namespace {

// One channel, 1 x 2 latent; gmm_predict does not need a full world.
GmmWorld tiny_world(std::vector<GmmComponent> comps, std::vector<ConditionalEntry> cond) {
    GmmWorld w;
    w.latent_shape = Shape{1, 1, 2};
    w.components = std::move(comps);
    w.conditionals["p"] = std::move(cond);
    return w;
}

GridTensor vec2(float a, float b) { return GridTensor(Shape{1, 1, 2}, {a, b}); }

}  // namespace

TEST_SUITE("backend") {

TEST_CASE("gmm_predict: delta posterior of a single point mass") {
    const GmmWorld w = tiny_world({{vec2(1.0f, -2.0f), 0.0, 1.0, {0, 0, 1, 2}, "x"}}, {{0, 1.0}});
    const GridTensor z = vec2(0.3f, 0.7f);
    const double a = 0.64;
    const GridTensor e = gmm_predict(w, z, a, "p");
    CHECK(e[0] == doctest::Approx((0.3 - 0.8 * 1.0) / 0.6).epsilon(1e-6));
    CHECK(e[1] == doctest::Approx((0.7 - 0.8 * -2.0) / 0.6).epsilon(1e-6));
}

TEST_CASE("gmm_predict: standard normal prior") {
    const GmmWorld w = tiny_world({{vec2(0.0f, 0.0f), 1.0, 1.0, {0, 0, 1, 2}, "x"}}, {{0, 1.0}});
    const GridTensor z = vec2(1.5f, -0.25f);
    const double a = 0.3;
    const GridTensor e = gmm_predict(w, z, a, "p");
    CHECK(e[0] == doctest::Approx(std::sqrt(1 - a) * 1.5).epsilon(1e-6));
    CHECK(e[1] == doctest::Approx(std::sqrt(1 - a) * -0.25).epsilon(1e-6));
}

TEST_CASE("gmm_predict: symmetric point masses cancel") {
    const GmmWorld w = tiny_world({{vec2(1.0f, 1.0f), 0.0, 0.5, {0, 0, 1, 2}, "x"},
                                   {vec2(-1.0f, -1.0f), 0.0, 0.5, {0, 0, 1, 2}, "y"}},
                                  {{0, 0.5}, {1, 0.5}});
    const GridTensor e = gmm_predict(w, vec2(0.0f, 0.0f), 0.5, "p");
    CHECK(e[0] == doctest::Approx(0.0));
    CHECK(e[1] == doctest::Approx(0.0));
}

TEST_CASE("gmm_predict: two-component mixture against a hand evaluation") {
    // Frozen from an independent numpy evaluation of the closed form.
    const GmmWorld w = tiny_world({{vec2(1.0f, -0.5f), 0.5, 0.3, {0, 0, 1, 2}, "x"},
                                   {vec2(-1.0f, 2.0f), 1.2, 0.7, {0, 0, 1, 2}, "y"}},
                                  {{0, 0.3}, {1, 0.7}});
    const GridTensor z = vec2(0.4f, 0.9f);
    const auto r = gmm_responsibilities(w, z, 0.6, "p");
    CHECK(r[0] == doctest::Approx(0.28155492).epsilon(1e-6));
    CHECK(r[1] == doctest::Approx(0.71844508).epsilon(1e-6));
    const GridTensor e = gmm_predict(w, z, 0.6, "p");
    CHECK(e[0] == doctest::Approx(0.30096429).epsilon(1e-6));
    CHECK(e[1] == doctest::Approx(0.18340967).epsilon(1e-6));
    CHECK_THROWS_AS(gmm_predict(w, z, 1.0, "p"), ConfigError);
    CHECK_THROWS_AS(gmm_predict(w, z, 0.5, "nope"), BackendError);
}

TEST_CASE("log-weight normalization is stable") {
    const auto r = normalize_log_weights({-1e5, -1e5 + std::log(3.0)});
    CHECK(r[0] == doctest::Approx(0.25));
    CHECK(r[1] == doctest::Approx(0.75));
}

TEST_CASE("demo world structure and round trip through JSON") {
    const GmmWorld w = make_demo_world();
    CHECK(w.latent_shape == Shape{4, 64, 64});
    CHECK(w.class_labels() == std::vector<std::string>{"cat", "dog", "meadow"});
    CHECK(w.conditional("A Photo of a  Meadow").size() == 3);
    CHECK(w.unconditional().size() == 3);

    test::TempDir dir;
    save_world(dir / "w.json", w);
    const GmmWorld back = load_world(dir / "w.json");
    REQUIRE(back.components.size() == w.components.size());
    for (std::size_t i = 0; i < w.components.size(); ++i) {
        CHECK(back.components[i].mean == w.components[i].mean);
        CHECK(back.components[i].sigma == w.components[i].sigma);
        CHECK(back.components[i].class_label == w.components[i].class_label);
    }
    CHECK(back.conditionals.size() == w.conditionals.size());
}

TEST_CASE("world validation") {
    GmmWorld w = make_demo_world();
    w.conditionals[kDemoCatPrompt][0].weight = 0.5;
    CHECK_THROWS_AS(w.validate(), ConfigError);
    w = make_demo_world();
    w.components[1].region.y1 = 100;
    CHECK_THROWS_AS(w.validate(), ConfigError);
    w = make_demo_world();
    w.conditionals["Not Normalized"] = {{0, 1.0}};
    CHECK_THROWS_AS(w.validate(), ConfigError);
}

TEST_CASE("same source and target prompt give a zero SBP gradient") {
    GmmBackend b(make_demo_world());
    RngStream rng(1);
    const GridTensor z = b.world().components[0].mean;
    for (int t : {60, 400, 900}) {
        PredictRequest r;
        r.z_t = add_noise(z, sample_noise(rng, z.shape()), default_schedule().alpha_bar(t));
        r.t = t;
        r.y_tgt = r.y_src = kDemoCatPrompt;
        const PredictResponse p = b.predict(r);
        CHECK(raw_gradient(p.pair, GridTensor(z.shape()), LossMode::SBP) == GridTensor(z.shape()));
        CHECK_FALSE(p.attention.has_value());
    }
}

TEST_CASE("analytic VAE round trip and image shape") {
    GmmBackend b(make_demo_world());
    const BackendHandshake h = b.handshake();
    CHECK(h.image_shape == Shape{3, 512, 512});
    CHECK(h.backend_name == "analytic-gmm");
    const GridTensor z = b.world().components[1].mean;
    const GridTensor back = b.encode(b.decode(z));
    double err = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) err = std::max(err, std::fabs(static_cast<double>(back[i] - z[i])));
    CHECK(err < 1e-4);
    CHECK_THROWS_AS(b.encode(GridTensor(Shape{3, 64, 64})), BackendError);
}

TEST_CASE("synthetic attention peaks inside the named region") {
    GmmBackend b(make_demo_world());
    PredictRequest r;
    r.z_t = b.world().components[0].mean;
    r.t = 500;
    r.y_tgt = kDemoCatPrompt;
    r.y_src = kDemoSourcePrompt;
    r.want_attention = true;
    const PredictResponse p = b.predict(r);
    REQUIRE(p.attention.has_value());
    CHECK_NOTHROW(p.attention->validate());
    const auto toks = b.tokenize(kDemoCatPrompt);
    int cat = -1;
    for (const Token& t : toks) {
        if (t.text == "cat") cat = t.index;
    }
    REQUIRE(cat > 0);
    const GridTensor& m = p.attention->cross_maps.at(cat).front();
    std::size_t best = 0;
    for (std::size_t i = 1; i < m.size(); ++i) {
        if (m[i] > m[best]) best = i;
    }
    // Cross grid is 16 x 16 over a 64 x 64 latent: 4 latent pixels per cell.
    const std::size_t cy = best / 16 * 4 + 2, cx = best % 16 * 4 + 2;
    const Region& reg = b.world().components[1].region;
    CHECK(reg.contains(cy, cx));

    // "photo" names no region: flat map.
    int photo = -1;
    for (const Token& t : toks) {
        if (t.text == "photo") photo = t.index;
    }
    const GridTensor& flat = p.attention->cross_maps.at(photo).front();
    CHECK(min_value(flat) == max_value(flat));
}

TEST_CASE("embeddings: text names its class, images score region fit") {
    GmmBackend b(make_demo_world());
    const auto cat = b.embed_text("a cat");
    const auto dog = b.embed_text("a dog");
    double dot = 0.0;
    for (std::size_t i = 0; i < cat.size(); ++i) dot += cat[i] * dog[i];
    CHECK(dot == doctest::Approx(0.0));
    CHECK(b.embed_text("a cat") == cat);

    const GridTensor with_cat = b.decode(b.world().components[1].mean);
    const GridTensor meadow = b.decode(b.world().components[0].mean);
    const auto ec = b.embed_image(with_cat);
    const auto em = b.embed_image(meadow);
    double s_cat = 0.0, s_meadow = 0.0;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        s_cat += ec[i] * cat[i];
        s_meadow += em[i] * cat[i];
    }
    CHECK(s_cat > s_meadow);
}

TEST_CASE("DDS requires a session; SDS uses the request noise") {
    GmmBackend b(make_demo_world());
    PredictRequest r;
    r.z_t = b.world().components[0].mean;
    r.t = 300;
    r.y_tgt = kDemoCatPrompt;
    r.y_src = kDemoSourcePrompt;
    r.mode = LossMode::DDS;
    r.eps = GridTensor(r.z_t.shape(), 0.1f);
    CHECK_THROWS_AS(b.predict(r), BackendError);
    b.begin_session(r.z_t);
    CHECK_NOTHROW(b.predict(r));
    CHECK_THROWS_AS(b.clone()->predict(r), BackendError);

    r.mode = LossMode::SDS;
    const PredictResponse s = b.predict(r);
    CHECK(s.pair.eps_source == *r.eps);
}

}  // TEST_SUITE
