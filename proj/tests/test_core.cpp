#include <doctest.h>

#include <cmath>
#include <vector>

#include "lusd/config.hpp"
#include "lusd/error.hpp"
#include "lusd/grad.hpp"
#include "lusd/rng.hpp"
#include "lusd/schedule.hpp"
#include "lusd/tensor.hpp"
#include "support.hpp"

using namespace lusd;

TEST_SUITE("core") {

TEST_CASE("tensor arithmetic and shape checks") {
    GridTensor a(Shape{1, 1, 2}, {1.0f, 2.0f});
    GridTensor b(Shape{1, 1, 2}, {0.5f, 1.0f});
    CHECK((a - b) == GridTensor(Shape{1, 1, 2}, {0.5f, 1.0f}));
    CHECK((a + b) == GridTensor(Shape{1, 1, 2}, {1.5f, 3.0f}));
    CHECK((2.0f * a) == GridTensor(Shape{1, 1, 2}, {2.0f, 4.0f}));
    CHECK_THROWS_AS(a + GridTensor(Shape{1, 2, 1}), ShapeError);
    CHECK_THROWS_AS(GridTensor(Shape{1, 1, 3}, std::vector<float>{1.0f}), ShapeError);
    CHECK_THROWS_AS(GridTensor::from_external(Shape{1, 1, 1}, {NAN}), Error);
    CHECK(mean_abs(GridTensor(Shape{1, 1, 2}, {-1.0f, 3.0f})) == doctest::Approx(2.0));
}

TEST_CASE("broadcast_multiply applies one mask to every channel") {
    GridTensor t(Shape{2, 1, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    GridTensor m(Shape{1, 1, 2}, {0.5f, 0.0f});
    CHECK(broadcast_multiply(t, m) == GridTensor(Shape{2, 1, 2}, {0.5f, 0.0f, 1.5f, 0.0f}));
}

TEST_CASE("rng streams are reproducible and draws independent") {
    RngStream a(0), b(0);
    const GridTensor x = sample_noise(a, Shape{1, 1, 1});
    const GridTensor y = sample_noise(a, Shape{1, 1, 1});
    CHECK(x[0] != y[0]);
    RngStream c(42), d(42);
    CHECK(sample_noise(c, Shape{4, 64, 64}) == sample_noise(d, Shape{4, 64, 64}));
    RngStream e(43);
    CHECK_FALSE(sample_noise(e, Shape{1, 1, 8}) == sample_noise(b, Shape{1, 1, 8}));
}

TEST_CASE("mt19937_64 output matches the standard's 10000th value") {
    RngStream r(5489);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = r.next_u64();
    CHECK(v == 9981545732273789042ull);
}

TEST_CASE("standard normal moments over 1e6 samples") {
    RngStream r(7);
    const GridTensor n = sample_noise(r, Shape{1, 1000, 1000});
    double s = 0.0, ss = 0.0;
    for (float v : n.data()) {
        s += v;
        ss += static_cast<double>(v) * v;
    }
    const double m = s / n.size();
    CHECK(std::fabs(m) < 0.01);
    CHECK(std::fabs(ss / n.size() - m * m - 1.0) < 0.01);
}

TEST_CASE("timestep sampling range and uniformity") {
    RngStream r(11);
    CHECK(sample_timestep(r, 500, 500) == 500);
    CHECK_THROWS_AS(sample_timestep(r, 10, 5), ConfigError);
    CHECK_THROWS_AS(sample_timestep(r, 0, 1000), ConfigError);

    // 10 buckets over the 901 values of [50, 950].
    constexpr int kDraws = 100000;
    std::vector<int> counts(10, 0), sizes(10, 0);
    for (int t = 50; t <= 950; ++t) sizes[(t - 50) * 10 / 901]++;
    for (int i = 0; i < kDraws; ++i) {
        const int t = sample_timestep(r, 50, 950);
        REQUIRE(t >= 50);
        REQUIRE(t <= 950);
        counts[(t - 50) * 10 / 901]++;
    }
    for (int b = 0; b < 10; ++b) {
        const double p = sizes[b] / 901.0;
        const double sd = std::sqrt(kDraws * p * (1 - p));
        CHECK(std::fabs(counts[b] - kDraws * p) < 3 * sd);
    }
}

TEST_CASE("scaled-linear schedule values") {
    const NoiseSchedule s = default_schedule();
    REQUIRE(s.values().size() == 1000);
    CHECK(s.alpha_bar(0) == doctest::Approx(0.99915).epsilon(1e-14));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.99829602783845140848).epsilon(1e-13));
    CHECK(s.alpha_bar(250) == doctest::Approx(0.67379262523332254046).epsilon(1e-12));
    CHECK(s.alpha_bar(500) == doctest::Approx(0.27633268382297475464).epsilon(1e-12));
    CHECK(s.alpha_bar(999) == doctest::Approx(0.0046600985130772404039).epsilon(1e-11));
    CHECK(s.alpha_bar(999) > 0.0);
    CHECK(s.alpha_bar(999) < 0.05);
    for (int t = 1; t < 1000; ++t) REQUIRE(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK_THROWS_AS(s.alpha_bar(1000), ConfigError);
    CHECK_THROWS_AS(NoiseSchedule(std::vector<double>(10, 0.5)), ConfigError);
}

TEST_CASE("add_noise endpoints and value") {
    const GridTensor z(Shape{1, 1, 1}, 2.0f), eps(Shape{1, 1, 1}, 1.0f);
    CHECK(add_noise(z, eps, 1.0)[0] == 2.0f);
    CHECK(add_noise(z, eps, 0.0)[0] == 1.0f);
    CHECK(add_noise(z, eps, 0.25)[0] == doctest::Approx(1.8660254037844386).epsilon(1e-7));
}

TEST_CASE("classifier-free guidance") {
    const GridTensor c(Shape{1, 1, 1}, 1.0f), u(Shape{1, 1, 1}, 0.5f);
    CHECK(apply_cfg(c, u, 0.0) == c);
    CHECK(apply_cfg(c, u, 1.0)[0] == doctest::Approx(1.5));
    const GridTensor c2(Shape{1, 1, 1}, 0.2f), u2(Shape{1, 1, 1}, 0.1f);
    CHECK(apply_cfg(c2, u2, 7.5)[0] == doctest::Approx(0.95).epsilon(1e-6));
}

TEST_CASE("raw gradient per mode") {
    NoisePredictionPair p{GridTensor(Shape{1, 1, 2}, {1.0f, 2.0f}), GridTensor(Shape{1, 1, 2}, {0.5f, 1.0f})};
    const GridTensor eps(Shape{1, 1, 2}, {0.25f, 0.25f});
    CHECK(raw_gradient(p, eps, LossMode::SBP) == GridTensor(Shape{1, 1, 2}, {0.5f, 1.0f}));
    CHECK(raw_gradient(p, eps, LossMode::DDS) == GridTensor(Shape{1, 1, 2}, {0.5f, 1.0f}));
    CHECK(raw_gradient(p, eps, LossMode::SDS) == GridTensor(Shape{1, 1, 2}, {0.75f, 1.75f}));
    NoisePredictionPair same{p.eps_target, p.eps_target};
    CHECK(raw_gradient(same, eps, LossMode::SBP) == GridTensor(Shape{1, 1, 2}));
}

TEST_CASE("regularizer blend") {
    const Shape s{2, 1, 1};
    const GridTensor g(s, 1.0f), mask(Shape{1, 1, 1}, 0.5f), ones(Shape{1, 1, 1}, 1.0f);
    const GridTensor z(s, 3.0f), z_src(s, 1.0f);
    CHECK(blend_regularizer(g, ones, z, z_src, 0.0) == g);
    CHECK(blend_regularizer(test::random_tensor(s, 1), mask, z, z_src, 1.0) == GridTensor(s, 2.0f));
    const GridTensor r = blend_regularizer(g, mask, z, z_src, 0.02);
    CHECK(r[0] == doctest::Approx(0.53).epsilon(1e-6));
    CHECK(r[1] == doctest::Approx(0.53).epsilon(1e-6));
    CHECK_THROWS_AS(blend_regularizer(g, GridTensor(Shape{1, 2, 1}), z, z_src, 0.1), ShapeError);
}

TEST_CASE("config defaults") {
    const EngineConfig c;
    CHECK(c.steps == 300);
    CHECK(c.lr == 2000.0);
    CHECK(c.lambda == 0.02);
    CHECK(c.ema_alpha == 0.1);
    CHECK(c.eta0 == 0.01);
    CHECK(c.eta_decay == 0.99);
    CHECK(c.gamma_lo == 0.01);
    CHECK(c.gamma_hi == 0.15);
    CHECK(c.gamma_span == 5.0);
    CHECK(c.t_min == 50);
    CHECK(c.t_max == 950);
    CHECK(c.cfg_omega == 0.0);
    CHECK(c.max_resamples == 100);
    CHECK(c.loss_mode == LossMode::SBP);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text round trip and errors") {
    EngineConfig c;
    apply_config_text(c,
                      "# comment\n"
                      "steps = 12\n"
                      "lr = 1e3   # trailing\n"
                      "loss_mode = \"dds\"\n"
                      "use_mask = false\n"
                      "beta_fixed = 0.5\n"
                      "mask_dump_dir = \"out dir\"\n");
    CHECK(c.steps == 12);
    CHECK(c.lr == 1000.0);
    CHECK(c.loss_mode == LossMode::DDS);
    CHECK_FALSE(c.use_mask);
    CHECK(c.beta_fixed.value() == 0.5);
    CHECK(c.mask_dump_dir == "out dir");

    EngineConfig back;
    apply_config_text(back, to_config_text(c));
    for (const std::string& k : config_keys()) CHECK(get_config_value(back, k) == get_config_value(c, k));
    CHECK(get_config_value(EngineConfig{}, "ema_alpha") == "0.1");

    EngineConfig e;
    CHECK_THROWS_AS(apply_config_text(e, "stepz = 1"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(e, "steps = 1.5"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(e, "lr = nan"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(e, "use_mask = yes please"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(e, "steps"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(e, "loss_mode = \"dds"), ConfigError);

    EngineConfig bad;
    bad.t_min = 600;
    bad.t_max = 500;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = EngineConfig{};
    bad.lambda = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("effective eta and lambda follow the ablation switches") {
    EngineConfig c;
    c.use_filter = false;
    c.use_mask = false;
    CHECK(c.effective_eta0() == 0.0);
    CHECK(c.effective_lambda() == 0.0);
}

}  // TEST_SUITE
