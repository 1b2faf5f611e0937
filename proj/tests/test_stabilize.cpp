#include <doctest.h>

#include <cmath>
#include <vector>

#include "lusd/error.hpp"
#include "lusd/stabilize.hpp"
#include "support.hpp"

using namespace lusd;

TEST_SUITE("stabilize") {

TEST_CASE("population std") {
    CHECK(grad_std(GridTensor(Shape{1, 1, 4}, 3.0f)) == 0.0);
    CHECK(grad_std(GridTensor(Shape{1, 1, 4}, {1.0f, -1.0f, 1.0f, -1.0f})) == 1.0);
    CHECK_THROWS_AS(grad_std(GridTensor(Shape{1, 1, 1})), ShapeError);
}

TEST_CASE("filter accepts at or above eta and decays on rejection") {
    FilterState f(0.01, 0.99);
    CHECK(f.test_and_decay(0.005) == FilterState::Verdict::Reject);
    CHECK(f.eta() == doctest::Approx(0.0099).epsilon(1e-15));
    CHECK(f.rejections() == 1);

    FilterState g(0.01, 0.99);
    CHECK(g.test_and_decay(0.02) == FilterState::Verdict::Accept);
    CHECK(g.test_and_decay(0.01) == FilterState::Verdict::Accept);

    FilterState h(0.01, 0.99);
    for (int i = 0; i < 10; ++i) REQUIRE(h.test_and_decay(0.0) == FilterState::Verdict::Reject);
    CHECK(h.eta() == doctest::Approx(0.0090438207500880449).epsilon(1e-14));
    CHECK(h.rejections() == 10);
}

TEST_CASE("filter trace: acceptance and reset restore eta0") {
    FilterState f(0.01, 0.99);
    const std::vector<double> stds = {0.001, 0.002, 0.00981, 0.003};
    std::vector<FilterState::Verdict> got;
    std::vector<double> etas;
    for (double s : stds) {
        etas.push_back(f.eta());
        got.push_back(f.test_and_decay(s));
    }
    // eta: 0.01, 0.0099, 0.009801 (accepts 0.00981), then back to 0.01.
    CHECK(got == std::vector<FilterState::Verdict>{FilterState::Verdict::Reject, FilterState::Verdict::Reject,
                                                   FilterState::Verdict::Accept, FilterState::Verdict::Reject});
    CHECK(etas[2] == doctest::Approx(0.009801).epsilon(1e-14));
    CHECK(etas[3] == 0.01);

    f.reset();
    CHECK(f.eta() == 0.01);
    CHECK(f.rejections() == 0);
}

TEST_CASE("filter rejects bad parameters") {
    CHECK_THROWS_AS(FilterState(-1.0, 0.99), ConfigError);
    CHECK_THROWS_AS(FilterState(0.01, 1.0), ConfigError);
    CHECK_THROWS_AS(FilterState(0.01, 0.0), ConfigError);
}

TEST_CASE("gamma schedule") {
    const EngineConfig c;
    CHECK(gamma_at(1, 300, c) == doctest::Approx(0.14906300087060012).epsilon(1e-13));
    CHECK(gamma_at(300, 300, c) == doctest::Approx(0.01093699912939988).epsilon(1e-13));
    CHECK(gamma_at(2, 3, c) == 0.08);
    CHECK(gamma_at(51, 101, c) == 0.08);
    for (int k = 2; k <= 300; ++k) REQUIRE(gamma_at(k, 300, c) < gamma_at(k - 1, 300, c));

    EngineConfig off;
    off.use_anneal = false;
    CHECK(gamma_at(7, 300, off) == 1.0);
    CHECK_THROWS_AS(gamma_at(0, 300, c), ConfigError);
    CHECK_THROWS_AS(gamma_at(301, 300, c), ConfigError);
}

TEST_CASE("normalize_and_scale") {
    const auto r = normalize_and_scale(GridTensor(Shape{1, 1, 2}, {1.0f, -1.0f}), 0.08);
    CHECK(r.grad[0] == doctest::Approx(0.08));
    CHECK(r.grad[1] == doctest::Approx(-0.08));
    CHECK_FALSE(r.noop);

    const auto z = normalize_and_scale(GridTensor(Shape{1, 2, 2}), 0.08);
    CHECK(z.noop);
    CHECK(z.grad == GridTensor(Shape{1, 2, 2}));

    const auto raw = normalize_and_scale(GridTensor(Shape{1, 1, 2}, {2.0f, 4.0f}), 0.5, false);
    CHECK(raw.grad == GridTensor(Shape{1, 1, 2}, {1.0f, 2.0f}));
}

TEST_CASE("normalized std equals gamma on random gradients") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const double gamma = 0.01 + 0.003 * seed;
        const GridTensor g = test::random_tensor(Shape{4, 16, 16}, seed, 0.001 + seed);
        const auto r = normalize_and_scale(g, gamma);
        REQUIRE(std::fabs(grad_std(r.grad) - gamma) / gamma < 1e-6);
    }
}

}  // TEST_SUITE
