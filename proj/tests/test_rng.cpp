#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "dpe/rng.hpp"

TEST_CASE("seed mixing separates streams", "[rng]") {
    std::set<std::uint64_t> mixed;
    for (std::uint64_t stream = 0; stream < 64; ++stream)
        mixed.insert(dpe::mix_seed(42, stream));
    CHECK(mixed.size() == 64);
    CHECK(dpe::mix_seed(1, 0) != dpe::mix_seed(2, 0));
    CHECK(dpe::mix_seed(7, 3) == dpe::mix_seed(7, 3));
}

TEST_CASE("streams replay deterministically", "[rng]") {
    auto a = dpe::make_stream(99, 5);
    auto b = dpe::make_stream(99, 5);
    for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
}

TEST_CASE("uniform_index stays in range and covers it", "[rng]") {
    auto rng = dpe::make_stream(1, 0);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) {
        const int v = dpe::uniform_index(rng, 7);
        REQUIRE(v >= 0);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("canonical doubles live in [0,1)", "[rng]") {
    auto rng = dpe::make_stream(2, 0);
    for (int i = 0; i < 1000; ++i) {
        const double v = dpe::canonical(rng);
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("fair coin is roughly fair", "[rng]") {
    auto rng = dpe::make_stream(3, 0);
    int heads = 0;
    for (int i = 0; i < 10000; ++i) heads += dpe::fair_coin(rng) ? 1 : 0;
    CHECK(heads > 4800);
    CHECK(heads < 5200);
}
