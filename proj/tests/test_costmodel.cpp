#include <doctest.h>

#include "darkforge/costmodel.hpp"
#include "darkforge/verify.hpp"

using namespace darkforge;

TEST_CASE("conv_flops hand-counted anchors") {
    // 64 -> 64 channels, 3x3, 32x32 output: 2*64*64*9*1024.
    LayerSpec s{64, 64, 3, 3, 32, 32};
    CHECK(conv_flops(s) == int128(75497472));

    LayerSpec unit{1, 1, 1, 1, 1, 1};
    CHECK(conv_flops(unit) == 2);  // one multiply, one add

    LayerSpec bad{0, 1, 1, 1, 1, 1};
    CHECK_THROWS_AS(conv_flops(bad), std::invalid_argument);
}

TEST_CASE("conv_flops is linear in spatial extent") {
    LayerSpec a{16, 32, 3, 3, 8, 8};
    LayerSpec b = a;
    b.h = 16;
    CHECK(conv_flops(b) == 2 * conv_flops(a));
}

TEST_CASE("grouped flops and the depthwise limit") {
    LayerSpec s{64, 64, 3, 3, 32, 32};
    CHECK(conv_flops_grouped(s, 1) == conv_flops(s));
    CHECK(conv_flops_grouped(s, 2) == int128(37748736));
    CHECK(conv_flops_grouped(s, 64) == conv_flops(s) / 64);  // depthwise
    CHECK_THROWS_AS(conv_flops_grouped(s, 3), std::invalid_argument);
}

TEST_CASE("flops increment F(g)") {
    LayerSpec s{64, 64, 3, 3, 32, 32};
    CHECK(flops_increment(s, 1) == 0);
    CHECK(flops_increment(s, 2) == -conv_flops(s) / 2);
    CHECK(flops_increment(s, 4) == -conv_flops(s) * 3 / 4);
}

TEST_CASE("macs anchors and grouped consistency") {
    LayerSpec s{64, 64, 3, 3, 32, 32};
    // HW(C1+C2) + C1*C2*9 = 1024*128 + 36864.
    CHECK(conv_macs(s) == int128(131072 + 36864));
    CHECK(conv_macs_grouped(s, 1) == Rational(conv_macs(s)));
    // g=2 halves the weight traffic only.
    CHECK(conv_macs_grouped(s, 2) == Rational(131072 + 18432));
}

TEST_CASE("macs increment M(g) is the weight-traffic saving") {
    LayerSpec s{64, 64, 3, 3, 32, 32};
    CHECK(macs_increment(s, 1) == Rational(0));
    CHECK(macs_increment(s, 2) == Rational(-18432));
    // Non-divisible g still yields an exact rational.
    LayerSpec t{3, 5, 3, 3, 4, 4};
    CHECK(macs_increment(t, 2) == Rational(-3 * 5 * 9, 2));
}

TEST_CASE("increment curve: |F| grows with diminishing marginal gains") {
    LayerSpec s{128, 128, 3, 3, 16, 16};
    const IncrementCurve curve = increment_curve(s, {1, 2, 4, 8, 16});
    REQUIRE(curve.points.size() == 5);
    CHECK(curve.points[0].f == 0);
    for (std::size_t k = 0; k + 1 < curve.points.size(); ++k) {
        CHECK(curve.points[k + 1].f < curve.points[k].f);  // savings keep growing
        CHECK(curve.marginal_gain[k] > 0);
    }
    for (std::size_t k = 0; k + 1 < curve.marginal_gain.size(); ++k)
        CHECK(curve.marginal_gain[k + 1] < curve.marginal_gain[k]);
    // g=2 already captures half of the total possible saving.
    CHECK(curve.points[1].f == -conv_flops(s) / 2);
}

TEST_CASE("fsl layer cost ratios against a standard 3x3 layer") {
    for (long long c : {8, 16, 64}) {
        const FslLayerCost fsl = fsl_layer_cost(c, c, 20, 20);
        LayerSpec std3{c, c, 3, 3, 20, 20};
        CHECK(4 * fsl.flops == 3 * conv_flops(std3));
        CHECK(4 * fsl.weight_params == 3 * int128(9) * c * c);
    }
    // Channel doubling costs the same as the standard layer.
    const FslLayerCost d = fsl_layer_cost(32, 64, 10, 10);
    LayerSpec std3{32, 64, 3, 3, 10, 10};
    CHECK(d.flops == conv_flops(std3));
    CHECK(d.weight_params == int128(fslconv_weight_count(32, 64)));
    CHECK_THROWS_AS(fsl_layer_cost(4, 7, 8, 8), std::invalid_argument);
}

TEST_CASE("lapm cost hand count and quadratic scaling") {
    // 4x4, one level: base (3+5+1)*16 = 144, level one 2x2 -> 15*4 = 60.
    const LapmCost c = lapm_cost(4, 4, 1);
    CHECK(c.amplify == 48);
    CHECK(c.grayscale == 80);
    CHECK(c.threshold == 16);
    REQUIRE(c.per_level.size() == 1);
    CHECK(c.per_level[0] == 60);
    CHECK(c.total == 204);
    CHECK(c.convention == std::string(kLapmFlopConvention));

    const LapmCost big = lapm_cost(8, 8, 1);
    CHECK(big.total == 4 * c.total);

    CHECK_THROWS_AS(lapm_cost(0, 4, 1), std::invalid_argument);
}

TEST_CASE("lapm cost at detection resolution stays in the expected regime") {
    const LapmCost c = lapm_cost(640, 640, 5);
    CHECK(c.total > 1000000);   // nontrivial work
    CHECK(c.total < 50000000);  // but far below one conv layer
}

TEST_CASE("network cost: empty, singleton, and mixed chains") {
    CHECK(network_cost({}).total_flops == 0);

    LayerSpec only{3, 16, 3, 3, 32, 32, 1, "standard-conv"};
    const NetworkCost one = network_cost({only});
    CHECK(one.total_flops == conv_flops(only));
    CHECK(one.total_params == int128(3 * 16 * 9));

    std::vector<LayerSpec> chain{
        {3, 16, 3, 3, 32, 32, 1, "standard-conv"},
        {16, 32, 3, 3, 16, 16, 1, "fsl-conv"},
        {32, 32, 1, 1, 32, 32, 1, "upsample"},
    };
    const NetworkCost c = network_cost(chain);
    CHECK(c.layer_flops.size() == 3);
    CHECK(c.layer_flops[1] == fsl_layer_cost(16, 32, 16, 16).flops);
    CHECK(c.layer_flops[2] == int128(32) * 32 * 32);
    CHECK(c.total_flops == c.layer_flops[0] + c.layer_flops[1] + c.layer_flops[2]);
}

TEST_CASE("network cost rejects channel-chain breaks by layer index") {
    std::vector<LayerSpec> chain{
        {3, 16, 3, 3, 32, 32, 1, "standard-conv"},
        {8, 32, 3, 3, 32, 32, 1, "standard-conv"},  // 8 != 16
    };
    try {
        network_cost(chain);
        FAIL("expected chain mismatch");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
    std::vector<LayerSpec> unknown{{3, 3, 1, 1, 4, 4, 1, "mystery"}};
    CHECK_THROWS_AS(network_cost(unknown), std::invalid_argument);
}

TEST_CASE("network cost JSON serialization carries totals") {
    std::vector<LayerSpec> chain{{3, 16, 3, 3, 8, 8, 1, "standard-conv"}};
    const NetworkCost c = network_cost(chain);
    const nlohmann::json j = network_cost_to_json(chain, c);
    CHECK(j["layers"].size() == 1);
    CHECK(j["layers"][0]["kind"] == "standard-conv");
    CHECK(j["total_flops"] == 2 * 3 * 16 * 9 * 64);
}

TEST_CASE("rational arithmetic is exact and reduced") {
    CHECK(Rational(6, 4) == Rational(3, 2));
    CHECK(Rational(1, -2) == Rational(-1, 2));
    CHECK((Rational(1, 2) - Rational(1, 3)) == Rational(1, 6));
    CHECK(Rational(4, 2).is_integer());
    CHECK(Rational(-18432).to_string() == "-18432");
    CHECK(Rational(-3, 2).to_string() == "-3/2");
    CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
}

TEST_CASE("128-bit helpers survive values past 64 bits") {
    const int128 big = int128(1) << 100;
    CHECK(i128_to_string(big) == "1267650600228229401496703205376");
    CHECK(i128_to_json(big).is_string());
    CHECK(i128_to_json(int128(42)) == 42);
    CHECK(i128_to_json(int128(-7)) == -7);
}

TEST_CASE("cost model grid cross-check against the instrumented conv") {
    const SuiteResult r = cost_grid_suite();
    CHECK(r.pass);
}
