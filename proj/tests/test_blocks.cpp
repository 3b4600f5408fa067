#include <doctest.h>

#include <cmath>

#include "darkforge/fslconv.hpp"
#include "darkforge/lapm.hpp"
#include "darkforge/snir.hpp"
#include "darkforge/verify.hpp"

using namespace darkforge;

// --------------------------------------------------------------------------
// FSLConv
// --------------------------------------------------------------------------

TEST_CASE("fslconv output shape and stage-1 slice") {
    Rng rng(1);
    FslConvParams p = random_fsl_params(4, 8, 2, rng);
    Tensor x = detail::random_tensor(1, 4, 8, 8, rng);
    const Tensor y = fslconv_forward(x, p);
    CHECK(y.c == 8);
    CHECK(y.h == 4);
    CHECK(y.w == 4);

    // Slice [0, C0) equals the stage-1 computation run in isolation.
    Tensor z1 = conv2d_forward(x, p.stage1);
    Tensor g1 = silu_gate(batchnorm_forward(z1, p.bn1));
    CHECK(slice_channels(y, 0, 4).data == g1.data);
}

TEST_CASE("fslconv zero weights with zero shifts give zero output") {
    Rng rng(2);
    FslConvParams p = random_fsl_params(4, 8, 1, rng);
    std::fill(p.stage1.weight.data.begin(), p.stage1.weight.data.end(), 0.0);
    std::fill(p.stage2.weight.data.begin(), p.stage2.weight.data.end(), 0.0);
    std::fill(p.bn1.beta.begin(), p.bn1.beta.end(), 0.0);
    std::fill(p.bn2.beta.begin(), p.bn2.beta.end(), 0.0);
    Tensor x = detail::random_tensor(1, 4, 6, 6, rng);
    const Tensor y = fslconv_forward(x, p);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("fslconv weight counting and the 3/4 ratio") {
    CHECK(fslconv_weight_count(4, 8) == 288);  // 4*4*9 + 4*4*9
    for (int c : {2, 4, 8, 16, 32, 64}) {
        const long long counted = fslconv_weight_count(c, c);
        const long long standard = 9LL * c * c;
        CHECK(4 * counted == 3 * standard);
    }
    // C2 = 2*C1 matches the standard conv weight count exactly.
    CHECK(fslconv_weight_count(4, 8) == 9LL * 4 * 8);
    CHECK(fslconv_weight_count(8, 16) == 9LL * 8 * 16);
    CHECK_THROWS_AS(fslconv_weight_count(4, 7), std::invalid_argument);
}

TEST_CASE("fslconv allocated parameter tensors match the counting formula") {
    Rng rng(3);
    for (int c : {4, 8}) {
        FslConvParams p = random_fsl_params(c, c, 1, rng);
        const long long allocated =
            static_cast<long long>(p.stage1.weight.size() + p.stage2.weight.size());
        CHECK(allocated == fslconv_weight_count(c, c));
    }
}

TEST_CASE("fslconv backward matches finite differences") {
    VerifyOptions opt;
    opt.seeds = 3;
    const SuiteResult r = grad_suite_fslconv(opt);
    CHECK(r.max_err < 1e-5);
}

TEST_CASE("fslconv zero grad_out gives zero grads") {
    Rng rng(4);
    FslConvParams p = random_fsl_params(4, 8, 1, rng);
    Tensor x = detail::random_tensor(1, 4, 6, 6, rng);
    FslConvCache cache;
    fslconv_forward(x, p, &cache);
    const FslConvGrads g = fslconv_backward(x, p, cache, Tensor(1, 8, 6, 6));
    for (double v : g.grad_x.data) CHECK(v == 0.0);
    for (double v : g.stage1.grad_weight.data) CHECK(v == 0.0);
    for (double v : g.bn2.grad_gamma) CHECK(v == 0.0);
}

TEST_CASE("fslconv relu and silu outer activations stay well-formed") {
    Rng rng(5);
    for (OuterAct act : {OuterAct::Relu, OuterAct::Silu}) {
        FslConvParams p = random_fsl_params(4, 8, 1, rng);
        p.outer_act = act;
        Tensor x = detail::random_tensor(1, 4, 6, 6, rng);
        const Tensor y = fslconv_forward(x, p);
        CHECK(y.c == 8);
        if (act == OuterAct::Relu)
            for (double v : y.data) CHECK(v >= 0.0);
    }
}

// --------------------------------------------------------------------------
// SNI-r
// --------------------------------------------------------------------------

TEST_CASE("snir neutral gate: W=0, b=0 gives half the scaled upsample") {
    Rng rng(6);
    Tensor x = detail::random_tensor(1, 3, 4, 4, rng);
    SnirParams p = SnirParams::make(3, 2);
    const Tensor y = snir_forward(x, p);
    const Tensor expected = scale(nearest_upsample(x, 2), 0.25 * 0.5);
    CHECK(y.data == expected.data);  // sigmoid(0) is exactly 0.5
}

TEST_CASE("snir saturated gate approaches the scaled upsample") {
    Rng rng(7);
    Tensor x = detail::random_tensor(1, 2, 3, 3, rng, 0.1, 1.0);
    SnirParams p = SnirParams::make(2, 2);
    std::fill(p.bias.begin(), p.bias.end(), 50.0);
    const Tensor y = snir_forward(x, p);
    const Tensor u = scale(nearest_upsample(x, 2), 0.25);
    for (std::size_t k = 0; k < y.size(); ++k)
        CHECK(std::abs(y.data[k] - u.data[k]) < 1e-9);
}

TEST_CASE("snir energy conservation of the pre-gate term") {
    Rng rng(8);
    for (int s : {1, 2, 4}) {
        Tensor x = detail::random_tensor(2, 3, 4, 4, rng);
        const Tensor u = sni_baseline_forward(x, s);
        double sx = 0.0, su = 0.0;
        for (double v : x.data) sx += v;
        for (double v : u.data) su += v;
        CHECK(su == doctest::Approx(sx).epsilon(1e-12));
    }
}

TEST_CASE("snir output is strictly gated below the pre-gate magnitude") {
    Rng rng(9);
    Tensor x = detail::random_tensor(1, 3, 4, 4, rng);
    SnirParams p = SnirParams::make(3, 2);
    detail::fill_uniform(p.weight.data, rng, -1.0, 1.0);
    detail::fill_uniform(p.bias, rng, -1.0, 1.0);
    SnirCache cache;
    const Tensor y = snir_forward(x, p, &cache);
    for (std::size_t k = 0; k < y.size(); ++k)
        if (cache.u.data[k] != 0.0) CHECK(std::abs(y.data[k]) < std::abs(cache.u.data[k]));
}

TEST_CASE("snir gate is constant within each replication block") {
    Rng rng(10);
    Tensor x = detail::random_tensor(1, 2, 3, 3, rng);
    SnirParams p = SnirParams::make(2, 2);
    detail::fill_uniform(p.weight.data, rng, -1.0, 1.0);
    SnirCache cache;
    snir_forward(x, p, &cache);
    const Tensor gate = sigmoid(cache.z);
    for (int c = 0; c < 2; ++c)
        for (int ih = 0; ih < 6; ++ih)
            for (int iw = 0; iw < 6; ++iw)
                CHECK(gate.at(0, c, ih, iw) == gate.at(0, c, ih - ih % 2, iw - iw % 2));
}

TEST_CASE("sni baseline: s=1 is the identity, direct s=2 evaluation") {
    Rng rng(11);
    Tensor x = detail::random_tensor(1, 2, 3, 3, rng);
    CHECK(sni_baseline_forward(x, 1).data == x.data);

    Tensor one(1, 1, 1, 1);
    one.data = {4.0};
    const Tensor up = sni_baseline_forward(one, 2);
    for (double v : up.data) CHECK(v == 1.0);
}

TEST_CASE("snir rejects channel mismatch") {
    Tensor x(1, 3, 4, 4);
    SnirParams p = SnirParams::make(2, 2);
    CHECK_THROWS_AS(snir_forward(x, p), std::invalid_argument);
}

TEST_CASE("snir backward matches finite differences") {
    VerifyOptions opt;
    opt.seeds = 3;
    const SuiteResult r = grad_suite_snir(opt);
    CHECK(r.max_err < 1e-5);
}

// --------------------------------------------------------------------------
// LAPM
// --------------------------------------------------------------------------

TEST_CASE("amplify scales without clipping") {
    RgbImageF img(2, 1);
    img.data = {0.1, 0.2, 0.3, 0.5, 0.6, 0.9};
    const RgbImageF out = amplify(img, 8.0);
    CHECK(out.data[0] == doctest::Approx(0.8));
    CHECK(out.data[5] == doctest::Approx(7.2));  // values may exceed 1
    const RgbImageF id = amplify(img, 1.0);      // outside [5,12]: warned, still computed
    CHECK(id.data == img.data);
}

TEST_CASE("photomask threshold is strict") {
    Plane gray(3, 1);
    gray.data = {0.021, 0.02, 0.0};
    const Plane m = photomask(gray, 0.02);
    CHECK(m.data[0] == 1.0);
    CHECK(m.data[1] == 0.0);  // exactly tau stays dark
    CHECK(m.data[2] == 0.0);
}

TEST_CASE("texture_features direct evaluations") {
    LapmParams p;  // w=1, bias=0, gamma=1, beta=0
    Plane zeros(2, 2);
    Plane ones(2, 2);
    std::fill(ones.data.begin(), ones.data.end(), 1.0);

    // mask=0: z=0, output beta/(2+eps).
    LapmParams pb{1.0, 0.0, 1.0, 0.7};
    const Plane f0 = texture_features(zeros, pb);
    for (double v : f0.data) CHECK(v == doctest::Approx(0.7 / (2.0 + 1e-8)));

    // gamma=0, beta=0 -> all zero.
    LapmParams pz{1.0, 0.0, 0.0, 0.0};
    for (double v : texture_features(ones, pz).data) CHECK(v == 0.0);

    // mask=1, w=1, gamma=1, beta=0 -> 1/(1+e^{-1}+eps).
    const Plane f1 = texture_features(ones, p);
    for (double v : f1.data)
        CHECK(v == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-6));
}

TEST_CASE("texture output bound for binary masks") {
    Rng rng(12);
    LapmParams p{1.7, 0.0, 1.3, -0.4};
    Plane mask(8, 8);
    for (double& v : mask.data) v = rng.next_double() > 0.5 ? 1.0 : 0.0;
    const double bound = std::abs(p.gamma * p.w) + std::abs(p.beta);
    for (double v : texture_features(mask, p).data) CHECK(std::abs(v) <= bound);
}

TEST_CASE("texture_backward matches finite differences") {
    VerifyOptions opt;
    opt.seeds = 5;
    const SuiteResult r = grad_suite_lapm_texture(opt);
    CHECK(r.max_err < 1e-6);
}

TEST_CASE("texture_backward beta gradient at z=0") {
    Plane mask(2, 2);  // all zeros -> z = 0 with default params
    Plane cot(2, 2);
    cot.data = {1.0, 2.0, 3.0, 4.0};
    const LapmGrads g = texture_backward(mask, LapmParams{}, cot);
    CHECK(g.beta == doctest::Approx(10.0 / (2.0 + 1e-8)));
    CHECK(texture_backward(mask, LapmParams{}, Plane(2, 2)).w == 0.0);
}

TEST_CASE("lapm_pyramid structure on a 64x64 input") {
    RgbImageF img(64, 64);
    std::fill(img.data.begin(), img.data.end(), 0.5);
    LapmConfig cfg;
    const LapmPyramid pyr = lapm_pyramid(img, cfg, LapmParams{});
    REQUIRE(pyr.masks.size() == 5);
    int expect = 32;
    for (int k = 0; k < 5; ++k) {
        CHECK(pyr.masks[k].width == expect);
        CHECK(pyr.masks[k].height == expect);
        CHECK(pyr.features[k].width == expect);
        expect /= 2;
        // Bright uniform image: gray = 4.0 > tau everywhere.
        for (double v : pyr.masks[k].data) CHECK(v == 1.0);
    }
}

TEST_CASE("lapm_pyramid rejects too-small images") {
    RgbImageF img(16, 16);
    LapmConfig cfg;  // levels = 5 needs 32 px
    CHECK_THROWS_AS(lapm_pyramid(img, cfg, LapmParams{}), std::invalid_argument);
}

TEST_CASE("mask monotonicity in lambda at every level") {
    Rng rng(13);
    RgbImageF img(32, 32);
    for (double& v : img.data) v = 0.01 * rng.next_double();
    LapmConfig lo, hi;
    lo.lambda = 6.0;
    hi.lambda = 11.0;
    lo.levels = hi.levels = 3;
    const LapmPyramid a = lapm_pyramid(img, lo, LapmParams{});
    const LapmPyramid b = lapm_pyramid(img, hi, LapmParams{});
    for (int k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < a.masks[k].data.size(); ++i)
            if (a.masks[k].data[i] == 1.0) CHECK(b.masks[k].data[i] == 1.0);
}

TEST_CASE("pyramid level k equals max-pooling level k-1") {
    Rng rng(14);
    RgbImageF img(32, 32);
    for (double& v : img.data) v = 0.005 * rng.next_double();
    LapmConfig cfg;
    cfg.levels = 4;
    const LapmPyramid pyr = lapm_pyramid(img, cfg, LapmParams{});
    for (int k = 1; k < 4; ++k)
        CHECK(pyr.masks[k].data == max_downsample2(pyr.masks[k - 1]).data);
}

TEST_CASE("the trainable parameter budget is exactly four scalars") {
    CHECK(LapmParams::kTrainableCount == 4);
    static_assert(sizeof(LapmParams) == 4 * sizeof(double));
}

TEST_CASE("fuse_texture concat and add modes") {
    Rng rng(15);
    Tensor fmap = detail::random_tensor(1, 4, 3, 3, rng);
    Plane tex(3, 3);
    detail::fill_uniform(tex.data, rng, -1.0, 1.0);

    const Tensor cat = fuse_texture(fmap, tex, FuseMode::Concat);
    CHECK(cat.c == 5);
    for (int ih = 0; ih < 3; ++ih)
        for (int iw = 0; iw < 3; ++iw) CHECK(cat.at(0, 4, ih, iw) == tex.at(ih, iw));

    const Tensor zero_add = fuse_texture(fmap, Plane(3, 3), FuseMode::Add);
    CHECK(zero_add.data == fmap.data);

    Plane c7(3, 3);
    std::fill(c7.data.begin(), c7.data.end(), 7.0);
    const Tensor shifted = fuse_texture(fmap, c7, FuseMode::Add);
    for (std::size_t k = 0; k < fmap.size(); ++k)
        CHECK(shifted.data[k] == doctest::Approx(fmap.data[k] + 7.0));

    CHECK_THROWS_AS(fuse_texture(fmap, Plane(2, 2), FuseMode::Add), std::invalid_argument);
}
