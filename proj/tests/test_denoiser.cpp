#include <doctest.h>

#include "dlr/denoiser.hpp"
#include "support/oracles.hpp"

using namespace dlr;
using test::randn_f;

namespace {
ParameterTree make_tree(const DenoiseConfig& cfg, int bins, int slots, std::uint64_t seed) {
    Rng rng(seed);
    return init_parameters(denoise_param_specs(cfg, bins, slots), rng);
}
} // namespace

TEST_CASE("tokenize: CH x W reshape with broadcast CSIF features") {
    TapeT<float> tape;
    Tensor dmrs({2, 48, 2});
    Tensor csif({3});
    const int d = tape.leaf(&dmrs, false);
    const int c = tape.leaf(&csif, false);

    SUBCASE("zero input gives an all-zero 7 x 48 map") {
        const int tok = tape.concat0({tape.dmrs_to_tokens(d), tape.broadcast_cols(c, 48)});
        const Tensor& t = tape.value(tok);
        CHECK(t.shape == std::vector<int>{7, 48});
        for (float v : t.data) CHECK(v == 0.0f);
    }
    SUBCASE("feature rows 4..6 broadcast the csif vector to every token") {
        csif.at(0) = 0.25f; // mean
        csif.at(1) = 2.0f;  // log-compressed variance slot
        csif.at(2) = 0.5f;  // snr/20
        Rng rng(3);
        for (auto& v : dmrs.data) v = static_cast<float>(rng.normal());
        const int tok = tape.concat0({tape.dmrs_to_tokens(d), tape.broadcast_cols(c, 48)});
        const Tensor& t = tape.value(tok);
        for (int k = 0; k < 48; ++k) {
            CHECK(t.at(4, k) == 0.25f);
            CHECK(t.at(5, k) == 2.0f);
            CHECK(t.at(6, k) == 0.5f);
            // plane-major feature rows: re@slot0, re@slot1, im@slot0, im@slot1
            CHECK(t.at(0, k) == dmrs.at(0, k, 0));
            CHECK(t.at(1, k) == dmrs.at(0, k, 1));
            CHECK(t.at(2, k) == dmrs.at(1, k, 0));
            CHECK(t.at(3, k) == dmrs.at(1, k, 1));
        }
    }
    SUBCASE("1D tokenization keeps 48 tokens (2D windows would see 96)") {
        const int tok = tape.dmrs_to_tokens(d);
        CHECK(tape.value(tok).dim(1) == 48);
        CHECK(2 * 48 == 96); // the H = 2 token reduction behind the H^2 cost cut
    }
}

TEST_CASE("csif_to_tensor: network-side conditioning of the statistics") {
    const CsifFeatures c{0.3, 100.0, 10.0};
    const TensorT<double> v = csif_to_tensor<double>(c);
    CHECK(v.at(0) == 0.3);
    CHECK(v.at(1) == doctest::Approx(std::tanh(1.0)).epsilon(1e-9)); // squashed log variance
    CHECK(v.at(2) == doctest::Approx(0.5));                          // snr_db / 20

    // bounded and monotone in the variance
    double prev = -1.0;
    for (double var : {1e-6, 1e-2, 1.0, 1e2, 1e6}) {
        const CsifFeatures f{0.0, var, 0.0};
        const double slot = csif_to_tensor<double>(f).at(1);
        CHECK(slot > prev);
        CHECK(std::abs(slot) < 1.0);
        prev = slot;
    }
}

TEST_CASE("denoise_forward: shape contract and zero-projection passthrough") {
    const DenoiseConfig cfg;
    ParameterTree tree = make_tree(cfg, 48, 2, 99);
    Rng rng(7);
    const DmrsGrid in = test::random_dmrs(rng);
    const CsifFeatures csif = stats(in, 10.0);

    const DmrsGrid out = denoise_forward(cfg, tree, in, csif);
    CHECK(out.bins() == 48);
    CHECK(out.slots() == 2);

    // zero the output projection: bit-exact passthrough through the global residual
    tree.get("dn.out_proj.w").fill(0.0f);
    tree.get("dn.out_proj.b").fill(0.0f);
    const DmrsGrid same = denoise_forward(cfg, tree, in, csif);
    CHECK(same.re.data == in.re.data);
    CHECK(same.im.data == in.im.data);
}

TEST_CASE("denoise_forward: determinism") {
    const DenoiseConfig cfg;
    const ParameterTree tree = make_tree(cfg, 48, 2, 5);
    Rng rng(9);
    const DmrsGrid in = test::random_dmrs(rng);
    const CsifFeatures csif = stats(in, 4.0);
    const DmrsGrid a = denoise_forward(cfg, tree, in, csif);
    const DmrsGrid b = denoise_forward(cfg, tree, in, csif);
    CHECK(a.re.data == b.re.data);
    CHECK(a.im.data == b.im.data);
}

TEST_CASE("WSA window locality: perturbations stay inside their window") {
    const DenoiseConfig cfg;
    const ParameterTree tree = make_tree(cfg, 48, 2, 13);
    const ParameterTree dtree_f = tree;
    Rng rng(11);
    Tensor x = randn_f({32, 48}, rng);
    const int win = 8;

    auto run_wsa = [&](const Tensor& input) {
        TapeT<float> tape;
        const int id = tape.leaf(&input, false);
        BoundTree<float> bound(tape, dtree_f, false);
        const int out = wsa_sublayer_graph(tape, id, bound, "dn.s0.b0.", win, cfg.heads[0]);
        return tape.value(out);
    };

    const Tensor base = run_wsa(x);
    Tensor perturbed = x;
    perturbed.at(5, 3) += 0.75f; // token 3 lives in window 0
    const Tensor shifted = run_wsa(perturbed);

    for (int t = 0; t < 48; ++t) {
        bool any_diff = false;
        for (int i = 0; i < 32; ++i)
            if (base.at(i, t) != shifted.at(i, t)) any_diff = true;
        if (t < win) {
            // inside window 0 the attention mixes the perturbation around
            continue;
        }
        CHECK_FALSE(any_diff); // windows 1..5 unchanged to the last bit
    }
}

TEST_CASE("attention-cost counters across the full denoiser") {
    const DenoiseConfig cfg;
    const ParameterTree tree = make_tree(cfg, 48, 2, 21);
    Rng rng(15);
    const DmrsGrid in = test::random_dmrs(rng);
    const CsifFeatures csif = stats(in, 8.0);

    ops::reset_attention_score_ops();
    (void)denoise_forward(cfg, tree, in, csif);
    std::uint64_t want = 0;
    for (int s = 0; s < 4; ++s) {
        const std::uint64_t w = static_cast<std::uint64_t>(DenoiseConfig::stage_width(48, s));
        want += 2 * w * cfg.windows[s] * cfg.heads[s]; // two DN blocks per stage
    }
    CHECK(ops::attention_score_ops() == want);
}

TEST_CASE("dn_block and down/up stages: shape contracts") {
    const DenoiseConfig cfg;
    const ParameterTree tree = make_tree(cfg, 48, 2, 31);
    Rng rng(17);
    Tensor x = randn_f({32, 48}, rng);

    TapeT<float> tape;
    const int id = tape.leaf(&x, false);
    BoundTree<float> bound(tape, tree, false);
    const int blk = dn_block_graph(tape, id, bound, "dn.s0.b0.", 8, 4);
    CHECK(tape.value(blk).shape == std::vector<int>{32, 48});

    const int down = tape.conv1d(blk, bound["dn.down0.w"], bound["dn.down0.b"], 2, 1);
    CHECK(tape.value(down).shape == std::vector<int>{64, 24});

    // zero DSC convs keep the block's SE output unchanged (pure residual)
    ParameterTree zeroed = tree;
    zeroed.get("dn.s0.b0.dsc.dw").fill(0.0f);
    zeroed.get("dn.s0.b0.dsc.db").fill(0.0f);
    zeroed.get("dn.s0.b0.dsc.pw").fill(0.0f);
    zeroed.get("dn.s0.b0.dsc.pb").fill(0.0f);
    TapeT<float> tape2;
    const int id2 = tape2.leaf(&x, false);
    BoundTree<float> bz(tape2, zeroed, false);
    const int y = wsa_sublayer_graph(tape2, id2, bz, "dn.s0.b0.", 8, 4);
    const int pooled = tape2.global_avg_pool(y);
    const int h1 = tape2.relu(tape2.linear(pooled, bz["dn.s0.b0.se.w1"], bz["dn.s0.b0.se.b1"]));
    const int gates = tape2.sigmoid(tape2.linear(h1, bz["dn.s0.b0.se.w2"], bz["dn.s0.b0.se.b2"]));
    const int z = tape2.mul_colvec(y, gates);
    const int full = dn_block_graph(tape2, id2, bz, "dn.s0.b0.", 8, 4);
    CHECK(tape2.value(full).data == tape2.value(z).data);
}

TEST_CASE("SE gating: zero-weight MLP halves the map; zero input stays zero") {
    Rng rng(23);
    Tensor x = randn_f({8, 12}, rng);
    Tensor w1({2, 8}), b1({2}), w2({8, 2}), b2({8});

    auto se = [&](const Tensor& input) {
        TapeT<float> tape;
        const int id = tape.leaf(&input, false);
        const int p1 = tape.leaf(&w1, false), p2 = tape.leaf(&b1, false);
        const int p3 = tape.leaf(&w2, false), p4 = tape.leaf(&b2, false);
        const int pooled = tape.global_avg_pool(id);
        const int h = tape.relu(tape.linear(pooled, p1, p2));
        const int gates = tape.sigmoid(tape.linear(h, p3, p4));
        return tape.value(tape.mul_colvec(id, gates));
    };

    // all-zero MLP -> sigmoid(0) = 0.5 -> output is exactly half the input
    const Tensor half = se(x);
    for (std::size_t i = 0; i < x.numel(); ++i)
        CHECK(half.data[i] == doctest::Approx(0.5f * x.data[i]));

    // multiplicative gating: zero input stays zero for any weights
    Rng rng2(29);
    w1 = randn_f({2, 8}, rng2);
    b1 = randn_f({2}, rng2);
    w2 = randn_f({8, 2}, rng2);
    b2 = randn_f({8}, rng2);
    Tensor zero({8, 12});
    const Tensor out = se(zero);
    for (float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("up_squeeze doubles width for odd widths too") {
    // k = 2, s = 2 transposed conv: width W -> 2W with no trimming
    Rng rng(19);
    const Tensor x = randn_f({4, 7}, rng);
    const Tensor w = randn_f({4, 2, 2}, rng);
    const Tensor b = randn_f({2}, rng);
    CHECK(ops::tconv1d_forward(x, w, b, 2).dim(1) == 14);
}
