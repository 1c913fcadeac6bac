#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "dlr/eval.hpp"
#include "dlr/half.hpp"
#include "dlr/pipeline.hpp"
#include "support/oracles.hpp"

using namespace dlr;

namespace {
DlrModel small_model(std::uint64_t seed) {
    DenoiseConfig dn;
    dn.dim = 8;
    dn.windows = {8, 4, 2, 2};
    dn.heads = {2, 2, 2, 2};
    RefineConfig rf;
    rf.ch = 8;
    return make_dlr_model(dn, rf, DmrsPattern::standard(), seed);
}

void zero_projections(DlrModel& m) {
    m.denoise_weights.get("dn.out_proj.w").fill(0.0f);
    m.denoise_weights.get("dn.out_proj.b").fill(0.0f);
    m.refine_weights.get("rf.final.w").fill(0.0f);
    m.refine_weights.get("rf.final.b").fill(0.0f);
}
} // namespace

TEST_CASE("normalize: unit rms, degenerate input, inverse pair") {
    Rng rng(3);
    const DmrsGrid g = test::random_dmrs(rng, 48, 2, 3.0);
    const auto [n, scale] = normalize(g, 1e-8);
    CHECK(dmrs_rms(n) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(scale == doctest::Approx(dmrs_rms(g)));

    DmrsGrid zero(48, 2);
    const auto [nz, sz] = normalize(zero, 1e-8);
    CHECK(sz == 1e-8);
    for (double v : nz.re.data) CHECK(v == 0.0);

    // denormalize(normalize(x)) == x within 1e-6 relative
    for (std::size_t i = 0; i < g.re.numel(); ++i) {
        CHECK(n.re.data[i] * scale == doctest::Approx(g.re.data[i]).epsilon(1e-6));
        CHECK(n.im.data[i] * scale == doctest::Approx(g.im.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("dlr_forward: shape contract and determinism") {
    const DlrModel model = small_model(7);
    Rng rng(5);
    const DmrsGrid noisy = test::random_dmrs(rng, 48, 2, 2.0);
    const ChannelGrid out = dlr_forward(model, noisy, 10.0);
    CHECK(out.freq_bins() == 96);
    CHECK(out.time_slots() == 14);

    const ChannelGrid again = dlr_forward(model, noisy, 10.0);
    CHECK(out.re.data == again.re.data);
    CHECK(out.im.data == again.im.data);
}

TEST_CASE("zero-network pipeline equals the linear baseline bit-for-bit") {
    DlrModel model = small_model(11);
    zero_projections(model);
    Rng rng(13);
    for (int rep = 0; rep < 5; ++rep) {
        const DmrsGrid noisy = test::random_dmrs(rng, 48, 2, 0.5 + rep);
        const ChannelGrid got = dlr_forward(model, noisy, 6.0);
        const ChannelGrid base = baseline_linear(noisy, model.pattern);
        CHECK(got.re.data == base.re.data);
        CHECK(got.im.data == base.im.data);

        // the swapped order degenerates to the same baseline as well
        const ChannelGrid sw = dlr_forward_swapped(model, noisy, 6.0);
        const ChannelGrid base2 = linear_interpolate(extract_dmrs(base, model.pattern),
                                                     model.pattern);
        CHECK(sw.re.data == base2.re.data);
    }
}

TEST_CASE("pilot fidelity: the coarse stage carries the denoised pilots exactly") {
    const DlrModel model = small_model(17);
    Rng rng(19);
    const DmrsGrid noisy = test::random_dmrs(rng);
    const DmrsGrid denoised = denoise_stage(model, noisy, 10.0);
    ChannelGrid coarse = linear_interpolate(denoised, model.pattern, model.plan);
    const DmrsGrid back = extract_dmrs(coarse, model.pattern);
    CHECK(back.re.data == denoised.re.data);
    CHECK(back.im.data == denoised.im.data);
}

TEST_CASE("scale equivariance with frozen csif") {
    const DlrModel model = small_model(23);
    Rng rng(29);
    const DmrsGrid noisy = test::random_dmrs(rng, 48, 2, 1.3);
    const CsifFeatures frozen = stats(noisy, 10.0);
    const double c = 3.7;

    // manual forward with the frozen csif vector
    auto forward_frozen = [&](const DmrsGrid& in) {
        const double scale = std::max(dmrs_rms(in), model.norm_epsilon);
        DmrsGrid d = in;
        {
            DmrsGrid xn = in;
            for (auto& v : xn.re.data) v /= scale;
            for (auto& v : xn.im.data) v /= scale;
            TapeT<float> tape;
            const TensorT<float> x = dmrs_to_tensor<float>(xn);
            const TensorT<float> cs = csif_to_tensor<float>(frozen);
            const int x_id = tape.leaf(&x, false);
            const int cs_id = tape.leaf(&cs, false);
            BoundTree<float> bound(tape, model.denoise_weights, false);
            const int corr = denoise_correction_graph(tape, x_id, cs_id, bound,
                                                      model.denoise_config);
            const TensorT<float>& cv = tape.value(corr);
            for (int k = 0; k < 48; ++k)
                for (int s = 0; s < 2; ++s) {
                    d.re.at(k, s) += scale * cv.at(0, k, s);
                    d.im.at(k, s) += scale * cv.at(1, k, s);
                }
        }
        ChannelGrid coarse = linear_interpolate(d, model.pattern, model.plan);
        ChannelGrid cn = coarse;
        for (auto& v : cn.re.data) v /= scale;
        for (auto& v : cn.im.data) v /= scale;
        TapeT<float> tape;
        const TensorT<float> x = grid_to_tensor<float>(cn);
        const TensorT<float> cs = csif_to_tensor<float>(frozen);
        const int x_id = tape.leaf(&x, false);
        const int cs_id = tape.leaf(&cs, false);
        BoundTree<float> bound(tape, model.refine_weights, false);
        const int corr = refine_correction_graph(tape, x_id, cs_id, bound, model.refine_config);
        const TensorT<float>& rv = tape.value(corr);
        ChannelGrid out = coarse;
        for (int f = 0; f < 96; ++f)
            for (int t = 0; t < 14; ++t) {
                out.re.at(f, t) += scale * rv.at(0, f, t);
                out.im.at(f, t) += scale * rv.at(1, f, t);
            }
        return out;
    };

    const ChannelGrid base = forward_frozen(noisy);
    DmrsGrid scaled = noisy;
    for (auto& v : scaled.re.data) v *= c;
    for (auto& v : scaled.im.data) v *= c;
    const ChannelGrid out = forward_frozen(scaled);
    for (std::size_t i = 0; i < base.re.numel(); ++i) {
        CHECK(out.re.data[i] == doctest::Approx(c * base.re.data[i]).epsilon(1e-5));
        CHECK(out.im.data[i] == doctest::Approx(c * base.im.data[i]).epsilon(1e-5));
    }
}

TEST_CASE("weight container: f32 roundtrip is bit-identical") {
    const DlrModel model = small_model(31);
    const std::string path = "dlr_test_weights_f32.bin";
    save_weights(model, path, Dtype::f32);

    DlrModel fresh = small_model(32); // different init
    load_weights(fresh, path);
    REQUIRE(fresh.denoise_weights.size() == model.denoise_weights.size());
    for (std::size_t i = 0; i < model.denoise_weights.size(); ++i) {
        const auto& [name, t] = model.denoise_weights.entry(i);
        CHECK(fresh.denoise_weights.get(name).data == t.data);
    }
    for (std::size_t i = 0; i < model.refine_weights.size(); ++i) {
        const auto& [name, t] = model.refine_weights.entry(i);
        CHECK(fresh.refine_weights.get(name).data == t.data);
    }
    std::remove(path.c_str());
}

TEST_CASE("weight container: f16 payload is exactly half the f32 payload") {
    const DlrModel model = small_model(33);
    const std::string p32 = "dlr_test_w32.bin", p16 = "dlr_test_w16.bin";
    save_weights(model, p32, Dtype::f32);
    save_weights(model, p16, Dtype::f16);

    auto file_size = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary | std::ios::ate);
        return static_cast<std::size_t>(in.tellg());
    };
    // strip identical headers/name blocks: payload difference is scalars only
    std::size_t scalars = model.denoise_weights.total_scalars() +
                          model.refine_weights.total_scalars();
    CHECK(file_size(p32) - file_size(p16) == scalars * 2);

    // f16 roundtrip error bound for normal-range values
    DlrModel fresh = small_model(34);
    load_weights(fresh, p16);
    for (std::size_t i = 0; i < model.denoise_weights.size(); ++i) {
        const auto& [name, t] = model.denoise_weights.entry(i);
        const Tensor& r = fresh.denoise_weights.get(name);
        for (std::size_t j = 0; j < t.numel(); ++j) {
            const double v = t.data[j];
            if (std::abs(v) > 1e-4)
                CHECK(std::abs(r.data[j] - v) / std::abs(v) <= 1.0 / 2048.0);
        }
    }
    std::remove(p32.c_str());
    std::remove(p16.c_str());
}

TEST_CASE("weight container: error paths") {
    const DlrModel model = small_model(35);
    const std::string path = "dlr_test_weights_err.bin";
    save_weights(model, path, Dtype::f32);

    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('x');
        f.close();
        try {
            read_weight_container(path);
            FAIL("expected bad-magic");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::bad_magic);
        }
    }
    SUBCASE("shape mismatch against configs") {
        DlrModel other = small_model(36);
        other.refine_config.ch = 16; // expects different shapes
        CHECK_THROWS_AS(load_weights(other, path), Error);
    }
    SUBCASE("truncation") {
        const auto bytes = [&] {
            std::ifstream in(path, std::ios::binary);
            return std::vector<char>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
        }();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        try {
            read_weight_container(path);
            FAIL("expected truncated");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::truncated_payload);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("f16 conversion: round-to-nearest-even and range handling") {
    CHECK(f16_bits_to_f32(f32_to_f16_bits(1.0f)) == 1.0f);
    CHECK(f16_bits_to_f32(f32_to_f16_bits(-2.5f)) == -2.5f);
    CHECK(f16_bits_to_f32(f32_to_f16_bits(65504.0f)) == 65504.0f); // f16 max
    CHECK(std::isinf(f16_bits_to_f32(f32_to_f16_bits(1e6f))));     // overflow -> inf
    CHECK(f16_bits_to_f32(f32_to_f16_bits(0.0f)) == 0.0f);
    CHECK(f16_bits_to_f32(f32_to_f16_bits(5.96e-8f)) > 0.0f); // subnormal survives

    // nearest-even: 1 + 2^-11 is exactly between 1 and 1+2^-10
    const float between = 1.0f + 0.00048828125f;
    CHECK(f16_bits_to_f32(f32_to_f16_bits(between)) == 1.0f);

    Rng rng(41);
    for (int i = 0; i < 20000; ++i) {
        const float v = static_cast<float>(rng.normal() * 8.0);
        const float r = f16_bits_to_f32(f32_to_f16_bits(v));
        if (std::abs(v) > 1e-4f) CHECK(std::abs(r - v) / std::abs(v) <= 1.0f / 2048.0f);
    }
}
