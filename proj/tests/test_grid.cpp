#include <doctest.h>

#include "dlr/grid.hpp"
#include "support/oracles.hpp"

using namespace dlr;

TEST_CASE("dmrs pattern: standard layout and validation") {
    const DmrsPattern p = DmrsPattern::standard();
    CHECK(p.num_pilot_bins() == 48);
    CHECK(p.num_pilot_slots() == 2);
    CHECK(p.freq_indices.front() == 0);
    CHECK(p.freq_indices.back() == 94);
    CHECK(p.time_indices == std::vector<int>{3, 11});
    p.validate();

    DmrsPattern bad = p;
    bad.freq_indices[5] = bad.freq_indices[4]; // not strictly increasing
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = p;
    bad.time_indices = {3, 14}; // out of range
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("extract_dmrs: constant field and index mapping") {
    const DmrsPattern p = DmrsPattern::standard();
    ChannelGrid g;
    for (auto& v : g.re.data) v = 2.5;
    for (auto& v : g.im.data) v = -1.25;
    const DmrsGrid sub = extract_dmrs(g, p);
    CHECK(sub.bins() == 48);
    CHECK(sub.slots() == 2);
    for (double v : sub.re.data) CHECK(v == 2.5);
    for (double v : sub.im.data) CHECK(v == -1.25);

    // grid(f,t) = 100 f + t -> output(k,s) = 100 freq[k] + time[s]
    for (int f = 0; f < 96; ++f)
        for (int t = 0; t < 14; ++t) {
            g.re.at(f, t) = 100.0 * f + t;
            g.im.at(f, t) = -(100.0 * f + t);
        }
    const DmrsGrid m = extract_dmrs(g, p);
    CHECK(m.re.at(0, 0) == 3.0); // bin 0, slot 3
    for (int k = 0; k < 48; ++k)
        for (int s = 0; s < 2; ++s) {
            CHECK(m.re.at(k, s) == 100.0 * p.freq_indices[k] + p.time_indices[s]);
            CHECK(m.im.at(k, s) == -(100.0 * p.freq_indices[k] + p.time_indices[s]));
        }
}

TEST_CASE("add_awgn: limits, variance, determinism") {
    Rng rng(11);
    const DmrsGrid clean = test::random_dmrs(rng);

    SUBCASE("infinite-SNR limit") {
        Rng r(1);
        const DmrsGrid noisy = add_awgn(clean, 300.0, 1.0, r);
        for (std::size_t i = 0; i < clean.re.numel(); ++i)
            CHECK(noisy.re.data[i] == doctest::Approx(clean.re.data[i]).epsilon(1e-9));
    }
    SUBCASE("0 dB per-entry noise variance near 1") {
        DmrsGrid zero(48, 2);
        Rng r(2);
        double acc = 0.0;
        std::size_t n = 0;
        for (int rep = 0; rep < 600; ++rep) { // 600 * 96 complex entries > 1e5 draws
            const DmrsGrid noisy = add_awgn(zero, 0.0, 1.0, r);
            for (std::size_t i = 0; i < noisy.re.numel(); ++i) {
                acc += noisy.re.data[i] * noisy.re.data[i] + noisy.im.data[i] * noisy.im.data[i];
                ++n;
            }
        }
        CHECK(acc / static_cast<double>(n) == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("same rng seed twice gives identical outputs") {
        Rng r1(77), r2(77);
        const DmrsGrid a = add_awgn(clean, 10.0, 2.0, r1);
        const DmrsGrid b = add_awgn(clean, 10.0, 2.0, r2);
        CHECK(a.re.data == b.re.data);
        CHECK(a.im.data == b.im.data);
    }
    SUBCASE("non-positive reference power rejected") {
        Rng r(3);
        CHECK_THROWS_AS(add_awgn(clean, 10.0, 0.0, r), Error);
        CHECK_THROWS_AS(add_awgn(clean, 10.0, -1.0, r), Error);
    }
}

TEST_CASE("frob_norm: hand cases and oracle") {
    ChannelGrid g;
    CHECK(frob_norm(g) == 0.0);
    g.re.at(10, 3) = 3.0;
    g.im.at(10, 3) = 4.0;
    CHECK(frob_norm(g) == doctest::Approx(5.0).epsilon(1e-12));

    Rng rng(5);
    const ChannelGrid r = test::random_grid(rng);
    double acc = 0.0;
    for (double v : r.re.data) acc += v * v;
    for (double v : r.im.data) acc += v * v;
    CHECK(frob_norm(r) == doctest::Approx(std::sqrt(acc)).epsilon(1e-6));

    // scaling: ||c H|| = |c| ||H||
    ChannelGrid scaled = r;
    for (auto& v : scaled.re.data) v *= -2.5;
    for (auto& v : scaled.im.data) v *= -2.5;
    CHECK(frob_norm(scaled) == doctest::Approx(2.5 * frob_norm(r)).epsilon(1e-9));
}

TEST_CASE("nmse: identities, ratio case, scale invariance") {
    Rng rng(6);
    const ChannelGrid truth = test::random_grid(rng);
    CHECK(nmse(truth, truth) == 0.0);

    const ChannelGrid zero;
    CHECK(nmse(truth, zero) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nmse_to_db(1.0) == doctest::Approx(0.0));

    // ||H||^2 = 4, ||H - Hhat||^2 = 1 -> 0.25 (-6.0206 dB)
    ChannelGrid h, e;
    h.re.at(0, 0) = 2.0;
    e.re.at(0, 0) = 2.0;
    e.im.at(0, 0) = 1.0;
    CHECK(nmse(h, e) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(nmse_to_db(0.25) == doctest::Approx(-6.0206).epsilon(1e-4));

    // invariance under simultaneous scaling
    Rng rng2(7);
    const ChannelGrid est = test::random_grid(rng2);
    const double base = nmse(truth, est);
    ChannelGrid th = truth, es = est;
    for (auto& v : th.re.data) v *= 3.7;
    for (auto& v : th.im.data) v *= 3.7;
    for (auto& v : es.re.data) v *= 3.7;
    for (auto& v : es.im.data) v *= 3.7;
    CHECK(nmse(th, es) == doctest::Approx(base).epsilon(1e-9));

    CHECK_THROWS_AS(nmse(zero, truth), Error);
    CHECK(nmse_to_db(0.0) == -300.0);
}

TEST_CASE("stats: hand cases and two-pass oracle") {
    DmrsGrid g(48, 2);
    for (auto& v : g.re.data) v = 1.5;
    for (auto& v : g.im.data) v = 1.5;
    CsifFeatures c = stats(g, 12.0);
    CHECK(c.mean == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(c.variance == doctest::Approx(0.0));
    CHECK(c.snr_db == 12.0);

    for (auto& v : g.re.data) v = 1.0;
    for (auto& v : g.im.data) v = -1.0;
    c = stats(g, 0.0);
    CHECK(c.mean == doctest::Approx(0.0));
    CHECK(c.variance == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(9);
    const DmrsGrid r = test::random_dmrs(rng);
    double m_ref = 0.0, v_ref = 0.0;
    test::reference_stats(r, m_ref, v_ref);
    c = stats(r, 5.0);
    CHECK(c.mean == doctest::Approx(m_ref).epsilon(1e-6));
    CHECK(c.variance == doctest::Approx(v_ref).epsilon(1e-6));
    CHECK(c.variance >= 0.0);
}

TEST_CASE("linear_interpolate: constants, affine planes, reference oracle") {
    const DmrsPattern p = DmrsPattern::standard();

    SUBCASE("constant field stays constant") {
        DmrsGrid d(48, 2);
        for (auto& v : d.re.data) v = 0.75;
        for (auto& v : d.im.data) v = -0.5;
        const ChannelGrid g = linear_interpolate(d, p);
        for (double v : g.re.data) CHECK(v == doctest::Approx(0.75).epsilon(1e-12));
        for (double v : g.im.data) CHECK(v == doctest::Approx(-0.5).epsilon(1e-12));
    }

    SUBCASE("affine plane reproduced exactly, including extrapolated edges") {
        const double a = 0.031, b = -0.47, c0 = 1.9;
        DmrsGrid d(48, 2);
        for (int k = 0; k < 48; ++k)
            for (int s = 0; s < 2; ++s) {
                d.re.at(k, s) = a * p.freq_indices[k] + b * p.time_indices[s] + c0;
                d.im.at(k, s) = -a * p.freq_indices[k] + 2 * b * p.time_indices[s] - c0;
            }
        const ChannelGrid g = linear_interpolate(d, p);
        for (int f = 0; f < 96; ++f)
            for (int t = 0; t < 14; ++t) {
                CHECK(std::abs(g.re.at(f, t) - (a * f + b * t + c0)) < 1e-6);
                CHECK(std::abs(g.im.at(f, t) - (-a * f + 2 * b * t - c0)) < 1e-6);
            }
    }

    SUBCASE("matches the nested-loop reference on 100 random inputs") {
        Rng rng(13);
        for (int rep = 0; rep < 100; ++rep) {
            const DmrsGrid d = test::random_dmrs(rng);
            const ChannelGrid got = linear_interpolate(d, p);
            const ChannelGrid want = test::reference_interpolate(d, p);
            for (std::size_t i = 0; i < got.re.numel(); ++i) {
                CHECK(std::abs(got.re.data[i] - want.re.data[i]) < 1e-6);
                CHECK(std::abs(got.im.data[i] - want.im.data[i]) < 1e-6);
            }
        }
    }

    SUBCASE("pilot-position fidelity is exact") {
        Rng rng(14);
        const DmrsGrid d = test::random_dmrs(rng);
        const ChannelGrid g = linear_interpolate(d, p);
        const DmrsGrid back = extract_dmrs(g, p);
        CHECK(back.re.data == d.re.data);
        CHECK(back.im.data == d.im.data);
    }

    SUBCASE("linearity within 1e-9") {
        Rng rng(15);
        const DmrsGrid a = test::random_dmrs(rng);
        const DmrsGrid b = test::random_dmrs(rng);
        const double alpha = 0.62, beta = -1.37;
        DmrsGrid mix(48, 2);
        for (std::size_t i = 0; i < mix.re.numel(); ++i) {
            mix.re.data[i] = alpha * a.re.data[i] + beta * b.re.data[i];
            mix.im.data[i] = alpha * a.im.data[i] + beta * b.im.data[i];
        }
        const ChannelGrid ga = linear_interpolate(a, p);
        const ChannelGrid gb = linear_interpolate(b, p);
        const ChannelGrid gm = linear_interpolate(mix, p);
        for (std::size_t i = 0; i < gm.re.numel(); ++i) {
            CHECK(gm.re.data[i] ==
                  doctest::Approx(alpha * ga.re.data[i] + beta * gb.re.data[i]).epsilon(1e-9));
            CHECK(gm.im.data[i] ==
                  doctest::Approx(alpha * ga.im.data[i] + beta * gb.im.data[i]).epsilon(1e-9));
        }
    }

    SUBCASE("small non-standard geometry") {
        const DmrsPattern tp = test::tiny_pattern();
        Rng rng(16);
        const DmrsGrid d = test::random_dmrs(rng, tp.num_pilot_bins(), tp.num_pilot_slots());
        const ChannelGrid got = linear_interpolate(d, tp);
        const ChannelGrid want = test::reference_interpolate(d, tp);
        for (std::size_t i = 0; i < got.re.numel(); ++i)
            CHECK(std::abs(got.re.data[i] - want.re.data[i]) < 1e-9);
    }
}
