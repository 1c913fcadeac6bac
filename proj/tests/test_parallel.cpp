// Thread-count invariance: the OpenMP kernels partition independent outputs,
// so results must be bit-identical at any thread count, and dataset
// generation must produce byte-identical files regardless of parallelism.

#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dlr/dataset.hpp"
#include "dlr/pipeline.hpp"
#include "dlr/train.hpp"
#include "support/oracles.hpp"

using namespace dlr;
using test::randn_f;

namespace {
struct ThreadGuard {
    explicit ThreadGuard(int n) { ops::set_num_threads(n); }
    ~ThreadGuard() { ops::set_num_threads(0); }
};
} // namespace

TEST_CASE("kernels: serial and parallel execution agree bit-for-bit") {
    Rng rng(71);
    const Tensor x = randn_f({64, 48, 16}, rng);
    const Tensor w = randn_f({32, 64, 3, 3}, rng);
    const Tensor b = randn_f({32}, rng);

    Tensor serial, parallel;
    {
        ThreadGuard g(1);
        serial = ops::conv2d_forward(x, w, b, 1);
    }
    {
        ThreadGuard g(2);
        parallel = ops::conv2d_forward(x, w, b, 1);
    }
    CHECK(serial.data == parallel.data);

    const Tensor x1 = randn_f({48, 96}, rng);
    const Tensor w1 = randn_f({96, 48, 4}, rng);
    const Tensor b1 = randn_f({96}, rng);
    Tensor s1, p1;
    {
        ThreadGuard g(1);
        s1 = ops::conv1d_forward(x1, w1, b1, 2, 1);
    }
    {
        ThreadGuard g(2);
        p1 = ops::conv1d_forward(x1, w1, b1, 2, 1);
    }
    CHECK(s1.data == p1.data);
}

TEST_CASE("dlr_forward: identical output at 1 and 2 threads") {
    DenoiseConfig dn;
    dn.dim = 8;
    dn.heads = {2, 2, 2, 2};
    RefineConfig rf;
    rf.ch = 4;
    const DlrModel model = make_dlr_model(dn, rf, DmrsPattern::standard(), 5);
    Rng rng(72);
    const DmrsGrid noisy = test::random_dmrs(rng);

    ChannelGrid a, b;
    {
        ThreadGuard g(1);
        a = dlr_forward(model, noisy, 10.0);
    }
    {
        ThreadGuard g(2);
        b = dlr_forward(model, noisy, 10.0);
    }
    CHECK(a.re.data == b.re.data);
    CHECK(a.im.data == b.im.data);
}

TEST_CASE("make_dataset: thread count does not change the records") {
    SynthRanges ranges;
    Dataset a, b;
    {
        ThreadGuard g(1);
        a = make_dataset(16, {0.0, 10.0}, ranges, DmrsPattern::standard(), 123);
    }
    {
        ThreadGuard g(2);
        b = make_dataset(16, {0.0, 10.0}, ranges, DmrsPattern::standard(), 123);
    }
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].truth.re.data == b.records[i].truth.re.data);
        CHECK(a.records[i].dmrs_noisy.re.data == b.records[i].dmrs_noisy.re.data);
        CHECK(a.records[i].seed == b.records[i].seed);
    }
}

TEST_CASE("fit: chunked gradient reduction is thread-count invariant") {
    SynthRanges ranges;
    const Dataset ds = make_dataset(24, {10.0}, ranges, DmrsPattern::standard(), 7);
    DenoiseConfig dn;
    dn.dim = 8;
    dn.heads = {2, 2, 2, 2};
    RefineConfig rf;
    rf.ch = 4;
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 16; // two chunks of 8
    tc.learning_rate = 1e-3;
    tc.seed = 3;

    DlrModel m1 = make_dlr_model(dn, rf, DmrsPattern::standard(), 9);
    DlrModel m2 = make_dlr_model(dn, rf, DmrsPattern::standard(), 9);
    FitResult r1, r2;
    {
        ThreadGuard g(1);
        r1 = fit(m1, ds, tc);
    }
    {
        ThreadGuard g(2);
        r2 = fit(m2, ds, tc);
    }
    REQUIRE(r1.metrics.size() == r2.metrics.size());
    for (std::size_t i = 0; i < r1.metrics.size(); ++i)
        CHECK(r1.metrics[i].train_l1 == r2.metrics[i].train_l1);
    for (std::size_t i = 0; i < m1.refine_weights.size(); ++i) {
        const auto& [name, t] = m1.refine_weights.entry(i);
        CHECK(m2.refine_weights.get(name).data == t.data);
    }
}
