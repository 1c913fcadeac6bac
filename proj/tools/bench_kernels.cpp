// Kernel benchmark: serial reference implementations vs the OpenMP kernels,
// plus end-to-end forward/training-step throughput at 1..N threads.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "dlr/channel_sim.hpp"
#include "dlr/pipeline.hpp"
#include "dlr/train.hpp"
#include "ref/ref_kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using dlr::Tensor;

dlr::Rng g_rng(7);

Tensor randn(std::vector<int> shape) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(g_rng.normal());
    return t;
}

double time_of(const std::function<void()>& fn, int iters) {
    fn(); // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < iters; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / iters;
}

void row(const std::string& name, double flops, double t_ref, double t_opt) {
    std::printf("%-28s %10.3f ms %10.3f ms %8.2fx %9.2f GFLOP/s\n", name.c_str(), t_ref * 1e3,
                t_opt * 1e3, t_ref / t_opt, flops / t_opt * 1e-9);
}

} // namespace

int main(int argc, char** argv) {
    int threads = 0;
    if (argc > 1) threads = std::atoi(argv[1]);
    if (threads > 0) dlr::ops::set_num_threads(threads);
    std::printf("threads: %d\n", dlr::ops::max_threads());
    std::printf("%-28s %13s %13s %9s %12s\n", "kernel", "serial-ref", "openmp", "speedup",
                "rate");

    // conv2d at the refiner's heaviest decoder shape
    {
        const Tensor x = randn({384, 24, 4});
        const Tensor w = randn({128, 384, 3, 3});
        const Tensor b = randn({128});
        const double flops = 2.0 * 128 * 384 * 9 * 24 * 4;
        const double t_ref = time_of([&] { dlr::ref::conv2d(x, w, b, 1); }, 5);
        const double t_opt = time_of([&] { dlr::ops::conv2d_forward(x, w, b, 1); }, 20);
        row("conv2d 384->128 @24x4", flops, t_ref, t_opt);
    }
    {
        const Tensor x = randn({32, 96, 16});
        const Tensor w = randn({32, 32, 3, 3});
        const Tensor b = randn({32});
        const double flops = 2.0 * 32 * 32 * 9 * 96 * 16;
        const double t_ref = time_of([&] { dlr::ref::conv2d(x, w, b, 1); }, 5);
        const double t_opt = time_of([&] { dlr::ops::conv2d_forward(x, w, b, 1); }, 20);
        row("conv2d 32->32 @96x16", flops, t_ref, t_opt);
    }
    // windowed attention at denoiser stage-1 shape
    {
        const Tensor x = randn({32, 48});
        const Tensor wq = randn({32, 32}), wk = randn({32, 32}), wv = randn({32, 32}),
                     wo = randn({32, 32});
        const Tensor bq = randn({32}), bk = randn({32}), bv = randn({32}), bo = randn({32});
        const dlr::ops::MhsaWeights<float> mw{&wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo};
        const double flops = 2.0 * 4 * 32 * 32 * 48 + 2.0 * 4 * 48 * 8 * 8 * 2;
        dlr::ops::MhsaSaved<float> saved;
        const double t_ref = time_of([&] { dlr::ref::mhsa_window(x, mw, 4, 8); }, 50);
        const double t_opt =
            time_of([&] { dlr::ops::mhsa_window_forward(x, mw, 4, 8, saved); }, 50);
        row("wsa dim32 w48 win8", flops, t_ref, t_opt);
    }
    // conv1d down-stage
    {
        const Tensor x = randn({32, 48});
        const Tensor w = randn({64, 32, 4});
        const Tensor b = randn({64});
        const double flops = 2.0 * 64 * 32 * 4 * 24;
        const double t_ref = time_of([&] { dlr::ref::conv1d(x, w, b, 2, 1); }, 50);
        const double t_opt = time_of([&] { dlr::ops::conv1d_forward(x, w, b, 2, 1); }, 50);
        row("conv1d 32->64 k4 s2", flops, t_ref, t_opt);
    }

    // end-to-end single-record inference and one training step
    {
        const dlr::DmrsPattern pattern = dlr::DmrsPattern::standard();
        dlr::SynthRanges ranges;
        const dlr::Dataset ds = dlr::make_dataset(32, {10.0}, ranges, pattern, 3);
        dlr::DlrModel model = dlr::make_dlr_model({}, {}, pattern, 1);

        const double t_fwd = time_of(
            [&] { dlr::dlr_forward(model, ds.records[0].dmrs_noisy, ds.records[0].snr_db); }, 5);
        std::printf("%-28s %27.3f ms\n", "dlr_forward (dim32/ch32)", t_fwd * 1e3);

        dlr::TrainConfig tc;
        tc.epochs = 1;
        tc.batch_size = 16;
        tc.learning_rate = 1e-4;
        tc.split_ratio = 0.5;
        tc.metrics_path.clear();
        const auto t0 = std::chrono::steady_clock::now();
        dlr::fit(model, ds, tc);
        const double t_step = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
        std::printf("%-28s %27.3f ms\n", "train epoch (16 samples)", t_step * 1e3);
    }

    // dataset synthesis throughput
    {
        const dlr::DmrsPattern pattern = dlr::DmrsPattern::standard();
        dlr::SynthRanges ranges;
        const double t = time_of([&] { dlr::make_dataset(64, {10.0}, ranges, pattern, 9); }, 3);
        std::printf("%-28s %27.3f ms (64 records)\n", "make_dataset", t * 1e3);
    }
    return 0;
}
