#ifndef DLR_TEST_ORACLES_HPP
#define DLR_TEST_ORACLES_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "dlr/grid.hpp"
#include "dlr/rng.hpp"
#include "dlr/tensor.hpp"

// Independent oracles used by the test suite. These deliberately avoid the
// library's computation paths: plain nested loops, double precision.
namespace dlr::test {

inline TensorT<double> randn_t(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    TensorT<double> t(std::move(shape));
    for (auto& v : t.data) v = scale * rng.normal();
    return t;
}

inline TensorT<float> randn_f(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    TensorT<float> t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(scale * rng.normal());
    return t;
}

// --------------------------------------------------------------------------
// Central finite differences against an analytic gradient.
// f: evaluates the scalar loss. grad: the analytic gradient w.r.t. x's data.
// Returns the max relative error over checked coordinates.
// --------------------------------------------------------------------------
inline double fd_max_rel_error(std::vector<double>& x, const std::function<double()>& f,
                               const std::vector<double>& grad,
                               const std::vector<std::size_t>& coords, double step = 1e-4) {
    double worst = 0.0;
    for (std::size_t i : coords) {
        const double keep = x[i];
        x[i] = keep + step;
        const double fp = f();
        x[i] = keep - step;
        const double fm = f();
        x[i] = keep;
        const double num = (fp - fm) / (2.0 * step);
        const double denom = std::max({std::abs(num), std::abs(grad[i]), 1e-8});
        worst = std::max(worst, std::abs(num - grad[i]) / denom);
    }
    return worst;
}

// All coordinates, or a deterministic subset when the tensor is large.
inline std::vector<std::size_t> coord_sample(std::size_t n, std::size_t max_coords, Rng& rng) {
    std::vector<std::size_t> out;
    if (n <= max_coords) {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = i;
        return out;
    }
    out.reserve(max_coords);
    for (std::size_t i = 0; i < max_coords; ++i) out.push_back(rng.index(n));
    return out;
}

// --------------------------------------------------------------------------
// Brute-force reference interpolator: per output position, search for the
// bracketing pilots and apply the two-point formula directly.
// --------------------------------------------------------------------------
inline ChannelGrid reference_interpolate(const DmrsGrid& dmrs, const DmrsPattern& pat) {
    // frequency pass
    const int nf = pat.num_freq_bins, nt = pat.num_time_slots;
    const int np = pat.num_pilot_bins(), ns = pat.num_pilot_slots();
    auto interp1 = [](const std::vector<int>& pos, const std::vector<double>& val, int x) {
        const int n = static_cast<int>(pos.size());
        if (n == 1) return val[0];
        for (int i = 0; i < n; ++i)
            if (pos[static_cast<std::size_t>(i)] == x) return val[static_cast<std::size_t>(i)];
        int j = 0;
        while (j < n - 2 && pos[static_cast<std::size_t>(j + 1)] < x) ++j;
        if (x < pos[0]) j = 0;
        if (x > pos[static_cast<std::size_t>(n - 1)]) j = n - 2;
        const double x0 = pos[static_cast<std::size_t>(j)], x1 = pos[static_cast<std::size_t>(j + 1)];
        const double w = (x - x0) / (x1 - x0);
        return (1.0 - w) * val[static_cast<std::size_t>(j)] + w * val[static_cast<std::size_t>(j + 1)];
    };

    TensorT<double> stage_re({nf, ns}), stage_im({nf, ns});
    for (int s = 0; s < ns; ++s) {
        std::vector<double> col_re(static_cast<std::size_t>(np)), col_im(static_cast<std::size_t>(np));
        for (int k = 0; k < np; ++k) {
            col_re[static_cast<std::size_t>(k)] = dmrs.re.at(k, s);
            col_im[static_cast<std::size_t>(k)] = dmrs.im.at(k, s);
        }
        for (int f = 0; f < nf; ++f) {
            stage_re.at(f, s) = interp1(pat.freq_indices, col_re, f);
            stage_im.at(f, s) = interp1(pat.freq_indices, col_im, f);
        }
    }
    ChannelGrid out(nf, nt);
    for (int f = 0; f < nf; ++f) {
        std::vector<double> row_re(static_cast<std::size_t>(ns)), row_im(static_cast<std::size_t>(ns));
        for (int s = 0; s < ns; ++s) {
            row_re[static_cast<std::size_t>(s)] = stage_re.at(f, s);
            row_im[static_cast<std::size_t>(s)] = stage_im.at(f, s);
        }
        for (int t = 0; t < nt; ++t) {
            out.re.at(f, t) = interp1(pat.time_indices, row_re, t);
            out.im.at(f, t) = interp1(pat.time_indices, row_im, t);
        }
    }
    return out;
}

// Two-pass mean / population variance over both planes.
inline void reference_stats(const DmrsGrid& g, double& mean, double& var) {
    std::vector<double> all;
    all.insert(all.end(), g.re.data.begin(), g.re.data.end());
    all.insert(all.end(), g.im.data.begin(), g.im.data.end());
    mean = 0.0;
    for (double v : all) mean += v;
    mean /= static_cast<double>(all.size());
    var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    var /= static_cast<double>(all.size());
}

inline DmrsGrid random_dmrs(Rng& rng, int bins = 48, int slots = 2, double scale = 1.0) {
    DmrsGrid g(bins, slots);
    for (auto& v : g.re.data) v = scale * rng.normal();
    for (auto& v : g.im.data) v = scale * rng.normal();
    return g;
}

inline ChannelGrid random_grid(Rng& rng, int bins = 96, int slots = 14, double scale = 1.0) {
    ChannelGrid g(bins, slots);
    for (auto& v : g.re.data) v = scale * rng.normal();
    for (auto& v : g.im.data) v = scale * rng.normal();
    return g;
}

// Small 16x6 geometry with 8x2 pilots; keeps network gradient tests cheap.
inline DmrsPattern tiny_pattern() {
    DmrsPattern p;
    p.num_freq_bins = 16;
    p.num_time_slots = 6;
    p.freq_indices = {0, 2, 4, 6, 8, 10, 12, 14};
    p.time_indices = {1, 4};
    return p;
}

} // namespace dlr::test

#endif
