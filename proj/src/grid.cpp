#include "dlr/grid.hpp"

#include <cmath>

namespace dlr {

DmrsPattern DmrsPattern::standard() {
    DmrsPattern p;
    p.num_freq_bins = 96;
    p.num_time_slots = 14;
    p.freq_indices.resize(48);
    for (int i = 0; i < 48; ++i) p.freq_indices[i] = 2 * i;
    p.time_indices = {3, 11};
    return p;
}

void DmrsPattern::validate() const {
    require(num_freq_bins > 0 && num_time_slots > 0, ErrorCode::invalid_argument,
            "pattern: grid dimensions must be positive");
    require(!freq_indices.empty() && !time_indices.empty(), ErrorCode::invalid_argument,
            "pattern: empty pilot index set");
    auto check = [](const std::vector<int>& idx, int limit, const char* axis) {
        int prev = -1;
        for (int v : idx) {
            require(v > prev, ErrorCode::invalid_argument,
                    std::string("pattern: ") + axis + " indices must be strictly increasing");
            require(v >= 0 && v < limit, ErrorCode::invalid_argument,
                    std::string("pattern: ") + axis + " index out of range");
            prev = v;
        }
    };
    check(freq_indices, num_freq_bins, "frequency");
    check(time_indices, num_time_slots, "time");
}

namespace {
bool tensor_finite(const TensorT<double>& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}
} // namespace

bool ChannelGrid::all_finite() const { return tensor_finite(re) && tensor_finite(im); }
bool DmrsGrid::all_finite() const { return tensor_finite(re) && tensor_finite(im); }

DmrsGrid extract_dmrs(const ChannelGrid& grid, const DmrsPattern& pattern) {
    pattern.validate();
    require(grid.freq_bins() == pattern.num_freq_bins &&
                grid.time_slots() == pattern.num_time_slots,
            ErrorCode::shape_mismatch, "extract_dmrs: grid does not match pattern geometry");
    DmrsGrid out(pattern.num_pilot_bins(), pattern.num_pilot_slots());
    for (int k = 0; k < out.bins(); ++k) {
        const int f = pattern.freq_indices[k];
        for (int s = 0; s < out.slots(); ++s) {
            const int t = pattern.time_indices[s];
            out.re.at(k, s) = grid.re.at(f, t);
            out.im.at(k, s) = grid.im.at(f, t);
        }
    }
    return out;
}

DmrsGrid add_awgn(const DmrsGrid& dmrs, double snr_db, double noise_ref_power, Rng& rng) {
    require(noise_ref_power > 0.0, ErrorCode::invalid_argument,
            "add_awgn: noise reference power must be positive");
    const double sigma2 = noise_ref_power * std::pow(10.0, -snr_db / 10.0);
    const double comp_std = std::sqrt(sigma2 / 2.0);
    DmrsGrid out = dmrs;
    for (int k = 0; k < out.bins(); ++k)
        for (int s = 0; s < out.slots(); ++s) {
            out.re.at(k, s) += comp_std * rng.normal();
            out.im.at(k, s) += comp_std * rng.normal();
        }
    return out;
}

double frob_norm_sq(const ChannelGrid& grid) {
    double acc = 0.0;
    for (double v : grid.re.data) acc += v * v;
    for (double v : grid.im.data) acc += v * v;
    return acc;
}

double frob_norm(const ChannelGrid& grid) { return std::sqrt(frob_norm_sq(grid)); }

double mean_entry_power(const ChannelGrid& grid) {
    return frob_norm_sq(grid) / static_cast<double>(grid.re.numel());
}

double dmrs_rms(const DmrsGrid& dmrs) {
    double acc = 0.0;
    for (double v : dmrs.re.data) acc += v * v;
    for (double v : dmrs.im.data) acc += v * v;
    return std::sqrt(acc / static_cast<double>(dmrs.re.numel()));
}

double nmse(const ChannelGrid& truth, const ChannelGrid& estimate) {
    require(truth.freq_bins() == estimate.freq_bins() &&
                truth.time_slots() == estimate.time_slots(),
            ErrorCode::shape_mismatch, "nmse: grid shapes differ");
    const double denom = frob_norm_sq(truth);
    require(denom > 0.0, ErrorCode::invalid_argument, "nmse: zero-norm ground truth");
    double num = 0.0;
    for (std::size_t i = 0; i < truth.re.numel(); ++i) {
        const double dr = truth.re.data[i] - estimate.re.data[i];
        const double di = truth.im.data[i] - estimate.im.data[i];
        num += dr * dr + di * di;
    }
    if (num == 0.0) return 0.0;
    return num / denom;
}

double nmse_to_db(double nmse_linear) {
    if (nmse_linear < 1e-30) return -300.0;
    return 10.0 * std::log10(nmse_linear);
}

CsifFeatures stats(const DmrsGrid& dmrs, double snr_db) {
    const std::size_t n = dmrs.re.numel() + dmrs.im.numel();
    double mean = 0.0;
    for (double v : dmrs.re.data) mean += v;
    for (double v : dmrs.im.data) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : dmrs.re.data) var += (v - mean) * (v - mean);
    for (double v : dmrs.im.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    return {mean, var, snr_db};
}

InterpPlan make_interp_plan(const DmrsPattern& pattern) {
    pattern.validate();
    InterpPlan plan;
    plan.freq = make_interp_taps(pattern.freq_indices, pattern.num_freq_bins);
    plan.time = make_interp_taps(pattern.time_indices, pattern.num_time_slots);
    return plan;
}

namespace {
// One separable pass applied to both planes; pilots (lo == hi taps) copy.
void interp_plane(const TensorT<double>& in, const std::vector<InterpTap>& taps, int axis,
                  TensorT<double>& out) {
    const int rows = out.dim(0), cols = out.dim(1);
    if (axis == 0) { // expand rows
        for (int r = 0; r < rows; ++r) {
            const InterpTap& t = taps[r];
            for (int c = 0; c < cols; ++c)
                out.at(r, c) = (t.lo == t.hi)
                                   ? in.at(t.lo, c)
                                   : (1.0 - t.w) * in.at(t.lo, c) + t.w * in.at(t.hi, c);
        }
    } else { // expand cols
        for (int r = 0; r < rows; ++r) {
            const InterpTap* tp = taps.data();
            for (int c = 0; c < cols; ++c) {
                const InterpTap& t = tp[c];
                out.at(r, c) = (t.lo == t.hi)
                                   ? in.at(r, t.lo)
                                   : (1.0 - t.w) * in.at(r, t.lo) + t.w * in.at(r, t.hi);
            }
        }
    }
}
} // namespace

ChannelGrid linear_interpolate(const DmrsGrid& dmrs, const DmrsPattern& pattern,
                               const InterpPlan& plan) {
    require(dmrs.bins() == pattern.num_pilot_bins() && dmrs.slots() == pattern.num_pilot_slots(),
            ErrorCode::shape_mismatch, "linear_interpolate: pilot grid does not match pattern");
    ChannelGrid out(pattern.num_freq_bins, pattern.num_time_slots);
    TensorT<double> stage_re({pattern.num_freq_bins, dmrs.slots()});
    TensorT<double> stage_im({pattern.num_freq_bins, dmrs.slots()});
    interp_plane(dmrs.re, plan.freq, 0, stage_re);
    interp_plane(dmrs.im, plan.freq, 0, stage_im);
    interp_plane(stage_re, plan.time, 1, out.re);
    interp_plane(stage_im, plan.time, 1, out.im);
    return out;
}

ChannelGrid linear_interpolate(const DmrsGrid& dmrs, const DmrsPattern& pattern) {
    return linear_interpolate(dmrs, pattern, make_interp_plan(pattern));
}

template <typename T>
TensorT<T> grid_to_tensor(const ChannelGrid& g) {
    const int f = g.freq_bins(), t = g.time_slots();
    TensorT<T> out({2, f, t});
    for (int i = 0; i < f; ++i)
        for (int j = 0; j < t; ++j) {
            out.at(0, i, j) = static_cast<T>(g.re.at(i, j));
            out.at(1, i, j) = static_cast<T>(g.im.at(i, j));
        }
    return out;
}

template <typename T>
ChannelGrid tensor_to_grid(const TensorT<T>& t) {
    require(t.rank() == 3 && t.dim(0) == 2, ErrorCode::shape_mismatch,
            "tensor_to_grid: expected [2, F, T]");
    ChannelGrid g(t.dim(1), t.dim(2));
    for (int i = 0; i < t.dim(1); ++i)
        for (int j = 0; j < t.dim(2); ++j) {
            g.re.at(i, j) = static_cast<double>(t.at(0, i, j));
            g.im.at(i, j) = static_cast<double>(t.at(1, i, j));
        }
    return g;
}

template <typename T>
TensorT<T> dmrs_to_tensor(const DmrsGrid& g) {
    const int b = g.bins(), s = g.slots();
    TensorT<T> out({2, b, s});
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < s; ++j) {
            out.at(0, i, j) = static_cast<T>(g.re.at(i, j));
            out.at(1, i, j) = static_cast<T>(g.im.at(i, j));
        }
    return out;
}

template <typename T>
DmrsGrid tensor_to_dmrs(const TensorT<T>& t) {
    require(t.rank() == 3 && t.dim(0) == 2, ErrorCode::shape_mismatch,
            "tensor_to_dmrs: expected [2, P, S]");
    DmrsGrid g(t.dim(1), t.dim(2));
    for (int i = 0; i < t.dim(1); ++i)
        for (int j = 0; j < t.dim(2); ++j) {
            g.re.at(i, j) = static_cast<double>(t.at(0, i, j));
            g.im.at(i, j) = static_cast<double>(t.at(1, i, j));
        }
    return g;
}

template TensorT<float> grid_to_tensor<float>(const ChannelGrid&);
template TensorT<double> grid_to_tensor<double>(const ChannelGrid&);
template ChannelGrid tensor_to_grid<float>(const TensorT<float>&);
template ChannelGrid tensor_to_grid<double>(const TensorT<double>&);
template TensorT<float> dmrs_to_tensor<float>(const DmrsGrid&);
template TensorT<double> dmrs_to_tensor<double>(const DmrsGrid&);
template DmrsGrid tensor_to_dmrs<float>(const TensorT<float>&);
template DmrsGrid tensor_to_dmrs<double>(const TensorT<double>&);

} // namespace dlr
