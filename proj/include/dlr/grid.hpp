#ifndef DLR_GRID_HPP
#define DLR_GRID_HPP

#include <cstdint>
#include <vector>

#include "dlr/interp_plan.hpp"
#include "dlr/rng.hpp"
#include "dlr/tensor.hpp"

namespace dlr {

// Pilot layout on the time-frequency plane. The standard layout is comb-2
// over 96 bins (48 pilots starting at bin 0) and time slots {3, 11} of 14;
// both are runtime parameters so the opposite indexing convention is a
// configuration change, not a code change.
struct DmrsPattern {
    std::vector<int> freq_indices;
    std::vector<int> time_indices;
    int num_freq_bins = 0;
    int num_time_slots = 0;

    static DmrsPattern standard();

    int num_pilot_bins() const { return static_cast<int>(freq_indices.size()); }
    int num_pilot_slots() const { return static_cast<int>(time_indices.size()); }
    void validate() const;
};

// Complex-valued channel matrix stored as two real planes [freq x time].
struct ChannelGrid {
    TensorT<double> re, im;

    ChannelGrid() : ChannelGrid(96, 14) {}
    ChannelGrid(int freq_bins, int time_slots)
        : re({freq_bins, time_slots}), im({freq_bins, time_slots}) {}

    int freq_bins() const { return re.dim(0); }
    int time_slots() const { return re.dim(1); }
    bool all_finite() const;
};

// Pilot sub-matrix [pilot bins x pilot slots], same two-plane layout.
struct DmrsGrid {
    TensorT<double> re, im;

    DmrsGrid() : DmrsGrid(48, 2) {}
    DmrsGrid(int bins, int slots) : re({bins, slots}), im({bins, slots}) {}

    int bins() const { return re.dim(0); }
    int slots() const { return re.dim(1); }
    bool all_finite() const;
};

// Per-sample statistics fused into both networks (SSC / CSIF).
struct CsifFeatures {
    double mean = 0.0;
    double variance = 0.0;
    double snr_db = 0.0;
};

// ---------------------------------------------------------------------------

DmrsGrid extract_dmrs(const ChannelGrid& grid, const DmrsPattern& pattern);

// Adds zero-mean complex Gaussian noise with per-complex-entry variance
// noise_ref_power * 10^(-snr_db/10); each real component gets half of it.
// Draw order is fixed (bins outer, slots inner, re before im).
DmrsGrid add_awgn(const DmrsGrid& dmrs, double snr_db, double noise_ref_power, Rng& rng);

double frob_norm(const ChannelGrid& grid);
double frob_norm_sq(const ChannelGrid& grid);
double mean_entry_power(const ChannelGrid& grid); // frob^2 / (F*T)

double dmrs_rms(const DmrsGrid& dmrs); // sqrt(mean |entry|^2)

// Squared-Frobenius ratio ||H - Hhat||^2 / ||H||^2.
double nmse(const ChannelGrid& truth, const ChannelGrid& estimate);
// 10*log10 with the linear value floored so the result never goes below -300 dB.
double nmse_to_db(double nmse_linear);

CsifFeatures stats(const DmrsGrid& dmrs, double snr_db);

InterpPlan make_interp_plan(const DmrsPattern& pattern);

// Separable bilinear reconstruction of the full grid from pilot values;
// linear extrapolation beyond the pilot span, exact copy at pilot positions.
ChannelGrid linear_interpolate(const DmrsGrid& dmrs, const DmrsPattern& pattern);
ChannelGrid linear_interpolate(const DmrsGrid& dmrs, const DmrsPattern& pattern,
                               const InterpPlan& plan);

// Conversions to/from the [2, F, T] tensors the networks consume
// (plane 0 = re, plane 1 = im).
template <typename T>
TensorT<T> grid_to_tensor(const ChannelGrid& g);
template <typename T>
ChannelGrid tensor_to_grid(const TensorT<T>& t);
template <typename T>
TensorT<T> dmrs_to_tensor(const DmrsGrid& g);
template <typename T>
DmrsGrid tensor_to_dmrs(const TensorT<T>& t);

} // namespace dlr

#endif
