#ifndef DLR_CHANNEL_SIM_HPP
#define DLR_CHANNEL_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dlr/grid.hpp"

namespace dlr {

// Tapped-delay-line fading channel parameters for one realization.
struct ChannelParams {
    int num_taps = 12;
    double rms_delay_spread_s = 100e-9;
    double ue_speed_mps = 10.0;
    double carrier_hz = 3.5e9;
    double subcarrier_spacing_hz = 15e3;
    double symbol_duration_s = 1.0 / 14e3;
    double shadow_sigma_db = 8.0;

    void validate() const;
};

// Per-sample draw ranges used by dataset generation. Delay spread and UE
// speed are drawn uniformly per record; the rest are held fixed.
struct SynthRanges {
    int num_taps = 12;
    double delay_spread_min_s = 10e-9;
    double delay_spread_max_s = 300e-9;
    double ue_speed_min_mps = 0.0;
    double ue_speed_max_mps = 120.0 / 3.6; // 120 km/h
    double carrier_hz = 3.5e9;
    double subcarrier_spacing_hz = 15e3;
    double symbol_duration_s = 1.0 / 14e3;
    double shadow_sigma_db = 8.0;

    void validate() const;
};

// Sum of Doppler-rotated, delay-phased complex taps with an exponential
// power-delay profile normalized to unit total power, scaled by log-normal
// shadowing. Deterministic given the rng state.
ChannelGrid synth_channel(const ChannelParams& params, Rng& rng, int freq_bins = 96,
                          int time_slots = 14);

struct SampleRecord {
    ChannelGrid truth;
    DmrsGrid dmrs_noisy;
    double snr_db = 0.0;
    std::uint64_t seed = 0; // record seed; channel and noise streams derive from it
};

struct Dataset {
    DmrsPattern pattern;
    std::vector<SampleRecord> records;
};

// Record seed for (dataset seed, index); any record is regenerable alone.
std::uint64_t record_seed(std::uint64_t dataset_seed, std::uint64_t index);

// Regenerates the record that make_dataset would produce for this seed/SNR.
// All grid values are quantized to f32 so container roundtrips are bit-exact.
SampleRecord synthesize_record(const DmrsPattern& pattern, const SynthRanges& ranges,
                               double snr_db, std::uint64_t rec_seed);

// Equal per-SNR allocation in contiguous blocks; count % |snr_grid| == 0.
// Record generation is a parallel map over indices; results do not depend on
// the thread count.
Dataset make_dataset(std::size_t count, const std::vector<double>& snr_grid_db,
                     const SynthRanges& ranges, const DmrsPattern& pattern, std::uint64_t seed);

} // namespace dlr

#endif
