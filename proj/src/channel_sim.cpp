#include "dlr/channel_sim.hpp"

#include <cmath>

namespace dlr {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSpeedOfLight = 299792458.0;
// Tap delays span this many RMS delay spreads.
constexpr double kDelaySpanFactor = 3.0;

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void quantize_grid(ChannelGrid& g) {
    for (auto& v : g.re.data) v = quantize_f32(v);
    for (auto& v : g.im.data) v = quantize_f32(v);
}

void quantize_dmrs(DmrsGrid& g) {
    for (auto& v : g.re.data) v = quantize_f32(v);
    for (auto& v : g.im.data) v = quantize_f32(v);
}
} // namespace

void ChannelParams::validate() const {
    require(num_taps >= 1, ErrorCode::invalid_argument, "channel: num_taps must be >= 1");
    require(rms_delay_spread_s > 0.0, ErrorCode::invalid_argument,
            "channel: delay spread must be positive");
    require(ue_speed_mps >= 0.0, ErrorCode::invalid_argument, "channel: negative UE speed");
    require(carrier_hz > 0.0 && subcarrier_spacing_hz > 0.0 && symbol_duration_s > 0.0,
            ErrorCode::invalid_argument, "channel: numerology must be positive");
    require(shadow_sigma_db >= 0.0, ErrorCode::invalid_argument,
            "channel: negative shadowing sigma");
}

void SynthRanges::validate() const {
    require(num_taps >= 1, ErrorCode::invalid_argument, "ranges: num_taps must be >= 1");
    require(delay_spread_min_s > 0.0 && delay_spread_max_s >= delay_spread_min_s,
            ErrorCode::invalid_argument, "ranges: bad delay spread range");
    require(ue_speed_min_mps >= 0.0 && ue_speed_max_mps >= ue_speed_min_mps,
            ErrorCode::invalid_argument, "ranges: bad UE speed range");
    require(carrier_hz > 0.0 && subcarrier_spacing_hz > 0.0 && symbol_duration_s > 0.0,
            ErrorCode::invalid_argument, "ranges: numerology must be positive");
    require(shadow_sigma_db >= 0.0, ErrorCode::invalid_argument, "ranges: negative shadowing");
}

ChannelGrid synth_channel(const ChannelParams& params, Rng& rng, int freq_bins, int time_slots) {
    params.validate();
    const int taps = params.num_taps;

    // Exponential PDP over evenly spaced delays, normalized to unit power.
    std::vector<double> delay(taps), power(taps);
    const double span = kDelaySpanFactor * params.rms_delay_spread_s;
    double total = 0.0;
    for (int l = 0; l < taps; ++l) {
        delay[l] = taps > 1 ? span * static_cast<double>(l) / static_cast<double>(taps - 1) : 0.0;
        power[l] = std::exp(-delay[l] / params.rms_delay_spread_s);
        total += power[l];
    }
    for (int l = 0; l < taps; ++l) power[l] /= total;

    // Fixed draw order: per-tap complex gain (re, im), per-tap Doppler angle,
    // then the shadowing deviate.
    std::vector<double> gain_re(taps), gain_im(taps), doppler(taps);
    for (int l = 0; l < taps; ++l) {
        const double amp = std::sqrt(power[l] / 2.0);
        gain_re[l] = amp * rng.normal();
        gain_im[l] = amp * rng.normal();
    }
    const double doppler_max = params.ue_speed_mps * params.carrier_hz / kSpeedOfLight;
    for (int l = 0; l < taps; ++l) doppler[l] = doppler_max * std::cos(kTwoPi * rng.uniform());
    const double shadow_scale =
        params.shadow_sigma_db > 0.0
            ? std::pow(10.0, params.shadow_sigma_db * rng.normal() / 20.0)
            : 1.0;

    ChannelGrid grid(freq_bins, time_slots);
    for (int l = 0; l < taps; ++l) {
        const double freq_step = -kTwoPi * params.subcarrier_spacing_hz * delay[l];
        const double time_step = kTwoPi * doppler[l] * params.symbol_duration_s;
        for (int f = 0; f < freq_bins; ++f) {
            const double fp = freq_step * f;
            const double cf = std::cos(fp), sf = std::sin(fp);
            // tap * e^{j fp}
            const double tr = gain_re[l] * cf - gain_im[l] * sf;
            const double ti = gain_re[l] * sf + gain_im[l] * cf;
            for (int t = 0; t < time_slots; ++t) {
                const double tp = time_step * t;
                const double ct = std::cos(tp), st = std::sin(tp);
                grid.re.at(f, t) += tr * ct - ti * st;
                grid.im.at(f, t) += tr * st + ti * ct;
            }
        }
    }
    for (auto& v : grid.re.data) v *= shadow_scale;
    for (auto& v : grid.im.data) v *= shadow_scale;
    return grid;
}

std::uint64_t record_seed(std::uint64_t dataset_seed, std::uint64_t index) {
    return splitmix64(dataset_seed + 0x9e3779b97f4a7c15ull * index);
}

SampleRecord synthesize_record(const DmrsPattern& pattern, const SynthRanges& ranges,
                               double snr_db, std::uint64_t rec_seed) {
    ranges.validate();

    Rng chan_rng(splitmix64(rec_seed ^ 0x4348414eull)); // "CHAN"
    ChannelParams params;
    params.num_taps = ranges.num_taps;
    params.rms_delay_spread_s = chan_rng.uniform(ranges.delay_spread_min_s,
                                                 ranges.delay_spread_max_s);
    params.ue_speed_mps = chan_rng.uniform(ranges.ue_speed_min_mps, ranges.ue_speed_max_mps);
    params.carrier_hz = ranges.carrier_hz;
    params.subcarrier_spacing_hz = ranges.subcarrier_spacing_hz;
    params.symbol_duration_s = ranges.symbol_duration_s;
    params.shadow_sigma_db = ranges.shadow_sigma_db;

    SampleRecord rec;
    rec.seed = rec_seed;
    rec.snr_db = snr_db;
    rec.truth = synth_channel(params, chan_rng, pattern.num_freq_bins, pattern.num_time_slots);
    quantize_grid(rec.truth);

    const DmrsGrid clean = extract_dmrs(rec.truth, pattern);
    const double ref_power = mean_entry_power(rec.truth);
    Rng noise_rng(splitmix64(rec_seed ^ 0x4e4f4953ull)); // "NOIS"
    rec.dmrs_noisy = add_awgn(clean, snr_db, ref_power, noise_rng);
    quantize_dmrs(rec.dmrs_noisy);
    return rec;
}

Dataset make_dataset(std::size_t count, const std::vector<double>& snr_grid_db,
                     const SynthRanges& ranges, const DmrsPattern& pattern, std::uint64_t seed) {
    pattern.validate();
    ranges.validate();
    require(!snr_grid_db.empty(), ErrorCode::invalid_argument, "make_dataset: empty SNR grid");
    require(count > 0 && count % snr_grid_db.size() == 0, ErrorCode::invalid_argument,
            "make_dataset: count must be a positive multiple of the SNR grid size");

    const std::size_t per_snr = count / snr_grid_db.size();
    Dataset ds;
    ds.pattern = pattern;
    ds.records.resize(count);

#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
        const double snr = snr_grid_db[static_cast<std::size_t>(i) / per_snr];
        ds.records[i] = synthesize_record(pattern, ranges, snr,
                                          record_seed(seed, static_cast<std::uint64_t>(i)));
    }
    return ds;
}

} // namespace dlr
