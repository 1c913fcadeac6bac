#include "dlr/pipeline.hpp"

#include <cstring>
#include <fstream>

#include "dlr/half.hpp"

namespace dlr {

DlrModel make_dlr_model(const DenoiseConfig& dn_cfg, const RefineConfig& rf_cfg,
                        const DmrsPattern& pattern, std::uint64_t seed, double norm_epsilon) {
    pattern.validate();
    require(norm_epsilon > 0.0, ErrorCode::invalid_argument, "model: epsilon must be positive");
    rf_cfg.validate(pattern.num_freq_bins, pattern.num_time_slots);

    DlrModel m;
    m.denoise_config = dn_cfg;
    m.refine_config = rf_cfg;
    m.pattern = pattern;
    m.norm_epsilon = norm_epsilon;
    Rng rng(splitmix64(seed ^ 0x57454947ull)); // "WEIG"
    m.denoise_weights = init_parameters(
        denoise_param_specs(dn_cfg, pattern.num_pilot_bins(), pattern.num_pilot_slots()), rng);
    m.refine_weights = init_parameters(refine_param_specs(rf_cfg), rng);
    m.rebuild_plan();
    return m;
}

std::pair<DmrsGrid, double> normalize(const DmrsGrid& dmrs, double epsilon) {
    require(epsilon > 0.0, ErrorCode::invalid_argument, "normalize: epsilon must be positive");
    const double scale = std::max(dmrs_rms(dmrs), epsilon);
    DmrsGrid out = dmrs;
    for (auto& v : out.re.data) v /= scale;
    for (auto& v : out.im.data) v /= scale;
    return {out, scale};
}

namespace {

CsifFeatures effective_csif(const DmrsGrid& dmrs, double snr_db, bool use_csif) {
    return use_csif ? stats(dmrs, snr_db) : CsifFeatures{};
}

// Runs the denoiser on dmrs/scale and returns the correction (float net).
TensorT<float> denoise_correction_value(const DlrModel& model, const DmrsGrid& dmrs,
                                        double scale, const CsifFeatures& csif) {
    DmrsGrid xn = dmrs;
    for (auto& v : xn.re.data) v /= scale;
    for (auto& v : xn.im.data) v /= scale;
    TapeT<float> tape;
    const TensorT<float> x = dmrs_to_tensor<float>(xn);
    const TensorT<float> cs = csif_to_tensor<float>(csif);
    const int x_id = tape.leaf(&x, false);
    const int cs_id = tape.leaf(&cs, false);
    BoundTree<float> bound(tape, model.denoise_weights, false);
    const int corr = denoise_correction_graph(tape, x_id, cs_id, bound, model.denoise_config);
    return tape.value(corr);
}

TensorT<float> refine_correction_value(const DlrModel& model, const ChannelGrid& coarse,
                                       double scale, const CsifFeatures& csif) {
    ChannelGrid cn = coarse;
    for (auto& v : cn.re.data) v /= scale;
    for (auto& v : cn.im.data) v /= scale;
    TapeT<float> tape;
    const TensorT<float> x = grid_to_tensor<float>(cn);
    const TensorT<float> cs = csif_to_tensor<float>(csif);
    const int x_id = tape.leaf(&x, false);
    const int cs_id = tape.leaf(&cs, false);
    BoundTree<float> bound(tape, model.refine_weights, false);
    const int corr = refine_correction_graph(tape, x_id, cs_id, bound, model.refine_config);
    return tape.value(corr);
}

void add_scaled_dmrs(DmrsGrid& base, const TensorT<float>& corr, double scale) {
    for (int k = 0; k < base.bins(); ++k)
        for (int s = 0; s < base.slots(); ++s) {
            base.re.at(k, s) += scale * static_cast<double>(corr.at(0, k, s));
            base.im.at(k, s) += scale * static_cast<double>(corr.at(1, k, s));
        }
}

void add_scaled_grid(ChannelGrid& base, const TensorT<float>& corr, double scale) {
    for (int f = 0; f < base.freq_bins(); ++f)
        for (int t = 0; t < base.time_slots(); ++t) {
            base.re.at(f, t) += scale * static_cast<double>(corr.at(0, f, t));
            base.im.at(f, t) += scale * static_cast<double>(corr.at(1, f, t));
        }
}

} // namespace

DmrsGrid denoise_stage(const DlrModel& model, const DmrsGrid& dmrs_noisy, double snr_db,
                       bool use_csif) {
    const CsifFeatures csif = effective_csif(dmrs_noisy, snr_db, use_csif);
    const double scale = std::max(dmrs_rms(dmrs_noisy), model.norm_epsilon);
    DmrsGrid d = dmrs_noisy;
    add_scaled_dmrs(d, denoise_correction_value(model, dmrs_noisy, scale, csif), scale);
    return d;
}

ChannelGrid dlr_forward(const DlrModel& model, const DmrsGrid& dmrs_noisy, double snr_db,
                        bool use_csif) {
    const CsifFeatures csif = effective_csif(dmrs_noisy, snr_db, use_csif);
    const double scale = std::max(dmrs_rms(dmrs_noisy), model.norm_epsilon);

    DmrsGrid denoised = dmrs_noisy;
    add_scaled_dmrs(denoised, denoise_correction_value(model, dmrs_noisy, scale, csif), scale);

    ChannelGrid coarse = linear_interpolate(denoised, model.pattern, model.plan);
    ChannelGrid out = coarse;
    add_scaled_grid(out, refine_correction_value(model, coarse, scale, csif), scale);
    return out;
}

ChannelGrid dlr_forward_swapped(const DlrModel& model, const DmrsGrid& dmrs_noisy, double snr_db,
                                bool use_csif) {
    const CsifFeatures csif = effective_csif(dmrs_noisy, snr_db, use_csif);
    const double scale = std::max(dmrs_rms(dmrs_noisy), model.norm_epsilon);

    ChannelGrid coarse = linear_interpolate(dmrs_noisy, model.pattern, model.plan);
    ChannelGrid refined = coarse;
    add_scaled_grid(refined, refine_correction_value(model, coarse, scale, csif), scale);

    DmrsGrid pilots = extract_dmrs(refined, model.pattern);
    DmrsGrid denoised = pilots;
    add_scaled_dmrs(denoised, denoise_correction_value(model, pilots, scale, csif), scale);
    return linear_interpolate(denoised, model.pattern, model.plan);
}

template <typename T>
PipelineNodes pipeline_loss_graph(TapeT<T>& tape, const DenoiseConfig& dn_cfg,
                                  const RefineConfig& rf_cfg, const InterpPlan& plan,
                                  const BoundTree<T>& dn, const BoundTree<T>& rf, int dmrs_node,
                                  int csif_node, T scale, const TensorT<T>& truth) {
    PipelineNodes nodes;
    const T inv = T(1) / scale;
    nodes.normalized = tape.scale(dmrs_node, inv);
    const int dcorr = denoise_correction_graph(tape, nodes.normalized, csif_node, dn, dn_cfg);
    nodes.denoised = tape.add_scaled(dmrs_node, dcorr, scale);
    nodes.coarse = tape.interp_grid(nodes.denoised, plan);
    const int coarse_n = tape.scale(nodes.coarse, inv);
    const int rcorr = refine_correction_graph(tape, coarse_n, csif_node, rf, rf_cfg);
    nodes.output = tape.add_scaled(nodes.coarse, rcorr, scale);
    nodes.loss = tape.l1_loss(nodes.output, truth);
    return nodes;
}

template PipelineNodes pipeline_loss_graph<float>(TapeT<float>&, const DenoiseConfig&,
                                                  const RefineConfig&, const InterpPlan&,
                                                  const BoundTree<float>&,
                                                  const BoundTree<float>&, int, int, float,
                                                  const TensorT<float>&);
template PipelineNodes pipeline_loss_graph<double>(TapeT<double>&, const DenoiseConfig&,
                                                   const RefineConfig&, const InterpPlan&,
                                                   const BoundTree<double>&,
                                                   const BoundTree<double>&, int, int, double,
                                                   const TensorT<double>&);

// ---------------------------------------------------------------------------
// weight container
// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'D', 'L', 'R', 'W'};
constexpr std::uint32_t kVersion = 1;
} // namespace

void write_weight_container(const ParameterTree& tree, const std::string& path, Dtype dtype) {
    std::vector<unsigned char> buf;
    auto raw = [&buf](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf.insert(buf.end(), b, b + n);
    };
    raw(kMagic, 4);
    const std::uint32_t version = kVersion;
    raw(&version, 4);
    const unsigned char dt = static_cast<unsigned char>(dtype);
    raw(&dt, 1);
    const std::uint32_t count = static_cast<std::uint32_t>(tree.size());
    raw(&count, 4);

    for (std::size_t i = 0; i < tree.size(); ++i) {
        const auto& [name, t] = tree.entry(i);
        require(name.size() <= 0xffff, ErrorCode::invalid_argument, "weights: name too long");
        const std::uint16_t len = static_cast<std::uint16_t>(name.size());
        raw(&len, 2);
        raw(name.data(), name.size());
        const unsigned char rank = static_cast<unsigned char>(t.rank());
        raw(&rank, 1);
        for (int d : t.shape) {
            const std::uint32_t dim = static_cast<std::uint32_t>(d);
            raw(&dim, 4);
        }
        if (dtype == Dtype::f32) {
            raw(t.data.data(), t.numel() * 4);
        } else {
            for (float v : t.data) {
                const std::uint16_t h = f32_to_f16_bits(v);
                raw(&h, 2);
            }
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io_failure, "weights: cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    require(out.good(), ErrorCode::io_failure, "weights: write failed for " + path);
}

ParameterTree read_weight_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_failure, "weights: cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        require(buf.size() - pos >= n, ErrorCode::truncated_payload,
                "weights: truncated payload");
    };
    require(buf.size() >= 4 && std::memcmp(buf.data(), kMagic, 4) == 0, ErrorCode::bad_magic,
            "weights: bad magic");
    pos = 4;
    auto u32 = [&]() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    };
    const std::uint32_t version = u32();
    require(version == kVersion, ErrorCode::version_mismatch,
            "weights: unsupported version " + std::to_string(version));
    need(1);
    const unsigned char dt = buf[pos++];
    require(dt <= 1, ErrorCode::invalid_argument, "weights: unknown dtype tag");
    const Dtype dtype = static_cast<Dtype>(dt);
    const std::uint32_t count = u32();

    ParameterTree tree;
    tree.storage_dtype = dtype;
    for (std::uint32_t i = 0; i < count; ++i) {
        need(2);
        std::uint16_t len;
        std::memcpy(&len, buf.data() + pos, 2);
        pos += 2;
        need(len);
        std::string name(reinterpret_cast<const char*>(buf.data() + pos), len);
        pos += len;
        need(1);
        const int rank = buf[pos++];
        std::vector<int> shape(static_cast<std::size_t>(rank));
        for (int d = 0; d < rank; ++d) shape[static_cast<std::size_t>(d)] = static_cast<int>(u32());
        Tensor t(shape);
        if (dtype == Dtype::f32) {
            need(t.numel() * 4);
            std::memcpy(t.data.data(), buf.data() + pos, t.numel() * 4);
            pos += t.numel() * 4;
        } else {
            need(t.numel() * 2);
            for (std::size_t j = 0; j < t.numel(); ++j) {
                std::uint16_t h;
                std::memcpy(&h, buf.data() + pos + 2 * j, 2);
                t.data[j] = f16_bits_to_f32(h);
            }
            pos += t.numel() * 2;
        }
        tree.insert(name, std::move(t));
    }
    require(pos == buf.size(), ErrorCode::truncated_payload,
            "weights: trailing bytes after last tensor");
    return tree;
}

void save_weights(const DlrModel& model, const std::string& path, Dtype dtype) {
    ParameterTree all;
    for (const auto& [name, t] : model.denoise_weights) all.insert(name, t);
    for (const auto& [name, t] : model.refine_weights) all.insert(name, t);
    write_weight_container(all, path, dtype);
}

void load_weights(DlrModel& model, const std::string& path) {
    const ParameterTree all = read_weight_container(path);
    ParameterTree dn, rf;
    for (const auto& [name, t] : all) {
        if (name.rfind("dn.", 0) == 0) dn.insert(name, t);
        else if (name.rfind("rf.", 0) == 0) rf.insert(name, t);
        else fail(ErrorCode::shape_mismatch, "weights: unexpected tensor " + name);
    }
    check_tree_matches(dn,
                       denoise_param_specs(model.denoise_config,
                                           model.pattern.num_pilot_bins(),
                                           model.pattern.num_pilot_slots()),
                       "denoise weights");
    check_tree_matches(rf, refine_param_specs(model.refine_config), "refine weights");
    model.denoise_weights = std::move(dn);
    model.refine_weights = std::move(rf);
}

std::string model_digest(const DlrModel& model) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    auto mix_tree = [&](const ParameterTree& tree) {
        for (const auto& [name, t] : tree) {
            mix(name.data(), name.size());
            mix(t.data.data(), t.numel() * 4);
        }
    };
    mix(&model.denoise_config, sizeof(DenoiseConfig));
    mix(&model.refine_config.ch, sizeof(int) * 4);
    for (int v : model.pattern.freq_indices) mix(&v, 4);
    for (int v : model.pattern.time_indices) mix(&v, 4);
    mix_tree(model.denoise_weights);
    mix_tree(model.refine_weights);
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

} // namespace dlr
