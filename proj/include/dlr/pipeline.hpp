#ifndef DLR_PIPELINE_HPP
#define DLR_PIPELINE_HPP

#include <string>
#include <utility>

#include "dlr/denoiser.hpp"
#include "dlr/refiner.hpp"

namespace dlr {

struct DlrModel {
    DenoiseConfig denoise_config;
    RefineConfig refine_config;
    DmrsPattern pattern;
    double norm_epsilon = 1e-8;
    ParameterTree denoise_weights;
    ParameterTree refine_weights;
    InterpPlan plan; // derived from pattern

    void rebuild_plan() { plan = make_interp_plan(pattern); }
};

// Freshly initialized model; weight draws are pinned by the seed.
DlrModel make_dlr_model(const DenoiseConfig& dn_cfg, const RefineConfig& rf_cfg,
                        const DmrsPattern& pattern, std::uint64_t seed,
                        double norm_epsilon = 1e-8);

// scale = max(rms(dmrs), epsilon); output = dmrs / scale.
std::pair<DmrsGrid, double> normalize(const DmrsGrid& dmrs, double epsilon);

// Denoise -> linear interpolation -> refine. Grid arithmetic runs in double
// with the network corrections applied at physical scale, so zeroed output
// projections reproduce the plain linear interpolation bit-for-bit.
ChannelGrid dlr_forward(const DlrModel& model, const DmrsGrid& dmrs_noisy, double snr_db,
                        bool use_csif = true);

// Fig-4 ablation order: interpolate noisy pilots, refine, re-extract,
// denoise, interpolate again. Shares all weights with dlr_forward.
ChannelGrid dlr_forward_swapped(const DlrModel& model, const DmrsGrid& dmrs_noisy, double snr_db,
                                bool use_csif = true);

// Denoise stage alone at physical scale: dmrs + scale * correction.
DmrsGrid denoise_stage(const DlrModel& model, const DmrsGrid& dmrs_noisy, double snr_db,
                       bool use_csif = true);

// Full differentiable pipeline on one sample (training and gradient tests).
struct PipelineNodes {
    int normalized = -1;
    int denoised = -1; // physical scale
    int coarse = -1;   // physical scale
    int output = -1;   // physical scale
    int loss = -1;
};

template <typename T>
PipelineNodes pipeline_loss_graph(TapeT<T>& tape, const DenoiseConfig& dn_cfg,
                                  const RefineConfig& rf_cfg, const InterpPlan& plan,
                                  const BoundTree<T>& dn, const BoundTree<T>& rf, int dmrs_node,
                                  int csif_node, T scale, const TensorT<T>& truth);

// ---------------------------------------------------------------------------
// Weight container, little-endian:
//   magic "DLRW" | version u32 = 1 | dtype u8 (0 = f32, 1 = f16) | count u32
//   per tensor: name_len u16, UTF-8 name, rank u8, dims u32..., raw scalars
// ---------------------------------------------------------------------------
void write_weight_container(const ParameterTree& tree, const std::string& path, Dtype dtype);
ParameterTree read_weight_container(const std::string& path); // restores f32 working copies

// Serializes both trees (denoise first) into one container.
void save_weights(const DlrModel& model, const std::string& path, Dtype dtype);
// Loads a container and validates names/shapes against the model's configs.
void load_weights(DlrModel& model, const std::string& path);

// FNV-1a digest over configs, pattern and weight payload; used in reports.
std::string model_digest(const DlrModel& model);

} // namespace dlr

#endif
