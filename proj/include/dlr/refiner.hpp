#ifndef DLR_REFINER_HPP
#define DLR_REFINER_HPP

#include "dlr/grid.hpp"
#include "dlr/model_util.hpp"

namespace dlr {

// UNet over the [2, F, T] time-frequency plane. Channels double per level
// (ch, 2ch, 4ch, ... bottleneck 2^levels * ch); max-pool down, bilinear up,
// concatenated skips, CSIF-augmented channel attention in every RF block.
struct RefineConfig {
    int ch = 32;
    int levels = 3;
    int time_pad_to = 16; // replicate-pad the odd time axis up to this width
    int ca_reduction = 4;

    int level_channels(int level) const { return ch << level; } // level 0..levels
    void validate(int freq_bins, int time_slots) const;
};

std::vector<ParamSpec> refine_param_specs(const RefineConfig& cfg);

// Two 3x3 convs with ReLU, then channel attention gated on pooled
// descriptors concatenated with the CSIF vector.
template <typename T>
int rf_block_graph(TapeT<T>& tape, int x, int csif_node, const BoundTree<T>& p,
                   const std::string& prefix);

// Node ids of interesting intermediate maps, filled when a probe is passed.
struct RefineProbe {
    int bottleneck = -1;
    std::vector<int> encoder; // per level, pre-pool
};

// Correction for a normalized [2, F, T] coarse grid (pad/crop handled
// inside). The full refiner output is coarse + correction.
template <typename T>
int refine_correction_graph(TapeT<T>& tape, int coarse_node, int csif_node,
                            const BoundTree<T>& p, const RefineConfig& cfg,
                            RefineProbe* probe = nullptr);

// Module-level forward on a normalized coarse grid: output = input + correction.
ChannelGrid refine_forward(const RefineConfig& cfg, const ParameterTree& weights,
                           const ChannelGrid& coarse_norm, const CsifFeatures& csif);

} // namespace dlr

#endif
