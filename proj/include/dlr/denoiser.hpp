#ifndef DLR_DENOISER_HPP
#define DLR_DENOISER_HPP

#include <array>

#include "dlr/grid.hpp"
#include "dlr/model_util.hpp"

namespace dlr {

// Four-stage 1D-windowed-self-attention U over the frequency axis:
// encoder stages 1-2, bottleneck stage 3, decoder stage 4, additive skips.
// Channel trajectory dim -> 2*dim -> 4*dim -> 2*dim -> dim.
struct DenoiseConfig {
    int dim = 32;
    std::array<int, 4> windows{8, 4, 2, 2};
    std::array<int, 4> heads{4, 4, 4, 4};
    int se_reduction = 4;

    int stage_dim(int stage) const {
        static constexpr int mult[4] = {1, 2, 4, 2};
        return dim * mult[stage];
    }
    // Token width at each stage for a given pilot-bin count.
    static int stage_width(int pilot_bins, int stage) {
        static constexpr int div[4] = {1, 2, 4, 2};
        return pilot_bins / div[stage];
    }
    void validate(int pilot_bins, int pilot_slots) const;
};

std::vector<ParamSpec> denoise_param_specs(const DenoiseConfig& cfg, int pilot_bins,
                                           int pilot_slots);

// Graph builders. All take an already-bound parameter tree; gradients flow
// whenever the binding requires them.
template <typename T>
int dn_block_graph(TapeT<T>& tape, int x, const BoundTree<T>& p, const std::string& prefix,
                   int win, int heads);

// The WSA sublayer alone (pre-norm attention + residual); used by dn_block
// and exposed for the window-locality tests.
template <typename T>
int wsa_sublayer_graph(TapeT<T>& tape, int x, const BoundTree<T>& p, const std::string& prefix,
                       int win, int heads);

// Correction the denoiser predicts for a normalized [2, P, S] pilot map.
// The full denoiser output is input + correction.
template <typename T>
int denoise_correction_graph(TapeT<T>& tape, int dmrs_node, int csif_node, const BoundTree<T>& p,
                             const DenoiseConfig& cfg);

// Module-level forward on a normalized pilot grid: output = input + correction.
DmrsGrid denoise_forward(const DenoiseConfig& cfg, const ParameterTree& weights,
                         const DmrsGrid& dmrs_norm, const CsifFeatures& csif);

// CSIF vector as the networks consume it: (mean, variance, snr_db / 20).
template <typename T>
TensorT<T> csif_to_tensor(const CsifFeatures& csif);

} // namespace dlr

#endif
