#ifndef DLR_TRAIN_HPP
#define DLR_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dlr/dataset.hpp"
#include "dlr/pipeline.hpp"

namespace dlr {

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 400;
    int epochs = 2400;
    double naos_bias = 5.0;
    double split_ratio = 0.9;
    std::uint64_t seed = 0;
    bool naos_enabled = true;
    bool csif_enabled = true;
    double grad_clip_norm = 1.0;
    std::string metrics_path; // per-epoch CSV appended here when non-empty

    void validate() const;
};

// Adam moments; shapes mirror the parameter tree.
struct OptimizerState {
    ParameterTree m, v;
    long step = 0;

    static OptimizerState like(const ParameterTree& params);
};

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8) with bias correction.
void adam_step(ParameterTree& params, const ParameterTree& grads, OptimizerState& state,
               double lr);

// Eq.-(3)-style sampling probabilities: w_i = bias - log10(norm_i), clamped
// below at 1e-6; P_i = w_i / sum w_j.
std::vector<double> naos_probabilities(const std::vector<double>& norms, double bias);

// I.i.d. sampling with replacement from the given distribution.
std::vector<std::size_t> naos_sample(const std::vector<double>& probabilities, std::size_t count,
                                     Rng& rng);

// Mean absolute difference over all scalars of both planes.
double l1_loss(const ChannelGrid& pred, const ChannelGrid& truth);

struct SplitIndices {
    std::vector<std::size_t> train, val;
};
// Seeded shuffle, then split; disjoint and exhaustive.
SplitIndices split_dataset(std::size_t num_records, double ratio, std::uint64_t seed);

struct EpochMetrics {
    int epoch = 0;
    double train_l1 = 0.0;
    double val_nmse_db = 0.0;
    double wall_seconds = 0.0;
};

struct FitResult {
    std::vector<EpochMetrics> metrics;
    double best_val_nmse_db = 0.0;
    int best_epoch = -1;
};

// Trains the model in place; on return the model carries the weights of the
// best-validation epoch. Batch gradients are accumulated over fixed-size
// sample chunks in index order, so results do not depend on the thread count.
FitResult fit(DlrModel& model, const Dataset& dataset, const TrainConfig& config);

// Mean linear NMSE of dlr_forward over the given records, in dB.
double validation_nmse_db(const DlrModel& model, const Dataset& dataset,
                          const std::vector<std::size_t>& indices, bool use_csif);

} // namespace dlr

#endif
