#include "dlr/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace dlr {

void TrainConfig::validate() const {
    require(learning_rate > 0.0, ErrorCode::invalid_argument, "train: learning rate must be > 0");
    require(batch_size >= 1, ErrorCode::invalid_argument, "train: batch size must be >= 1");
    require(epochs >= 0, ErrorCode::invalid_argument, "train: negative epochs");
    require(split_ratio > 0.0 && split_ratio < 1.0, ErrorCode::invalid_argument,
            "train: split ratio must be in (0, 1)");
    require(grad_clip_norm > 0.0, ErrorCode::invalid_argument, "train: bad grad clip norm");
}

OptimizerState OptimizerState::like(const ParameterTree& params) {
    OptimizerState s;
    s.m = params.like_zeros();
    s.v = params.like_zeros();
    return s;
}

void adam_step(ParameterTree& params, const ParameterTree& grads, OptimizerState& state,
               double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    require(params.size() == grads.size(), ErrorCode::shape_mismatch,
            "adam: gradient tree does not mirror parameters");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& [name, p] = params.entry(i);
        const Tensor& g = grads.get(name);
        require(g.shape == p.shape, ErrorCode::shape_mismatch, "adam: shape mismatch at " + name);
        Tensor& m = state.m.get(name);
        Tensor& v = state.v.get(name);
        for (std::size_t j = 0; j < p.numel(); ++j) {
            const double gj = g.data[j];
            const double mj = beta1 * m.data[j] + (1.0 - beta1) * gj;
            const double vj = beta2 * v.data[j] + (1.0 - beta2) * gj * gj;
            m.data[j] = static_cast<float>(mj);
            v.data[j] = static_cast<float>(vj);
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            p.data[j] = static_cast<float>(p.data[j] - lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

std::vector<double> naos_probabilities(const std::vector<double>& norms, double bias) {
    require(!norms.empty(), ErrorCode::invalid_argument, "naos: empty norm list");
    constexpr double kWeightFloor = 1e-6;
    std::vector<double> w(norms.size());
    double total = 0.0;
    for (std::size_t i = 0; i < norms.size(); ++i) {
        require(norms[i] > 0.0, ErrorCode::invalid_argument, "naos: non-positive norm");
        w[i] = std::max(bias - std::log10(norms[i]), kWeightFloor);
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

std::vector<std::size_t> naos_sample(const std::vector<double>& probabilities, std::size_t count,
                                     Rng& rng) {
    std::vector<double> cdf(probabilities.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        acc += probabilities[i];
        cdf[i] = acc;
    }
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        out[i] = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                       probabilities.size() - 1);
    }
    return out;
}

double l1_loss(const ChannelGrid& pred, const ChannelGrid& truth) {
    require(pred.freq_bins() == truth.freq_bins() && pred.time_slots() == truth.time_slots(),
            ErrorCode::shape_mismatch, "l1_loss: grid shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.re.numel(); ++i) {
        acc += std::abs(pred.re.data[i] - truth.re.data[i]);
        acc += std::abs(pred.im.data[i] - truth.im.data[i]);
    }
    return acc / static_cast<double>(2 * pred.re.numel());
}

SplitIndices split_dataset(std::size_t num_records, double ratio, std::uint64_t seed) {
    require(num_records > 0, ErrorCode::invalid_argument, "split: empty dataset");
    require(ratio > 0.0 && ratio < 1.0, ErrorCode::invalid_argument, "split: bad ratio");
    std::vector<std::size_t> idx(num_records);
    for (std::size_t i = 0; i < num_records; ++i) idx[i] = i;
    Rng rng(splitmix64(seed ^ 0x53504c49ull)); // "SPLI"
    for (std::size_t i = num_records - 1; i > 0; --i)
        std::swap(idx[i], idx[rng.index(i + 1)]);
    std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(num_records)));
    n_train = std::min(std::max<std::size_t>(n_train, 1), num_records - 1);
    SplitIndices s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return s;
}

double validation_nmse_db(const DlrModel& model, const Dataset& dataset,
                          const std::vector<std::size_t>& indices, bool use_csif) {
    require(!indices.empty(), ErrorCode::invalid_argument, "validation: no records");
    std::vector<double> nmse_lin(indices.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(indices.size()); ++i) {
        const SampleRecord& rec = dataset.records[indices[static_cast<std::size_t>(i)]];
        const ChannelGrid est = dlr_forward(model, rec.dmrs_noisy, rec.snr_db, use_csif);
        nmse_lin[static_cast<std::size_t>(i)] = nmse(rec.truth, est);
    }
    double mean = 0.0;
    for (double v : nmse_lin) mean += v;
    mean /= static_cast<double>(nmse_lin.size());
    return nmse_to_db(mean);
}

namespace {

struct GradPair {
    ParameterTree dn, rf;
};

// One sample's backward pass accumulated into the chunk gradients.
double sample_gradient(const DlrModel& model, const SampleRecord& rec, bool use_csif,
                       GradPair& acc) {
    const CsifFeatures csif = use_csif ? stats(rec.dmrs_noisy, rec.snr_db) : CsifFeatures{};
    const double scale = std::max(dmrs_rms(rec.dmrs_noisy), model.norm_epsilon);

    TapeT<float> tape;
    const TensorT<float> dmrs = dmrs_to_tensor<float>(rec.dmrs_noisy);
    const TensorT<float> cs = csif_to_tensor<float>(csif);
    const TensorT<float> truth = grid_to_tensor<float>(rec.truth);
    const int dmrs_id = tape.leaf(&dmrs, false);
    const int cs_id = tape.leaf(&cs, false);
    BoundTree<float> dn(tape, model.denoise_weights, true);
    BoundTree<float> rf(tape, model.refine_weights, true);
    const PipelineNodes nodes =
        pipeline_loss_graph(tape, model.denoise_config, model.refine_config, model.plan, dn, rf,
                            dmrs_id, cs_id, static_cast<float>(scale), truth);
    tape.backward(nodes.loss);

    for (const auto& [name, id] : dn.ids()) {
        Tensor& dst = acc.dn.get(name);
        const Tensor& g = tape.grad(id);
        for (std::size_t j = 0; j < dst.numel(); ++j) dst.data[j] += g.data[j];
    }
    for (const auto& [name, id] : rf.ids()) {
        Tensor& dst = acc.rf.get(name);
        const Tensor& g = tape.grad(id);
        for (std::size_t j = 0; j < dst.numel(); ++j) dst.data[j] += g.data[j];
    }
    return static_cast<double>(tape.value(nodes.loss).at(0));
}

void add_tree(ParameterTree& dst, const ParameterTree& src, float w) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
        auto& [name, t] = dst.entry(i);
        const Tensor& s = src.get(name);
        for (std::size_t j = 0; j < t.numel(); ++j) t.data[j] += w * s.data[j];
    }
}

double tree_sq_norm(const ParameterTree& t) {
    double acc = 0.0;
    for (const auto& [name, ten] : t)
        for (float v : ten.data) acc += static_cast<double>(v) * v;
    return acc;
}

void scale_tree(ParameterTree& t, float w) {
    for (auto& [name, ten] : t)
        for (auto& v : ten.data) v *= w;
}

} // namespace

FitResult fit(DlrModel& model, const Dataset& dataset, const TrainConfig& config) {
    config.validate();
    require(!dataset.records.empty(), ErrorCode::invalid_argument, "fit: empty dataset");

    FitResult result;
    if (config.epochs == 0) return result;

    const SplitIndices split =
        split_dataset(dataset.records.size(), config.split_ratio, config.seed);
    const std::size_t n_train = split.train.size();

    // Sampling distribution over the training subset.
    std::vector<double> probs;
    if (config.naos_enabled) {
        std::vector<double> norms(n_train);
        for (std::size_t i = 0; i < n_train; ++i)
            norms[i] = frob_norm(dataset.records[split.train[i]].truth);
        probs = naos_probabilities(norms, config.naos_bias);
    } else {
        probs.assign(n_train, 1.0 / static_cast<double>(n_train));
    }

    OptimizerState dn_state = OptimizerState::like(model.denoise_weights);
    OptimizerState rf_state = OptimizerState::like(model.refine_weights);

    const int batches_per_epoch =
        std::max(1, static_cast<int>(n_train / static_cast<std::size_t>(config.batch_size)));
    constexpr int kChunk = 8; // gradient accumulation granularity (determinism unit)
    const int n_chunks =
        (config.batch_size + kChunk - 1) / kChunk;
    std::vector<GradPair> chunk_grads;
    for (int c = 0; c < n_chunks; ++c)
        chunk_grads.push_back({model.denoise_weights.like_zeros(), model.refine_weights.like_zeros()});
    std::vector<double> chunk_loss(static_cast<std::size_t>(n_chunks));

    GradPair total{model.denoise_weights.like_zeros(), model.refine_weights.like_zeros()};

    std::ofstream metrics_out;
    if (!config.metrics_path.empty()) {
        const bool existed = static_cast<bool>(std::ifstream(config.metrics_path));
        metrics_out.open(config.metrics_path, std::ios::app);
        require(metrics_out.good(), ErrorCode::io_failure,
                "fit: cannot open metrics log " + config.metrics_path);
        if (!existed) metrics_out << "epoch,train_l1,val_nmse_db,wall_seconds\n";
    }

    ParameterTree best_dn = model.denoise_weights;
    ParameterTree best_rf = model.refine_weights;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        // Reseeded per epoch from the config seed alone, so a frozen
        // optimizer sees identical batches every epoch.
        Rng sampler(splitmix64(config.seed ^ 0x53414d50ull)); // "SAMP"
        double epoch_loss = 0.0;

        for (int b = 0; b < batches_per_epoch; ++b) {
            const std::vector<std::size_t> picks =
                naos_sample(probs, static_cast<std::size_t>(config.batch_size), sampler);

#pragma omp parallel for schedule(static, 1)
            for (int c = 0; c < n_chunks; ++c) {
                GradPair& acc = chunk_grads[static_cast<std::size_t>(c)];
                scale_tree(acc.dn, 0.0f);
                scale_tree(acc.rf, 0.0f);
                double loss = 0.0;
                const int lo = c * kChunk;
                const int hi = std::min(config.batch_size, lo + kChunk);
                for (int i = lo; i < hi; ++i) {
                    const SampleRecord& rec =
                        dataset.records[split.train[picks[static_cast<std::size_t>(i)]]];
                    loss += sample_gradient(model, rec, config.csif_enabled, acc);
                }
                chunk_loss[static_cast<std::size_t>(c)] = loss;
            }

            const float inv_batch = 1.0f / static_cast<float>(config.batch_size);
            scale_tree(total.dn, 0.0f);
            scale_tree(total.rf, 0.0f);
            double batch_loss = 0.0;
            for (int c = 0; c < n_chunks; ++c) {
                add_tree(total.dn, chunk_grads[static_cast<std::size_t>(c)].dn, inv_batch);
                add_tree(total.rf, chunk_grads[static_cast<std::size_t>(c)].rf, inv_batch);
                batch_loss += chunk_loss[static_cast<std::size_t>(c)];
            }
            batch_loss /= static_cast<double>(config.batch_size);
            require(std::isfinite(batch_loss), ErrorCode::numeric_failure,
                    "fit: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(b));
            epoch_loss += batch_loss;

            const double gnorm = std::sqrt(tree_sq_norm(total.dn) + tree_sq_norm(total.rf));
            if (gnorm > config.grad_clip_norm) {
                const float f = static_cast<float>(config.grad_clip_norm / gnorm);
                scale_tree(total.dn, f);
                scale_tree(total.rf, f);
            }
            adam_step(model.denoise_weights, total.dn, dn_state, config.learning_rate);
            adam_step(model.refine_weights, total.rf, rf_state, config.learning_rate);
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.train_l1 = epoch_loss / batches_per_epoch;
        em.val_nmse_db = validation_nmse_db(model, dataset, split.val, config.csif_enabled);
        em.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.metrics.push_back(em);
        if (metrics_out.is_open()) {
            metrics_out << em.epoch << ',' << em.train_l1 << ',' << em.val_nmse_db << ','
                        << em.wall_seconds << '\n';
            metrics_out.flush();
        }
        if (em.val_nmse_db < best_val) {
            best_val = em.val_nmse_db;
            best_epoch = epoch;
            best_dn = model.denoise_weights;
            best_rf = model.refine_weights;
        }
    }

    model.denoise_weights = std::move(best_dn);
    model.refine_weights = std::move(best_rf);
    result.best_val_nmse_db = best_val;
    result.best_epoch = best_epoch;
    return result;
}

} // namespace dlr
