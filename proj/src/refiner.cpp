#include "dlr/refiner.hpp"

#include "dlr/denoiser.hpp" // csif_to_tensor

namespace dlr {

void RefineConfig::validate(int freq_bins, int time_slots) const {
    require(ch > 0 && levels >= 1, ErrorCode::invalid_argument, "refine config: bad sizes");
    require(time_pad_to >= time_slots, ErrorCode::invalid_argument,
            "refine config: pad target below time width");
    const int div = 1 << levels;
    require(freq_bins % div == 0 && time_pad_to % div == 0, ErrorCode::invalid_argument,
            "refine config: padded dims must divide by 2^levels");
    require(ca_reduction >= 1, ErrorCode::invalid_argument, "refine config: bad CA reduction");
}

namespace {
int ca_hidden(int c, int reduction) { return std::max(4, c / reduction); }

void add_rf_block_specs(std::vector<ParamSpec>& out, const std::string& p, int c_in, int c_out,
                        int reduction) {
    out.push_back({p + "c1.w", {c_out, c_in, 3, 3}, ParamKind::weight, c_in * 9});
    out.push_back({p + "c1.b", {c_out}, ParamKind::bias, 0});
    out.push_back({p + "c2.w", {c_out, c_out, 3, 3}, ParamKind::weight, c_out * 9});
    out.push_back({p + "c2.b", {c_out}, ParamKind::bias, 0});
    const int h = ca_hidden(c_out, reduction);
    const int desc = 2 * c_out + 3;
    out.push_back({p + "ca.w1", {h, desc}, ParamKind::weight, desc});
    out.push_back({p + "ca.b1", {h}, ParamKind::bias, 0});
    out.push_back({p + "ca.w2", {c_out, h}, ParamKind::weight, h});
    out.push_back({p + "ca.b2", {c_out}, ParamKind::bias, 0});
}
} // namespace

std::vector<ParamSpec> refine_param_specs(const RefineConfig& cfg) {
    std::vector<ParamSpec> specs;
    int c_in = 2;
    for (int l = 0; l < cfg.levels; ++l) {
        add_rf_block_specs(specs, "rf.enc" + std::to_string(l) + ".", c_in,
                           cfg.level_channels(l), cfg.ca_reduction);
        c_in = cfg.level_channels(l);
    }
    add_rf_block_specs(specs, "rf.bott.", c_in, cfg.level_channels(cfg.levels),
                       cfg.ca_reduction);
    int c_up = cfg.level_channels(cfg.levels);
    for (int l = cfg.levels - 1; l >= 0; --l) {
        const int c_skip = cfg.level_channels(l);
        add_rf_block_specs(specs, "rf.dec" + std::to_string(l) + ".", c_up + c_skip, c_skip,
                           cfg.ca_reduction);
        c_up = c_skip;
    }
    specs.push_back({"rf.final.w", {2, cfg.ch, 1, 1}, ParamKind::weight, cfg.ch});
    specs.push_back({"rf.final.b", {2}, ParamKind::bias, 0});
    return specs;
}

template <typename T>
int rf_block_graph(TapeT<T>& tape, int x, int csif_node, const BoundTree<T>& p,
                   const std::string& prefix) {
    int h = tape.relu(tape.conv2d(x, p[prefix + "c1.w"], p[prefix + "c1.b"], 1));
    h = tape.relu(tape.conv2d(h, p[prefix + "c2.w"], p[prefix + "c2.b"], 1));
    const int avg = tape.global_avg_pool(h);
    const int mx = tape.global_max_pool(h);
    const int desc = tape.concat0({avg, mx, csif_node});
    const int g1 = tape.relu(tape.linear(desc, p[prefix + "ca.w1"], p[prefix + "ca.b1"]));
    const int gates = tape.sigmoid(tape.linear(g1, p[prefix + "ca.w2"], p[prefix + "ca.b2"]));
    return tape.mul_colvec(h, gates);
}

template <typename T>
int refine_correction_graph(TapeT<T>& tape, int coarse_node, int csif_node,
                            const BoundTree<T>& p, const RefineConfig& cfg,
                            RefineProbe* probe) {
    const TensorT<T>& coarse = tape.value(coarse_node);
    require(coarse.rank() == 3 && coarse.dim(0) == 2, ErrorCode::shape_mismatch,
            "refine: expected [2, F, T] input");
    const int time = coarse.dim(2);
    cfg.validate(coarse.dim(1), time);

    const int pad_total = cfg.time_pad_to - time;
    const int pad_left = pad_total / 2, pad_right = pad_total - pad_left;
    int x = pad_total > 0 ? tape.replicate_pad_w(coarse_node, pad_left, pad_right) : coarse_node;

    std::vector<int> skips;
    for (int l = 0; l < cfg.levels; ++l) {
        x = rf_block_graph(tape, x, csif_node, p, "rf.enc" + std::to_string(l) + ".");
        skips.push_back(x);
        x = tape.max_pool2d(x);
    }
    x = rf_block_graph(tape, x, csif_node, p, "rf.bott.");
    if (probe) {
        probe->bottleneck = x;
        probe->encoder = skips;
    }
    for (int l = cfg.levels - 1; l >= 0; --l) {
        x = tape.bilinear_up2(x);
        x = tape.concat0({x, skips[static_cast<std::size_t>(l)]});
        x = rf_block_graph(tape, x, csif_node, p, "rf.dec" + std::to_string(l) + ".");
    }
    x = tape.conv2d(x, p["rf.final.w"], p["rf.final.b"], 0);
    if (pad_total > 0) x = tape.crop_w(x, pad_left, pad_right);
    return x;
}

ChannelGrid refine_forward(const RefineConfig& cfg, const ParameterTree& weights,
                           const ChannelGrid& coarse_norm, const CsifFeatures& csif) {
    TapeT<float> tape;
    const TensorT<float> x = grid_to_tensor<float>(coarse_norm);
    const TensorT<float> cs = csif_to_tensor<float>(csif);
    const int x_id = tape.leaf(&x, false);
    const int cs_id = tape.leaf(&cs, false);
    BoundTree<float> bound(tape, weights, false);
    const int corr = refine_correction_graph(tape, x_id, cs_id, bound, cfg);
    // residual add on the original input, so a zero correction is a bit-exact
    // passthrough
    const TensorT<float>& cv = tape.value(corr);
    ChannelGrid out = coarse_norm;
    for (int f = 0; f < out.freq_bins(); ++f)
        for (int t = 0; t < out.time_slots(); ++t) {
            out.re.at(f, t) += static_cast<double>(cv.at(0, f, t));
            out.im.at(f, t) += static_cast<double>(cv.at(1, f, t));
        }
    return out;
}

template int rf_block_graph<float>(TapeT<float>&, int, int, const BoundTree<float>&,
                                   const std::string&);
template int rf_block_graph<double>(TapeT<double>&, int, int, const BoundTree<double>&,
                                    const std::string&);
template int refine_correction_graph<float>(TapeT<float>&, int, int, const BoundTree<float>&,
                                            const RefineConfig&, RefineProbe*);
template int refine_correction_graph<double>(TapeT<double>&, int, int, const BoundTree<double>&,
                                             const RefineConfig&, RefineProbe*);

} // namespace dlr
