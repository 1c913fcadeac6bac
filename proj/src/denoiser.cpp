#include "dlr/denoiser.hpp"

namespace dlr {

void DenoiseConfig::validate(int pilot_bins, int pilot_slots) const {
    require(dim > 0 && pilot_bins > 0 && pilot_slots > 0, ErrorCode::invalid_argument,
            "denoise config: non-positive sizes");
    require(pilot_bins % 4 == 0, ErrorCode::invalid_argument,
            "denoise config: pilot bins must divide by 4 for the two down-stages");
    for (int s = 0; s < 4; ++s) {
        const int w = stage_width(pilot_bins, s);
        require(windows[s] >= 1 && w % windows[s] == 0, ErrorCode::invalid_argument,
                "denoise config: stage " + std::to_string(s) + " width " + std::to_string(w) +
                    " not divisible by window " + std::to_string(windows[s]));
        require(heads[s] >= 1 && stage_dim(s) % heads[s] == 0, ErrorCode::invalid_argument,
                "denoise config: stage dim not divisible by heads");
        require(se_reduction >= 1 && stage_dim(s) % se_reduction == 0,
                ErrorCode::invalid_argument, "denoise config: stage dim not divisible by SE reduction");
    }
}

namespace {
std::string stage_block_prefix(int stage, int block) {
    return "dn.s" + std::to_string(stage) + ".b" + std::to_string(block) + ".";
}

void add_dn_block_specs(std::vector<ParamSpec>& out, const std::string& p, int d, int r) {
    out.push_back({p + "ln.g", {d}, ParamKind::norm_scale, 0});
    out.push_back({p + "ln.b", {d}, ParamKind::norm_offset, 0});
    for (const char* n : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
        out.push_back({p + n, {d, d}, ParamKind::weight, d});
    for (const char* n : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
        out.push_back({p + n, {d}, ParamKind::bias, 0});
    out.push_back({p + "se.w1", {d / r, d}, ParamKind::weight, d});
    out.push_back({p + "se.b1", {d / r}, ParamKind::bias, 0});
    out.push_back({p + "se.w2", {d, d / r}, ParamKind::weight, d / r});
    out.push_back({p + "se.b2", {d}, ParamKind::bias, 0});
    out.push_back({p + "dsc.dw", {d, 3}, ParamKind::weight, 3});
    out.push_back({p + "dsc.db", {d}, ParamKind::bias, 0});
    out.push_back({p + "dsc.pw", {d, d, 1}, ParamKind::weight, d});
    out.push_back({p + "dsc.pb", {d}, ParamKind::bias, 0});
}
} // namespace

std::vector<ParamSpec> denoise_param_specs(const DenoiseConfig& cfg, int pilot_bins,
                                           int pilot_slots) {
    cfg.validate(pilot_bins, pilot_slots);
    const int in_feat = 2 * pilot_slots + 3; // re/im x slots + csif
    const int out_feat = 2 * pilot_slots;
    std::vector<ParamSpec> specs;
    specs.push_back({"dn.in_proj.w", {cfg.dim, in_feat, 1}, ParamKind::weight, in_feat});
    specs.push_back({"dn.in_proj.b", {cfg.dim}, ParamKind::bias, 0});
    for (int s = 0; s < 4; ++s)
        for (int b = 0; b < 2; ++b)
            add_dn_block_specs(specs, stage_block_prefix(s, b), cfg.stage_dim(s),
                               cfg.se_reduction);
    specs.push_back({"dn.down0.w", {2 * cfg.dim, cfg.dim, 4}, ParamKind::weight, cfg.dim * 4});
    specs.push_back({"dn.down0.b", {2 * cfg.dim}, ParamKind::bias, 0});
    specs.push_back({"dn.down1.w", {4 * cfg.dim, 2 * cfg.dim, 4}, ParamKind::weight,
                     2 * cfg.dim * 4});
    specs.push_back({"dn.down1.b", {4 * cfg.dim}, ParamKind::bias, 0});
    // transposed conv weights are [Cin, Cout, K]
    specs.push_back({"dn.up0.w", {4 * cfg.dim, 2 * cfg.dim, 2}, ParamKind::weight,
                     4 * cfg.dim * 2});
    specs.push_back({"dn.up0.b", {2 * cfg.dim}, ParamKind::bias, 0});
    specs.push_back({"dn.up1.w", {2 * cfg.dim, cfg.dim, 2}, ParamKind::weight, 2 * cfg.dim * 2});
    specs.push_back({"dn.up1.b", {cfg.dim}, ParamKind::bias, 0});
    specs.push_back({"dn.out_proj.w", {out_feat, cfg.dim, 1}, ParamKind::weight, cfg.dim});
    specs.push_back({"dn.out_proj.b", {out_feat}, ParamKind::bias, 0});
    return specs;
}

template <typename T>
int wsa_sublayer_graph(TapeT<T>& tape, int x, const BoundTree<T>& p, const std::string& prefix,
                       int win, int heads) {
    const int ln = tape.layer_norm_cols(x, p[prefix + "ln.g"], p[prefix + "ln.b"]);
    const int att = tape.mhsa_window(ln, p[prefix + "attn.wq"], p[prefix + "attn.bq"],
                                     p[prefix + "attn.wk"], p[prefix + "attn.bk"],
                                     p[prefix + "attn.wv"], p[prefix + "attn.bv"],
                                     p[prefix + "attn.wo"], p[prefix + "attn.bo"], heads, win);
    return tape.add(x, att);
}

template <typename T>
int dn_block_graph(TapeT<T>& tape, int x, const BoundTree<T>& p, const std::string& prefix,
                   int win, int heads) {
    const int y = wsa_sublayer_graph(tape, x, p, prefix, win, heads);
    // SE recalibration over the merged map
    const int pooled = tape.global_avg_pool(y);
    const int h1 = tape.relu(tape.linear(pooled, p[prefix + "se.w1"], p[prefix + "se.b1"]));
    const int gates = tape.sigmoid(tape.linear(h1, p[prefix + "se.w2"], p[prefix + "se.b2"]));
    const int z = tape.mul_colvec(y, gates);
    // depthwise separable conv, residual to its input
    const int dw = tape.depthwise1d(z, p[prefix + "dsc.dw"], p[prefix + "dsc.db"], 1);
    const int pw = tape.conv1d(dw, p[prefix + "dsc.pw"], p[prefix + "dsc.pb"], 1, 0);
    return tape.add(z, pw);
}

template <typename T>
int denoise_correction_graph(TapeT<T>& tape, int dmrs_node, int csif_node, const BoundTree<T>& p,
                             const DenoiseConfig& cfg) {
    const TensorT<T>& dmrs = tape.value(dmrs_node);
    const int bins = dmrs.dim(1), slots = dmrs.dim(2);
    cfg.validate(bins, slots);

    const int tokens = tape.dmrs_to_tokens(dmrs_node);
    const int cs = tape.broadcast_cols(csif_node, bins);
    const int input = tape.concat0({tokens, cs});
    int h = tape.conv1d(input, p["dn.in_proj.w"], p["dn.in_proj.b"], 1, 0);

    auto stage = [&](int node, int s) {
        node = dn_block_graph(tape, node, p, stage_block_prefix(s, 0), cfg.windows[s],
                              cfg.heads[s]);
        return dn_block_graph(tape, node, p, stage_block_prefix(s, 1), cfg.windows[s],
                              cfg.heads[s]);
    };

    const int s1 = stage(h, 0);
    const int d1 = tape.conv1d(s1, p["dn.down0.w"], p["dn.down0.b"], 2, 1);
    const int s2 = stage(d1, 1);
    const int d2 = tape.conv1d(s2, p["dn.down1.w"], p["dn.down1.b"], 2, 1);
    const int s3 = stage(d2, 2);
    const int u1 = tape.add(tape.tconv1d(s3, p["dn.up0.w"], p["dn.up0.b"], 2), s2);
    const int s4 = stage(u1, 3);
    const int u2 = tape.add(tape.tconv1d(s4, p["dn.up1.w"], p["dn.up1.b"], 2), s1);
    const int out = tape.conv1d(u2, p["dn.out_proj.w"], p["dn.out_proj.b"], 1, 0);
    return tape.tokens_to_dmrs(out, 2, slots);
}

DmrsGrid denoise_forward(const DenoiseConfig& cfg, const ParameterTree& weights,
                         const DmrsGrid& dmrs_norm, const CsifFeatures& csif) {
    TapeT<float> tape;
    const TensorT<float> x = dmrs_to_tensor<float>(dmrs_norm);
    const TensorT<float> cs = csif_to_tensor<float>(csif);
    const int x_id = tape.leaf(&x, false);
    const int cs_id = tape.leaf(&cs, false);
    BoundTree<float> bound(tape, weights, false);
    const int corr = denoise_correction_graph(tape, x_id, cs_id, bound, cfg);
    // residual add on the original input, so a zero correction is a bit-exact
    // passthrough
    const TensorT<float>& cv = tape.value(corr);
    DmrsGrid out = dmrs_norm;
    for (int k = 0; k < out.bins(); ++k)
        for (int s = 0; s < out.slots(); ++s) {
            out.re.at(k, s) += static_cast<double>(cv.at(0, k, s));
            out.im.at(k, s) += static_cast<double>(cv.at(1, k, s));
        }
    return out;
}

// Statistics vector as the networks consume it. The variance is log-
// compressed and squashed into (-1, 1): shadowing spreads the raw variance
// over orders of magnitude, which either swamps the unit-scale activations
// (raw) or invites wild extrapolation on rare extreme-norm samples
// (unbounded log). snr_db is scaled into the same range.
template <typename T>
TensorT<T> csif_to_tensor(const CsifFeatures& csif) {
    TensorT<T> v({3});
    v.at(0) = static_cast<T>(csif.mean);
    v.at(1) = static_cast<T>(std::tanh(0.5 * std::log10(csif.variance + 1e-12)));
    v.at(2) = static_cast<T>(csif.snr_db / 20.0);
    return v;
}

template int wsa_sublayer_graph<float>(TapeT<float>&, int, const BoundTree<float>&,
                                       const std::string&, int, int);
template int wsa_sublayer_graph<double>(TapeT<double>&, int, const BoundTree<double>&,
                                        const std::string&, int, int);
template int dn_block_graph<float>(TapeT<float>&, int, const BoundTree<float>&,
                                   const std::string&, int, int);
template int dn_block_graph<double>(TapeT<double>&, int, const BoundTree<double>&,
                                    const std::string&, int, int);
template int denoise_correction_graph<float>(TapeT<float>&, int, int, const BoundTree<float>&,
                                             const DenoiseConfig&);
template int denoise_correction_graph<double>(TapeT<double>&, int, int, const BoundTree<double>&,
                                              const DenoiseConfig&);
template TensorT<float> csif_to_tensor<float>(const CsifFeatures&);
template TensorT<double> csif_to_tensor<double>(const CsifFeatures&);

} // namespace dlr
