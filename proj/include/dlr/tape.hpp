#ifndef DLR_TAPE_HPP
#define DLR_TAPE_HPP

#include <deque>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "dlr/interp_plan.hpp"
#include "dlr/ops.hpp"
#include "dlr/tensor.hpp"

namespace dlr {

// Eager reverse-mode tape. Ops compute their value immediately and push a
// backward closure; backward() replays the closures in reverse. Leaves may
// reference external tensors (weights, inputs) so building a graph never
// copies the parameter set.
template <typename T>
class TapeT {
public:
    using Ten = TensorT<T>;

    int leaf(const Ten* external, bool requires_grad) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.val = external;
        n.requires_grad = requires_grad;
        return last();
    }

    int constant(Ten v) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.storage = std::move(v);
        n.val = &n.storage;
        n.requires_grad = false;
        return last();
    }

    const Ten& value(int id) const { return *nodes_[id].val; }
    Ten& grad(int id) { return nodes_[id].grad; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }

    // ---- arithmetic -------------------------------------------------------

    int add(int a, int b) {
        const Ten &xa = value(a), &xb = value(b);
        require(xa.same_shape(xb), ErrorCode::shape_mismatch,
                "add: " + shape_str(xa.shape) + " vs " + shape_str(xb.shape));
        Ten y = xa;
        for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] += xb.data[i];
        return emit(std::move(y), {a, b}, [this, a, b](const Ten& g) {
            accum(a, g);
            accum(b, g);
        });
    }

    // a + alpha * b
    int add_scaled(int a, int b, T alpha) {
        const Ten &xa = value(a), &xb = value(b);
        require(xa.same_shape(xb), ErrorCode::shape_mismatch, "add_scaled: shape mismatch");
        Ten y = xa;
        for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] += alpha * xb.data[i];
        return emit(std::move(y), {a, b}, [this, a, b, alpha](const Ten& g) {
            accum(a, g);
            if (nodes_[b].requires_grad) {
                Ten gb = g;
                for (auto& v : gb.data) v *= alpha;
                accum(b, gb);
            }
        });
    }

    int scale(int x, T alpha) {
        Ten y = value(x);
        for (auto& v : y.data) v *= alpha;
        return emit(std::move(y), {x}, [this, x, alpha](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten gx = g;
            for (auto& v : gx.data) v *= alpha;
            accum(x, gx);
        });
    }

    // x[C, ...] * gates[C], gates broadcast over the remaining axes
    int mul_colvec(int x, int gates) {
        const Ten& xv = value(x);
        const Ten& gv = value(gates);
        const int c = xv.dim(0);
        require(gv.rank() == 1 && gv.dim(0) == c, ErrorCode::shape_mismatch,
                "mul_colvec: gate " + shape_str(gv.shape) + " vs input " + shape_str(xv.shape));
        const std::size_t spatial = xv.numel() / c;
        Ten y = xv;
        for (int ci = 0; ci < c; ++ci) {
            const T g = gv.at(ci);
            T* row = y.ptr() + ci * spatial;
            for (std::size_t s = 0; s < spatial; ++s) row[s] *= g;
        }
        return emit(std::move(y), {x, gates}, [this, x, gates, c, spatial](const Ten& g) {
            const Ten& xv = value(x);
            const Ten& gv = value(gates);
            if (nodes_[x].requires_grad) {
                Ten gx(xv.shape);
                for (int ci = 0; ci < c; ++ci) {
                    const T gg = gv.at(ci);
                    const T* gr = g.ptr() + ci * spatial;
                    T* dst = gx.ptr() + ci * spatial;
                    for (std::size_t s = 0; s < spatial; ++s) dst[s] = gr[s] * gg;
                }
                accum(x, gx);
            }
            if (nodes_[gates].requires_grad) {
                Ten gg(gv.shape);
                for (int ci = 0; ci < c; ++ci) {
                    const T* gr = g.ptr() + ci * spatial;
                    const T* xr = xv.ptr() + ci * spatial;
                    T acc = T(0);
                    for (std::size_t s = 0; s < spatial; ++s) acc += gr[s] * xr[s];
                    gg.at(ci) = acc;
                }
                accum(gates, gg);
            }
        });
    }

    int broadcast_cols(int v, int width) {
        const Ten& xv = value(v);
        require(xv.rank() == 1, ErrorCode::shape_mismatch, "broadcast_cols: bad rank");
        const int c = xv.dim(0);
        Ten y({c, width});
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < width; ++j) y.at(i, j) = xv.at(i);
        return emit(std::move(y), {v}, [this, v, c, width](const Ten& g) {
            if (!nodes_[v].requires_grad) return;
            Ten gv({c});
            for (int i = 0; i < c; ++i) {
                T acc = T(0);
                for (int j = 0; j < width; ++j) acc += g.at(i, j);
                gv.at(i) = acc;
            }
            accum(v, gv);
        });
    }

    // Concatenate along axis 0; trailing dims must match.
    int concat0(std::vector<int> parts) {
        require(!parts.empty(), ErrorCode::invalid_argument, "concat0: empty");
        const Ten& first = value(parts[0]);
        std::vector<int> shape = first.shape;
        int c_total = 0;
        for (int p : parts) {
            const Ten& t = value(p);
            require(t.rank() == first.rank(), ErrorCode::shape_mismatch, "concat0: rank mismatch");
            for (int d = 1; d < first.rank(); ++d)
                require(t.dim(d) == first.dim(d), ErrorCode::shape_mismatch,
                        "concat0: trailing dims differ");
            c_total += t.dim(0);
        }
        shape[0] = c_total;
        Ten y(shape);
        std::size_t off = 0;
        for (int p : parts) {
            const Ten& t = value(p);
            std::copy(t.data.begin(), t.data.end(), y.data.begin() + off);
            off += t.numel();
        }
        return emit(std::move(y), parts, [this, parts](const Ten& g) {
            std::size_t off = 0;
            for (int p : parts) {
                const Ten& t = value(p);
                if (nodes_[p].requires_grad) {
                    Ten gp(t.shape);
                    std::copy(g.data.begin() + off, g.data.begin() + off + t.numel(),
                              gp.data.begin());
                    accum(p, gp);
                }
                off += t.numel();
            }
        });
    }

    // ---- neural ops -------------------------------------------------------

    int conv1d(int x, int w, int b, int stride, int pad) {
        Ten y = ops::conv1d_forward(value(x), value(w), value(b), stride, pad);
        return emit(std::move(y), {x, w, b}, [this, x, w, b, stride, pad](const Ten& g) {
            Ten dx(value(x).shape), dw(value(w).shape), db(value(b).shape);
            ops::conv1d_backward(value(x), value(w), g, stride, pad, dx, dw, db);
            accum(x, dx);
            accum(w, dw);
            accum(b, db);
        });
    }

    int tconv1d(int x, int w, int b, int stride) {
        Ten y = ops::tconv1d_forward(value(x), value(w), value(b), stride);
        return emit(std::move(y), {x, w, b}, [this, x, w, b, stride](const Ten& g) {
            Ten dx(value(x).shape), dw(value(w).shape), db(value(b).shape);
            ops::tconv1d_backward(value(x), value(w), g, stride, dx, dw, db);
            accum(x, dx);
            accum(w, dw);
            accum(b, db);
        });
    }

    int depthwise1d(int x, int w, int b, int pad) {
        Ten y = ops::depthwise1d_forward(value(x), value(w), value(b), pad);
        return emit(std::move(y), {x, w, b}, [this, x, w, b, pad](const Ten& g) {
            Ten dx(value(x).shape), dw(value(w).shape), db(value(b).shape);
            ops::depthwise1d_backward(value(x), value(w), g, pad, dx, dw, db);
            accum(x, dx);
            accum(w, dw);
            accum(b, db);
        });
    }

    int conv2d(int x, int w, int b, int pad) {
        Ten y = ops::conv2d_forward(value(x), value(w), value(b), pad);
        return emit(std::move(y), {x, w, b}, [this, x, w, b, pad](const Ten& g) {
            Ten dx(value(x).shape), dw(value(w).shape), db(value(b).shape);
            ops::conv2d_backward(value(x), value(w), g, pad, dx, dw, db);
            accum(x, dx);
            accum(w, dw);
            accum(b, db);
        });
    }

    int linear(int x, int w, int b) {
        Ten y = ops::linear_forward(value(x), value(w), value(b));
        return emit(std::move(y), {x, w, b}, [this, x, w, b](const Ten& g) {
            Ten dx(value(x).shape), dw(value(w).shape), db(value(b).shape);
            ops::linear_backward(value(x), value(w), g, dx, dw, db);
            accum(x, dx);
            accum(w, dw);
            accum(b, db);
        });
    }

    int layer_norm_cols(int x, int gamma, int beta) {
        auto mean = std::make_shared<std::vector<T>>();
        auto inv_std = std::make_shared<std::vector<T>>();
        Ten y = ops::layer_norm_cols_forward(value(x), value(gamma), value(beta), *mean, *inv_std);
        return emit(std::move(y), {x, gamma, beta},
                    [this, x, gamma, beta, mean, inv_std](const Ten& g) {
                        Ten dx(value(x).shape), dgamma(value(gamma).shape), dbeta(value(beta).shape);
                        ops::layer_norm_cols_backward(value(x), value(gamma), *mean, *inv_std, g,
                                                      dx, dgamma, dbeta);
                        accum(x, dx);
                        accum(gamma, dgamma);
                        accum(beta, dbeta);
                    });
    }

    int relu(int x) {
        Ten y = ops::relu_forward(value(x));
        return emit(std::move(y), {x}, [this, x](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::relu_backward(value(x), g, dx);
            accum(x, dx);
        });
    }

    int gelu(int x) {
        Ten y = ops::gelu_forward(value(x));
        return emit(std::move(y), {x}, [this, x](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::gelu_backward(value(x), g, dx);
            accum(x, dx);
        });
    }

    int sigmoid(int x) {
        Ten y = ops::sigmoid_forward(value(x));
        const int id = emit(std::move(y), {x}, [](const Ten&) {});
        // sigmoid backward needs y; rebind the closure with the output id
        nodes_[id].back = [this, x, id](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::sigmoid_backward(value(id), g, dx);
            accum(x, dx);
        };
        return id;
    }

    int softmax_rows(int x) {
        Ten y = ops::softmax_rows_forward(value(x));
        const int id = emit(std::move(y), {x}, [](const Ten&) {});
        nodes_[id].back = [this, x, id](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::softmax_rows_backward(value(id), g, dx);
            accum(x, dx);
        };
        return id;
    }

    int max_pool2d(int x) {
        auto argmax = std::make_shared<std::vector<int>>();
        Ten y = ops::max_pool2d_forward(value(x), *argmax);
        return emit(std::move(y), {x}, [this, x, argmax](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::max_pool2d_backward(g, *argmax, value(x).shape, dx);
            accum(x, dx);
        });
    }

    int bilinear_up2(int x) {
        Ten y = ops::bilinear_up2_forward(value(x));
        return emit(std::move(y), {x}, [this, x](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::bilinear_up2_backward(g, value(x).shape, dx);
            accum(x, dx);
        });
    }

    int global_avg_pool(int x) {
        Ten y = ops::global_avg_pool_forward(value(x));
        return emit(std::move(y), {x}, [this, x](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::global_avg_pool_backward(g, value(x).shape, dx);
            accum(x, dx);
        });
    }

    int global_max_pool(int x) {
        auto argmax = std::make_shared<std::vector<int>>();
        Ten y = ops::global_max_pool_forward(value(x), *argmax);
        return emit(std::move(y), {x}, [this, x, argmax](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(value(x).shape);
            ops::global_max_pool_backward(g, *argmax, value(x).shape, dx);
            accum(x, dx);
        });
    }

    int mhsa_window(int x, int wq, int bq, int wk, int bk, int wv, int bv, int wo, int bo,
                    int heads, int win) {
        auto saved = std::make_shared<ops::MhsaSaved<T>>();
        ops::MhsaWeights<T> weights{&value(wq), &value(bq), &value(wk), &value(bk),
                                    &value(wv), &value(bv), &value(wo), &value(bo)};
        Ten y = ops::mhsa_window_forward(value(x), weights, heads, win, *saved);
        return emit(std::move(y), {x, wq, bq, wk, bk, wv, bv, wo, bo},
                    [this, x, wq, bq, wk, bk, wv, bv, wo, bo, heads, win, saved](const Ten& g) {
                        ops::MhsaWeights<T> weights{&value(wq), &value(bq), &value(wk),
                                                    &value(bk), &value(wv), &value(bv),
                                                    &value(wo), &value(bo)};
                        Ten dx(value(x).shape);
                        Ten dwq(value(wq).shape), dbq(value(bq).shape), dwk(value(wk).shape),
                            dbk(value(bk).shape), dwv(value(wv).shape), dbv(value(bv).shape),
                            dwo(value(wo).shape), dbo(value(bo).shape);
                        ops::MhsaGrads<T> grads{&dwq, &dbq, &dwk, &dbk, &dwv, &dbv, &dwo, &dbo};
                        ops::mhsa_window_backward(value(x), weights, heads, win, *saved, g, dx,
                                                  grads);
                        accum(x, dx);
                        accum(wq, dwq);
                        accum(bq, dbq);
                        accum(wk, dwk);
                        accum(bk, dbk);
                        accum(wv, dwv);
                        accum(bv, dbv);
                        accum(wo, dwo);
                        accum(bo, dbo);
                    });
    }

    // ---- grid / layout ops ------------------------------------------------

    // Replicate-pad the last axis of a [C, H, W] map by (left, right).
    int replicate_pad_w(int x, int left, int right) {
        const Ten& xv = value(x);
        require(xv.rank() == 3, ErrorCode::shape_mismatch, "replicate_pad_w: bad rank");
        const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
        const int ow = w + left + right;
        Ten y({c, h, ow});
        for (int ci = 0; ci < c; ++ci)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < ow; ++j) {
                    const int src = std::clamp(j - left, 0, w - 1);
                    y.at(ci, i, j) = xv.at(ci, i, src);
                }
        return emit(std::move(y), {x}, [this, x, left, c, h, w](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx({c, h, w});
            const int ow = g.dim(2);
            for (int ci = 0; ci < c; ++ci)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < ow; ++j) {
                        const int src = std::clamp(j - left, 0, w - 1);
                        dx.at(ci, i, src) += g.at(ci, i, j);
                    }
            accum(x, dx);
        });
    }

    // Crop the last axis of a [C, H, W] map by (left, right).
    int crop_w(int x, int left, int right) {
        const Ten& xv = value(x);
        require(xv.rank() == 3, ErrorCode::shape_mismatch, "crop_w: bad rank");
        const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
        const int ow = w - left - right;
        require(ow > 0, ErrorCode::shape_mismatch, "crop_w: empty result");
        Ten y({c, h, ow});
        for (int ci = 0; ci < c; ++ci)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < ow; ++j) y.at(ci, i, j) = xv.at(ci, i, j + left);
        return emit(std::move(y), {x}, [this, x, left, c, h, w](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx({c, h, w});
            const int ow = g.dim(2);
            for (int ci = 0; ci < c; ++ci)
                for (int i = 0; i < h; ++i)
                    for (int j = 0; j < ow; ++j) dx.at(ci, i, j + left) = g.at(ci, i, j);
            accum(x, dx);
        });
    }

    // [planes, F, S] pilot grid -> [planes*S, F] token map (plane-major rows).
    int dmrs_to_tokens(int x) {
        const Ten& xv = value(x);
        require(xv.rank() == 3, ErrorCode::shape_mismatch, "dmrs_to_tokens: bad rank");
        const int p = xv.dim(0), f = xv.dim(1), s = xv.dim(2);
        Ten y({p * s, f});
        for (int pi = 0; pi < p; ++pi)
            for (int k = 0; k < f; ++k)
                for (int si = 0; si < s; ++si) y.at(pi * s + si, k) = xv.at(pi, k, si);
        return emit(std::move(y), {x}, [this, x, p, f, s](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx({p, f, s});
            for (int pi = 0; pi < p; ++pi)
                for (int k = 0; k < f; ++k)
                    for (int si = 0; si < s; ++si) dx.at(pi, k, si) = g.at(pi * s + si, k);
            accum(x, dx);
        });
    }

    // Inverse of dmrs_to_tokens.
    int tokens_to_dmrs(int x, int planes, int slots) {
        const Ten& xv = value(x);
        require(xv.rank() == 2 && xv.dim(0) == planes * slots, ErrorCode::shape_mismatch,
                "tokens_to_dmrs: bad shape " + shape_str(xv.shape));
        const int f = xv.dim(1);
        Ten y({planes, f, slots});
        for (int pi = 0; pi < planes; ++pi)
            for (int k = 0; k < f; ++k)
                for (int si = 0; si < slots; ++si) y.at(pi, k, si) = xv.at(pi * slots + si, k);
        return emit(std::move(y), {x}, [this, x, planes, f, slots](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx({planes * slots, f});
            for (int pi = 0; pi < planes; ++pi)
                for (int k = 0; k < f; ++k)
                    for (int si = 0; si < slots; ++si) dx.at(pi * slots + si, k) = g.at(pi, k, si);
            accum(x, dx);
        });
    }

    // Separable pilot-to-grid linear interpolation of a [planes, P, S] map to
    // [planes, F, Tm]; frequency pass then time pass.
    int interp_grid(int x, const InterpPlan& plan) {
        const Ten& xv = value(x);
        require(xv.rank() == 3, ErrorCode::shape_mismatch, "interp_grid: bad rank");
        const int planes = xv.dim(0), np = xv.dim(1), ns = xv.dim(2);
        const int nf = static_cast<int>(plan.freq.size());
        const int nt = static_cast<int>(plan.time.size());
        Ten y({planes, nf, nt});
        std::vector<T> stage(static_cast<std::size_t>(nf) * ns);
        for (int pi = 0; pi < planes; ++pi) {
            for (int s = 0; s < ns; ++s)
                for (int f = 0; f < nf; ++f) {
                    const InterpTap& t = plan.freq[f];
                    stage[static_cast<std::size_t>(f) * ns + s] =
                        (t.lo == t.hi)
                            ? xv.at(pi, t.lo, s)
                            : static_cast<T>((T(1) - static_cast<T>(t.w)) * xv.at(pi, t.lo, s) +
                                             static_cast<T>(t.w) * xv.at(pi, t.hi, s));
                }
            for (int f = 0; f < nf; ++f)
                for (int tt = 0; tt < nt; ++tt) {
                    const InterpTap& t = plan.time[tt];
                    const T* row = stage.data() + static_cast<std::size_t>(f) * ns;
                    y.at(pi, f, tt) =
                        (t.lo == t.hi) ? row[t.lo]
                                       : static_cast<T>((T(1) - static_cast<T>(t.w)) * row[t.lo] +
                                                        static_cast<T>(t.w) * row[t.hi]);
                }
        }
        return emit(std::move(y), {x}, [this, x, plan, planes, np, ns](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            const int nf = static_cast<int>(plan.freq.size());
            const int nt = static_cast<int>(plan.time.size());
            Ten dx({planes, np, ns});
            std::vector<T> dstage(static_cast<std::size_t>(nf) * ns);
            for (int pi = 0; pi < planes; ++pi) {
                std::fill(dstage.begin(), dstage.end(), T(0));
                for (int f = 0; f < nf; ++f)
                    for (int tt = 0; tt < nt; ++tt) {
                        const InterpTap& t = plan.time[tt];
                        const T gv = g.at(pi, f, tt);
                        T* row = dstage.data() + static_cast<std::size_t>(f) * ns;
                        if (t.lo == t.hi) {
                            row[t.lo] += gv;
                        } else {
                            row[t.lo] += (T(1) - static_cast<T>(t.w)) * gv;
                            row[t.hi] += static_cast<T>(t.w) * gv;
                        }
                    }
                for (int f = 0; f < nf; ++f) {
                    const InterpTap& t = plan.freq[f];
                    for (int s = 0; s < ns; ++s) {
                        const T gv = dstage[static_cast<std::size_t>(f) * ns + s];
                        if (t.lo == t.hi) {
                            dx.at(pi, t.lo, s) += gv;
                        } else {
                            dx.at(pi, t.lo, s) += (T(1) - static_cast<T>(t.w)) * gv;
                            dx.at(pi, t.hi, s) += static_cast<T>(t.w) * gv;
                        }
                    }
                }
            }
            accum(x, dx);
        });
    }

    // Gather pilot positions from a [planes, F, Tm] grid into [planes, P, S].
    int extract_pilots(int x, const std::vector<int>& freq_idx, const std::vector<int>& time_idx) {
        const Ten& xv = value(x);
        require(xv.rank() == 3, ErrorCode::shape_mismatch, "extract_pilots: bad rank");
        const int planes = xv.dim(0);
        const int np = static_cast<int>(freq_idx.size());
        const int ns = static_cast<int>(time_idx.size());
        Ten y({planes, np, ns});
        for (int pi = 0; pi < planes; ++pi)
            for (int k = 0; k < np; ++k)
                for (int s = 0; s < ns; ++s) y.at(pi, k, s) = xv.at(pi, freq_idx[k], time_idx[s]);
        return emit(std::move(y), {x},
                    [this, x, freq_idx, time_idx, planes, np, ns](const Ten& g) {
                        if (!nodes_[x].requires_grad) return;
                        Ten dx(value(x).shape);
                        for (int pi = 0; pi < planes; ++pi)
                            for (int k = 0; k < np; ++k)
                                for (int s = 0; s < ns; ++s)
                                    dx.at(pi, freq_idx[k], time_idx[s]) += g.at(pi, k, s);
                        accum(x, dx);
                    });
    }

    // sum(x * w) against a constant cotangent; scalar node. Smooth everywhere,
    // which makes it the projection of choice for gradient checks.
    int weighted_sum(int x, const Ten& w) {
        const Ten& xv = value(x);
        require(xv.same_shape(w), ErrorCode::shape_mismatch, "weighted_sum: shape mismatch");
        T acc = T(0);
        for (std::size_t i = 0; i < xv.numel(); ++i) acc += xv.data[i] * w.data[i];
        Ten y({1});
        y.at(0) = acc;
        auto cot = std::make_shared<Ten>(w);
        return emit(std::move(y), {x}, [this, x, cot](const Ten& g) {
            if (!nodes_[x].requires_grad) return;
            Ten dx(cot->shape);
            for (std::size_t i = 0; i < dx.numel(); ++i) dx.data[i] = g.at(0) * cot->data[i];
            accum(x, dx);
        });
    }

    // Mean absolute error against a constant target; returns a scalar node.
    int l1_loss(int pred, const Ten& target) {
        const Ten& pv = value(pred);
        require(pv.same_shape(target), ErrorCode::shape_mismatch,
                "l1_loss: " + shape_str(pv.shape) + " vs " + shape_str(target.shape));
        const std::size_t n = pv.numel();
        T acc = T(0);
        for (std::size_t i = 0; i < n; ++i) acc += std::abs(pv.data[i] - target.data[i]);
        Ten y({1});
        y.at(0) = acc / static_cast<T>(n);
        auto tgt = std::make_shared<Ten>(target);
        return emit(std::move(y), {pred}, [this, pred, tgt, n](const Ten& g) {
            if (!nodes_[pred].requires_grad) return;
            const Ten& pv = value(pred);
            const T s = g.at(0) / static_cast<T>(n);
            Ten dx(pv.shape);
            for (std::size_t i = 0; i < n; ++i) {
                const T d = pv.data[i] - tgt->data[i];
                dx.data[i] = d > T(0) ? s : (d < T(0) ? -s : T(0));
            }
            accum(pred, dx);
        });
    }

    // ---- backward ---------------------------------------------------------

    void backward(int root) {
        require(value(root).numel() == 1, ErrorCode::invalid_argument,
                "backward: root must be scalar");
        for (auto& n : nodes_) {
            if (n.requires_grad) {
                n.grad = Ten(n.val->shape);
            }
        }
        require(nodes_[root].requires_grad, ErrorCode::invalid_argument,
                "backward: root does not require grad");
        nodes_[root].grad.at(0) = T(1);
        for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.requires_grad && n.back) n.back(n.grad);
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Ten storage;
        const Ten* val = nullptr;
        Ten grad;
        bool requires_grad = false;
        std::function<void(const Ten&)> back;
    };

    int last() const { return static_cast<int>(nodes_.size()) - 1; }

    int emit(Ten value, const std::vector<int>& inputs, std::function<void(const Ten&)> back) {
        bool rg = false;
        for (int i : inputs) rg = rg || nodes_[i].requires_grad;
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.storage = std::move(value);
        n.val = &n.storage;
        n.requires_grad = rg;
        if (rg) n.back = std::move(back);
        return last();
    }

    void accum(int id, const Ten& g) {
        Node& n = nodes_[id];
        if (!n.requires_grad) return;
        for (std::size_t i = 0; i < g.numel(); ++i) n.grad.data[i] += g.data[i];
    }

    std::deque<Node> nodes_;
};

using Tape = TapeT<float>;

} // namespace dlr

#endif
