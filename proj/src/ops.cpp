#include "dlr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dlr::ops {

namespace {
int g_threads = 0; // 0 = library default
std::atomic<std::uint64_t> g_attn_ops{0};

constexpr std::size_t kParallelGrain = 8192;
} // namespace

void set_num_threads(int n) {
    g_threads = n;
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#endif
}

int max_threads() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

bool parallel_ok(std::size_t work) {
#ifdef _OPENMP
    return work >= kParallelGrain && max_threads() > 1 && omp_in_parallel() == 0;
#else
    (void)work;
    return false;
#endif
}

std::uint64_t attention_score_ops() { return g_attn_ops.load(std::memory_order_relaxed); }
void reset_attention_score_ops() { g_attn_ops.store(0, std::memory_order_relaxed); }
void count_attention_score_ops(std::uint64_t n) {
    g_attn_ops.fetch_add(n, std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------
// GEMM
// ---------------------------------------------------------------------------

template <typename T>
void gemm_nn(int m, int n, int k, T* c, const T* a, const T* b) {
    const std::size_t work = static_cast<std::size_t>(m) * n * k;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int i = 0; i < m; ++i) {
        T* ci = c + static_cast<std::size_t>(i) * n;
        const T* ai = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const T av = ai[p];
            const T* bp = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

template <typename T>
void gemm_tn(int m, int n, int k, T* c, const T* a, const T* b) {
    const std::size_t work = static_cast<std::size_t>(m) * n * k;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int i = 0; i < m; ++i) {
        T* ci = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = a[static_cast<std::size_t>(p) * m + i];
            const T* bp = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

template <typename T>
void gemm_nt(int m, int n, int k, T* c, const T* a, const T* b) {
    const std::size_t work = static_cast<std::size_t>(m) * n * k;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int i = 0; i < m; ++i) {
        const T* ai = a + static_cast<std::size_t>(i) * k;
        T* ci = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T* bj = b + static_cast<std::size_t>(j) * k;
            T acc = T(0);
#pragma omp simd reduction(+ : acc)
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

// ---------------------------------------------------------------------------
// conv1d
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> conv1d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                          int stride, int pad) {
    require(x.rank() == 2 && w.rank() == 3, ErrorCode::shape_mismatch, "conv1d: bad ranks");
    const int cin = x.dim(0), win = x.dim(1);
    const int cout = w.dim(0), k = w.dim(2);
    require(w.dim(1) == cin, ErrorCode::shape_mismatch,
            "conv1d: weight " + shape_str(w.shape) + " vs input " + shape_str(x.shape));
    require(b.rank() == 1 && b.dim(0) == cout, ErrorCode::shape_mismatch, "conv1d: bad bias");
    const int wout = conv_out_len(win, k, stride, pad);
    require(wout > 0, ErrorCode::shape_mismatch, "conv1d: empty output");

    TensorT<T> y({cout, wout});
    const std::size_t work = static_cast<std::size_t>(cout) * wout * cin * k;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int co = 0; co < cout; ++co) {
        for (int o = 0; o < wout; ++o) {
            T acc = b.at(co);
            const int base = o * stride - pad;
            for (int ci = 0; ci < cin; ++ci) {
                const T* xr = x.ptr() + static_cast<std::size_t>(ci) * win;
                const T* wr = w.ptr() + (static_cast<std::size_t>(co) * cin + ci) * k;
                for (int t = 0; t < k; ++t) {
                    const int p = base + t;
                    if (p >= 0 && p < win) acc += wr[t] * xr[p];
                }
            }
            y.at(co, o) = acc;
        }
    }
    return y;
}

template <typename T>
void conv1d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                     int stride, int pad, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db) {
    const int cin = x.dim(0), win = x.dim(1);
    const int cout = w.dim(0), k = w.dim(2);
    const int wout = dy.dim(1);

    for (int co = 0; co < cout; ++co) {
        T acc = T(0);
        for (int o = 0; o < wout; ++o) acc += dy.at(co, o);
        db.at(co) += acc;
    }
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            const T* xr = x.ptr() + static_cast<std::size_t>(ci) * win;
            T* dwr = dw.ptr() + (static_cast<std::size_t>(co) * cin + ci) * k;
            for (int t = 0; t < k; ++t) {
                T acc = T(0);
                for (int o = 0; o < wout; ++o) {
                    const int p = o * stride - pad + t;
                    if (p >= 0 && p < win) acc += dy.at(co, o) * xr[p];
                }
                dwr[t] += acc;
            }
        }
    }
    const std::size_t work = static_cast<std::size_t>(cout) * wout * cin * k;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int ci = 0; ci < cin; ++ci) {
        T* dxr = dx.ptr() + static_cast<std::size_t>(ci) * win;
        for (int co = 0; co < cout; ++co) {
            const T* wr = w.ptr() + (static_cast<std::size_t>(co) * cin + ci) * k;
            for (int o = 0; o < wout; ++o) {
                const T g = dy.at(co, o);
                const int base = o * stride - pad;
                for (int t = 0; t < k; ++t) {
                    const int p = base + t;
                    if (p >= 0 && p < win) dxr[p] += g * wr[t];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// transposed conv1d (no padding)
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> tconv1d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                           int stride) {
    require(x.rank() == 2 && w.rank() == 3, ErrorCode::shape_mismatch, "tconv1d: bad ranks");
    const int cin = x.dim(0), win = x.dim(1);
    require(w.dim(0) == cin, ErrorCode::shape_mismatch,
            "tconv1d: weight " + shape_str(w.shape) + " vs input " + shape_str(x.shape));
    const int cout = w.dim(1), k = w.dim(2);
    const int wout = (win - 1) * stride + k;

    TensorT<T> y({cout, wout});
    const std::size_t work = static_cast<std::size_t>(cout) * wout * cin * k;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int co = 0; co < cout; ++co) {
        T* yr = y.ptr() + static_cast<std::size_t>(co) * wout;
        for (int o = 0; o < wout; ++o) yr[o] = b.at(co);
        for (int i = 0; i < win; ++i) {
            for (int ci = 0; ci < cin; ++ci) {
                const T xv = x.at(ci, i);
                const T* wr = w.ptr() + (static_cast<std::size_t>(ci) * cout + co) * k;
                for (int t = 0; t < k; ++t) yr[i * stride + t] += xv * wr[t];
            }
        }
    }
    return y;
}

template <typename T>
void tconv1d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                      int stride, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db) {
    const int cin = x.dim(0), win = x.dim(1);
    const int cout = w.dim(1), k = w.dim(2);
    const int wout = dy.dim(1);

    for (int co = 0; co < cout; ++co) {
        T acc = T(0);
        for (int o = 0; o < wout; ++o) acc += dy.at(co, o);
        db.at(co) += acc;
    }
    for (int ci = 0; ci < cin; ++ci) {
        for (int co = 0; co < cout; ++co) {
            T* dwr = dw.ptr() + (static_cast<std::size_t>(ci) * cout + co) * k;
            T* dxr = dx.ptr() + static_cast<std::size_t>(ci) * win;
            const T* dyr = dy.ptr() + static_cast<std::size_t>(co) * wout;
            const T* wr = w.ptr() + (static_cast<std::size_t>(ci) * cout + co) * k;
            for (int i = 0; i < win; ++i) {
                const T xv = x.at(ci, i);
                T acc = T(0);
                for (int t = 0; t < k; ++t) {
                    dwr[t] += xv * dyr[i * stride + t];
                    acc += wr[t] * dyr[i * stride + t];
                }
                dxr[i] += acc;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// depthwise conv1d
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> depthwise1d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                               int pad) {
    require(x.rank() == 2 && w.rank() == 2 && w.dim(0) == x.dim(0), ErrorCode::shape_mismatch,
            "depthwise1d: weight " + shape_str(w.shape) + " vs input " + shape_str(x.shape));
    const int c = x.dim(0), win = x.dim(1), k = w.dim(1);
    const int wout = conv_out_len(win, k, 1, pad);
    require(wout == win, ErrorCode::shape_mismatch, "depthwise1d: expects length-preserving pad");

    TensorT<T> y({c, wout});
    const std::size_t work = static_cast<std::size_t>(c) * wout * k;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int ci = 0; ci < c; ++ci) {
        const T* xr = x.ptr() + static_cast<std::size_t>(ci) * win;
        const T* wr = w.ptr() + static_cast<std::size_t>(ci) * k;
        T* yr = y.ptr() + static_cast<std::size_t>(ci) * wout;
        for (int o = 0; o < wout; ++o) {
            T acc = b.at(ci);
            for (int t = 0; t < k; ++t) {
                const int p = o - pad + t;
                if (p >= 0 && p < win) acc += wr[t] * xr[p];
            }
            yr[o] = acc;
        }
    }
    return y;
}

template <typename T>
void depthwise1d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                          int pad, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db) {
    const int c = x.dim(0), win = x.dim(1), k = w.dim(1);
    const int wout = dy.dim(1);
    for (int ci = 0; ci < c; ++ci) {
        const T* xr = x.ptr() + static_cast<std::size_t>(ci) * win;
        const T* dyr = dy.ptr() + static_cast<std::size_t>(ci) * wout;
        const T* wr = w.ptr() + static_cast<std::size_t>(ci) * k;
        T* dxr = dx.ptr() + static_cast<std::size_t>(ci) * win;
        T* dwr = dw.ptr() + static_cast<std::size_t>(ci) * k;
        T accb = T(0);
        for (int o = 0; o < wout; ++o) {
            accb += dyr[o];
            for (int t = 0; t < k; ++t) {
                const int p = o - pad + t;
                if (p >= 0 && p < win) {
                    dwr[t] += dyr[o] * xr[p];
                    dxr[p] += dyr[o] * wr[t];
                }
            }
        }
        db.at(ci) += accb;
    }
}

// ---------------------------------------------------------------------------
// conv2d via im2col + GEMM
// ---------------------------------------------------------------------------

namespace {

template <typename T>
std::vector<T>& im2col_scratch() {
    thread_local std::vector<T> buf;
    return buf;
}

template <typename T>
void im2col(const TensorT<T>& x, int kh, int kw, int pad, std::vector<T>& cols) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int oh = h + 2 * pad - kh + 1, ow = w + 2 * pad - kw + 1;
    cols.assign(static_cast<std::size_t>(c) * kh * kw * oh * ow, T(0));
    const int spatial = oh * ow;
    for (int ci = 0; ci < c; ++ci) {
        const T* xc = x.ptr() + static_cast<std::size_t>(ci) * h * w;
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                T* row = cols.data() +
                         (static_cast<std::size_t>(ci) * kh * kw + ki * kw + kj) * spatial;
                for (int i = 0; i < oh; ++i) {
                    const int src_i = i - pad + ki;
                    if (src_i < 0 || src_i >= h) continue;
                    const T* src = xc + static_cast<std::size_t>(src_i) * w;
                    T* dst = row + static_cast<std::size_t>(i) * ow;
                    const int j0 = std::max(0, pad - kj);
                    const int j1 = std::min(ow, w + pad - kj);
                    for (int j = j0; j < j1; ++j) dst[j] = src[j - pad + kj];
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const std::vector<T>& cols, int c, int h, int w, int kh, int kw, int pad,
                TensorT<T>& dx) {
    const int oh = h + 2 * pad - kh + 1, ow = w + 2 * pad - kw + 1;
    const int spatial = oh * ow;
    for (int ci = 0; ci < c; ++ci) {
        T* xc = dx.ptr() + static_cast<std::size_t>(ci) * h * w;
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                const T* row = cols.data() +
                               (static_cast<std::size_t>(ci) * kh * kw + ki * kw + kj) * spatial;
                for (int i = 0; i < oh; ++i) {
                    const int dst_i = i - pad + ki;
                    if (dst_i < 0 || dst_i >= h) continue;
                    T* dst = xc + static_cast<std::size_t>(dst_i) * w;
                    const T* src = row + static_cast<std::size_t>(i) * ow;
                    const int j0 = std::max(0, pad - kj);
                    const int j1 = std::min(ow, w + pad - kj);
                    for (int j = j0; j < j1; ++j) dst[j - pad + kj] += src[j];
                }
            }
        }
    }
}

} // namespace

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                          int pad) {
    require(x.rank() == 3 && w.rank() == 4, ErrorCode::shape_mismatch, "conv2d: bad ranks");
    const int cin = x.dim(0), h = x.dim(1), wid = x.dim(2);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    require(w.dim(1) == cin, ErrorCode::shape_mismatch,
            "conv2d: weight " + shape_str(w.shape) + " vs input " + shape_str(x.shape));
    const int oh = h + 2 * pad - kh + 1, ow = wid + 2 * pad - kw + 1;
    require(oh > 0 && ow > 0, ErrorCode::shape_mismatch, "conv2d: empty output");

    auto& cols = im2col_scratch<T>();
    im2col(x, kh, kw, pad, cols);

    TensorT<T> y({cout, oh, ow});
    const int spatial = oh * ow;
    for (int co = 0; co < cout; ++co) {
        T* yr = y.ptr() + static_cast<std::size_t>(co) * spatial;
        const T bv = b.at(co);
        for (int s = 0; s < spatial; ++s) yr[s] = bv;
    }
    gemm_nn(cout, spatial, cin * kh * kw, y.ptr(), w.ptr(), cols.data());
    return y;
}

template <typename T>
void conv2d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                     int pad, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db) {
    const int cin = x.dim(0), h = x.dim(1), wid = x.dim(2);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = dy.dim(1), ow = dy.dim(2);
    const int spatial = oh * ow;
    const int krows = cin * kh * kw;

    for (int co = 0; co < cout; ++co) {
        const T* dyr = dy.ptr() + static_cast<std::size_t>(co) * spatial;
        T acc = T(0);
        for (int s = 0; s < spatial; ++s) acc += dyr[s];
        db.at(co) += acc;
    }

    auto& cols = im2col_scratch<T>();
    im2col(x, kh, kw, pad, cols);
    gemm_nt(cout, krows, spatial, dw.ptr(), dy.ptr(), cols.data());

    std::vector<T> dcols(static_cast<std::size_t>(krows) * spatial, T(0));
    gemm_tn(krows, spatial, cout, dcols.data(), w.ptr(), dy.ptr());
    col2im_add(dcols, cin, h, wid, kh, kw, pad, dx);
}

// ---------------------------------------------------------------------------
// pooling / resampling
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> max_pool2d_forward(const TensorT<T>& x, std::vector<int>& argmax) {
    require(x.rank() == 3 && x.dim(1) % 2 == 0 && x.dim(2) % 2 == 0, ErrorCode::shape_mismatch,
            "max_pool2d: input " + shape_str(x.shape) + " must have even spatial dims");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int oh = h / 2, ow = w / 2;
    TensorT<T> y({c, oh, ow});
    argmax.assign(static_cast<std::size_t>(c) * oh * ow, 0);
    for (int ci = 0; ci < c; ++ci) {
        const T* xc = x.ptr() + static_cast<std::size_t>(ci) * h * w;
        T* yc = y.ptr() + static_cast<std::size_t>(ci) * oh * ow;
        int* am = argmax.data() + static_cast<std::size_t>(ci) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) {
                int best = (2 * i) * w + 2 * j;
                T bv = xc[best];
                const int cand[3] = {(2 * i) * w + 2 * j + 1, (2 * i + 1) * w + 2 * j,
                                     (2 * i + 1) * w + 2 * j + 1};
                for (int idx : cand) {
                    if (xc[idx] > bv) {
                        bv = xc[idx];
                        best = idx;
                    }
                }
                yc[i * ow + j] = bv;
                am[i * ow + j] = best;
            }
        }
    }
    return y;
}

template <typename T>
void max_pool2d_backward(const TensorT<T>& dy, const std::vector<int>& argmax,
                         const std::vector<int>& in_shape, TensorT<T>& dx) {
    const int c = in_shape[0], h = in_shape[1], w = in_shape[2];
    const int oh = h / 2, ow = w / 2;
    for (int ci = 0; ci < c; ++ci) {
        T* dxc = dx.ptr() + static_cast<std::size_t>(ci) * h * w;
        const T* dyc = dy.ptr() + static_cast<std::size_t>(ci) * oh * ow;
        const int* am = argmax.data() + static_cast<std::size_t>(ci) * oh * ow;
        for (int s = 0; s < oh * ow; ++s) dxc[am[s]] += dyc[s];
    }
}

namespace {
// Half-pixel source coordinate mapping for x2 upsampling: src = (dst+0.5)/2-0.5.
// With even input size this touches source indices {i-1, i} per output pair.
struct Up2Tap {
    int lo, hi;
    double w_hi;
};
inline Up2Tap up2_tap(int dst, int n) {
    const double src = (dst + 0.5) / 2.0 - 0.5;
    int lo = static_cast<int>(std::floor(src));
    double w = src - lo;
    int hi = lo + 1;
    if (lo < 0) { lo = 0; hi = 0; w = 0.0; }
    if (hi >= n) { hi = n - 1; lo = n - 1; w = 0.0; }
    return {lo, hi, w};
}
} // namespace

template <typename T>
TensorT<T> bilinear_up2_forward(const TensorT<T>& x) {
    require(x.rank() == 3, ErrorCode::shape_mismatch, "bilinear_up2: bad rank");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int oh = h * 2, ow = w * 2;
    TensorT<T> y({c, oh, ow});
    const std::size_t work = y.numel() * 4;
#pragma omp parallel for schedule(static) if (parallel_ok(work))
    for (int ci = 0; ci < c; ++ci) {
        const T* xc = x.ptr() + static_cast<std::size_t>(ci) * h * w;
        T* yc = y.ptr() + static_cast<std::size_t>(ci) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            const Up2Tap ti = up2_tap(i, h);
            for (int j = 0; j < ow; ++j) {
                const Up2Tap tj = up2_tap(j, w);
                const T v00 = xc[ti.lo * w + tj.lo], v01 = xc[ti.lo * w + tj.hi];
                const T v10 = xc[ti.hi * w + tj.lo], v11 = xc[ti.hi * w + tj.hi];
                const T wi = static_cast<T>(ti.w_hi), wj = static_cast<T>(tj.w_hi);
                yc[i * ow + j] = (T(1) - wi) * ((T(1) - wj) * v00 + wj * v01) +
                                 wi * ((T(1) - wj) * v10 + wj * v11);
            }
        }
    }
    return y;
}

template <typename T>
void bilinear_up2_backward(const TensorT<T>& dy, const std::vector<int>& in_shape,
                           TensorT<T>& dx) {
    const int c = in_shape[0], h = in_shape[1], w = in_shape[2];
    const int oh = h * 2, ow = w * 2;
    for (int ci = 0; ci < c; ++ci) {
        T* dxc = dx.ptr() + static_cast<std::size_t>(ci) * h * w;
        const T* dyc = dy.ptr() + static_cast<std::size_t>(ci) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            const Up2Tap ti = up2_tap(i, h);
            for (int j = 0; j < ow; ++j) {
                const Up2Tap tj = up2_tap(j, w);
                const T g = dyc[i * ow + j];
                const T wi = static_cast<T>(ti.w_hi), wj = static_cast<T>(tj.w_hi);
                dxc[ti.lo * w + tj.lo] += (T(1) - wi) * (T(1) - wj) * g;
                dxc[ti.lo * w + tj.hi] += (T(1) - wi) * wj * g;
                dxc[ti.hi * w + tj.lo] += wi * (T(1) - wj) * g;
                dxc[ti.hi * w + tj.hi] += wi * wj * g;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& x) {
    TensorT<T> y;
    y.shape = x.shape;
    y.data.resize(x.numel());
    const std::size_t n = x.numel();
#pragma omp parallel for schedule(static) if (parallel_ok(n))
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    return y;
}

template <typename T>
void relu_backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx) {
    const std::size_t n = x.numel();
    for (std::size_t i = 0; i < n; ++i) dx.data[i] += x.data[i] > T(0) ? dy.data[i] : T(0);
}

template <typename T>
TensorT<T> gelu_forward(const TensorT<T>& x) {
    TensorT<T> y;
    y.shape = x.shape;
    y.data.resize(x.numel());
    const std::size_t n = x.numel();
    constexpr T inv_sqrt2 = T(0.70710678118654752440);
#pragma omp parallel for schedule(static) if (parallel_ok(n * 8))
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const T v = x.data[i];
        y.data[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
    }
    return y;
}

template <typename T>
void gelu_backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx) {
    const std::size_t n = x.numel();
    constexpr T inv_sqrt2 = T(0.70710678118654752440);
    constexpr T inv_sqrt2pi = T(0.39894228040143267794);
    for (std::size_t i = 0; i < n; ++i) {
        const T v = x.data[i];
        const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
        const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * v * v);
        dx.data[i] += dy.data[i] * (cdf + v * pdf);
    }
}

template <typename T>
TensorT<T> sigmoid_forward(const TensorT<T>& x) {
    TensorT<T> y;
    y.shape = x.shape;
    y.data.resize(x.numel());
    for (std::size_t i = 0; i < x.numel(); ++i)
        y.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
    return y;
}

template <typename T>
void sigmoid_backward(const TensorT<T>& y, const TensorT<T>& dy, TensorT<T>& dx) {
    for (std::size_t i = 0; i < y.numel(); ++i)
        dx.data[i] += dy.data[i] * y.data[i] * (T(1) - y.data[i]);
}

// ---------------------------------------------------------------------------
// layer norm over columns of [C, W]
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> layer_norm_cols_forward(const TensorT<T>& x, const TensorT<T>& gamma,
                                   const TensorT<T>& beta, std::vector<T>& mean,
                                   std::vector<T>& inv_std) {
    require(x.rank() == 2, ErrorCode::shape_mismatch, "layer_norm: bad rank");
    const int c = x.dim(0), w = x.dim(1);
    require(gamma.dim(0) == c && beta.dim(0) == c, ErrorCode::shape_mismatch,
            "layer_norm: affine params " + shape_str(gamma.shape) + " vs input " +
                shape_str(x.shape));
    constexpr T eps = T(1e-5);
    TensorT<T> y({c, w});
    mean.assign(w, T(0));
    inv_std.assign(w, T(0));
    for (int j = 0; j < w; ++j) {
        T mu = T(0);
        for (int i = 0; i < c; ++i) mu += x.at(i, j);
        mu /= static_cast<T>(c);
        T var = T(0);
        for (int i = 0; i < c; ++i) {
            const T d = x.at(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<T>(c);
        const T is = T(1) / std::sqrt(var + eps);
        mean[j] = mu;
        inv_std[j] = is;
        for (int i = 0; i < c; ++i)
            y.at(i, j) = (x.at(i, j) - mu) * is * gamma.at(i) + beta.at(i);
    }
    return y;
}

template <typename T>
void layer_norm_cols_backward(const TensorT<T>& x, const TensorT<T>& gamma,
                              const std::vector<T>& mean, const std::vector<T>& inv_std,
                              const TensorT<T>& dy, TensorT<T>& dx, TensorT<T>& dgamma,
                              TensorT<T>& dbeta) {
    const int c = x.dim(0), w = x.dim(1);
    for (int j = 0; j < w; ++j) {
        const T mu = mean[j], is = inv_std[j];
        T sum_dyg = T(0), sum_dyg_xhat = T(0);
        for (int i = 0; i < c; ++i) {
            const T xhat = (x.at(i, j) - mu) * is;
            const T dyg = dy.at(i, j) * gamma.at(i);
            sum_dyg += dyg;
            sum_dyg_xhat += dyg * xhat;
            dgamma.at(i) += dy.at(i, j) * xhat;
            dbeta.at(i) += dy.at(i, j);
        }
        const T inv_c = T(1) / static_cast<T>(c);
        for (int i = 0; i < c; ++i) {
            const T xhat = (x.at(i, j) - mu) * is;
            const T dyg = dy.at(i, j) * gamma.at(i);
            dx.at(i, j) += is * (dyg - inv_c * sum_dyg - xhat * inv_c * sum_dyg_xhat);
        }
    }
}

// ---------------------------------------------------------------------------
// softmax rows
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> softmax_rows_forward(const TensorT<T>& x) {
    require(x.rank() == 2, ErrorCode::shape_mismatch, "softmax: bad rank");
    const int r = x.dim(0), c = x.dim(1);
    TensorT<T> y({r, c});
    for (int i = 0; i < r; ++i) {
        const T* xr = x.ptr() + static_cast<std::size_t>(i) * c;
        T* yr = y.ptr() + static_cast<std::size_t>(i) * c;
        T mx = xr[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, xr[j]);
        T sum = T(0);
        for (int j = 0; j < c; ++j) {
            yr[j] = std::exp(xr[j] - mx);
            sum += yr[j];
        }
        const T inv = T(1) / sum;
        for (int j = 0; j < c; ++j) yr[j] *= inv;
    }
    return y;
}

template <typename T>
void softmax_rows_backward(const TensorT<T>& y, const TensorT<T>& dy, TensorT<T>& dx) {
    const int r = y.dim(0), c = y.dim(1);
    for (int i = 0; i < r; ++i) {
        const T* yr = y.ptr() + static_cast<std::size_t>(i) * c;
        const T* dyr = dy.ptr() + static_cast<std::size_t>(i) * c;
        T* dxr = dx.ptr() + static_cast<std::size_t>(i) * c;
        T dot = T(0);
        for (int j = 0; j < c; ++j) dot += yr[j] * dyr[j];
        for (int j = 0; j < c; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
    }
}

// ---------------------------------------------------------------------------
// global pooling
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> global_avg_pool_forward(const TensorT<T>& x) {
    require(x.rank() >= 2, ErrorCode::shape_mismatch, "global_avg_pool: bad rank");
    const int c = x.dim(0);
    const std::size_t spatial = x.numel() / c;
    TensorT<T> y({c});
    for (int ci = 0; ci < c; ++ci) {
        const T* xc = x.ptr() + ci * spatial;
        T acc = T(0);
        for (std::size_t s = 0; s < spatial; ++s) acc += xc[s];
        y.at(ci) = acc / static_cast<T>(spatial);
    }
    return y;
}

template <typename T>
void global_avg_pool_backward(const TensorT<T>& dy, const std::vector<int>& in_shape,
                              TensorT<T>& dx) {
    const int c = in_shape[0];
    const std::size_t spatial = dx.numel() / c;
    for (int ci = 0; ci < c; ++ci) {
        const T g = dy.at(ci) / static_cast<T>(spatial);
        T* dxc = dx.ptr() + ci * spatial;
        for (std::size_t s = 0; s < spatial; ++s) dxc[s] += g;
    }
}

template <typename T>
TensorT<T> global_max_pool_forward(const TensorT<T>& x, std::vector<int>& argmax) {
    const int c = x.dim(0);
    const std::size_t spatial = x.numel() / c;
    TensorT<T> y({c});
    argmax.assign(c, 0);
    for (int ci = 0; ci < c; ++ci) {
        const T* xc = x.ptr() + ci * spatial;
        int best = 0;
        for (std::size_t s = 1; s < spatial; ++s)
            if (xc[s] > xc[best]) best = static_cast<int>(s);
        y.at(ci) = xc[best];
        argmax[ci] = best;
    }
    return y;
}

template <typename T>
void global_max_pool_backward(const TensorT<T>& dy, const std::vector<int>& argmax,
                              const std::vector<int>& in_shape, TensorT<T>& dx) {
    const int c = in_shape[0];
    const std::size_t spatial = dx.numel() / c;
    for (int ci = 0; ci < c; ++ci) dx.ptr()[ci * spatial + argmax[ci]] += dy.at(ci);
}

// ---------------------------------------------------------------------------
// window partition / merge
// ---------------------------------------------------------------------------

template <typename T>
std::vector<TensorT<T>> window_partition(const TensorT<T>& x, int win) {
    require(x.rank() == 2, ErrorCode::shape_mismatch, "window_partition: bad rank");
    const int c = x.dim(0), w = x.dim(1);
    require(win >= 1 && w % win == 0, ErrorCode::shape_mismatch,
            "window_partition: width " + std::to_string(w) + " not divisible by window " +
                std::to_string(win));
    std::vector<TensorT<T>> out;
    out.reserve(static_cast<std::size_t>(w / win));
    for (int w0 = 0; w0 < w; w0 += win) {
        TensorT<T> t({c, win});
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < win; ++j) t.at(i, j) = x.at(i, w0 + j);
        out.push_back(std::move(t));
    }
    return out;
}

template <typename T>
TensorT<T> window_merge(const std::vector<TensorT<T>>& windows) {
    require(!windows.empty(), ErrorCode::shape_mismatch, "window_merge: empty list");
    const int c = windows.front().dim(0), win = windows.front().dim(1);
    TensorT<T> out({c, win * static_cast<int>(windows.size())});
    int w0 = 0;
    for (const TensorT<T>& t : windows) {
        require(t.dim(0) == c && t.dim(1) == win, ErrorCode::shape_mismatch,
                "window_merge: inconsistent window shapes");
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < win; ++j) out.at(i, w0 + j) = t.at(i, j);
        w0 += win;
    }
    return out;
}

// ---------------------------------------------------------------------------
// linear
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> linear_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    require(w.rank() == 2, ErrorCode::shape_mismatch, "linear: bad weight rank");
    const int m = w.dim(0), n = w.dim(1);
    if (x.rank() == 1) {
        require(x.dim(0) == n, ErrorCode::shape_mismatch,
                "linear: weight " + shape_str(w.shape) + " vs input " + shape_str(x.shape));
        TensorT<T> y({m});
        for (int i = 0; i < m; ++i) {
            T acc = b.at(i);
            const T* wr = w.ptr() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) acc += wr[j] * x.at(j);
            y.at(i) = acc;
        }
        return y;
    }
    require(x.rank() == 2 && x.dim(1) == n, ErrorCode::shape_mismatch,
            "linear: weight " + shape_str(w.shape) + " vs input " + shape_str(x.shape));
    const int t = x.dim(0);
    TensorT<T> y({t, m});
    for (int ti = 0; ti < t; ++ti) {
        T* yr = y.ptr() + static_cast<std::size_t>(ti) * m;
        for (int i = 0; i < m; ++i) yr[i] = b.at(i);
    }
    gemm_nt(t, m, n, y.ptr(), x.ptr(), w.ptr());
    return y;
}

template <typename T>
void linear_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                     TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db) {
    const int m = w.dim(0), n = w.dim(1);
    if (x.rank() == 1) {
        for (int i = 0; i < m; ++i) {
            const T g = dy.at(i);
            db.at(i) += g;
            const T* wr = w.ptr() + static_cast<std::size_t>(i) * n;
            T* dwr = dw.ptr() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                dwr[j] += g * x.at(j);
                dx.at(j) += g * wr[j];
            }
        }
        return;
    }
    const int t = x.dim(0);
    for (int ti = 0; ti < t; ++ti) {
        const T* dyr = dy.ptr() + static_cast<std::size_t>(ti) * m;
        for (int i = 0; i < m; ++i) db.at(i) += dyr[i];
    }
    gemm_tn(m, n, t, dw.ptr(), dy.ptr(), x.ptr()); // dW[m,n] += dY^T[t,m] X[t,n]
    gemm_nn(t, n, m, dx.ptr(), dy.ptr(), w.ptr()); // dX[t,n] += dY[t,m] W[m,n]
}

// ---------------------------------------------------------------------------
// fused windowed MHSA
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> mhsa_window_forward(const TensorT<T>& x, const MhsaWeights<T>& w, int heads, int win,
                               MhsaSaved<T>& saved) {
    require(x.rank() == 2, ErrorCode::shape_mismatch, "mhsa: bad rank");
    const int c = x.dim(0), width = x.dim(1);
    require(c % heads == 0, ErrorCode::shape_mismatch, "mhsa: dim not divisible by heads");
    require(width % win == 0, ErrorCode::shape_mismatch, "mhsa: width not divisible by win");
    const int dh = c / heads;
    const int nwin = width / win;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));

    // Token-major projections: q[t, m] = sum_n wq[m, n] x[n, t] + bq[m].
    saved.q = TensorT<T>({width, c});
    saved.k = TensorT<T>({width, c});
    saved.v = TensorT<T>({width, c});
    const std::size_t proj_work = static_cast<std::size_t>(width) * c * c;
#pragma omp parallel for schedule(static) if (parallel_ok(proj_work))
    for (int t = 0; t < width; ++t) {
        for (int m = 0; m < c; ++m) {
            T aq = w.bq->at(m), ak = w.bk->at(m), av = w.bv->at(m);
            const T* wq = w.wq->ptr() + static_cast<std::size_t>(m) * c;
            const T* wk = w.wk->ptr() + static_cast<std::size_t>(m) * c;
            const T* wv = w.wv->ptr() + static_cast<std::size_t>(m) * c;
            for (int n = 0; n < c; ++n) {
                const T xv = x.at(n, t);
                aq += wq[n] * xv;
                ak += wk[n] * xv;
                av += wv[n] * xv;
            }
            saved.q.at(t, m) = aq;
            saved.k.at(t, m) = ak;
            saved.v.at(t, m) = av;
        }
    }

    saved.probs = TensorT<T>({nwin, heads, win, win});
    saved.att = TensorT<T>({width, c});
    count_attention_score_ops(static_cast<std::uint64_t>(nwin) * heads * win * win);

    const std::size_t attn_work = static_cast<std::size_t>(nwin) * heads * win * win * dh;
#pragma omp parallel for schedule(static) collapse(2) if (parallel_ok(attn_work))
    for (int wi = 0; wi < nwin; ++wi) {
        for (int h = 0; h < heads; ++h) {
            const int t0 = wi * win, f0 = h * dh;
            T* probs = saved.probs.ptr() +
                       ((static_cast<std::size_t>(wi) * heads + h) * win) * win;
            for (int i = 0; i < win; ++i) {
                T* row = probs + static_cast<std::size_t>(i) * win;
                T mx = -std::numeric_limits<T>::infinity();
                for (int j = 0; j < win; ++j) {
                    T s = T(0);
                    for (int d = 0; d < dh; ++d)
                        s += saved.q.at(t0 + i, f0 + d) * saved.k.at(t0 + j, f0 + d);
                    row[j] = s * scale;
                    mx = std::max(mx, row[j]);
                }
                T sum = T(0);
                for (int j = 0; j < win; ++j) {
                    row[j] = std::exp(row[j] - mx);
                    sum += row[j];
                }
                const T inv = T(1) / sum;
                for (int j = 0; j < win; ++j) row[j] *= inv;
                for (int d = 0; d < dh; ++d) {
                    T acc = T(0);
                    for (int j = 0; j < win; ++j) acc += row[j] * saved.v.at(t0 + j, f0 + d);
                    saved.att.at(t0 + i, f0 + d) = acc;
                }
            }
        }
    }

    // Output projection back to [C, W].
    TensorT<T> y({c, width});
#pragma omp parallel for schedule(static) if (parallel_ok(proj_work))
    for (int m = 0; m < c; ++m) {
        const T* wo = w.wo->ptr() + static_cast<std::size_t>(m) * c;
        for (int t = 0; t < width; ++t) {
            T acc = w.bo->at(m);
            const T* at = saved.att.ptr() + static_cast<std::size_t>(t) * c;
            for (int n = 0; n < c; ++n) acc += wo[n] * at[n];
            y.at(m, t) = acc;
        }
    }
    return y;
}

template <typename T>
void mhsa_window_backward(const TensorT<T>& x, const MhsaWeights<T>& w, int heads, int win,
                          const MhsaSaved<T>& saved, const TensorT<T>& dy, TensorT<T>& dx,
                          const MhsaGrads<T>& g) {
    const int c = x.dim(0), width = x.dim(1);
    const int dh = c / heads;
    const int nwin = width / win;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));

    // Output projection backward.
    TensorT<T> datt({width, c});
    for (int m = 0; m < c; ++m) {
        const T* wo = w.wo->ptr() + static_cast<std::size_t>(m) * c;
        T* dwo = g.dwo->ptr() + static_cast<std::size_t>(m) * c;
        T accb = T(0);
        for (int t = 0; t < width; ++t) {
            const T gy = dy.at(m, t);
            accb += gy;
            const T* at = saved.att.ptr() + static_cast<std::size_t>(t) * c;
            T* da = datt.ptr() + static_cast<std::size_t>(t) * c;
            for (int n = 0; n < c; ++n) {
                dwo[n] += gy * at[n];
                da[n] += gy * wo[n];
            }
        }
        g.dbo->at(m) += accb;
    }

    TensorT<T> dq({width, c}), dk({width, c}), dv({width, c});
    std::vector<T> dprob(static_cast<std::size_t>(win) * win);
    for (int wi = 0; wi < nwin; ++wi) {
        for (int h = 0; h < heads; ++h) {
            const int t0 = wi * win, f0 = h * dh;
            const T* probs = saved.probs.ptr() +
                             ((static_cast<std::size_t>(wi) * heads + h) * win) * win;
            // dP and dV
            for (int i = 0; i < win; ++i) {
                for (int j = 0; j < win; ++j) {
                    T acc = T(0);
                    for (int d = 0; d < dh; ++d)
                        acc += datt.at(t0 + i, f0 + d) * saved.v.at(t0 + j, f0 + d);
                    dprob[i * win + j] = acc;
                }
            }
            for (int j = 0; j < win; ++j)
                for (int d = 0; d < dh; ++d) {
                    T acc = T(0);
                    for (int i = 0; i < win; ++i)
                        acc += probs[i * win + j] * datt.at(t0 + i, f0 + d);
                    dv.at(t0 + j, f0 + d) += acc;
                }
            // softmax backward -> dS (reuse dprob buffer), then dQ/dK
            for (int i = 0; i < win; ++i) {
                const T* prow = probs + static_cast<std::size_t>(i) * win;
                T dot = T(0);
                for (int j = 0; j < win; ++j) dot += prow[j] * dprob[i * win + j];
                for (int j = 0; j < win; ++j)
                    dprob[i * win + j] = prow[j] * (dprob[i * win + j] - dot) * scale;
            }
            for (int i = 0; i < win; ++i)
                for (int d = 0; d < dh; ++d) {
                    T accq = T(0);
                    for (int j = 0; j < win; ++j)
                        accq += dprob[i * win + j] * saved.k.at(t0 + j, f0 + d);
                    dq.at(t0 + i, f0 + d) += accq;
                }
            for (int j = 0; j < win; ++j)
                for (int d = 0; d < dh; ++d) {
                    T acck = T(0);
                    for (int i = 0; i < win; ++i)
                        acck += dprob[i * win + j] * saved.q.at(t0 + i, f0 + d);
                    dk.at(t0 + j, f0 + d) += acck;
                }
        }
    }

    // Projection backward for q/k/v: dx[n, t] += sum_m w[m, n] dproj[t, m].
    for (int t = 0; t < width; ++t) {
        for (int m = 0; m < c; ++m) {
            const T gq = dq.at(t, m), gk = dk.at(t, m), gv = dv.at(t, m);
            g.dbq->at(m) += gq;
            g.dbk->at(m) += gk;
            g.dbv->at(m) += gv;
            const T* wq = w.wq->ptr() + static_cast<std::size_t>(m) * c;
            const T* wk = w.wk->ptr() + static_cast<std::size_t>(m) * c;
            const T* wv = w.wv->ptr() + static_cast<std::size_t>(m) * c;
            T* dwq = g.dwq->ptr() + static_cast<std::size_t>(m) * c;
            T* dwk = g.dwk->ptr() + static_cast<std::size_t>(m) * c;
            T* dwv = g.dwv->ptr() + static_cast<std::size_t>(m) * c;
            for (int n = 0; n < c; ++n) {
                const T xv = x.at(n, t);
                dwq[n] += gq * xv;
                dwk[n] += gk * xv;
                dwv[n] += gv * xv;
                dx.at(n, t) += gq * wq[n] + gk * wk[n] + gv * wv[n];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

#define DLR_INSTANTIATE_OPS(T)                                                                  \
    template void gemm_nn<T>(int, int, int, T*, const T*, const T*);                           \
    template void gemm_tn<T>(int, int, int, T*, const T*, const T*);                           \
    template void gemm_nt<T>(int, int, int, T*, const T*, const T*);                           \
    template TensorT<T> conv1d_forward<T>(const TensorT<T>&, const TensorT<T>&,                \
                                          const TensorT<T>&, int, int);                        \
    template void conv1d_backward<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,  \
                                     int, int, TensorT<T>&, TensorT<T>&, TensorT<T>&);         \
    template TensorT<T> tconv1d_forward<T>(const TensorT<T>&, const TensorT<T>&,               \
                                           const TensorT<T>&, int);                            \
    template void tconv1d_backward<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, \
                                      int, TensorT<T>&, TensorT<T>&, TensorT<T>&);             \
    template TensorT<T> depthwise1d_forward<T>(const TensorT<T>&, const TensorT<T>&,           \
                                               const TensorT<T>&, int);                        \
    template void depthwise1d_backward<T>(const TensorT<T>&, const TensorT<T>&,                \
                                          const TensorT<T>&, int, TensorT<T>&, TensorT<T>&,    \
                                          TensorT<T>&);                                        \
    template TensorT<T> conv2d_forward<T>(const TensorT<T>&, const TensorT<T>&,                \
                                          const TensorT<T>&, int);                             \
    template void conv2d_backward<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,  \
                                     int, TensorT<T>&, TensorT<T>&, TensorT<T>&);              \
    template TensorT<T> max_pool2d_forward<T>(const TensorT<T>&, std::vector<int>&);           \
    template void max_pool2d_backward<T>(const TensorT<T>&, const std::vector<int>&,           \
                                         const std::vector<int>&, TensorT<T>&);                \
    template TensorT<T> bilinear_up2_forward<T>(const TensorT<T>&);                            \
    template void bilinear_up2_backward<T>(const TensorT<T>&, const std::vector<int>&,         \
                                           TensorT<T>&);                                       \
    template TensorT<T> relu_forward<T>(const TensorT<T>&);                                    \
    template void relu_backward<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>&);         \
    template TensorT<T> gelu_forward<T>(const TensorT<T>&);                                    \
    template void gelu_backward<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>&);         \
    template TensorT<T> sigmoid_forward<T>(const TensorT<T>&);                                 \
    template void sigmoid_backward<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>&);      \
    template TensorT<T> layer_norm_cols_forward<T>(const TensorT<T>&, const TensorT<T>&,       \
                                                   const TensorT<T>&, std::vector<T>&,         \
                                                   std::vector<T>&);                           \
    template void layer_norm_cols_backward<T>(const TensorT<T>&, const TensorT<T>&,            \
                                              const std::vector<T>&, const std::vector<T>&,    \
                                              const TensorT<T>&, TensorT<T>&, TensorT<T>&,     \
                                              TensorT<T>&);                                    \
    template TensorT<T> softmax_rows_forward<T>(const TensorT<T>&);                            \
    template void softmax_rows_backward<T>(const TensorT<T>&, const TensorT<T>&, TensorT<T>&); \
    template TensorT<T> global_avg_pool_forward<T>(const TensorT<T>&);                         \
    template void global_avg_pool_backward<T>(const TensorT<T>&, const std::vector<int>&,      \
                                              TensorT<T>&);                                    \
    template TensorT<T> global_max_pool_forward<T>(const TensorT<T>&, std::vector<int>&);      \
    template void global_max_pool_backward<T>(const TensorT<T>&, const std::vector<int>&,      \
                                              const std::vector<int>&, TensorT<T>&);           \
    template std::vector<TensorT<T>> window_partition<T>(const TensorT<T>&, int);              \
    template TensorT<T> window_merge<T>(const std::vector<TensorT<T>>&);                       \
    template TensorT<T> linear_forward<T>(const TensorT<T>&, const TensorT<T>&,                \
                                          const TensorT<T>&);                                  \
    template void linear_backward<T>(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,  \
                                     TensorT<T>&, TensorT<T>&, TensorT<T>&);                   \
    template TensorT<T> mhsa_window_forward<T>(const TensorT<T>&, const MhsaWeights<T>&, int,  \
                                               int, MhsaSaved<T>&);                            \
    template void mhsa_window_backward<T>(const TensorT<T>&, const MhsaWeights<T>&, int, int,  \
                                          const MhsaSaved<T>&, const TensorT<T>&, TensorT<T>&, \
                                          const MhsaGrads<T>&);

DLR_INSTANTIATE_OPS(float)
DLR_INSTANTIATE_OPS(double)

} // namespace dlr::ops
