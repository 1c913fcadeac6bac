#ifndef DLR_REF_KERNELS_HPP
#define DLR_REF_KERNELS_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "dlr/ops.hpp"
#include "dlr/tensor.hpp"

// Serial reference implementations: direct nested loops, no OpenMP, no
// im2col/GEMM restructuring. Linked into the tests and the benchmark only;
// the library never calls these.
namespace dlr::ref {

template <typename T>
TensorT<T> conv1d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                  int pad) {
    const int cin = x.dim(0), win = x.dim(1);
    const int cout = w.dim(0), k = w.dim(2);
    const int wout = (win + 2 * pad - k) / stride + 1;
    TensorT<T> y({cout, wout});
    for (int co = 0; co < cout; ++co)
        for (int o = 0; o < wout; ++o) {
            T acc = b.at(co);
            for (int ci = 0; ci < cin; ++ci)
                for (int t = 0; t < k; ++t) {
                    const int p = o * stride - pad + t;
                    if (p >= 0 && p < win) acc += w.at(co, ci, t) * x.at(ci, p);
                }
            y.at(co, o) = acc;
        }
    return y;
}

template <typename T>
TensorT<T> tconv1d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride) {
    const int cin = x.dim(0), win = x.dim(1);
    const int cout = w.dim(1), k = w.dim(2);
    const int wout = (win - 1) * stride + k;
    TensorT<T> y({cout, wout});
    for (int co = 0; co < cout; ++co)
        for (int o = 0; o < wout; ++o) y.at(co, o) = b.at(co);
    for (int ci = 0; ci < cin; ++ci)
        for (int i = 0; i < win; ++i)
            for (int co = 0; co < cout; ++co)
                for (int t = 0; t < k; ++t)
                    y.at(co, i * stride + t) += x.at(ci, i) * w.at(ci, co, t);
    return y;
}

template <typename T>
TensorT<T> depthwise1d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int pad) {
    const int c = x.dim(0), win = x.dim(1), k = w.dim(1);
    const int wout = win + 2 * pad - k + 1;
    TensorT<T> y({c, wout});
    for (int ci = 0; ci < c; ++ci)
        for (int o = 0; o < wout; ++o) {
            T acc = b.at(ci);
            for (int t = 0; t < k; ++t) {
                const int p = o - pad + t;
                if (p >= 0 && p < win) acc += w.at(ci, t) * x.at(ci, p);
            }
            y.at(ci, o) = acc;
        }
    return y;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int pad) {
    const int cin = x.dim(0), h = x.dim(1), wid = x.dim(2);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = h + 2 * pad - kh + 1, ow = wid + 2 * pad - kw + 1;
    TensorT<T> y({cout, oh, ow});
    for (int co = 0; co < cout; ++co)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                T acc = b.at(co);
                for (int ci = 0; ci < cin; ++ci)
                    for (int ki = 0; ki < kh; ++ki)
                        for (int kj = 0; kj < kw; ++kj) {
                            const int si = i - pad + ki, sj = j - pad + kj;
                            if (si >= 0 && si < h && sj >= 0 && sj < wid)
                                acc += w.data[((static_cast<std::size_t>(co) * cin + ci) * kh +
                                               ki) * kw + kj] *
                                       x.at(ci, si, sj);
                        }
                y.at(co, i, j) = acc;
            }
    return y;
}

template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    const int m = w.dim(0), n = w.dim(1);
    if (x.rank() == 1) {
        TensorT<T> y({m});
        for (int i = 0; i < m; ++i) {
            T acc = b.at(i);
            for (int j = 0; j < n; ++j) acc += w.at(i, j) * x.at(j);
            y.at(i) = acc;
        }
        return y;
    }
    const int t = x.dim(0);
    TensorT<T> y({t, m});
    for (int ti = 0; ti < t; ++ti)
        for (int i = 0; i < m; ++i) {
            T acc = b.at(i);
            for (int j = 0; j < n; ++j) acc += w.at(i, j) * x.at(ti, j);
            y.at(ti, i) = acc;
        }
    return y;
}

// Direct per-window attention; softmax written out longhand.
template <typename T>
TensorT<T> mhsa_window(const TensorT<T>& x, const ops::MhsaWeights<T>& w, int heads, int win) {
    const int c = x.dim(0), width = x.dim(1);
    const int dh = c / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));

    auto project = [&](const TensorT<T>& wm, const TensorT<T>& bv) {
        TensorT<T> out({width, c});
        for (int t = 0; t < width; ++t)
            for (int m = 0; m < c; ++m) {
                T acc = bv.at(m);
                for (int n = 0; n < c; ++n) acc += wm.at(m, n) * x.at(n, t);
                out.at(t, m) = acc;
            }
        return out;
    };
    const TensorT<T> q = project(*w.wq, *w.bq);
    const TensorT<T> k = project(*w.wk, *w.bk);
    const TensorT<T> v = project(*w.wv, *w.bv);

    TensorT<T> att({width, c});
    std::vector<T> row(static_cast<std::size_t>(win));
    for (int w0 = 0; w0 < width; w0 += win)
        for (int h = 0; h < heads; ++h) {
            const int f0 = h * dh;
            for (int i = 0; i < win; ++i) {
                T mx = -std::numeric_limits<T>::infinity();
                for (int j = 0; j < win; ++j) {
                    T s = T(0);
                    for (int d = 0; d < dh; ++d) s += q.at(w0 + i, f0 + d) * k.at(w0 + j, f0 + d);
                    row[static_cast<std::size_t>(j)] = s * scale;
                    mx = std::max(mx, row[static_cast<std::size_t>(j)]);
                }
                T sum = T(0);
                for (int j = 0; j < win; ++j) {
                    row[static_cast<std::size_t>(j)] = std::exp(row[static_cast<std::size_t>(j)] - mx);
                    sum += row[static_cast<std::size_t>(j)];
                }
                for (int d = 0; d < dh; ++d) {
                    T acc = T(0);
                    for (int j = 0; j < win; ++j)
                        acc += row[static_cast<std::size_t>(j)] / sum * v.at(w0 + j, f0 + d);
                    att.at(w0 + i, f0 + d) = acc;
                }
            }
        }

    TensorT<T> y({c, width});
    for (int m = 0; m < c; ++m)
        for (int t = 0; t < width; ++t) {
            T acc = w.bo->at(m);
            for (int n = 0; n < c; ++n) acc += w.wo->at(m, n) * att.at(t, n);
            y.at(m, t) = acc;
        }
    return y;
}

template <typename T>
TensorT<T> bilinear_up2(const TensorT<T>& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    TensorT<T> y({c, 2 * h, 2 * w});
    auto tap = [](int dst, int n, int& lo, int& hi, double& wt) {
        const double src = (dst + 0.5) / 2.0 - 0.5;
        lo = static_cast<int>(std::floor(src));
        wt = src - lo;
        hi = lo + 1;
        if (lo < 0) { lo = hi = 0; wt = 0.0; }
        if (hi >= n) { lo = hi = n - 1; wt = 0.0; }
    };
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < 2 * h; ++i)
            for (int j = 0; j < 2 * w; ++j) {
                int il, ih, jl, jh;
                double wi, wj;
                tap(i, h, il, ih, wi);
                tap(j, w, jl, jh, wj);
                y.at(ci, i, j) = static_cast<T>(
                    (1 - wi) * ((1 - wj) * x.at(ci, il, jl) + wj * x.at(ci, il, jh)) +
                    wi * ((1 - wj) * x.at(ci, ih, jl) + wj * x.at(ci, ih, jh)));
            }
    return y;
}

template <typename T>
TensorT<T> max_pool2d(const TensorT<T>& x) {
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    TensorT<T> y({c, h / 2, w / 2});
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < h / 2; ++i)
            for (int j = 0; j < w / 2; ++j) {
                T m = x.at(ci, 2 * i, 2 * j);
                m = std::max(m, x.at(ci, 2 * i, 2 * j + 1));
                m = std::max(m, x.at(ci, 2 * i + 1, 2 * j));
                m = std::max(m, x.at(ci, 2 * i + 1, 2 * j + 1));
                y.at(ci, i, j) = m;
            }
    return y;
}

} // namespace dlr::ref

#endif
