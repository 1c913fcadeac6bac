#ifndef DLR_OPS_HPP
#define DLR_OPS_HPP

#include <atomic>
#include <cstdint>
#include <vector>

#include "dlr/tensor.hpp"

namespace dlr::ops {

// ---------------------------------------------------------------------------
// Threading. Kernels parallelize over independent output slices, so results
// are bit-identical for any thread count. Nested calls (e.g. kernels invoked
// from a batch-parallel region) run serially inside the enclosing region.
// ---------------------------------------------------------------------------
void set_num_threads(int n);
int max_threads();
bool parallel_ok(std::size_t work);

// Pairwise attention-score computations performed since the last reset;
// incremented by heads*win^2 per window. Exposed for the attention-cost tests.
std::uint64_t attention_score_ops();
void reset_attention_score_ops();
void count_attention_score_ops(std::uint64_t n);

// ---------------------------------------------------------------------------
// GEMM, row-major. C is accumulated into (caller zeroes when needed).
// ---------------------------------------------------------------------------
template <typename T>
void gemm_nn(int m, int n, int k, T* c, const T* a, const T* b); // C[m,n] += A[m,k] B[k,n]
template <typename T>
void gemm_tn(int m, int n, int k, T* c, const T* a, const T* b); // C[m,n] += A[k,m]^T B[k,n]
template <typename T>
void gemm_nt(int m, int n, int k, T* c, const T* a, const T* b); // C[m,n] += A[m,k] B[n,k]^T

// ---------------------------------------------------------------------------
// Convolutions. Layouts: 1D maps are [C, W]; 2D maps are [C, H, W].
// conv1d weight [Cout, Cin, K]; tconv1d weight [Cin, Cout, K];
// depthwise weight [C, K]; conv2d weight [Cout, Cin, Kh, Kw].
// ---------------------------------------------------------------------------
inline int conv_out_len(int w, int k, int stride, int pad) {
    return (w + 2 * pad - k) / stride + 1;
}

template <typename T>
TensorT<T> conv1d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                          int stride, int pad);
template <typename T>
void conv1d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                     int stride, int pad, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db);

template <typename T>
TensorT<T> tconv1d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                           int stride);
template <typename T>
void tconv1d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                      int stride, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db);

template <typename T>
TensorT<T> depthwise1d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                               int pad);
template <typename T>
void depthwise1d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                          int pad, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db);

template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                          int pad);
template <typename T>
void conv2d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                     int pad, TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db);

// ---------------------------------------------------------------------------
// Pooling / resampling on [C, H, W].
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> max_pool2d_forward(const TensorT<T>& x, std::vector<int>& argmax);
template <typename T>
void max_pool2d_backward(const TensorT<T>& dy, const std::vector<int>& argmax,
                         const std::vector<int>& in_shape, TensorT<T>& dx);

// x2 bilinear upsampling with half-pixel sample centers and edge clamping.
template <typename T>
TensorT<T> bilinear_up2_forward(const TensorT<T>& x);
template <typename T>
void bilinear_up2_backward(const TensorT<T>& dy, const std::vector<int>& in_shape, TensorT<T>& dx);

// ---------------------------------------------------------------------------
// Elementwise activations (forward returns y; backward wants x and dy).
// ---------------------------------------------------------------------------
template <typename T> TensorT<T> relu_forward(const TensorT<T>& x);
template <typename T> void relu_backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx);
template <typename T> TensorT<T> gelu_forward(const TensorT<T>& x);
template <typename T> void gelu_backward(const TensorT<T>& x, const TensorT<T>& dy, TensorT<T>& dx);
template <typename T> TensorT<T> sigmoid_forward(const TensorT<T>& x);
template <typename T> void sigmoid_backward(const TensorT<T>& y, const TensorT<T>& dy, TensorT<T>& dx);

// ---------------------------------------------------------------------------
// Normalization / softmax.
// layer_norm_cols normalizes each column of a [C, W] map over its C features.
// softmax_rows applies a row-wise softmax on a [R, C] matrix.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> layer_norm_cols_forward(const TensorT<T>& x, const TensorT<T>& gamma,
                                   const TensorT<T>& beta, std::vector<T>& mean,
                                   std::vector<T>& inv_std);
template <typename T>
void layer_norm_cols_backward(const TensorT<T>& x, const TensorT<T>& gamma,
                              const std::vector<T>& mean, const std::vector<T>& inv_std,
                              const TensorT<T>& dy, TensorT<T>& dx, TensorT<T>& dgamma,
                              TensorT<T>& dbeta);

template <typename T>
TensorT<T> softmax_rows_forward(const TensorT<T>& x);
template <typename T>
void softmax_rows_backward(const TensorT<T>& y, const TensorT<T>& dy, TensorT<T>& dx);

// ---------------------------------------------------------------------------
// Global pooling over all spatial positions of [C, ...] -> [C].
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> global_avg_pool_forward(const TensorT<T>& x);
template <typename T>
void global_avg_pool_backward(const TensorT<T>& dy, const std::vector<int>& in_shape, TensorT<T>& dx);
template <typename T>
TensorT<T> global_max_pool_forward(const TensorT<T>& x, std::vector<int>& argmax);
template <typename T>
void global_max_pool_backward(const TensorT<T>& dy, const std::vector<int>& argmax,
                              const std::vector<int>& in_shape, TensorT<T>& dx);

// ---------------------------------------------------------------------------
// Fused windowed multi-head self-attention over a [C, W] map.
// Windows are contiguous, non-overlapping spans of `win` tokens; attention
// never crosses a window boundary. Q/K/V/probs are retained for backward.
// ---------------------------------------------------------------------------
template <typename T>
struct MhsaSaved {
    TensorT<T> q, k, v;     // [W, C] token-major
    TensorT<T> probs;       // [windows, heads, win, win]
    TensorT<T> att;         // [W, C] pre-output-projection
};

template <typename T>
struct MhsaWeights {
    const TensorT<T>*wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
};
template <typename T>
struct MhsaGrads {
    TensorT<T>*dwq, *dbq, *dwk, *dbk, *dwv, *dbv, *dwo, *dbo;
};

template <typename T>
TensorT<T> mhsa_window_forward(const TensorT<T>& x, const MhsaWeights<T>& w, int heads, int win,
                               MhsaSaved<T>& saved);
template <typename T>
void mhsa_window_backward(const TensorT<T>& x, const MhsaWeights<T>& w, int heads, int win,
                          const MhsaSaved<T>& saved, const TensorT<T>& dy, TensorT<T>& dx,
                          const MhsaGrads<T>& g);

// ---------------------------------------------------------------------------
// Non-overlapping window split of a [C, W] map into W/win maps of [C, win];
// window_merge is the exact inverse.
// ---------------------------------------------------------------------------
template <typename T>
std::vector<TensorT<T>> window_partition(const TensorT<T>& x, int win);
template <typename T>
TensorT<T> window_merge(const std::vector<TensorT<T>>& windows);

// ---------------------------------------------------------------------------
// Linear layer on token-major input: y[t, m] = sum_n w[m, n] x[t, n] + b[m].
// Accepts rank-1 [N] or rank-2 [T, N] inputs.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> linear_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b);
template <typename T>
void linear_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& dy,
                     TensorT<T>& dx, TensorT<T>& dw, TensorT<T>& db);

} // namespace dlr::ops

#endif
