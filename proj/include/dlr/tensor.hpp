#ifndef DLR_TENSOR_HPP
#define DLR_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "dlr/common.hpp"

namespace dlr {

// Dense row-major tensor. Rank is dynamic; everything in the model is rank 1-3.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T(0));
    }
    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        require(data.size() == numel_of(shape), ErrorCode::shape_mismatch,
                "tensor data length does not match shape");
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            require(d > 0, ErrorCode::shape_mismatch, "non-positive tensor dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
    int rank() const { return static_cast<int>(shape.size()); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    // Row-major accessors for the ranks in use.
    T& at(int i) { return data[static_cast<std::size_t>(i)]; }
    T at(int i) const { return data[static_cast<std::size_t>(i)]; }
    T& at(int i, int j) { return data[static_cast<std::size_t>(i) * dim(1) + j]; }
    T at(int i, int j) const { return data[static_cast<std::size_t>(i) * dim(1) + j]; }
    T& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    T at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;

inline std::string shape_str(const std::vector<int>& s) {
    std::string r = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += "x";
        r += std::to_string(s[i]);
    }
    return r + "]";
}

// Storage precision tag used by the weight container.
enum class Dtype : unsigned char { f32 = 0, f16 = 1 };

// Named, ordered collection of learnable tensors. Iteration order is the
// insertion order, which makes serialization and optimizer traversal stable.
template <typename T>
class ParameterTreeT {
public:
    using TensorType = TensorT<T>;

    TensorType& insert(const std::string& name, TensorType t) {
        require(index_.find(name) == index_.end(), ErrorCode::invalid_argument,
                "duplicate parameter name: " + name);
        index_[name] = entries_.size();
        entries_.push_back({name, std::move(t)});
        return entries_.back().second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    TensorType& get(const std::string& name) {
        auto it = index_.find(name);
        require(it != index_.end(), ErrorCode::invalid_argument, "unknown parameter: " + name);
        return entries_[it->second].second;
    }
    const TensorType& get(const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), ErrorCode::invalid_argument, "unknown parameter: " + name);
        return entries_[it->second].second;
    }

    std::size_t size() const { return entries_.size(); }
    const std::pair<std::string, TensorType>& entry(std::size_t i) const { return entries_[i]; }
    std::pair<std::string, TensorType>& entry(std::size_t i) { return entries_[i]; }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (const auto& [name, t] : entries_) n += t.numel();
        return n;
    }

    template <typename U>
    ParameterTreeT<U> cast() const {
        ParameterTreeT<U> out;
        for (const auto& [name, t] : entries_) out.insert(name, t.template cast<U>());
        out.storage_dtype = storage_dtype;
        return out;
    }

    // Zero-filled tree with identical names and shapes; gradient accumulators.
    ParameterTreeT like_zeros() const {
        ParameterTreeT out;
        for (const auto& [name, t] : entries_) out.insert(name, TensorType(t.shape));
        out.storage_dtype = storage_dtype;
        return out;
    }

    Dtype storage_dtype = Dtype::f32;

private:
    std::vector<std::pair<std::string, TensorType>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

using ParameterTree = ParameterTreeT<float>;

} // namespace dlr

#endif
