#ifndef DLR_MODEL_UTIL_HPP
#define DLR_MODEL_UTIL_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "dlr/rng.hpp"
#include "dlr/tape.hpp"
#include "dlr/tensor.hpp"

namespace dlr {

enum class ParamKind { weight, bias, norm_scale, norm_offset };

struct ParamSpec {
    std::string name;
    std::vector<int> shape;
    ParamKind kind = ParamKind::weight;
    int fan_in = 0; // input connections per output unit; weights only
};

// Fan-in-scaled uniform init U(-a, a) with a = sqrt(1/fan_in) for weights;
// zeros for biases and norm offsets, ones for norm scales. Draw order is the
// spec order, so a seed pins the whole tree.
inline ParameterTree init_parameters(const std::vector<ParamSpec>& specs, Rng& rng) {
    ParameterTree tree;
    for (const ParamSpec& s : specs) {
        Tensor t(s.shape);
        switch (s.kind) {
        case ParamKind::weight: {
            require(s.fan_in > 0, ErrorCode::invalid_argument,
                    "init: weight without fan-in: " + s.name);
            const double bound = std::sqrt(1.0 / static_cast<double>(s.fan_in));
            for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
            break;
        }
        case ParamKind::bias:
        case ParamKind::norm_offset:
            break; // zero
        case ParamKind::norm_scale:
            t.fill(1.0f);
            break;
        }
        tree.insert(s.name, std::move(t));
    }
    return tree;
}

// Validates that a loaded tree carries exactly the tensors a spec expects.
inline void check_tree_matches(const ParameterTree& tree, const std::vector<ParamSpec>& specs,
                               const std::string& what) {
    require(tree.size() == specs.size(), ErrorCode::shape_mismatch,
            what + ": expected " + std::to_string(specs.size()) + " tensors, file has " +
                std::to_string(tree.size()));
    for (const ParamSpec& s : specs) {
        require(tree.contains(s.name), ErrorCode::shape_mismatch, what + ": missing " + s.name);
        const Tensor& t = tree.get(s.name);
        require(t.shape == s.shape, ErrorCode::shape_mismatch,
                what + ": " + s.name + " has shape " + shape_str(t.shape) + ", expected " +
                    shape_str(s.shape));
    }
}

// Registers every tensor of a tree as a tape leaf and resolves names to ids.
template <typename T>
class BoundTree {
public:
    BoundTree(TapeT<T>& tape, const ParameterTreeT<T>& tree, bool requires_grad) {
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const auto& [name, tensor] = tree.entry(i);
            ids_.emplace(name, tape.leaf(&tensor, requires_grad));
        }
    }

    int operator[](const std::string& name) const {
        auto it = ids_.find(name);
        require(it != ids_.end(), ErrorCode::invalid_argument, "unbound parameter: " + name);
        return it->second;
    }

    const std::unordered_map<std::string, int>& ids() const { return ids_; }

private:
    std::unordered_map<std::string, int> ids_;
};

} // namespace dlr

#endif
