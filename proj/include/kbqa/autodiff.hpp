#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kbqa/tensor.hpp"

namespace kbqa {

struct ParamId {
    std::size_t index = 0;
    friend bool operator==(ParamId, ParamId) = default;
};

// Named collection of trainable tensors. Ids are dense and stable.
template <typename T>
class ParamStore {
public:
    ParamId add(std::string name, Tensor<T> value);

    std::size_t size() const { return tensors_.size(); }
    Tensor<T>& operator[](ParamId id) { return tensors_.at(id.index); }
    const Tensor<T>& operator[](ParamId id) const { return tensors_.at(id.index); }
    const std::string& name(ParamId id) const { return names_.at(id.index); }
    std::optional<ParamId> find(std::string_view name) const;

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (std::size_t i = 0; i < tensors_.size(); ++i) out.add(names_[i], tensors_[i].template cast<U>());
        return out;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor<T>> tensors_;
};

// Gradients keyed by parameter id. Entries are allocated on first touch;
// materialize() makes every untouched parameter an explicit zero tensor.
template <typename T>
class GradientSet {
public:
    GradientSet() = default;
    explicit GradientSet(const ParamStore<T>& params);

    std::size_t size() const { return grads_.size(); }
    bool has(ParamId id) const { return id.index < grads_.size() && !grads_[id.index].empty(); }
    Tensor<T>& at(ParamId id);
    const Tensor<T>& get(ParamId id) const;

    void materialize();
    void clear();
    void accumulate(const GradientSet& other);

private:
    std::vector<Shape> shapes_;
    std::vector<Tensor<T>> grads_;
};

/// p <- p - learning_rate * g for every gradient entry present.
template <typename T>
void sgd_step(ParamStore<T>& params, const GradientSet<T>& grads, T learning_rate);

enum class OpKind : std::uint8_t {
    kInput,
    kParam,
    kGather,   // row `index` of a rank-2 tensor
    kMatVec,   // M x
    kMatTVec,  // M^T x
    kAdd,
    kSub,
    kMul,
    kScale,  // x * factor
    kConcat,
    kStack,  // rank-1 inputs -> rows of a matrix
    kTanh,
    kSigmoid,
    kExp,
    kRelu,  // max(x, 0)
    kSum,
    kMean,  // elementwise mean of the inputs
    kDot,
    kSoftmax,
};

std::string_view op_name(OpKind kind);

struct OpAttrs {
    std::size_t index = 0;
    double factor = 1.0;
};

/// Evaluates one primitive. Throws ShapeError naming the primitive on
/// nonconforming shapes.
template <typename T>
Tensor<T> forward_primitive(OpKind kind, std::span<const Tensor<T>* const> inputs, const OpAttrs& attrs = {});

template <typename T>
Tensor<T> forward_primitive(OpKind kind, std::initializer_list<const Tensor<T>*> inputs, const OpAttrs& attrs = {}) {
    return forward_primitive<T>(kind, std::span<const Tensor<T>* const>(inputs.begin(), inputs.size()), attrs);
}

struct Var {
    std::uint64_t tape = 0;
    std::size_t index = 0;
};

// Records primitive applications for one forward pass and runs reverse-mode
// differentiation over them. Confined to a single thread; parameters are read
// through a pointer and must outlive the tape.
template <typename T>
class Tape {
public:
    explicit Tape(const ParamStore<T>* params = nullptr);

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var input(Tensor<T> value);
    Var constant(T value) { return input(Tensor<T>::scalar(value)); }
    Var param(ParamId id);

    Var gather(Var table, std::size_t row);
    Var matvec(Var m, Var x);
    Var matvec_t(Var m, Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var x, double factor);
    Var concat(std::span<const Var> parts);
    Var concat(Var a, Var b);
    Var stack(std::span<const Var> rows);
    Var tanh(Var x);
    Var sigmoid(Var x);
    Var exp(Var x);
    Var relu(Var x);
    Var sum(Var x);
    Var mean(std::span<const Var> parts);
    Var dot(Var a, Var b);
    Var softmax(Var x);

    Var apply(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

    const Tensor<T>& value(Var v) const;
    std::size_t node_count() const { return nodes_.size(); }
    bool owns(Var v) const { return v.tape == id_ && v.index < nodes_.size(); }

    /// Gradients of a scalar loss w.r.t. every parameter of the store.
    /// Parameters not reached by the loss get explicit zero tensors.
    GradientSet<T> backward(Var loss) const;

    /// Adds d(loss)/d(param) into `grads`, allocating only touched entries.
    void backward_into(Var loss, GradientSet<T>& grads, T seed = T{1}) const;

    /// Recomputes every recorded operation from its inputs; true if all
    /// outputs are reproduced bit-for-bit.
    bool replay() const;

private:
    struct Node {
        OpKind kind;
        std::vector<std::size_t> inputs;
        OpAttrs attrs;
        Tensor<T> value;
        std::size_t param = 0;
        bool requires_grad = false;
    };

    Var push(Node node);
    const Tensor<T>& node_value(std::size_t i) const;

    std::uint64_t id_;
    const ParamStore<T>* params_;
    std::vector<Node> nodes_;
    std::vector<std::optional<std::size_t>> param_nodes_;
};

}  // namespace kbqa
