#include "kbqa/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace kbqa {

// ---------------------------------------------------------------------------
// ParamStore / GradientSet

template <typename T>
ParamId ParamStore<T>::add(std::string name, Tensor<T> value) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(value));
    return ParamId{tensors_.size() - 1};
}

template <typename T>
std::optional<ParamId> ParamStore<T>::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return ParamId{i};
    }
    return std::nullopt;
}

template <typename T>
GradientSet<T>::GradientSet(const ParamStore<T>& params) : grads_(params.size()) {
    shapes_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) shapes_.push_back(params[ParamId{i}].shape());
}

template <typename T>
Tensor<T>& GradientSet<T>::at(ParamId id) {
    if (id.index >= grads_.size()) throw std::out_of_range("gradient id out of range");
    auto& g = grads_[id.index];
    if (g.empty()) g = Tensor<T>::zeros(shapes_[id.index]);
    return g;
}

template <typename T>
const Tensor<T>& GradientSet<T>::get(ParamId id) const {
    if (!has(id)) throw std::out_of_range("no gradient for parameter " + std::to_string(id.index));
    return grads_[id.index];
}

template <typename T>
void GradientSet<T>::materialize() {
    for (std::size_t i = 0; i < grads_.size(); ++i) at(ParamId{i});
}

template <typename T>
void GradientSet<T>::clear() {
    for (auto& g : grads_) g = Tensor<T>{};
}

template <typename T>
void GradientSet<T>::accumulate(const GradientSet& other) {
    if (other.grads_.size() != grads_.size()) throw ShapeError("gradient sets cover different parameter stores");
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        if (other.grads_[i].empty()) continue;
        auto& dst = at(ParamId{i});
        if (!dst.same_shape(other.grads_[i])) throw ShapeError("gradient shape mismatch in accumulate");
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += other.grads_[i][k];
    }
}

template <typename T>
void sgd_step(ParamStore<T>& params, const GradientSet<T>& grads, T learning_rate) {
    if (grads.size() != params.size()) throw ShapeError("sgd_step: gradient set does not match parameter store");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const ParamId id{i};
        if (!grads.has(id)) continue;
        auto& p = params[id];
        const auto& g = grads.get(id);
        if (!p.same_shape(g)) {
            throw ShapeError("sgd_step: parameter " + params.name(id) + " has shape " + shape_string(p.shape()) +
                             " but gradient has " + shape_string(g.shape()));
        }
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= learning_rate * g[k];
    }
}

// ---------------------------------------------------------------------------
// Primitives

std::string_view op_name(OpKind kind) {
    switch (kind) {
        case OpKind::kInput: return "input";
        case OpKind::kParam: return "param";
        case OpKind::kGather: return "gather";
        case OpKind::kMatVec: return "matvec";
        case OpKind::kMatTVec: return "matvec_t";
        case OpKind::kAdd: return "add";
        case OpKind::kSub: return "sub";
        case OpKind::kMul: return "mul";
        case OpKind::kScale: return "scale";
        case OpKind::kConcat: return "concat";
        case OpKind::kStack: return "stack";
        case OpKind::kTanh: return "tanh";
        case OpKind::kSigmoid: return "sigmoid";
        case OpKind::kExp: return "exp";
        case OpKind::kRelu: return "relu";
        case OpKind::kSum: return "sum";
        case OpKind::kMean: return "mean";
        case OpKind::kDot: return "dot";
        case OpKind::kSoftmax: return "softmax";
    }
    return "unknown";
}

namespace {

template <typename T>
[[noreturn]] void shape_fail(OpKind kind, std::span<const Tensor<T>* const> inputs, std::string_view why) {
    std::string msg(op_name(kind));
    msg += ": ";
    msg += why;
    msg += " (input shapes";
    for (const auto* t : inputs) msg += " " + shape_string(t->shape());
    msg += ")";
    throw ShapeError(msg);
}

template <typename T>
void expect_arity(OpKind kind, std::span<const Tensor<T>* const> in, std::size_t n) {
    if (in.size() != n) shape_fail(kind, in, "expected " + std::to_string(n) + " inputs");
}

template <typename T>
void expect_vector(OpKind kind, std::span<const Tensor<T>* const> in, std::size_t i) {
    if (in[i]->rank() != 1) shape_fail(kind, in, "input " + std::to_string(i) + " must be rank 1");
}

template <typename T>
void expect_same(OpKind kind, std::span<const Tensor<T>* const> in) {
    for (std::size_t i = 1; i < in.size(); ++i) {
        if (!in[i]->same_shape(*in[0])) shape_fail(kind, in, "inputs must have identical shapes");
    }
}

template <typename T, typename F>
Tensor<T> map_unary(const Tensor<T>& x, F f) {
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
}

template <typename T>
T sigmoid_value(T x) {
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

}  // namespace

template <typename T>
Tensor<T> forward_primitive(OpKind kind, std::span<const Tensor<T>* const> in, const OpAttrs& attrs) {
    for (const auto* t : in) {
        if (t == nullptr || t->empty()) shape_fail(kind, in, "empty input");
    }
    switch (kind) {
        case OpKind::kInput:
        case OpKind::kParam:
            shape_fail(kind, in, "leaf kinds are not primitives");
        case OpKind::kGather: {
            expect_arity(kind, in, 1);
            const auto& table = *in[0];
            if (table.rank() != 2) shape_fail(kind, in, "table must be rank 2");
            if (attrs.index >= table.rows()) {
                shape_fail(kind, in, "row " + std::to_string(attrs.index) + " out of range");
            }
            auto row = table.row(attrs.index);
            return Tensor<T>::vector(std::vector<T>(row.begin(), row.end()));
        }
        case OpKind::kMatVec: {
            expect_arity(kind, in, 2);
            const auto& m = *in[0];
            const auto& x = *in[1];
            if (m.rank() != 2 || x.rank() != 1 || m.cols() != x.size()) shape_fail(kind, in, "need [r x c] and [c]");
            Tensor<T> out({m.rows()});
            for (std::size_t r = 0; r < m.rows(); ++r) {
                T acc{0};
                auto row = m.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
                out[r] = acc;
            }
            return out;
        }
        case OpKind::kMatTVec: {
            expect_arity(kind, in, 2);
            const auto& m = *in[0];
            const auto& x = *in[1];
            if (m.rank() != 2 || x.rank() != 1 || m.rows() != x.size()) shape_fail(kind, in, "need [r x c] and [r]");
            Tensor<T> out({m.cols()});
            for (std::size_t r = 0; r < m.rows(); ++r) {
                auto row = m.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) out[c] += x[r] * row[c];
            }
            return out;
        }
        case OpKind::kAdd:
        case OpKind::kSub:
        case OpKind::kMul: {
            expect_arity(kind, in, 2);
            expect_same(kind, in);
            const auto& a = *in[0];
            const auto& b = *in[1];
            Tensor<T> out(a.shape());
            for (std::size_t i = 0; i < a.size(); ++i) {
                out[i] = kind == OpKind::kAdd ? a[i] + b[i] : kind == OpKind::kSub ? a[i] - b[i] : a[i] * b[i];
            }
            return out;
        }
        case OpKind::kScale: {
            expect_arity(kind, in, 1);
            const T f = static_cast<T>(attrs.factor);
            return map_unary(*in[0], [f](T v) { return v * f; });
        }
        case OpKind::kConcat: {
            if (in.empty()) shape_fail(kind, in, "needs at least one input");
            std::vector<T> out;
            for (std::size_t i = 0; i < in.size(); ++i) {
                expect_vector(kind, in, i);
                out.insert(out.end(), in[i]->values().begin(), in[i]->values().end());
            }
            return Tensor<T>::vector(std::move(out));
        }
        case OpKind::kStack: {
            if (in.empty()) shape_fail(kind, in, "needs at least one input");
            for (std::size_t i = 0; i < in.size(); ++i) expect_vector(kind, in, i);
            expect_same(kind, in);
            std::vector<T> out;
            out.reserve(in.size() * in[0]->size());
            for (const auto* t : in) out.insert(out.end(), t->values().begin(), t->values().end());
            return Tensor<T>::matrix(in.size(), in[0]->size(), std::move(out));
        }
        case OpKind::kTanh:
            expect_arity(kind, in, 1);
            return map_unary(*in[0], [](T v) { return std::tanh(v); });
        case OpKind::kSigmoid:
            expect_arity(kind, in, 1);
            return map_unary(*in[0], [](T v) { return sigmoid_value(v); });
        case OpKind::kExp:
            expect_arity(kind, in, 1);
            return map_unary(*in[0], [](T v) { return std::exp(v); });
        case OpKind::kRelu:
            expect_arity(kind, in, 1);
            return map_unary(*in[0], [](T v) { return v > T{0} ? v : T{0}; });
        case OpKind::kSum: {
            expect_arity(kind, in, 1);
            T acc{0};
            for (T v : in[0]->values()) acc += v;
            return Tensor<T>::scalar(acc);
        }
        case OpKind::kMean: {
            if (in.empty()) shape_fail(kind, in, "needs at least one input");
            expect_same(kind, in);
            Tensor<T> out(in[0]->shape());
            for (const auto* t : in) {
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*t)[i];
            }
            const T inv = T{1} / static_cast<T>(in.size());
            for (auto& v : out.values()) v *= inv;
            return out;
        }
        case OpKind::kDot: {
            expect_arity(kind, in, 2);
            expect_vector(kind, in, 0);
            expect_vector(kind, in, 1);
            expect_same(kind, in);
            T acc{0};
            for (std::size_t i = 0; i < in[0]->size(); ++i) acc += (*in[0])[i] * (*in[1])[i];
            return Tensor<T>::scalar(acc);
        }
        case OpKind::kSoftmax:
            expect_arity(kind, in, 1);
            expect_vector(kind, in, 0);
            return kbqa::softmax(*in[0]);
    }
    shape_fail(kind, in, "unknown primitive");
}

// ---------------------------------------------------------------------------
// Tape

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}

template <typename T>
Tape<T>::Tape(const ParamStore<T>* params)
    : id_(next_tape_id.fetch_add(1)), params_(params), param_nodes_(params ? params->size() : 0) {}

template <typename T>
Var Tape<T>::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{id_, nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::node_value(std::size_t i) const {
    const Node& n = nodes_[i];
    if (n.kind == OpKind::kParam) return (*params_)[ParamId{n.param}];
    return n.value;
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
    if (!owns(v)) throw std::invalid_argument("variable does not belong to this tape");
    return node_value(v.index);
}

template <typename T>
Var Tape<T>::input(Tensor<T> value) {
    Node n{OpKind::kInput, {}, {}, std::move(value)};
    return push(std::move(n));
}

template <typename T>
Var Tape<T>::param(ParamId id) {
    if (params_ == nullptr || id.index >= params_->size()) {
        throw std::invalid_argument("tape has no parameter " + std::to_string(id.index));
    }
    auto& slot = param_nodes_[id.index];
    if (slot) return Var{id_, *slot};
    Node n{OpKind::kParam, {}, {}, Tensor<T>{}};
    n.param = id.index;
    n.requires_grad = true;
    Var v = push(std::move(n));
    slot = v.index;
    return v;
}

template <typename T>
Var Tape<T>::apply(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs) {
    std::vector<const Tensor<T>*> values;
    std::vector<std::size_t> indices;
    values.reserve(inputs.size());
    indices.reserve(inputs.size());
    bool needs_grad = false;
    for (const Var& v : inputs) {
        if (!owns(v)) throw std::invalid_argument(std::string(op_name(kind)) + ": input from another tape");
        values.push_back(&node_value(v.index));
        indices.push_back(v.index);
        needs_grad = needs_grad || nodes_[v.index].requires_grad;
    }
    Tensor<T> out = forward_primitive<T>(kind, std::span<const Tensor<T>* const>(values), attrs);
    Node n{kind, std::move(indices), attrs, std::move(out)};
    n.requires_grad = needs_grad;
    return push(std::move(n));
}

template <typename T>
Var Tape<T>::gather(Var table, std::size_t row) {
    OpAttrs a;
    a.index = row;
    return apply(OpKind::kGather, std::span<const Var>(&table, 1), a);
}

template <typename T>
Var Tape<T>::matvec(Var m, Var x) {
    const Var in[] = {m, x};
    return apply(OpKind::kMatVec, in);
}

template <typename T>
Var Tape<T>::matvec_t(Var m, Var x) {
    const Var in[] = {m, x};
    return apply(OpKind::kMatTVec, in);
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
    const Var in[] = {a, b};
    return apply(OpKind::kAdd, in);
}

template <typename T>
Var Tape<T>::sub(Var a, Var b) {
    const Var in[] = {a, b};
    return apply(OpKind::kSub, in);
}

template <typename T>
Var Tape<T>::mul(Var a, Var b) {
    const Var in[] = {a, b};
    return apply(OpKind::kMul, in);
}

template <typename T>
Var Tape<T>::scale(Var x, double factor) {
    OpAttrs a;
    a.factor = factor;
    return apply(OpKind::kScale, std::span<const Var>(&x, 1), a);
}

template <typename T>
Var Tape<T>::concat(std::span<const Var> parts) {
    return apply(OpKind::kConcat, parts);
}

template <typename T>
Var Tape<T>::concat(Var a, Var b) {
    const Var in[] = {a, b};
    return apply(OpKind::kConcat, in);
}

template <typename T>
Var Tape<T>::stack(std::span<const Var> rows) {
    return apply(OpKind::kStack, rows);
}

template <typename T>
Var Tape<T>::tanh(Var x) {
    return apply(OpKind::kTanh, std::span<const Var>(&x, 1));
}

template <typename T>
Var Tape<T>::sigmoid(Var x) {
    return apply(OpKind::kSigmoid, std::span<const Var>(&x, 1));
}

template <typename T>
Var Tape<T>::exp(Var x) {
    return apply(OpKind::kExp, std::span<const Var>(&x, 1));
}

template <typename T>
Var Tape<T>::relu(Var x) {
    return apply(OpKind::kRelu, std::span<const Var>(&x, 1));
}

template <typename T>
Var Tape<T>::sum(Var x) {
    return apply(OpKind::kSum, std::span<const Var>(&x, 1));
}

template <typename T>
Var Tape<T>::mean(std::span<const Var> parts) {
    return apply(OpKind::kMean, parts);
}

template <typename T>
Var Tape<T>::dot(Var a, Var b) {
    const Var in[] = {a, b};
    return apply(OpKind::kDot, in);
}

template <typename T>
Var Tape<T>::softmax(Var x) {
    return apply(OpKind::kSoftmax, std::span<const Var>(&x, 1));
}

template <typename T>
GradientSet<T> Tape<T>::backward(Var loss) const {
    if (params_ == nullptr) throw std::invalid_argument("backward: tape has no parameter store");
    GradientSet<T> grads(*params_);
    backward_into(loss, grads);
    grads.materialize();
    return grads;
}

template <typename T>
void Tape<T>::backward_into(Var loss, GradientSet<T>& grads, T seed) const {
    if (!owns(loss)) throw std::invalid_argument("backward: loss is not recorded on this tape");
    if (node_value(loss.index).size() != 1) {
        throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                    shape_string(node_value(loss.index).shape()));
    }
    if (params_ != nullptr && grads.size() != params_->size()) {
        throw std::invalid_argument("backward: gradient set does not match the tape's parameter store");
    }

    std::vector<Tensor<T>> node_grads(loss.index + 1);
    auto slot = [&](std::size_t i) -> Tensor<T>* {
        const Node& n = nodes_[i];
        if (!n.requires_grad) return nullptr;
        if (n.kind == OpKind::kParam) return &grads.at(ParamId{n.param});
        auto& g = node_grads[i];
        if (g.empty()) g = Tensor<T>::zeros(n.value.shape());
        return &g;
    };

    if (!nodes_[loss.index].requires_grad) return;
    node_grads[loss.index] = Tensor<T>::scalar(seed);

    for (std::size_t idx = loss.index + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        if (n.kind == OpKind::kInput || n.kind == OpKind::kParam) continue;
        const Tensor<T>& g = node_grads[idx];
        if (g.empty()) continue;
        const Tensor<T>& y = n.value;
        auto in_value = [&](std::size_t k) -> const Tensor<T>& { return node_value(n.inputs[k]); };

        switch (n.kind) {
            case OpKind::kGather: {
                if (auto* gt = slot(n.inputs[0])) {
                    auto row = gt->row(n.attrs.index);
                    for (std::size_t c = 0; c < row.size(); ++c) row[c] += g[c];
                }
                break;
            }
            case OpKind::kMatVec: {
                const auto& m = in_value(0);
                const auto& x = in_value(1);
                if (auto* gm = slot(n.inputs[0])) {
                    for (std::size_t r = 0; r < m.rows(); ++r) {
                        auto row = gm->row(r);
                        for (std::size_t c = 0; c < row.size(); ++c) row[c] += g[r] * x[c];
                    }
                }
                if (auto* gx = slot(n.inputs[1])) {
                    for (std::size_t r = 0; r < m.rows(); ++r) {
                        auto row = m.row(r);
                        for (std::size_t c = 0; c < row.size(); ++c) (*gx)[c] += row[c] * g[r];
                    }
                }
                break;
            }
            case OpKind::kMatTVec: {
                const auto& m = in_value(0);
                const auto& x = in_value(1);
                if (auto* gm = slot(n.inputs[0])) {
                    for (std::size_t r = 0; r < m.rows(); ++r) {
                        auto row = gm->row(r);
                        for (std::size_t c = 0; c < row.size(); ++c) row[c] += x[r] * g[c];
                    }
                }
                if (auto* gx = slot(n.inputs[1])) {
                    for (std::size_t r = 0; r < m.rows(); ++r) {
                        auto row = m.row(r);
                        T acc{0};
                        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * g[c];
                        (*gx)[r] += acc;
                    }
                }
                break;
            }
            case OpKind::kAdd:
            case OpKind::kSub: {
                if (auto* ga = slot(n.inputs[0])) {
                    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
                }
                if (auto* gb = slot(n.inputs[1])) {
                    const T sign = n.kind == OpKind::kAdd ? T{1} : T{-1};
                    for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += sign * g[i];
                }
                break;
            }
            case OpKind::kMul: {
                const auto& a = in_value(0);
                const auto& b = in_value(1);
                if (auto* ga = slot(n.inputs[0])) {
                    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b[i];
                }
                if (auto* gb = slot(n.inputs[1])) {
                    for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a[i];
                }
                break;
            }
            case OpKind::kScale: {
                if (auto* gx = slot(n.inputs[0])) {
                    const T f = static_cast<T>(n.attrs.factor);
                    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += f * g[i];
                }
                break;
            }
            case OpKind::kConcat: {
                std::size_t offset = 0;
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    const std::size_t len = in_value(k).size();
                    if (auto* gx = slot(n.inputs[k])) {
                        for (std::size_t i = 0; i < len; ++i) (*gx)[i] += g[offset + i];
                    }
                    offset += len;
                }
                break;
            }
            case OpKind::kStack: {
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    if (auto* gx = slot(n.inputs[k])) {
                        auto row = g.row(k);
                        for (std::size_t i = 0; i < row.size(); ++i) (*gx)[i] += row[i];
                    }
                }
                break;
            }
            case OpKind::kTanh: {
                if (auto* gx = slot(n.inputs[0])) {
                    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * (T{1} - y[i] * y[i]);
                }
                break;
            }
            case OpKind::kSigmoid: {
                if (auto* gx = slot(n.inputs[0])) {
                    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * y[i] * (T{1} - y[i]);
                }
                break;
            }
            case OpKind::kExp: {
                if (auto* gx = slot(n.inputs[0])) {
                    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * y[i];
                }
                break;
            }
            case OpKind::kRelu: {
                const auto& x = in_value(0);
                if (auto* gx = slot(n.inputs[0])) {
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        if (x[i] > T{0}) (*gx)[i] += g[i];
                    }
                }
                break;
            }
            case OpKind::kSum: {
                if (auto* gx = slot(n.inputs[0])) {
                    for (auto& v : gx->values()) v += g[0];
                }
                break;
            }
            case OpKind::kMean: {
                const T inv = T{1} / static_cast<T>(n.inputs.size());
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    if (auto* gx = slot(n.inputs[k])) {
                        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += inv * g[i];
                    }
                }
                break;
            }
            case OpKind::kDot: {
                const auto& a = in_value(0);
                const auto& b = in_value(1);
                if (auto* ga = slot(n.inputs[0])) {
                    for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += g[0] * b[i];
                }
                if (auto* gb = slot(n.inputs[1])) {
                    for (std::size_t i = 0; i < b.size(); ++i) (*gb)[i] += g[0] * a[i];
                }
                break;
            }
            case OpKind::kSoftmax: {
                if (auto* gx = slot(n.inputs[0])) {
                    T inner{0};
                    for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * y[i];
                    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += y[i] * (g[i] - inner);
                }
                break;
            }
            case OpKind::kInput:
            case OpKind::kParam:
                break;
        }
    }
}

template <typename T>
bool Tape<T>::replay() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.kind == OpKind::kInput || n.kind == OpKind::kParam) continue;
        std::vector<const Tensor<T>*> values;
        for (std::size_t k : n.inputs) {
            if (k >= i) return false;
            values.push_back(&node_value(k));
        }
        const Tensor<T> again = forward_primitive<T>(n.kind, std::span<const Tensor<T>* const>(values), n.attrs);
        if (!again.identical(n.value)) return false;
    }
    return true;
}

template class ParamStore<float>;
template class ParamStore<double>;
template class GradientSet<float>;
template class GradientSet<double>;
template class Tape<float>;
template class Tape<double>;
template void sgd_step(ParamStore<float>&, const GradientSet<float>&, float);
template void sgd_step(ParamStore<double>&, const GradientSet<double>&, double);
template Tensor<float> forward_primitive(OpKind, std::span<const Tensor<float>* const>, const OpAttrs&);
template Tensor<double> forward_primitive(OpKind, std::span<const Tensor<double>* const>, const OpAttrs&);

}  // namespace kbqa
