#include "kbqa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace kbqa {

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

template <typename T>
Tensor<T>::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), T{0}) {
    for (auto dim : shape_) {
        if (dim == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    }
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
    for (auto dim : shape_) {
        if (dim == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    }
    if (shape_size(shape_) != data_.size()) {
        throw ShapeError("shape " + shape_string(shape_) + " does not hold " + std::to_string(data_.size()) +
                         " values");
    }
}

template <typename T>
Tensor<T> Tensor<T>::vector(std::vector<T> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

template <typename T>
Tensor<T> Tensor<T>::matrix(std::size_t rows, std::size_t cols, std::vector<T> values) {
    return Tensor({rows, cols}, std::move(values));
}

template <typename T>
T Tensor<T>::item() const {
    if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
}

template <typename T>
void Tensor<T>::fill(T value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool Tensor<T>::identical(const Tensor& other) const {
    if (shape_ != other.shape_) return false;
    return data_.empty() || std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(T)) == 0;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& v) {
    if (v.rank() != 1 || v.empty()) throw ShapeError("softmax expects a non-empty rank-1 tensor, got " +
                                                     shape_string(v.shape()));
    const T top = *std::max_element(v.values().begin(), v.values().end());
    Tensor<T> out(v.shape());
    T total{0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - top);
        total += out[i];
    }
    for (auto& x : out.values()) x /= total;
    return out;
}

namespace {

template <typename T>
void normalize_row(std::span<T> row) {
    T sq{0};
    for (T x : row) sq += x * x;
    if (sq == T{0}) return;
    const T inv = T{1} / std::sqrt(sq);
    for (T& x : row) x *= inv;
}

}  // namespace

template <typename T>
void l2_normalize_rows_inplace(Tensor<T>& m) {
    if (m.rank() != 2) throw ShapeError("l2_normalize_rows expects rank 2, got " + shape_string(m.shape()));
    for (std::size_t r = 0; r < m.rows(); ++r) normalize_row(m.row(r));
}

template <typename T>
void l2_normalize_rows_inplace(Tensor<T>& m, std::span<const std::size_t> rows) {
    if (m.rank() != 2) throw ShapeError("l2_normalize_rows expects rank 2, got " + shape_string(m.shape()));
    for (std::size_t r : rows) {
        if (r >= m.rows()) throw ShapeError("row index out of range in l2_normalize_rows");
        normalize_row(m.row(r));
    }
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> softmax(const Tensor<float>&);
template Tensor<double> softmax(const Tensor<double>&);
template void l2_normalize_rows_inplace(Tensor<float>&);
template void l2_normalize_rows_inplace(Tensor<double>&);
template void l2_normalize_rows_inplace(Tensor<float>&, std::span<const std::size_t>);
template void l2_normalize_rows_inplace(Tensor<double>&, std::span<const std::size_t>);

}  // namespace kbqa
