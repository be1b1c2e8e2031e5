#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kbqa {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Dense row-major tensor. Scalars are stored with shape {1}.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<T> values);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor scalar(T value) { return Tensor({1}, {value}); }
    static Tensor vector(std::vector<T> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<T> values);

    template <typename Rng>
    static Tensor uniform(Shape shape, T low, T high, Rng& rng) {
        Tensor out(std::move(shape));
        std::uniform_real_distribution<double> dist(low, high);
        for (auto& v : out.data_) v = static_cast<T>(dist(rng));
        return out;
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
    std::size_t cols() const { return rank() == 2 ? shape_[1] : size(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    T item() const;

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    void fill(T value);

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Bitwise equality of shape and stored values.
    bool identical(const Tensor& other) const;

private:
    Shape shape_;
    std::vector<T> data_;
};

/// Numerically stable softmax (max-subtracted) over a rank-1 tensor.
template <typename T>
Tensor<T> softmax(const Tensor<T>& v);

/// Scales every nonzero row to unit Euclidean norm; zero rows stay zero.
template <typename T>
void l2_normalize_rows_inplace(Tensor<T>& m);

template <typename T>
Tensor<T> l2_normalize_rows(Tensor<T> m) {
    l2_normalize_rows_inplace(m);
    return m;
}

/// Normalizes only the listed rows.
template <typename T>
void l2_normalize_rows_inplace(Tensor<T>& m, std::span<const std::size_t> rows);

}  // namespace kbqa
