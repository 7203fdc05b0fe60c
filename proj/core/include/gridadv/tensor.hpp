#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gridadv {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an explicit shape.
///
/// A tensor with an empty shape is a scalar holding one value. Every
/// dimension must be positive, except that a leading dimension of zero is
/// allowed for empty batches.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    /// 1-D tensor from a list of values.
    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);
    /// 2-D tensor from nested rows; every row must have the same length.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// 2-D element access.
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    /// Contiguous slice along the leading axis.
    std::span<double> row(std::size_t i);
    std::span<const double> row(std::size_t i) const;
    /// Number of values in one slice along the leading axis.
    std::size_t row_size() const;

    /// Same data with a new shape of equal element count.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);

/// Throws ShapeError naming both shapes unless they are equal.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

/// Standard product of a[m x k] and b[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// a[m x k] times the transpose of b[n x k].
Tensor matmul_transposed_b(const Tensor& a, const Tensor& b);
/// Transpose of a[k x m] times b[k x n].
Tensor matmul_transposed_a(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

Tensor relu(const Tensor& x);
/// Passes `upstream` where x > 0 and zero elsewhere.
Tensor relu_backward(const Tensor& x, const Tensor& upstream);

/// Row-wise softmax of logits[m x c], stabilised by subtracting the row max.
Tensor softmax_rows(const Tensor& logits);

/// Lowest index of the row maximum for every row of a 2-D tensor.
std::vector<std::size_t> argmax_rows(const Tensor& m);

/// How top_k_indices orders entries.
enum class RankBy { absolute, signed_value };

/// Indices of the k entries with the largest |v| (or largest v for
/// RankBy::signed_value). Ties go to the lowest index; the result is sorted
/// ascending. Throws BoundsError if k > v.size().
std::vector<std::size_t> top_k_indices(std::span<const double> v, std::size_t k,
                                       RankBy rank = RankBy::absolute);

/// Rows of `t` at `indices`, in that order, stacked along a new leading axis.
Tensor take_rows(const Tensor& t, std::span<const std::size_t> indices);

}  // namespace gridadv
