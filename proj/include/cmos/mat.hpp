#pragma once

#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

namespace cmos {

/// Non-owning row-major matrix view over a flat double buffer.
template <typename T>
struct MatView {
    T* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;

    MatView() = default;
    MatView(T* d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {}
    template <typename U>
        requires(std::is_const_v<T> && std::is_same_v<std::remove_const_t<T>, U>)
    MatView(MatView<U> o) : data(o.data), rows(o.rows), cols(o.cols) {}

    T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<T> row(std::size_t r) const { return {data + r * cols, cols}; }
    std::span<T> flat() const { return {data, rows * cols}; }
    std::size_t size() const { return rows * cols; }
};

using Mat = MatView<double>;
using ConstMat = MatView<const double>;

/// Owning row-major matrix, used where a view has nothing to point into.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
    Mat view() { return {a.data(), rows, cols}; }
    ConstMat view() const { return {a.data(), rows, cols}; }
};

}  // namespace cmos
