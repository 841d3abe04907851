#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace fastrl {

inline constexpr std::size_t kDynamic = std::dynamic_extent;

namespace detail {

// Stores nothing when the extent is a compile-time constant.
template <std::size_t N>
struct Extent {
  constexpr Extent() = default;
  constexpr explicit Extent([[maybe_unused]] std::size_t n) { assert(n == N); }
  static constexpr std::size_t value() { return N; }
};

template <>
struct Extent<kDynamic> {
  constexpr Extent() = default;
  constexpr explicit Extent(std::size_t n) : n_(n) {}
  constexpr std::size_t value() const { return n_; }
  std::size_t n_ = 0;
};

}  // namespace detail

/// Two static extents are compatible when either is dynamic or both agree.
template <std::size_t A, std::size_t B>
inline constexpr bool kCompatibleExtent = A == kDynamic || B == kDynamic || A == B;

/// Non-owning row-major view over a rows x cols block. Either extent may be a
/// compile-time constant; kernels reject mismatched static extents at compile
/// time and check dynamic ones before touching data.
template <typename T, std::size_t Rows = kDynamic, std::size_t Cols = kDynamic>
class MatrixView {
 public:
  using element_type = T;
  using value_type = std::remove_cv_t<T>;
  static constexpr std::size_t static_rows = Rows;
  static constexpr std::size_t static_cols = Cols;

  constexpr MatrixView() = default;
  constexpr MatrixView(T* data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}

  // Allows T -> const T and static -> dynamic conversions.
  template <typename U, std::size_t R2, std::size_t C2>
    requires std::is_convertible_v<U (*)[], T (*)[]> && kCompatibleExtent<Rows, R2> &&
             kCompatibleExtent<Cols, C2> && (Rows == kDynamic || R2 != kDynamic) &&
             (Cols == kDynamic || C2 != kDynamic)
  constexpr MatrixView(const MatrixView<U, R2, C2>& other)  // NOLINT(google-explicit-constructor)
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()) {}

  constexpr std::size_t rows() const { return rows_.value(); }
  constexpr std::size_t cols() const { return cols_.value(); }
  constexpr std::size_t size() const { return rows() * cols(); }
  constexpr T* data() const { return data_; }

  constexpr T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows() && c < cols());
    return data_[r * cols() + c];
  }
  constexpr std::span<T, Cols> row(std::size_t r) const {
    assert(r < rows());
    return std::span<T, Cols>(data_ + r * cols(), cols());
  }
  constexpr std::span<T> flat() const { return {data_, size()}; }

  /// Rows [first, first + count) as a dynamic-row view.
  constexpr MatrixView<T, kDynamic, Cols> row_block(std::size_t first, std::size_t count) const {
    assert(first + count <= rows());
    return {data_ + first * cols(), count, cols()};
  }

 private:
  T* data_ = nullptr;
  [[no_unique_address]] detail::Extent<Rows> rows_{};
  [[no_unique_address]] detail::Extent<Cols> cols_{};
};

template <typename T, std::size_t R = kDynamic, std::size_t C = kDynamic>
using ConstMatrixView = MatrixView<const T, R, C>;

/// Owning row-major matrix. Shape is fixed when the object is created: static
/// extents live inline, dynamic ones on the heap. There is no resize.
template <typename T, std::size_t Rows = kDynamic, std::size_t Cols = kDynamic>
class Matrix {
  static constexpr bool kStatic = Rows != kDynamic && Cols != kDynamic;
  using Storage = std::conditional_t<kStatic, std::array<T, (kStatic ? Rows * Cols : 1)>, std::vector<T>>;

 public:
  using value_type = T;
  using element_type = T;
  static constexpr std::size_t static_rows = Rows;
  static constexpr std::size_t static_cols = Cols;

  constexpr Matrix() requires kStatic : storage_{} {}
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
    requires(!kStatic)
      : rows_(rows), cols_(cols), storage_(checked_count(rows, cols), fill) {
    if constexpr (Rows != kDynamic) {
      if (rows != Rows) throw std::invalid_argument("Matrix: row count does not match static extent");
    }
    if constexpr (Cols != kDynamic) {
      if (cols != Cols) throw std::invalid_argument("Matrix: column count does not match static extent");
    }
  }
  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values)
    requires(!kStatic)
      : Matrix(rows, cols) {
    if (values.size() != size()) throw std::invalid_argument("Matrix: initializer size mismatch");
    std::copy(values.begin(), values.end(), storage_.begin());
  }

  constexpr std::size_t rows() const { return rows_.value(); }
  constexpr std::size_t cols() const { return cols_.value(); }
  constexpr std::size_t size() const { return rows() * cols(); }
  T* data() { return storage_.data(); }
  const T* data() const { return storage_.data(); }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows() && c < cols());
    return storage_[r * cols() + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows() && c < cols());
    return storage_[r * cols() + c];
  }
  std::span<T> flat() { return {storage_.data(), size()}; }
  std::span<const T> flat() const { return {storage_.data(), size()}; }

  MatrixView<T, Rows, Cols> view() { return {data(), rows(), cols()}; }
  MatrixView<const T, Rows, Cols> view() const { return {data(), rows(), cols()}; }
  operator MatrixView<T, Rows, Cols>() { return view(); }              // NOLINT
  operator MatrixView<const T, Rows, Cols>() const { return view(); }  // NOLINT

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::equal(a.storage_.begin(), a.storage_.end(), b.storage_.begin());
  }

 private:
  static std::size_t checked_count(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("Matrix: dimensions must be positive");
    return rows * cols;
  }

  [[no_unique_address]] detail::Extent<Rows> rows_{};
  [[no_unique_address]] detail::Extent<Cols> cols_{};
  Storage storage_;
};

template <typename T, std::size_t R, std::size_t C>
MatrixView<T, R, C> as_view(Matrix<T, R, C>& m) { return m.view(); }
template <typename T, std::size_t R, std::size_t C>
MatrixView<const T, R, C> as_view(const Matrix<T, R, C>& m) { return m.view(); }
template <typename T, std::size_t R, std::size_t C>
MatrixView<T, R, C> as_view(MatrixView<T, R, C> v) { return v; }

/// Anything `as_view` accepts: owning matrices and views.
template <typename M>
concept MatrixLike = requires(M&& m) { as_view(m); };

template <typename M>
using view_of_t = decltype(as_view(std::declval<M&>()));

template <typename M>
using scalar_of_t = typename view_of_t<M>::value_type;

}  // namespace fastrl
