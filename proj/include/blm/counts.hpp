#pragma once
// Count-data containers: an immutable matrix of per-observation category
// counts, and the exceedance-count compression that turns per-row likelihood
// sums into sums over count levels.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blm {

// N x (D+1) matrix of non-negative event counts. Rows are observations,
// columns are categories; by convention the last column is the category the
// Beta-Liouville family models separately. Immutable after construction:
// reordering/filtering operations return new matrices.
class CountMatrix {
 public:
  CountMatrix(std::size_t rows, std::size_t categories, std::vector<std::uint32_t> data)
      : rows_(rows), cats_(categories), data_(std::move(data)) {
    if (cats_ < 2)
      throw std::invalid_argument("CountMatrix: need at least 2 categories");
    if (data_.size() != rows_ * cats_)
      throw std::invalid_argument("CountMatrix: data size does not match shape");
    partial_.resize(rows_);
    full_.resize(rows_);
    for (std::size_t n = 0; n < rows_; ++n) {
      std::uint64_t p = 0;
      for (std::size_t d = 0; d + 1 < cats_; ++d) p += (*this)(n, d);
      partial_[n] = p;
      full_[n] = p + (*this)(n, cats_ - 1);
    }
  }

  static CountMatrix from_rows(const std::vector<std::vector<std::uint32_t>>& rows) {
    if (rows.empty()) throw std::invalid_argument("CountMatrix: no rows");
    const std::size_t cats = rows.front().size();
    std::vector<std::uint32_t> flat;
    flat.reserve(rows.size() * cats);
    for (const auto& r : rows) {
      if (r.size() != cats)
        throw std::invalid_argument("CountMatrix: ragged rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return CountMatrix(rows.size(), cats, std::move(flat));
  }

  std::size_t rows() const { return rows_; }
  std::size_t categories() const { return cats_; }

  std::uint32_t operator()(std::size_t n, std::size_t d) const {
    return data_[n * cats_ + d];
  }
  std::span<const std::uint32_t> row(std::size_t n) const {
    return {data_.data() + n * cats_, cats_};
  }
  // Sum of the first D categories (all but the last column).
  std::uint64_t partial_row_sum(std::size_t n) const { return partial_[n]; }
  std::uint64_t full_row_sum(std::size_t n) const { return full_[n]; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto f : full_) t += f;
    return t;
  }

  bool operator==(const CountMatrix& o) const {
    return rows_ == o.rows_ && cats_ == o.cats_ && data_ == o.data_;
  }

 private:
  std::size_t rows_, cats_;
  std::vector<std::uint32_t> data_;
  std::vector<std::uint64_t> partial_, full_;
};

// Returns a copy of x with columns laid out in the order perm (an index
// permutation of 0..D); result(n, j) == x(n, perm[j]).
inline CountMatrix column_reorder(const CountMatrix& x, const std::vector<std::size_t>& perm) {
  const std::size_t cats = x.categories();
  if (perm.size() != cats)
    throw std::invalid_argument("column_reorder: permutation size mismatch");
  std::vector<bool> seen(cats, false);
  for (std::size_t p : perm) {
    if (p >= cats || seen[p])
      throw std::invalid_argument("column_reorder: not a permutation");
    seen[p] = true;
  }
  std::vector<std::uint32_t> flat(x.rows() * cats);
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t j = 0; j < cats; ++j) flat[n * cats + j] = x(n, perm[j]);
  return CountMatrix(x.rows(), cats, std::move(flat));
}

// Moves column idx to the last position, keeping the others in order.
inline CountMatrix move_column_last(const CountMatrix& x, std::size_t idx) {
  if (idx >= x.categories())
    throw std::invalid_argument("move_column_last: column out of range");
  std::vector<std::size_t> perm;
  perm.reserve(x.categories());
  for (std::size_t d = 0; d < x.categories(); ++d)
    if (d != idx) perm.push_back(d);
  perm.push_back(idx);
  return column_reorder(x, perm);
}

// Exceedance-count compression of a CountMatrix. For category d,
// u[d][z] = #{rows n : x_nd > z}; v_partial[z] = #{n : partial sum > z};
// v_full[z] = #{n : full sum > z}. Every per-row sum of the form
// sum_n sum_{i < k_n} f(theta + i) equals sum_z (#rows with k_n > z) f(theta+z),
// so likelihood work scales with distinct count levels instead of rows.
struct CompressedCounts {
  std::vector<std::vector<std::uint32_t>> u;  // one ragged row per category
  std::vector<std::uint32_t> v_partial;       // length = max partial row sum
  std::vector<std::uint32_t> v_full;          // length = max full row sum
  std::size_t categories = 0;
  std::size_t rows = 0;

  // Largest partial row sum (the z-range of v_partial).
  std::size_t z_partial() const { return v_partial.size(); }
  // Largest full row sum (the z-range of v_full).
  std::size_t z_full() const { return v_full.size(); }
  std::size_t z_max() const { return z_full(); }
};

// Builds the compression with column last_index playing the role of the
// final category (default: the matrix's own last column). Category order in
// `u` is: all other columns in their original order, then last_index.
inline CompressedCounts build_compressed(const CountMatrix& x,
                                         std::size_t last_index_in = static_cast<std::size_t>(-1)) {
  const std::size_t cats = x.categories();
  const std::size_t last = last_index_in == static_cast<std::size_t>(-1) ? cats - 1 : last_index_in;
  if (last >= cats)
    throw std::invalid_argument("build_compressed: last category out of range");

  // column order with `last` moved to the end
  std::vector<std::size_t> order;
  order.reserve(cats);
  for (std::size_t d = 0; d < cats; ++d)
    if (d != last) order.push_back(d);
  order.push_back(last);

  CompressedCounts cc;
  cc.categories = cats;
  cc.rows = x.rows();
  cc.u.resize(cats);

  // Exceedance counts via histogram + suffix sum: O(rows + max level).
  auto exceedance = [](const std::vector<std::uint64_t>& values) {
    std::uint64_t mx = 0;
    for (auto v : values) mx = v > mx ? v : mx;
    std::vector<std::uint32_t> hist(mx + 1, 0);
    for (auto v : values) ++hist[v];
    std::vector<std::uint32_t> out(mx);
    std::uint32_t acc = 0;
    for (std::size_t z = mx; z-- > 0;) {
      acc += hist[z + 1];
      out[z] = acc;  // #{values > z}
    }
    return out;
  };

  std::vector<std::uint64_t> col(x.rows());
  for (std::size_t j = 0; j < cats; ++j) {
    for (std::size_t n = 0; n < x.rows(); ++n) col[n] = x(n, order[j]);
    cc.u[j] = exceedance(col);
  }
  std::vector<std::uint64_t> partial(x.rows()), fullsum(x.rows());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const std::uint64_t f = x.full_row_sum(n);
    const std::uint64_t l = x(n, last);
    partial[n] = f - l;
    fullsum[n] = f;
  }
  cc.v_partial = exceedance(partial);
  cc.v_full = exceedance(fullsum);
  return cc;
}

}  // namespace blm
