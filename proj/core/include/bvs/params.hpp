#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bvs/linalg.hpp"

namespace bvs {

enum class ParamKind {
    Free,         ///< rows×cols entries, row-major
    LogCholesky,  ///< d×d SPD matrix stored as d(d+1)/2 log-Cholesky entries
};

struct ParamEntry {
    std::string name;
    std::size_t offset = 0;
    Index rows = 0;
    Index cols = 0;
    ParamKind kind = ParamKind::Free;

    std::size_t size() const {
        return kind == ParamKind::Free ? static_cast<std::size_t>(rows * cols)
                                       : static_cast<std::size_t>(rows * (rows + 1) / 2);
    }
};

/// Maps named parameters to contiguous, non-overlapping slices of a flat array.
class ParamLayout {
public:
    const ParamEntry& add(std::string name, Index rows, Index cols, ParamKind kind = ParamKind::Free);
    const ParamEntry& find(std::string_view name) const;
    bool contains(std::string_view name) const;

    std::size_t size() const { return size_; }
    const std::vector<ParamEntry>& entries() const { return entries_; }

    bool operator==(const ParamLayout& other) const;

private:
    std::vector<ParamEntry> entries_;
    std::size_t size_ = 0;
};

struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    void resize_to_layout() { values.assign(layout.size(), 0.0); }
    void set_matrix(std::string_view name, const Matrix& m);
    void set_spd(std::string_view name, const Matrix& spd);
    Matrix matrix(std::string_view name) const;
};

/// Lower-triangular fill (row-major over j ≤ i) with exp on the diagonal; returns L·Lᵀ.
template <class T>
Mat<T> constrain_spd(std::span<const T> slice, Index d) {
    using std::exp;
    if (static_cast<Index>(slice.size()) != d * (d + 1) / 2)
        throw DimMismatch("log-Cholesky slice has the wrong length");
    Mat<T> l = Mat<T>::Zero(d, d);
    std::size_t k = 0;
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j <= i; ++j, ++k) l(i, j) = (i == j) ? exp(slice[k]) : slice[k];
    return symmetrize<T>(Mat<T>(l * l.transpose()));
}

/// Inverse of constrain_spd.
std::vector<double> unconstrain_spd(const Matrix& spd);

template <class T>
Mat<T> read_matrix(const ParamLayout& layout, std::span<const T> values, std::string_view name) {
    const ParamEntry& e = layout.find(name);
    if (e.kind == ParamKind::LogCholesky) return constrain_spd<T>(values.subspan(e.offset, e.size()), e.rows);
    Mat<T> m(e.rows, e.cols);
    std::size_t k = e.offset;
    for (Index i = 0; i < e.rows; ++i)
        for (Index j = 0; j < e.cols; ++j) m(i, j) = values[k++];
    return m;
}

template <class T>
Vec<T> read_vector(const ParamLayout& layout, std::span<const T> values, std::string_view name) {
    const ParamEntry& e = layout.find(name);
    Vec<T> v(e.rows * e.cols);
    for (Index i = 0; i < v.size(); ++i) v(i) = values[e.offset + static_cast<std::size_t>(i)];
    return v;
}

}  // namespace bvs
