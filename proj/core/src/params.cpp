#include "bvs/params.hpp"

#include <cmath>

namespace bvs {

const ParamEntry& ParamLayout::add(std::string name, Index rows, Index cols, ParamKind kind) {
    if (contains(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
    if (rows < 1 || cols < 1) throw InvalidArgument("parameter '" + name + "' has an empty shape");
    if (kind == ParamKind::LogCholesky && rows != cols)
        throw DimMismatch("log-Cholesky parameter '" + name + "' must be square");
    ParamEntry e{std::move(name), size_, rows, cols, kind};
    size_ += e.size();
    entries_.push_back(std::move(e));
    return entries_.back();
}

const ParamEntry& ParamLayout::find(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw InvalidArgument("unknown parameter '" + std::string(name) + "'");
}

bool ParamLayout::contains(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

bool ParamLayout::operator==(const ParamLayout& other) const {
    if (size_ != other.size_ || entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& a = entries_[i];
        const auto& b = other.entries_[i];
        if (a.name != b.name || a.offset != b.offset || a.rows != b.rows || a.cols != b.cols || a.kind != b.kind)
            return false;
    }
    return true;
}

void ParamVector::set_matrix(std::string_view name, const Matrix& m) {
    const ParamEntry& e = layout.find(name);
    if (e.kind == ParamKind::LogCholesky) {
        set_spd(name, m);
        return;
    }
    if (m.rows() * m.cols() != e.rows * e.cols) throw DimMismatch("shape mismatch for '" + e.name + "'");
    std::size_t k = e.offset;
    for (Index i = 0; i < e.rows; ++i)
        for (Index j = 0; j < e.cols; ++j) values[k++] = m.rows() == e.rows ? m(i, j) : m(j, i);
}

void ParamVector::set_spd(std::string_view name, const Matrix& spd) {
    const ParamEntry& e = layout.find(name);
    if (e.kind != ParamKind::LogCholesky) throw InvalidArgument("'" + e.name + "' is not an SPD parameter");
    if (spd.rows() != e.rows || spd.cols() != e.rows) throw DimMismatch("shape mismatch for '" + e.name + "'");
    const std::vector<double> raw = unconstrain_spd(spd);
    std::copy(raw.begin(), raw.end(), values.begin() + static_cast<std::ptrdiff_t>(e.offset));
}

Matrix ParamVector::matrix(std::string_view name) const {
    return read_matrix<double>(layout, values, name);
}

std::vector<double> unconstrain_spd(const Matrix& spd) {
    const Matrix l = cholesky(spd);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(l.rows() * (l.rows() + 1) / 2));
    for (Index i = 0; i < l.rows(); ++i)
        for (Index j = 0; j <= i; ++j) out.push_back(i == j ? std::log(l(i, i)) : l(i, j));
    return out;
}

}  // namespace bvs
