#include "convbasis/mask.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "convbasis/error.hpp"

namespace convbasis {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

void require_n(std::size_t n) {
    if (n == 0)
        throw InvalidArgument("mask dimension must be positive");
}

std::vector<std::uint8_t> bits_of(const Matrix &m) {
    if (m.rows() != m.cols())
        throw InvalidArgument("mask matrix must be square");
    std::vector<std::uint8_t> bits(m.rows() * m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double x = m(i, j);
            if (x != 0.0 && x != 1.0)
                throw InvalidArgument("mask matrix entries must be 0 or 1");
            bits[i * m.cols() + j] = x == 1.0 ? 1 : 0;
        }
    return bits;
}

void validate_groups(const std::vector<std::size_t> &group,
                     const std::vector<std::vector<std::uint8_t>> &prototype,
                     const char *what) {
    const std::size_t n = group.size();
    require_n(n);
    const std::size_t r = prototype.size();
    if (r == 0 || r > n)
        throw InvalidArgument(std::string(what) + ": group count must be in [1, n]");
    std::vector<bool> seen(r, false);
    for (std::size_t g : group) {
        if (g >= r)
            throw InvalidArgument(std::string(what) + ": group id out of range");
        seen[g] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw InvalidArgument(std::string(what) + ": empty group in partition");
    for (const auto &p : prototype) {
        if (p.size() != n)
            throw InvalidArgument(std::string(what) + ": prototype length != n");
        for (auto b : p)
            if (b > 1)
                throw InvalidArgument(std::string(what) + ": prototype entries must be 0/1");
    }
}

} // namespace

MaskSpec MaskSpec::causal(std::size_t n) {
    require_n(n);
    return MaskSpec(CausalMask{n});
}

MaskSpec MaskSpec::row_change(std::size_t n, std::vector<std::vector<std::size_t>> added,
                              std::vector<std::vector<std::size_t>> removed) {
    require_n(n);
    if (added.size() != n || removed.size() != n)
        throw InvalidArgument("row_change: need one delta list per row");
    std::vector<bool> in_support(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        std::set<std::size_t> touched;
        for (std::size_t c : added[j]) {
            if (c >= n)
                throw InvalidArgument("row_change: column index out of range");
            if (!touched.insert(c).second)
                throw InvalidArgument("row_change: column " + std::to_string(c) +
                                      " referenced twice in row " + std::to_string(j));
            if (in_support[c])
                throw InvalidArgument("row_change: added column already in support");
        }
        for (std::size_t c : removed[j]) {
            if (c >= n)
                throw InvalidArgument("row_change: column index out of range");
            if (!touched.insert(c).second)
                throw InvalidArgument("row_change: column " + std::to_string(c) +
                                      " referenced twice in row " + std::to_string(j));
            if (!in_support[c])
                throw InvalidArgument("row_change: removed column not in support");
        }
        for (std::size_t c : added[j])
            in_support[c] = true;
        for (std::size_t c : removed[j])
            in_support[c] = false;
    }
    return MaskSpec(RowChangeMask{n, std::move(added), std::move(removed)});
}

MaskSpec MaskSpec::row_change_from_dense(const Matrix &m) {
    const auto bits = bits_of(m);
    const std::size_t n = m.rows();
    std::vector<std::vector<std::size_t>> added(n), removed(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < n; ++c) {
            const bool now = bits[j * n + c];
            const bool before = j > 0 && bits[(j - 1) * n + c];
            if (now && !before)
                added[j].push_back(c);
            else if (!now && before)
                removed[j].push_back(c);
        }
    return row_change(n, std::move(added), std::move(removed));
}

MaskSpec MaskSpec::continuous_row(std::vector<std::size_t> start,
                                  std::vector<std::size_t> end) {
    const std::size_t n = start.size();
    require_n(n);
    if (end.size() != n)
        throw InvalidArgument("continuous_row: start/end length mismatch");
    for (std::size_t i = 0; i < n; ++i)
        if (start[i] > end[i] || end[i] >= n)
            throw InvalidArgument("continuous_row: invalid range in row " +
                                  std::to_string(i));
    return MaskSpec(ContinuousRowMask{std::move(start), std::move(end)});
}

MaskSpec MaskSpec::distinct_columns(std::vector<std::size_t> group,
                                    std::vector<std::vector<std::uint8_t>> prototype) {
    validate_groups(group, prototype, "distinct_columns");
    return MaskSpec(DistinctColumnsMask{std::move(group), std::move(prototype)});
}

MaskSpec MaskSpec::distinct_rows(std::vector<std::size_t> group,
                                 std::vector<std::vector<std::uint8_t>> prototype) {
    validate_groups(group, prototype, "distinct_rows");
    return MaskSpec(DistinctRowsMask{std::move(group), std::move(prototype)});
}

MaskSpec MaskSpec::distinct_columns_from_dense(const Matrix &m) {
    const auto bits = bits_of(m);
    const std::size_t n = m.rows();
    std::map<std::vector<std::uint8_t>, std::size_t> ids;
    std::vector<std::size_t> group(n);
    std::vector<std::vector<std::uint8_t>> prototype;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::uint8_t> col(n);
        for (std::size_t i = 0; i < n; ++i)
            col[i] = bits[i * n + j];
        auto [it, inserted] = ids.try_emplace(col, prototype.size());
        if (inserted)
            prototype.push_back(col);
        group[j] = it->second;
    }
    return distinct_columns(std::move(group), std::move(prototype));
}

MaskSpec MaskSpec::distinct_rows_from_dense(const Matrix &m) {
    const auto bits = bits_of(m);
    const std::size_t n = m.rows();
    std::map<std::vector<std::uint8_t>, std::size_t> ids;
    std::vector<std::size_t> group(n);
    std::vector<std::vector<std::uint8_t>> prototype;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint8_t> row(bits.begin() + i * n, bits.begin() + (i + 1) * n);
        auto [it, inserted] = ids.try_emplace(row, prototype.size());
        if (inserted)
            prototype.push_back(row);
        group[i] = it->second;
    }
    return distinct_rows(std::move(group), std::move(prototype));
}

MaskSpec MaskSpec::dense(const Matrix &m) {
    return MaskSpec(DenseMask{m.rows(), bits_of(m)});
}

std::size_t MaskSpec::n() const noexcept {
    return std::visit(overloaded{
                          [](const CausalMask &m) { return m.n; },
                          [](const RowChangeMask &m) { return m.n; },
                          [](const ContinuousRowMask &m) { return m.start.size(); },
                          [](const DistinctColumnsMask &m) { return m.group.size(); },
                          [](const DistinctRowsMask &m) { return m.group.size(); },
                          [](const DenseMask &m) { return m.n; },
                      },
                      v_);
}

std::string MaskSpec::kind() const {
    return std::visit(overloaded{
                          [](const CausalMask &) { return std::string("causal"); },
                          [](const RowChangeMask &) { return std::string("row-change"); },
                          [](const ContinuousRowMask &) { return std::string("continuous-row"); },
                          [](const DistinctColumnsMask &) { return std::string("distinct-columns"); },
                          [](const DistinctRowsMask &) { return std::string("distinct-rows"); },
                          [](const DenseMask &) { return std::string("dense"); },
                      },
                      v_);
}

std::vector<std::size_t> MaskSpec::row_support(std::size_t i) const {
    const std::size_t n = this->n();
    if (i >= n)
        throw InvalidArgument("row index out of range");
    std::vector<std::size_t> out;
    std::visit(overloaded{
                   [&](const CausalMask &) {
                       for (std::size_t j = 0; j <= i; ++j)
                           out.push_back(j);
                   },
                   [&](const RowChangeMask &m) {
                       std::vector<bool> s(n, false);
                       for (std::size_t r = 0; r <= i; ++r) {
                           for (auto c : m.added[r])
                               s[c] = true;
                           for (auto c : m.removed[r])
                               s[c] = false;
                       }
                       for (std::size_t j = 0; j < n; ++j)
                           if (s[j])
                               out.push_back(j);
                   },
                   [&](const ContinuousRowMask &m) {
                       for (std::size_t j = m.start[i]; j <= m.end[i]; ++j)
                           out.push_back(j);
                   },
                   [&](const DistinctColumnsMask &m) {
                       for (std::size_t j = 0; j < n; ++j)
                           if (m.prototype[m.group[j]][i])
                               out.push_back(j);
                   },
                   [&](const DistinctRowsMask &m) {
                       const auto &p = m.prototype[m.group[i]];
                       for (std::size_t j = 0; j < n; ++j)
                           if (p[j])
                               out.push_back(j);
                   },
                   [&](const DenseMask &m) {
                       for (std::size_t j = 0; j < n; ++j)
                           if (m.bits[i * n + j])
                               out.push_back(j);
                   },
               },
               v_);
    return out;
}

Matrix MaskSpec::materialize() const {
    const std::size_t n = this->n();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j : row_support(i))
            out(i, j) = 1.0;
    return out;
}

bool MaskSpec::at(std::size_t i, std::size_t j) const {
    const std::size_t n = this->n();
    if (i >= n || j >= n)
        throw InvalidArgument("mask index out of range");
    return std::visit(overloaded{
                          [&](const CausalMask &) { return i >= j; },
                          [&](const RowChangeMask &) {
                              const auto s = row_support(i);
                              return std::binary_search(s.begin(), s.end(), j);
                          },
                          [&](const ContinuousRowMask &m) {
                              return m.start[i] <= j && j <= m.end[i];
                          },
                          [&](const DistinctColumnsMask &m) {
                              return m.prototype[m.group[j]][i] != 0;
                          },
                          [&](const DistinctRowsMask &m) {
                              return m.prototype[m.group[i]][j] != 0;
                          },
                          [&](const DenseMask &m) { return m.bits[i * n + j] != 0; },
                      },
                      v_);
}

Vector MaskSpec::column(std::size_t j) const {
    const std::size_t n = this->n();
    if (j >= n)
        throw InvalidArgument("mask_column: index " + std::to_string(j) +
                              " out of range for n=" + std::to_string(n));
    Vector out(n, 0.0);
    std::visit(overloaded{
                   [&](const CausalMask &) {
                       for (std::size_t i = j; i < n; ++i)
                           out[i] = 1.0;
                   },
                   [&](const RowChangeMask &m) {
                       bool on = false;
                       for (std::size_t i = 0; i < n; ++i) {
                           for (auto c : m.added[i])
                               if (c == j)
                                   on = true;
                           for (auto c : m.removed[i])
                               if (c == j)
                                   on = false;
                           out[i] = on ? 1.0 : 0.0;
                       }
                   },
                   [&](const ContinuousRowMask &m) {
                       for (std::size_t i = 0; i < n; ++i)
                           out[i] = (m.start[i] <= j && j <= m.end[i]) ? 1.0 : 0.0;
                   },
                   [&](const DistinctColumnsMask &m) {
                       const auto &p = m.prototype[m.group[j]];
                       for (std::size_t i = 0; i < n; ++i)
                           out[i] = p[i];
                   },
                   [&](const DistinctRowsMask &m) {
                       for (std::size_t i = 0; i < n; ++i)
                           out[i] = m.prototype[m.group[i]][j];
                   },
                   [&](const DenseMask &m) {
                       for (std::size_t i = 0; i < n; ++i)
                           out[i] = m.bits[i * n + j];
                   },
               },
               v_);
    return out;
}

std::size_t MaskSpec::group_count() const noexcept {
    if (auto *c = std::get_if<DistinctColumnsMask>(&v_))
        return c->prototype.size();
    if (auto *r = std::get_if<DistinctRowsMask>(&v_))
        return r->prototype.size();
    return 0;
}

std::size_t MaskSpec::row_change_cost(std::size_t j) const {
    const auto *m = std::get_if<RowChangeMask>(&v_);
    if (!m)
        throw InvalidArgument("row_change_cost: not a row-change mask");
    if (j >= m->n)
        throw InvalidArgument("row index out of range");
    return m->added[j].size() + m->removed[j].size();
}

} // namespace convbasis
