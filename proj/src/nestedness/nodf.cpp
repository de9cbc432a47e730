#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "ecx/error.hpp"
#include "ecx/nestedness.hpp"

namespace ecx {

namespace {

struct BitRows {
    std::size_t words = 0;
    std::vector<std::uint64_t> bits;
    std::vector<std::size_t> degree;

    std::span<const std::uint64_t> row(std::size_t i) const { return {bits.data() + i * words, words}; }
};

BitRows pack(const BinaryMatrix& m, bool by_column) {
    const std::size_t n = by_column ? m.cols() : m.rows();
    const std::size_t len = by_column ? m.rows() : m.cols();
    BitRows out;
    out.words = (len + 63) / 64;
    out.bits.assign(n * out.words, 0);
    out.degree.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < len; ++k) {
            const bool on = by_column ? m(k, i) != 0 : m(i, k) != 0;
            if (!on) continue;
            out.bits[i * out.words + k / 64] |= std::uint64_t{1} << (k % 64);
            ++out.degree[i];
        }
    }
    return out;
}

// Sum of paired nestedness over all unordered pairs. Per-row partials are
// summed in row order.
double paired_sum(const BitRows& b) {
    const auto n = static_cast<std::ptrdiff_t>(b.degree.size());
    std::vector<double> partial(b.degree.size(), 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ri = b.row(static_cast<std::size_t>(i));
        double s = 0.0;
        for (std::ptrdiff_t j = i + 1; j < n; ++j) {
            auto di = b.degree[static_cast<std::size_t>(i)], dj = b.degree[static_cast<std::size_t>(j)];
            if (di == dj || di == 0 || dj == 0) continue;
            const auto rj = b.row(static_cast<std::size_t>(j));
            std::size_t overlap = 0;
            for (std::size_t w = 0; w < b.words; ++w) overlap += static_cast<std::size_t>(std::popcount(ri[w] & rj[w]));
            s += 100.0 * static_cast<double>(overlap) / static_cast<double>(std::min(di, dj));
        }
        partial[static_cast<std::size_t>(i)] = s;
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

}  // namespace

NodfResult nodf(const BinaryMatrix& m) {
    if (m.rows() < 2 || m.cols() < 2) throw ValidationError("NODF needs at least a 2x2 matrix");
    const double row_sum = paired_sum(pack(m, false));
    const double col_sum = paired_sum(pack(m, true));
    NodfResult r;
    r.row_pairs = m.rows() * (m.rows() - 1) / 2;
    r.column_pairs = m.cols() * (m.cols() - 1) / 2;
    r.row_part = row_sum / static_cast<double>(r.row_pairs);
    r.column_part = col_sum / static_cast<double>(r.column_pairs);
    r.nodf = (row_sum + col_sum) / static_cast<double>(r.row_pairs + r.column_pairs);
    return r;
}

bool has_checkerboard(const BinaryMatrix& m) {
    const auto b = pack(m, false);
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            bool i_only = false, j_only = false;
            const auto ri = b.row(i), rj = b.row(j);
            for (std::size_t w = 0; w < b.words; ++w) {
                i_only = i_only || (ri[w] & ~rj[w]) != 0;
                j_only = j_only || (rj[w] & ~ri[w]) != 0;
            }
            if (i_only && j_only) return true;
        }
    }
    return false;
}

}  // namespace ecx
