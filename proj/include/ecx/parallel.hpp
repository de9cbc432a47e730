#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

namespace ecx::parallel {

/// Sets the number of OpenMP workers used by every kernel (0 keeps the runtime default).
void set_worker_count(int workers);
int worker_count();

/// Splits [0, n) into at most `max_chunks` contiguous ranges.
///
/// The split depends only on n and max_chunks. Kernels reduce per-chunk
/// partials in chunk order, so floating-point sums are bit-identical for
/// any worker count.
inline std::vector<std::pair<std::size_t, std::size_t>> chunk_ranges(std::size_t n,
                                                                     std::size_t max_chunks = 64) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (n == 0) return out;
    const std::size_t chunks = std::min(n, std::max<std::size_t>(1, max_chunks));
    const std::size_t base = n / chunks;
    const std::size_t extra = n % chunks;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < chunks; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        out.emplace_back(begin, begin + len);
        begin += len;
    }
    return out;
}

}  // namespace ecx::parallel
