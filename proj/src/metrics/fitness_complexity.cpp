#include <algorithm>
#include <cmath>

#include "ecx/error.hpp"
#include "ecx/metrics.hpp"
#include "ecx/stats.hpp"

namespace ecx {

namespace {

void check_structure(const BinaryMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw StructuralError("Fitness-Complexity on an empty matrix");
    for (std::size_t c = 0; c < m.rows(); ++c) {
        bool any = false;
        for (auto v : m.row(c)) any = any || v != 0;
        if (!any) throw StructuralError("Mcp row " + std::to_string(c) + " is empty (country exports nothing)");
    }
    for (std::size_t p = 0; p < m.cols(); ++p) {
        bool any = false;
        for (std::size_t c = 0; c < m.rows() && !any; ++c) any = m(c, p) != 0;
        if (!any) throw StructuralError("Mcp column " + std::to_string(p) + " is empty (product has no exporter)");
    }
}

double max_relative_change(std::span<const double> now, std::span<const double> before) {
    double worst = 0.0;
    for (std::size_t i = 0; i < now.size(); ++i) worst = std::max(worst, std::fabs(now[i] - before[i]) / before[i]);
    return worst;
}

void normalize_by_mean(std::span<const double> raw, std::span<double> out) {
    double s = 0.0;
    for (double v : raw) s += v;
    const double mean = s / static_cast<double>(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / mean;
}

}  // namespace

FitnessComplexity fitness_complexity(const BinaryMatrix& mcp, std::span<const double> initial_fitness,
                                     std::span<const double> initial_complexity, const FcOptions& options) {
    check_structure(mcp);
    const std::size_t nc = mcp.rows(), np = mcp.cols();
    if (initial_fitness.size() != nc || initial_complexity.size() != np)
        throw ValidationError("initial condition does not match matrix dimensions");
    for (double v : initial_fitness)
        if (!(v > 0.0)) throw ValidationError("initial fitness must be positive");
    for (double v : initial_complexity)
        if (!(v > 0.0)) throw ValidationError("initial complexity must be positive");

    const BinaryMatrix mt = mcp.transposed();
    FitnessComplexity out;
    std::vector<double> f(initial_fitness.begin(), initial_fitness.end());
    std::vector<double> q(initial_complexity.begin(), initial_complexity.end());
    std::vector<double> f_raw(nc), q_raw(np), f_next(nc), q_next(np);
    auto f_rank = stats::tied_rank(f);
    auto q_rank = stats::tied_rank(q);
    std::size_t stable = 0;

    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(nc); ++ci) {
            const auto c = static_cast<std::size_t>(ci);
            const auto row = mcp.row(c);
            double s = 0.0;
            for (std::size_t p = 0; p < np; ++p)
                if (row[p]) s += q[p];
            f_raw[c] = s;
        }
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(np); ++pi) {
            const auto p = static_cast<std::size_t>(pi);
            const auto col = mt.row(p);
            double s = 0.0;
            for (std::size_t c = 0; c < nc; ++c)
                if (col[c]) s += 1.0 / f[c];
            q_raw[p] = 1.0 / s;
        }
        normalize_by_mean(f_raw, f_next);
        normalize_by_mean(q_raw, q_next);

        const bool finite = std::all_of(f_next.begin(), f_next.end(), [](double v) { return v > 0.0 && std::isfinite(v); }) &&
                            std::all_of(q_next.begin(), q_next.end(), [](double v) { return v > 0.0 && std::isfinite(v); });
        const double change = finite ? std::max(max_relative_change(f_next, f), max_relative_change(q_next, q)) : 0.0;

        auto f_rank_next = stats::tied_rank(f_next);
        auto q_rank_next = stats::tied_rank(q_next);
        stable = (f_rank_next == f_rank && q_rank_next == q_rank) ? stable + 1 : 0;
        f_rank = std::move(f_rank_next);
        q_rank = std::move(q_rank_next);

        out.iterations = it;
        if (!finite) break;  // values degenerated; keep the last finite iterate
        f.swap(f_next);
        q.swap(q_next);
        out.raw_fitness = f_raw;
        out.raw_complexity = q_raw;
        out.rank_stable = stable >= options.stable_rank_iterations;
        // An exact fixed point reproduces itself forever, so its ranking cannot change either.
        if (change == 0.0 || (change < options.tolerance && out.rank_stable)) {
            out.converged = true;
            out.rank_stable = true;
            break;
        }
    }
    out.fitness = std::move(f);
    out.complexity = std::move(q);
    if (out.raw_fitness.empty()) {
        out.raw_fitness.assign(nc, 0.0);
        out.raw_complexity.assign(np, 0.0);
    }
    return out;
}

FitnessComplexity fitness_complexity(const BinaryMatrix& mcp, const FcOptions& options) {
    const std::vector<double> f(mcp.rows(), 1.0), q(mcp.cols(), 1.0);
    return fitness_complexity(mcp, f, q, options);
}

PrunedMatrix prune_empty(const BinaryMatrix& mcp) {
    std::vector<std::size_t> rows(mcp.rows()), cols(mcp.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::size_t> r2, c2;
        for (auto r : rows) {
            bool any = false;
            for (auto c : cols) any = any || mcp(r, c) != 0;
            if (any) r2.push_back(r);
        }
        for (auto c : cols) {
            bool any = false;
            for (auto r : r2) any = any || mcp(r, c) != 0;
            if (any) c2.push_back(c);
        }
        changed = r2.size() != rows.size() || c2.size() != cols.size();
        rows.swap(r2);
        cols.swap(c2);
    }
    PrunedMatrix out{BinaryMatrix(rows.size(), cols.size(), 0), rows, cols};
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out.m(i, j) = mcp(rows[i], cols[j]);
    return out;
}

FitnessComplexity fitness_complexity_pruned(const BinaryMatrix& mcp, const FcOptions& options) {
    const auto pruned = prune_empty(mcp);
    auto inner = fitness_complexity(pruned.m, options);
    FitnessComplexity out = inner;
    out.fitness.assign(mcp.rows(), 0.0);
    out.complexity.assign(mcp.cols(), 0.0);
    out.raw_fitness.assign(mcp.rows(), 0.0);
    out.raw_complexity.assign(mcp.cols(), 0.0);
    for (std::size_t i = 0; i < pruned.kept_rows.size(); ++i) {
        out.fitness[pruned.kept_rows[i]] = inner.fitness[i];
        out.raw_fitness[pruned.kept_rows[i]] = inner.raw_fitness[i];
    }
    for (std::size_t j = 0; j < pruned.kept_cols.size(); ++j) {
        out.complexity[pruned.kept_cols[j]] = inner.complexity[j];
        out.raw_complexity[pruned.kept_cols[j]] = inner.raw_complexity[j];
    }
    return out;
}

}  // namespace ecx
