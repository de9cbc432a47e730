#include <algorithm>
#include <cmath>

#include "ecx/error.hpp"
#include "ecx/reference.hpp"
#include "ecx/stats.hpp"

namespace ecx::reference {

Matrix<double> rca(const Matrix<double>& x) {
    const std::size_t nc = x.rows(), np = x.cols();
    std::vector<double> row(nc, 0.0), col(np, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t p = 0; p < np; ++p) {
            row[c] += x(c, p);
            col[p] += x(c, p);
        }
    for (double v : row) total += v;
    Matrix<double> out(nc, np, 0.0);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t p = 0; p < np; ++p)
            if (row[c] > 0.0 && col[p] > 0.0) out(c, p) = (x(c, p) / row[c]) / (col[p] / total);
    return out;
}

FitnessComplexity fitness_complexity(const BinaryMatrix& m, const FcOptions& options) {
    const std::size_t nc = m.rows(), np = m.cols();
    std::vector<double> f(nc, 1.0), q(np, 1.0), fr(nc), qr(np);
    FitnessComplexity out;
    auto f_rank = stats::tied_rank(f), q_rank = stats::tied_rank(q);
    std::size_t stable = 0;
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        for (std::size_t c = 0; c < nc; ++c) {
            double s = 0.0;
            for (std::size_t p = 0; p < np; ++p)
                if (m(c, p)) s += q[p];
            fr[c] = s;
        }
        for (std::size_t p = 0; p < np; ++p) {
            double s = 0.0;
            for (std::size_t c = 0; c < nc; ++c)
                if (m(c, p)) s += 1.0 / f[c];
            if (s == 0.0) throw StructuralError("Mcp column " + std::to_string(p) + " is empty");
            qr[p] = 1.0 / s;
        }
        double sf = 0.0, sq = 0.0;
        for (double v : fr) sf += v;
        for (double v : qr) sq += v;
        std::vector<double> fn(nc), qn(np);
        for (std::size_t c = 0; c < nc; ++c) fn[c] = fr[c] / (sf / static_cast<double>(nc));
        for (std::size_t p = 0; p < np; ++p) qn[p] = qr[p] / (sq / static_cast<double>(np));
        double change = 0.0;
        for (std::size_t c = 0; c < nc; ++c) change = std::max(change, std::fabs(fn[c] - f[c]) / f[c]);
        for (std::size_t p = 0; p < np; ++p) change = std::max(change, std::fabs(qn[p] - q[p]) / q[p]);
        auto fr2 = stats::tied_rank(fn), qr2 = stats::tied_rank(qn);
        stable = (fr2 == f_rank && qr2 == q_rank) ? stable + 1 : 0;
        f_rank = fr2;
        q_rank = qr2;
        f = fn;
        q = qn;
        out.iterations = it;
        out.raw_fitness = fr;
        out.raw_complexity = qr;
        out.rank_stable = stable >= options.stable_rank_iterations;
        if (change == 0.0 || (change < options.tolerance && out.rank_stable)) {
            out.converged = out.rank_stable = true;
            break;
        }
    }
    out.fitness = f;
    out.complexity = q;
    return out;
}

double nodf(const BinaryMatrix& m) {
    auto paired = [](std::size_t n, std::size_t len, auto at) {
        std::vector<std::size_t> deg(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < len; ++k) deg[i] += at(i, k);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (deg[i] == deg[j] || deg[i] == 0 || deg[j] == 0) continue;
                std::size_t overlap = 0;
                for (std::size_t k = 0; k < len; ++k) overlap += at(i, k) & at(j, k);
                row += 100.0 * static_cast<double>(overlap) / static_cast<double>(std::min(deg[i], deg[j]));
            }
            s += row;
        }
        return s;
    };
    const std::size_t r = m.rows(), c = m.cols();
    const double rows = paired(r, c, [&](std::size_t i, std::size_t k) -> std::size_t { return m(i, k) ? 1 : 0; });
    const double cols = paired(c, r, [&](std::size_t i, std::size_t k) -> std::size_t { return m(k, i) ? 1 : 0; });
    return (rows + cols) / static_cast<double>(r * (r - 1) / 2 + c * (c - 1) / 2);
}

std::vector<ForecastResult> nwkr(std::span<const Vec2> queries, const AnalogueSet& set, double sigma) {
    std::vector<ForecastResult> out;
    for (const auto& q : queries) out.push_back(nwkr_predict(q, set, KernelSpec{sigma}));
    return out;
}

Binned bin_displacements(std::span<const Displacement> samples, const GridSpec& grid) {
    const std::size_t cells = grid.nx * grid.ny;
    Binned b{std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0), std::vector<std::size_t>(cells, 0)};
    for (const auto& s : samples) {
        const auto cell = grid.cell_of(s.x, s.y);
        if (!cell) throw ValidationError("sample lies outside the grid extents");
        const auto idx = cell->first * grid.ny + cell->second;
        b.sum_dx[idx] += s.dx;
        b.sum_dy[idx] += s.dy;
        ++b.count[idx];
    }
    return b;
}

}  // namespace ecx::reference
