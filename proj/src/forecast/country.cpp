#include <Eigen/Dense>

#include "ecx/error.hpp"
#include "ecx/forecast.hpp"

namespace ecx {

std::vector<double> reconstruct_fitness(const BinaryMatrix& mcp, std::span<const double> complexity) {
    if (complexity.size() != mcp.cols()) throw ValidationError("complexity length does not match the product count");
    std::vector<double> f(mcp.rows(), 0.0);
    for (std::size_t c = 0; c < mcp.rows(); ++c)
        for (std::size_t p = 0; p < mcp.cols(); ++p)
            if (mcp(c, p)) f[c] += complexity[p];
    return f;
}

GdpInversion invert_nrca_gdp(const Matrix<double>& nrca, std::span<const double> logprody) {
    if (logprody.size() != nrca.cols()) throw ValidationError("logPRODY length does not match the product count");
    if (nrca.empty()) throw ValidationError("empty nRCA matrix");
    // Rows of the system are products: sum_c nrca(c, p) g_c = L_p.
    Eigen::MatrixXd a(nrca.cols(), nrca.rows());
    for (std::size_t c = 0; c < nrca.rows(); ++c)
        for (std::size_t p = 0; p < nrca.cols(); ++p) a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = nrca(c, p);
    Eigen::VectorXd b(static_cast<Eigen::Index>(logprody.size()));
    for (std::size_t p = 0; p < logprody.size(); ++p) b(static_cast<Eigen::Index>(p)) = logprody[p];

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    const Eigen::VectorXd g = cod.solve(b);
    GdpInversion out;
    out.log_gdp.assign(g.data(), g.data() + g.size());
    out.residual_norm = (a * g - b).norm();
    out.rank = static_cast<std::size_t>(cod.rank());
    out.rank_deficient = out.rank < nrca.rows();
    return out;
}

}  // namespace ecx
