#pragma once

// Subspace-embedding verdicts: orthonormalization, sketch application, and
// the extremal singular values of ΠQ.

#include "ose/dense.hpp"
#include "ose/errors.hpp"
#include "ose/sparse.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ose {

inline constexpr double kDefaultOrthoTol = 1e-10;

/// Orthonormal basis of A's column span via modified Gram-Schmidt with one
/// re-orthogonalization pass per column. Throws RankDeficient when a pivot
/// norm drops below `tol`.
inline DenseMatrix orthonormal_basis(const DenseMatrix& a, double tol = kDefaultOrthoTol) {
    const std::size_t n = a.rows();
    const std::size_t d = a.cols();
    detail::require<DimensionMismatch>(n >= d, "orthonormal_basis: need rows >= cols");
    std::vector<std::vector<double>> q;
    q.reserve(d);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> v = a.column(c);
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& prev : q) {
                const double proj = dot(prev, v);
                for (std::size_t i = 0; i < n; ++i) v[i] -= proj * prev[i];
            }
        }
        const double norm = std::sqrt(dot(v, v));
        if (norm < tol)
            throw RankDeficient("orthonormal_basis: pivot norm " + std::to_string(norm) + " below tolerance at column " +
                                std::to_string(c));
        for (double& x : v) x /= norm;
        q.push_back(std::move(v));
    }
    DenseMatrix out(n, d);
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 0; r < n; ++r) out(r, c) = q[c][r];
    return out;
}

/// Exact product ΠA; work is (entries of Π) × d.
inline DenseMatrix sketch_apply(const SparseColMatrix& p, const DenseMatrix& a) {
    detail::require<DimensionMismatch>(p.cols() == a.rows(), "sketch_apply: Π has " + std::to_string(p.cols()) +
                                                                 " columns but A has " + std::to_string(a.rows()) +
                                                                 " rows");
    DenseMatrix out(p.rows(), a.cols());
    for (std::size_t j = 0; j < p.cols(); ++j) {
        auto src = a.row(j);
        for (const auto& e : p.column(j)) {
            auto dst = out.row(e.row);
            for (std::size_t c = 0; c < src.size(); ++c) dst[c] += e.value * src[c];
        }
    }
    return out;
}

struct DistortionReport {
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double eps_hat = 0.0;

    /// True iff every singular value lies in [1−eps, 1+eps].
    bool within(double eps) const noexcept { return sigma_min >= 1.0 - eps && sigma_max <= 1.0 + eps; }
};

/// Extremal singular values of an already-sketched matrix B = ΠQ, from the
/// eigenvalues of BᵀB.
inline DistortionReport singular_extremes(const DenseMatrix& b) {
    const std::size_t d = b.cols();
    if (d == 0) return {1.0, 1.0, 0.0};
    const DenseMatrix g = gram(b);
    Eigen::MatrixXd gm(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) gm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gm, Eigen::EigenvaluesOnly);
    detail::require<Error>(solver.info() == Eigen::Success, "singular_extremes: eigen-solver did not converge");
    const auto& ev = solver.eigenvalues();
    DistortionReport rep;
    rep.sigma_min = std::sqrt(std::max(0.0, ev.minCoeff()));
    rep.sigma_max = std::sqrt(std::max(0.0, ev.maxCoeff()));
    rep.eps_hat = std::max({1.0 - rep.sigma_min, rep.sigma_max - 1.0, 0.0});
    return rep;
}

inline constexpr double kOrthonormalTol = 1e-8;

inline DistortionReport distortion(const SparseColMatrix& p, const DenseMatrix& q) {
    if (orthonormality_defect(q) > kOrthonormalTol)
        throw NotOrthonormal("distortion: QᵀQ differs from identity by more than 1e-8");
    return singular_extremes(sketch_apply(p, q));
}

inline bool is_embedding(const SparseColMatrix& p, const DenseMatrix& q, double eps) {
    return distortion(p, q).within(eps);
}

} // namespace ose
