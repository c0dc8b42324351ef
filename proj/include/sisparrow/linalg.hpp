#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sisparrow/errors.hpp"
#include "sisparrow/types.hpp"

namespace sisparrow {

/// (X + X^H) / 2
template <class Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> h = (x + x.adjoint()) * typename Eigen::NumTraits<Scalar>::Real(0.5);
    return h;
}

/// Real Frobenius inner product Re tr(A^H B).
template <class DA, class DB>
auto frobenius_inner(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b)
{
    return std::real((a.conjugate().cwiseProduct(b)).sum());
}

template <class Derived>
auto min_eigenvalue(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(x, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw Error("eigenvalue decomposition failed");
    return es.eigenvalues()(0);
}

/// Nearest positive semidefinite matrix in Frobenius norm: negative
/// eigenvalues of the Hermitian argument are clamped to zero.
template <class Derived>
auto psd_project(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    using RealScalar = typename Eigen::NumTraits<Scalar>::Real;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(x);
    if (es.info() != Eigen::Success)
        throw Error("eigenvalue decomposition failed in PSD projection");
    Vector<RealScalar> d = es.eigenvalues().cwiseMax(RealScalar(0));
    Matrix<Scalar> out = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
    return hermitian_part(out);
}

/// Hermitian square root with negative eigenvalues clamped to zero first.
template <class Derived>
auto hermitian_sqrt(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    using RealScalar = typename Eigen::NumTraits<Scalar>::Real;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(x);
    if (es.info() != Eigen::Success)
        throw Error("eigenvalue decomposition failed in matrix square root");
    Vector<RealScalar> d = es.eigenvalues().cwiseMax(RealScalar(0)).cwiseSqrt();
    Matrix<Scalar> out = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
    return hermitian_part(out);
}

/// True when the Hermitian matrix admits a Cholesky factorization.
template <class Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    Eigen::LLT<Matrix<Scalar>> llt(x);
    return llt.info() == Eigen::Success;
}

/// Wrap an angle to [-pi, pi).
inline Real wrap_angle(Real mu)
{
    Real w = std::fmod(mu + pi, 2 * pi);
    if (w < 0)
        w += 2 * pi;
    return w - pi;
}

/// min over integers k of |a - b + 2 k pi|.
inline Real wrap_distance(Real a, Real b)
{
    return std::abs(wrap_angle(a - b));
}

} // namespace sisparrow
