#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace sisparrow {

using Index = Eigen::Index;

template <class Scalar_>
using Matrix = Eigen::Matrix<Scalar_, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

template <class Scalar_>
using Vector = Eigen::Matrix<Scalar_, Eigen::Dynamic, 1>;

template <class Real_>
using Complex = std::complex<Real_>;

using Real = double;
using Cplx = Complex<Real>;

using RMatrix = Matrix<Real>;
using CMatrix = Matrix<Cplx>;
using RVector = Vector<Real>;
using CVector = Vector<Cplx>;

using IndexList = std::vector<Index>;

/// A (row, col) position inside an M x M matrix.
struct Entry
{
    Index row;
    Index col;

    friend bool operator==(const Entry&, const Entry&) = default;
};

/// Spatial frequency pair of one source.
struct FrequencyPair
{
    Real mu_x = 0;
    Real mu_y = 0;
};

inline constexpr Real pi = 3.14159265358979323846;

} // namespace sisparrow
