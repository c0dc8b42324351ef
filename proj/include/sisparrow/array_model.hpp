#pragma once

#include <optional>
#include <vector>

#include "sisparrow/types.hpp"

namespace sisparrow {

/// Partly calibrated rectangular array made of Px x Py identical subarrays
/// with Lx x Ly sensors each. Positions are in half-wavelength units.
///
/// Sensor (p, k, q, l) (all zero based) sits at linear index
/// ((p * Lx + k) * My + q * Ly + l), My = Py * Ly, i.e. the 2D array is
/// vectorized along the y-axis.
struct ArrayGeometry
{
    Index Px = 1;
    Index Py = 1;
    Index Lx = 1;
    Index Ly = 1;
    RVector delta_x;                 // intra-subarray positions, x
    RVector delta_y;                 // intra-subarray positions, y
    std::optional<RVector> Delta_x;  // inter-subarray displacements, empty = unknown
    std::optional<RVector> Delta_y;
    IndexList failed_sensors;        // unobservable sensors

    Index Mx() const { return Px * Lx; }
    Index My() const { return Py * Ly; }
    Index num_sensors() const { return Mx() * My(); }
    Index sensor_index(Index p, Index k, Index q, Index l) const
    {
        return (p * Lx + k) * My() + q * Ly + l;
    }

    bool fully_known() const { return Delta_x.has_value() && Delta_y.has_value(); }

    /// Indices of observable sensors, ascending.
    IndexList observable_indices() const;

    /// Throws InvalidArgument when an invariant is broken.
    void validate() const;

    /// Uniform subarrays with unit intra-subarray spacing and displacements
    /// Delta_p = p * (L + gap).
    static ArrayGeometry uniform(Index Px, Index Py, Index Lx, Index Ly, Real gap_x, Real gap_y);
};

/// Steering vector a(mu_x, mu_y) = a_x(mu_x) kron a_y(mu_y). Requires known displacements.
CVector steering_vector(const ArrayGeometry& geom, Real mu_x, Real mu_y);

/// M x K steering matrix; column k is steering_vector(freqs[k]).
CMatrix steering_matrix(const ArrayGeometry& geom, const std::vector<FrequencyPair>& freqs);

/// 1D subarray response v(mu) = [exp(j mu delta_1), ..., exp(j mu delta_L)].
CVector subarray_response(const RVector& delta, Real mu);

/// Selection matrices stored as ordered lists of sensor indices.
/// jx[p] selects all sensors in x-subarray p (ordered as (k, q, l)), kx[l]
/// all sensors at x-position l inside their subarray (ordered as (p, q, l')),
/// and jy, ky likewise for the y-axis.
struct SelectionSet
{
    std::vector<IndexList> jx;
    std::vector<IndexList> kx;
    std::vector<IndexList> jy;
    std::vector<IndexList> ky;
};

SelectionSet selection_matrices(const ArrayGeometry& geom);

/// Equivalence classes of the entries of a structured Hermitian matrix Q.
///
/// For a complex class, `entries` lists every position holding q_i; the
/// mirrored positions hold conj(q_i). For a real class, `entries` lists
/// every position (both triangles) holding the real value q_i.
struct ShiftClass
{
    std::vector<Entry> entries;
    bool is_real = false;
    bool has_diagonal = false;

    /// Number of matrix positions occupied by q_i or its conjugate.
    Index footprint() const
    {
        return is_real ? Index(entries.size()) : 2 * Index(entries.size());
    }
};

struct ShiftStructure
{
    Index M = 0;
    std::vector<ShiftClass> classes;

    Index size() const { return Index(classes.size()); }

    /// Every upper-triangle entry forms its own class.
    static ShiftStructure unstructured(Index M);
};

/// A single linear identity Q(a) = Q(b) between two matrix positions.
struct EntryIdentity
{
    Entry a;
    Entry b;
};

/// All identities implied by the principal-submatrix equalities of the
/// shift-invariant groups plus the equal-diagonal constraint.
std::vector<EntryIdentity> structural_identities(const ArrayGeometry& geom);

/// Closure of the identities with conjugation tracking.
ShiftStructure build_shift_structure(Index M, const std::vector<EntryIdentity>& identities);
ShiftStructure build_shift_structure(const ArrayGeometry& geom);

/// Orthogonal (Frobenius) projection of a Hermitian matrix onto the structured subspace.
CMatrix project_onto_structure(const CMatrix& Q, const ShiftStructure& s);

/// Independent variables of Q; real classes carry a zero imaginary part.
CVector extract_q(const CMatrix& Q, const ShiftStructure& s);

/// Q(q) = sum_i q_i Omega_i + conj(q_i) Omega_i^T. Throws if a real class
/// receives a value with a non-negligible imaginary part.
CMatrix assemble_Q(const CVector& q, const ShiftStructure& s);

/// max |Q(a) - Q(b)| over all structural identities.
Real structure_residual(const CMatrix& Q, const std::vector<EntryIdentity>& identities);

} // namespace sisparrow
