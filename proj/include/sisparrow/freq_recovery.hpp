#pragma once

#include <string>
#include <vector>

#include "sisparrow/array_model.hpp"
#include "sisparrow/types.hpp"

namespace sisparrow {

struct Subspace
{
    CMatrix basis;        // M x Ns, orthonormal columns
    RVector eigenvalues;  // all eigenvalues, descending
    Real relative_gap = 0; // (lambda_Ns - lambda_Ns+1) / lambda_max
    bool degenerate = false;
};

/// Dominant Ns-dimensional eigenspace of a Hermitian matrix.
Subspace signal_subspace(const CMatrix& Q, Index ns);

struct JointDiagonalization
{
    CMatrix T;                       // common eigenvector matrix
    std::vector<CVector> eigenvalues; // per input matrix, diag(T^{-1} Psi T)
    Real off_diagonal = 0;           // relative off-diagonal energy
    Index sweeps = 0;
    bool converged = false;
};

/// Approximate joint diagonalization of non-defective commuting matrices by
/// a similarity transform: eigenvectors of a random convex combination,
/// refined with pairwise non-unitary Jacobi sweeps.
JointDiagonalization joint_diagonalize(const std::vector<CMatrix>& mats, Real tol = 1e-10, Index max_sweeps = 100);

struct DmlSearchConfig
{
    Index grid_points = 4096;
    Real tolerance = 1e-9;
};

/// argmax over mu of |v(mu)^H v_hat|^2 / ||v(mu)||^2, v(mu) = subarray_response(delta, mu).
/// Returns (mu, normalized correlation).
std::pair<Real, Real> dml_search(const RVector& delta, const CVector& v_hat, const DmlSearchConfig& cfg = {});

struct FrequencyEstimate
{
    std::vector<FrequencyPair> pairs;
    std::string method;
    std::vector<Real> fit_x;   // per-source 1D search objective (ESPRIT) or spectrum value (MUSIC)
    std::vector<Real> fit_y;
    Real subspace_gap = 0;
    bool complete = true;      // false when fewer than Ns sources were found
    bool jd_converged = true;
};

/// Multi-invariance multidimensional ESPRIT on a structured covariance estimate.
FrequencyEstimate mi_md_esprit(const CMatrix& Q, const ArrayGeometry& geom, Index ns, const DmlSearchConfig& cfg = {});

/// Variant taking an already computed subspace basis (M x Ns).
FrequencyEstimate mi_md_esprit_from_subspace(const CMatrix& Us, const ArrayGeometry& geom,
                                             const DmlSearchConfig& cfg = {});

struct MusicConfig
{
    Index grid = 0;        // 0 selects music_default_grid
    Index candidates_per_source = 8;
    Real crb_ref = 0;      // fully calibrated CRB of mu; spacing stops at 0.01 sqrt(crb_ref)
    Real floor = 1e-7;
    Index max_moves = 64;  // hill-climb steps per refinement level
};

/// 2D MUSIC pseudo-spectrum 1 / (a^H Pi_n a).
Real music_spectrum(const CMatrix& noise_projector, const ArrayGeometry& geom, Real mu_x, Real mu_y);

/// Spectrum on a uniform grid over [-pi, pi)^2; entry (i, j) is (mu_x_i, mu_y_j).
RMatrix music_grid(const CMatrix& signal_basis, const ArrayGeometry& geom, Index grid);

struct MusicResult
{
    FrequencyEstimate estimate;
    std::vector<std::vector<Real>> refinement_trace; // per peak, best value after every level
};

/// max(256, 8 x largest aperture in half wavelengths).
Index music_default_grid(const ArrayGeometry& geom);

MusicResult music_2d_detailed(const CMatrix& R, const ArrayGeometry& geom, Index ns, const MusicConfig& cfg = {});
FrequencyEstimate music_2d(const CMatrix& R, const ArrayGeometry& geom, Index ns, const MusicConfig& cfg = {});

/// Best assignment of estimates to truth under the wrap-around distance.
/// Returns the summed squared error of the trial (both axes); missing
/// sources contribute pi^2 per coordinate.
Real trial_squared_error(const std::vector<FrequencyPair>& estimates, const std::vector<FrequencyPair>& truth);

/// sqrt( sum_trials trial_squared_error / (Ns * trials) ).
Real match_and_rmse(const std::vector<std::vector<FrequencyPair>>& estimates, const std::vector<FrequencyPair>& truth);

} // namespace sisparrow
