#pragma once

#include <string>
#include <vector>

#include "sisparrow/objective.hpp"
#include "sisparrow/types.hpp"

namespace sisparrow {

enum class Algorithm
{
    admm,
    sca
};

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct SolverConfig
{
    Real eps_abs = 1e-4;
    Real eps_rel = 1e-4;
    Real eta = 0;               // inner gradient tolerance; 0 selects the scaled default
    Real armijo_beta = 0.5;
    Real armijo_sigma = 0.1;
    Real rho0 = 1;
    Real kappa = 10;
    Real tau_incr = 2;
    Real tau_decr = 2;
    Index t_max = 50;
    Index max_outer = 1000;
    Index max_inner = 200;
    Index max_inner_admm = 500; // inner ADMM cap of the outer-SCA solver
    Real inner_tol_factor = 0.1;

    void validate() const;
};

/// Default tolerances: 1e-4 for ADMM, 1e-5 for SCA.
SolverConfig default_config(Algorithm a);

struct SolverReport
{
    Algorithm algorithm = Algorithm::admm;
    CMatrix Q;
    Real objective = 0;
    Index iterations = 0;        // outer iterations
    Index inner_iterations = 0;  // accumulated inner iterations
    bool converged = false;
    bool max_iterations_reached = false;
    bool relaxed_solution_psd = false; // ADMM: relaxed problem already PSD
    Real psd_shift = 0;                // multiple of I added to restore PSD
    std::vector<Real> primal_residuals;
    std::vector<Real> dual_residuals;
    std::vector<Real> penalties;
    std::vector<Real> objectives;
};

struct InnerResult
{
    CMatrix Q;
    Index iterations = 0;
    Real grad_norm = 0;
    bool converged = false;
    std::vector<Real> values; // h along the iterates, starting at Q_init
};

/// sqrt(M) R^{1/2} - lambda I (embedded into the full array under a selection).
CMatrix relaxed_closed_form(const Objective& obj);

/// Minimize h(Q) = f(Q) + rho/2 ||Q - Qbar||^2 over the structured subspace
/// with Q + lambda I > 0 by separable quadratic approximation and Armijo
/// backtracking. Q_init must lie in the subspace and be strictly feasible.
InnerResult inner_sca_q_update(const Objective& obj, const CMatrix& Q_bar, Real rho, const SolverConfig& cfg,
                               const CMatrix& Q_init);

/// Residual-balancing penalty update. Rescales the scaled dual U when rho
/// changes and returns the new penalty.
Real adapt_penalty(Real rho, CMatrix& U, Real primal_norm, Real dual_norm, Index t, const SolverConfig& cfg);

/// ADMM splitting of the structure and PSD constraints. Requires R strictly
/// positive definite (load it first when undersampled).
SolverReport solve_admm(const Objective& obj, const SolverConfig& cfg);

/// Outer successive convex approximation with an inner ADMM (Dykstra-like)
/// projection; R only needs to be PSD.
SolverReport solve_sca(const Objective& obj, const SolverConfig& cfg);

SolverReport solve(const Objective& obj, Algorithm a, const SolverConfig& cfg);

/// Minimizer of the separable quadratic plus proximal term for one class:
/// Re(conj(g)(q - q0)) + h/2 |q - q0|^2 + rho/2 sum |q - B(entry)|^2 over all
/// footprint positions.
Cplx proximal_class_update(const ShiftClass& sc, Cplx q0, const ClassDerivative& d, Real rho, const CMatrix& B);

} // namespace sisparrow
