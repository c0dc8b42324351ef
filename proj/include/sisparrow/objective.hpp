#pragma once

#include <optional>
#include <vector>

#include "sisparrow/array_model.hpp"
#include "sisparrow/types.hpp"

namespace sisparrow {

/// f(Q) = M tr((J^T Q J + lambda I)^{-1} R) + tr(Q).
///
/// `observed` lists the rows of the full array kept in R; when empty, J = I
/// and R is M x M.
struct Objective
{
    CMatrix R;
    Real lambda = 1;
    ShiftStructure structure;
    IndexList observed;

    Index M() const { return structure.M; }
    bool has_selection() const { return !observed.empty() && Index(observed.size()) != M(); }

    void validate() const;
};

/// Default regularization sigma_n (sqrt(M / N) + 1).
Real auto_lambda(Real noise_std, Index M, Index N);

/// Quantities shared by every per-class update at one point Q:
/// V = (Q + lambda I)^{-1}, Rt = V R V (zero-padded to M x M under a
/// selection), and the gradient of f.
struct Linearization
{
    Real f = 0;
    CMatrix V;
    CMatrix Rt;
    CMatrix grad_f;
};

/// Returns an empty optional when J^T Q J + lambda I is not positive definite.
std::optional<Linearization> try_linearize(const Objective& obj, const CMatrix& Q);
Linearization linearize(const Objective& obj, const CMatrix& Q);

std::optional<Real> try_objective_value(const Objective& obj, const CMatrix& Q);
Real objective_value(const Objective& obj, const CMatrix& Q);

/// Gradient of f with respect to Hermitian Q.
CMatrix gradient_Q(const Objective& obj, const CMatrix& Q);

/// Gradient of h(Q) = f(Q) + rho/2 ||Q - Qbar||_F^2.
CMatrix gradient_h(const Objective& obj, const CMatrix& Q, Real rho, const CMatrix& Q_bar);

/// Partial gradient g_i and diagonal Hessian entry h_i of the objective
/// with respect to one independent variable.
struct ClassDerivative
{
    Cplx grad;
    Real hess = 0;
};

/// Derivatives for class i given the linearization at Q and the full-matrix
/// gradient of h (grad_f + rho (Q - Qbar)).
ClassDerivative class_derivative(const ShiftStructure& s, Index i, const Linearization& lin,
                                 const CMatrix& grad_h, Real rho);

std::vector<ClassDerivative> class_derivatives(const ShiftStructure& s, const Linearization& lin,
                                               const CMatrix& grad_h, Real rho);

/// Convenience entry: derivatives of h at Q for class i.
ClassDerivative partial_grad_hess(const Objective& obj, const CMatrix& Q, Real rho, const CMatrix& Q_bar,
                                  Index i);

/// Euclidean norm of the vector of class gradients.
Real class_gradient_norm(const std::vector<ClassDerivative>& d);

} // namespace sisparrow
