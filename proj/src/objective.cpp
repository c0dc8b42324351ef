#include "sisparrow/objective.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "sisparrow/errors.hpp"
#include "sisparrow/linalg.hpp"

namespace sisparrow {

void Objective::validate() const
{
    if (!(lambda > 0))
        throw InvalidArgument("regularization parameter must be positive");
    const Index rows = has_selection() ? Index(observed.size()) : M();
    if (R.rows() != rows || R.cols() != rows)
        throw DimensionMismatch("covariance size does not match the observable sensors");
    for (Index m : observed)
        if (m < 0 || m >= M())
            throw InvalidArgument("observable index out of range");
}

Real auto_lambda(Real noise_std, Index M, Index N)
{
    return noise_std * (std::sqrt(Real(M) / Real(N)) + 1);
}

namespace {

CMatrix restrict(const CMatrix& Q, const IndexList& idx)
{
    const Index n = Index(idx.size());
    CMatrix out(n, n);
    for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r)
            out(r, c) = Q(idx[r], idx[c]);
    return out;
}

CMatrix embed(const CMatrix& X, const IndexList& idx, Index M)
{
    CMatrix out = CMatrix::Zero(M, M);
    const Index n = Index(idx.size());
    for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r)
            out(idx[r], idx[c]) = X(r, c);
    return out;
}

} // namespace

std::optional<Linearization> try_linearize(const Objective& obj, const CMatrix& Q)
{
    const Index M = obj.M();
    if (Q.rows() != M || Q.cols() != M)
        throw DimensionMismatch("Q has the wrong size for this objective");
    const bool sel = obj.has_selection();
    CMatrix W = sel ? restrict(Q, obj.observed) : Q;
    W = hermitian_part(W);
    W.diagonal().array() += obj.lambda;
    Eigen::LLT<CMatrix> llt(W);
    if (llt.info() != Eigen::Success)
        return std::nullopt;
    // Eigen's LLT does not always flag tiny negative pivots.
    const RVector diagL = llt.matrixLLT().diagonal().real();
    if (!(diagL.minCoeff() > 0) || !diagL.allFinite())
        return std::nullopt;

    const Index n = W.rows();
    Linearization lin;
    CMatrix V = llt.solve(CMatrix::Identity(n, n));
    V = hermitian_part(V);
    CMatrix VR = V * obj.R;
    CMatrix Rt = hermitian_part(VR * V);
    lin.f = Real(M) * VR.trace().real() + Q.trace().real();
    if (sel) {
        lin.V = embed(V, obj.observed, M);
        lin.Rt = embed(Rt, obj.observed, M);
    } else {
        lin.V = std::move(V);
        lin.Rt = std::move(Rt);
    }
    lin.grad_f = -Real(M) * lin.Rt;
    lin.grad_f.diagonal().array() += 1;
    return lin;
}

Linearization linearize(const Objective& obj, const CMatrix& Q)
{
    auto lin = try_linearize(obj, Q);
    if (!lin)
        throw NotPositiveDefinite("Q + lambda I is not positive definite");
    return *std::move(lin);
}

std::optional<Real> try_objective_value(const Objective& obj, const CMatrix& Q)
{
    const Index M = obj.M();
    if (Q.rows() != M || Q.cols() != M)
        throw DimensionMismatch("Q has the wrong size for this objective");
    CMatrix W = obj.has_selection() ? restrict(Q, obj.observed) : Q;
    W = hermitian_part(W);
    W.diagonal().array() += obj.lambda;
    Eigen::LLT<CMatrix> llt(W);
    if (llt.info() != Eigen::Success)
        return std::nullopt;
    const RVector diagL = llt.matrixLLT().diagonal().real();
    if (!(diagL.minCoeff() > 0) || !diagL.allFinite())
        return std::nullopt;
    const Real val = Real(M) * llt.solve(obj.R).trace().real() + Q.trace().real();
    if (!std::isfinite(val))
        return std::nullopt;
    return val;
}

Real objective_value(const Objective& obj, const CMatrix& Q)
{
    auto v = try_objective_value(obj, Q);
    if (!v)
        throw NotPositiveDefinite("Q + lambda I is not positive definite");
    return *v;
}

CMatrix gradient_Q(const Objective& obj, const CMatrix& Q)
{
    return linearize(obj, Q).grad_f;
}

CMatrix gradient_h(const Objective& obj, const CMatrix& Q, Real rho, const CMatrix& Q_bar)
{
    CMatrix g = gradient_Q(obj, Q);
    if (rho != 0)
        g += rho * (Q - Q_bar);
    return g;
}

ClassDerivative class_derivative(const ShiftStructure& s, Index i, const Linearization& lin,
                                 const CMatrix& grad_h, Real rho)
{
    const ShiftClass& sc = s.classes[i];
    const Real M = Real(s.M);
    const CMatrix& V = lin.V;
    const CMatrix& Rt = lin.Rt;
    ClassDerivative d;
    Cplx gsum = 0;
    for (const Entry& e : sc.entries)
        gsum += grad_h(e.row, e.col);

    Cplx quad = 0;
    if (sc.is_real) {
        // second derivative of M tr(V D Rt D) along D = P (both triangles listed)
        for (const Entry& a : sc.entries)
            for (const Entry& b : sc.entries)
                quad += V(b.col, a.row) * Rt(a.col, b.row);
        d.grad = Cplx(gsum.real(), 0);
        d.hess = 2 * M * quad.real() + rho * Real(sc.entries.size());
    } else {
        for (const Entry& a : sc.entries)
            for (const Entry& b : sc.entries)
                quad += V(a.row, b.row) * Rt(b.col, a.col) + V(a.col, b.col) * Rt(b.row, a.row);
        d.grad = 2.0 * gsum;
        d.hess = 2 * (M * quad.real() + rho * Real(sc.entries.size()));
    }
    return d;
}

std::vector<ClassDerivative> class_derivatives(const ShiftStructure& s, const Linearization& lin,
                                               const CMatrix& grad_h, Real rho)
{
    std::vector<ClassDerivative> out(std::size_t(s.size()));
    for (Index i = 0; i < s.size(); ++i)
        out[std::size_t(i)] = class_derivative(s, i, lin, grad_h, rho);
    return out;
}

ClassDerivative partial_grad_hess(const Objective& obj, const CMatrix& Q, Real rho, const CMatrix& Q_bar,
                                  Index i)
{
    if (i < 0 || i >= obj.structure.size())
        throw InvalidArgument("class index out of range");
    const Linearization lin = linearize(obj, Q);
    CMatrix gh = lin.grad_f;
    if (rho != 0)
        gh += rho * (Q - Q_bar);
    return class_derivative(obj.structure, i, lin, gh, rho);
}

Real class_gradient_norm(const std::vector<ClassDerivative>& d)
{
    Real acc = 0;
    for (const auto& x : d)
        acc += std::norm(x.grad);
    return std::sqrt(acc);
}

} // namespace sisparrow
