#include "sisparrow/crb.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sisparrow/errors.hpp"
#include "sisparrow/linalg.hpp"

namespace sisparrow {

namespace {

CVector kron(const CVector& a, const CVector& b)
{
    CVector out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

CVector phase_vector(const RVector& pos, Real mu)
{
    return subarray_response(pos, mu);
}

CVector weighted_phase_derivative(const RVector& pos, Real mu)
{
    CVector d(pos.size());
    for (Index k = 0; k < pos.size(); ++k)
        d(k) = Cplx(0, pos(k)) * std::polar(1.0, mu * pos(k));
    return d;
}

CVector unit(Index n, Index p)
{
    CVector e = CVector::Zero(n);
    e(p) = 1;
    return e;
}

RVector full_positions(const RVector& Delta, const RVector& delta)
{
    RVector pos(Delta.size() * delta.size());
    for (Index p = 0; p < Delta.size(); ++p)
        for (Index k = 0; k < delta.size(); ++k)
            pos(p * delta.size() + k) = Delta(p) + delta(k);
    return pos;
}

} // namespace

CMatrix DerivativeBlocks::stacked() const
{
    const Index M = mu_x.rows();
    const Index ns = mu_x.cols();
    const Index blocks = 2 + 2 * Index(xi_x.size()) + 2 * Index(xi_y.size());
    CMatrix D(M, blocks * ns);
    Index b = 0;
    auto put = [&](const CMatrix& m) { D.middleCols(ns * b++, ns) = m; };
    put(mu_x);
    put(mu_y);
    for (const auto& m : xi_x)
        put(m);
    for (const auto& m : xi_x)
        put(Cplx(0, 1) * m);
    for (const auto& m : xi_y)
        put(m);
    for (const auto& m : xi_y)
        put(Cplx(0, 1) * m);
    return D;
}

DerivativeBlocks derivative_blocks(const ArrayGeometry& geom, const std::vector<FrequencyPair>& freqs,
                                   Calibration mode)
{
    geom.validate();
    if (!geom.fully_known())
        throw InvalidArgument("derivative_blocks: displacements must be known");
    const Index M = geom.num_sensors();
    const Index ns = Index(freqs.size());
    const RVector& Dx = *geom.Delta_x;
    const RVector& Dy = *geom.Delta_y;
    RVector pos_x = full_positions(Dx, geom.delta_x);
    RVector pos_y = full_positions(Dy, geom.delta_y);

    DerivativeBlocks out;
    out.mu_x.resize(M, ns);
    out.mu_y.resize(M, ns);
    if (mode == Calibration::partly) {
        out.xi_x.assign(std::size_t(geom.Px - 1), CMatrix(M, ns));
        out.xi_y.assign(std::size_t(geom.Py - 1), CMatrix(M, ns));
    }
    for (Index i = 0; i < ns; ++i) {
        const Real mx = freqs[std::size_t(i)].mu_x;
        const Real my = freqs[std::size_t(i)].mu_y;
        CVector hx = phase_vector(Dx, mx);
        CVector hy = phase_vector(Dy, my);
        CVector vx = phase_vector(geom.delta_x, mx);
        CVector vy = phase_vector(geom.delta_y, my);
        CVector ax = kron(hx, vx);
        CVector ay = kron(hy, vy);
        if (mode == Calibration::partly) {
            out.mu_x.col(i) = kron(kron(hx, weighted_phase_derivative(geom.delta_x, mx)), ay);
            out.mu_y.col(i) = kron(ax, kron(hy, weighted_phase_derivative(geom.delta_y, my)));
            for (Index p = 1; p < geom.Px; ++p)
                out.xi_x[std::size_t(p - 1)].col(i) = kron(kron(unit(geom.Px, p), vx), ay);
            for (Index p = 1; p < geom.Py; ++p)
                out.xi_y[std::size_t(p - 1)].col(i) = kron(ax, kron(unit(geom.Py, p), vy));
        } else {
            out.mu_x.col(i) = kron(weighted_phase_derivative(pos_x, mx), ay);
            out.mu_y.col(i) = kron(ax, weighted_phase_derivative(pos_y, my));
        }
    }
    return out;
}

CrbResult stochastic_crb(const CrbInput& in)
{
    const Index ns = Index(in.frequencies.size());
    if (ns < 1)
        throw InvalidArgument("stochastic_crb: no sources");
    if (in.source_covariance.rows() != ns || in.source_covariance.cols() != ns)
        throw DimensionMismatch("stochastic_crb: source covariance must be Ns x Ns");
    if (!(in.noise_variance > 0) || in.snapshots < 1)
        throw InvalidArgument("stochastic_crb: need positive noise variance and N >= 1");

    CMatrix A = steering_matrix(in.geom, in.frequencies);
    const Index M = A.rows();
    CMatrix AhA = A.adjoint() * A;
    Eigen::FullPivLU<CMatrix> lu_a(AhA);
    if (lu_a.rank() < ns)
        throw Unidentifiable("stochastic_crb: steering matrix is rank deficient");
    CMatrix Pi = CMatrix::Identity(M, M) - A * lu_a.solve(A.adjoint());

    const CMatrix& P = in.source_covariance;
    CMatrix inner = AhA * P + in.noise_variance * CMatrix::Identity(ns, ns);
    CMatrix U = P * inner.fullPivLu().solve(AhA * P);

    CMatrix D = derivative_blocks(in.geom, in.frequencies, in.mode).stacked();
    CMatrix G = D.adjoint() * Pi * D;
    RMatrix F(D.cols(), D.cols());
    for (Index r = 0; r < D.cols(); ++r)
        for (Index c = 0; c < D.cols(); ++c)
            F(r, c) = std::real(G(r, c) * U(c % ns, r % ns));
    F = 0.5 * (F + F.transpose());

    Eigen::SelfAdjointEigenSolver<RMatrix> es(F, Eigen::EigenvaluesOnly);
    const Real lo = es.eigenvalues()(0);
    const Real hi = es.eigenvalues()(F.rows() - 1);
    Eigen::LLT<RMatrix> llt(F);
    if (llt.info() != Eigen::Success || !(lo > 0))
        throw Unidentifiable("stochastic_crb: singular Fisher block");

    CrbResult out;
    out.condition = hi / lo;
    out.ill_conditioned = out.condition > 1e12;
    RMatrix inv = llt.solve(RMatrix::Identity(F.rows(), F.cols()));
    const Real scale = in.noise_variance / (2 * Real(in.snapshots));
    out.mu_block = scale * inv.topLeftCorner(2 * ns, 2 * ns);
    out.mu_block = 0.5 * (out.mu_block + out.mu_block.transpose()).eval();
    out.rmse_bound = std::sqrt(out.mu_block.diagonal().mean());
    return out;
}

} // namespace sisparrow
