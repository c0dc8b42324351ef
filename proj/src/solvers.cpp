#include "sisparrow/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "sisparrow/errors.hpp"
#include "sisparrow/linalg.hpp"

namespace sisparrow {

std::string to_string(Algorithm a)
{
    return a == Algorithm::admm ? "admm" : "sca";
}

Algorithm algorithm_from_string(const std::string& s)
{
    if (s == "admm")
        return Algorithm::admm;
    if (s == "sca")
        return Algorithm::sca;
    throw InvalidArgument("unknown algorithm '" + s + "'");
}

void SolverConfig::validate() const
{
    if (!(eps_abs > 0) || !(eps_rel > 0))
        throw InvalidArgument("solver tolerances must be positive");
    if (eta < 0)
        throw InvalidArgument("eta must be non-negative");
    if (!(armijo_beta > 0 && armijo_beta < 1) || !(armijo_sigma > 0 && armijo_sigma < 1))
        throw InvalidArgument("Armijo parameters must lie in (0, 1)");
    if (!(rho0 > 0) || !(kappa > 1) || !(tau_incr > 1) || !(tau_decr > 1))
        throw InvalidArgument("penalty parameters out of range");
    if (t_max < 0 || max_outer < 1 || max_inner < 1 || max_inner_admm < 1)
        throw InvalidArgument("iteration limits must be positive");
    if (!(inner_tol_factor > 0))
        throw InvalidArgument("inner tolerance factor must be positive");
}

SolverConfig default_config(Algorithm a)
{
    SolverConfig cfg;
    if (a == Algorithm::sca) {
        cfg.eps_abs = 1e-5;
        cfg.eps_rel = 1e-5;
    }
    return cfg;
}

namespace {

Real proximal_value(const Linearization& lin, const CMatrix& Q, Real rho, const CMatrix& Q_bar)
{
    return rho == 0 ? lin.f : lin.f + 0.5 * rho * (Q - Q_bar).squaredNorm();
}

Real tiny_curvature(const std::vector<ClassDerivative>& d)
{
    Real hmax = 0;
    for (const auto& x : d)
        hmax = std::max(hmax, x.hess);
    return 1e-14 * (1 + hmax);
}

CMatrix add_identity(CMatrix Q, Real shift)
{
    Q.diagonal().array() += shift;
    return Q;
}

// Shift by a multiple of I (an element of every shift structure) so that
// the result is PSD; returns the shift used.
Real restore_psd(CMatrix& Q)
{
    const Real lmin = min_eigenvalue(Q);
    if (lmin >= 0)
        return 0;
    Q.diagonal().array() -= lmin;
    return -lmin;
}

} // namespace

CMatrix relaxed_closed_form(const Objective& obj)
{
    const Index M = obj.M();
    CMatrix q1 = std::sqrt(Real(M)) * hermitian_sqrt(obj.R);
    q1.diagonal().array() -= obj.lambda;
    if (!obj.has_selection())
        return q1;
    CMatrix out = CMatrix::Zero(M, M);
    const Index n = Index(obj.observed.size());
    for (Index c = 0; c < n; ++c)
        for (Index r = 0; r < n; ++r)
            out(obj.observed[r], obj.observed[c]) = q1(r, c);
    return out;
}

InnerResult inner_sca_q_update(const Objective& obj, const CMatrix& Q_bar, Real rho, const SolverConfig& cfg,
                               const CMatrix& Q_init)
{
    const ShiftStructure& s = obj.structure;
    const Real sqrt_I = std::sqrt(Real(s.size()));
    InnerResult out;
    out.Q = Q_init;
    auto lin = try_linearize(obj, out.Q);
    if (!lin)
        throw NotPositiveDefinite("inner SCA started from an infeasible point");
    Real h_cur = proximal_value(*lin, out.Q, rho, Q_bar);
    out.values.push_back(h_cur);
    Real eta = cfg.eta;

    for (Index l = 0;; ++l) {
        CMatrix grad_h = lin->grad_f;
        if (rho != 0)
            grad_h += rho * (out.Q - Q_bar);
        const std::vector<ClassDerivative> d = class_derivatives(s, *lin, grad_h, rho);
        out.grad_norm = class_gradient_norm(d);
        if (l == 0 && eta == 0)
            eta = 1e-6 * (1 + out.grad_norm / sqrt_I);
        if (out.grad_norm <= sqrt_I * eta) {
            out.converged = true;
            break;
        }
        if (l >= cfg.max_inner)
            break;

        // separable minimizer, expressed as a step in q
        const Real floor_h = tiny_curvature(d);
        const CVector q = extract_q(out.Q, s);
        CVector step = CVector::Zero(s.size());
        for (Index i = 0; i < s.size(); ++i) {
            const ShiftClass& sc = s.classes[std::size_t(i)];
            const ClassDerivative& di = d[std::size_t(i)];
            if (!(di.hess > floor_h))
                continue;
            Cplx target = q(i) - di.grad / di.hess;
            if (sc.is_real) {
                Real t = target.real();
                if (sc.has_diagonal)
                    t = std::max(-obj.lambda, t);
                step(i) = Cplx(t - q(i).real(), 0);
            } else {
                step(i) = target - q(i);
            }
        }
        const CMatrix delta = assemble_Q(step, s);
        const Real slope = frobenius_inner(grad_h, delta);
        if (!(slope < 0))
            break;

        Real alpha = 1;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, alpha *= cfg.armijo_beta) {
            const CMatrix trial = out.Q + alpha * delta;
            auto f_trial = try_objective_value(obj, trial);
            if (!f_trial)
                continue;
            const Real h_trial = rho == 0 ? *f_trial : *f_trial + 0.5 * rho * (trial - Q_bar).squaredNorm();
            if (h_trial <= h_cur + alpha * cfg.armijo_sigma * slope) {
                out.Q = trial;
                h_cur = h_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
        ++out.iterations;
        out.values.push_back(h_cur);
        lin = linearize(obj, out.Q);
    }
    return out;
}

Real adapt_penalty(Real rho, CMatrix& U, Real primal_norm, Real dual_norm, Index t, const SolverConfig& cfg)
{
    if (t > cfg.t_max)
        return rho;
    if (primal_norm > cfg.kappa * dual_norm) {
        U /= cfg.tau_incr;
        return rho * cfg.tau_incr;
    }
    if (dual_norm > cfg.kappa * primal_norm) {
        U *= cfg.tau_decr;
        return rho / cfg.tau_decr;
    }
    return rho;
}

SolverReport solve_admm(const Objective& obj, const SolverConfig& cfg)
{
    obj.validate();
    cfg.validate();
    if (!is_positive_definite(obj.R))
        throw NotPositiveDefinite("ADMM requires a positive definite covariance; apply diagonal loading");
    const ShiftStructure& s = obj.structure;
    const Real M = Real(obj.M());

    SolverReport rep;
    rep.algorithm = Algorithm::admm;

    CMatrix Q0 = project_onto_structure(relaxed_closed_form(obj), s);
    const Real eps_pd = 1e-8 * (1 + std::abs(obj.lambda));
    const Real iota = std::max(Real(0), obj.lambda + eps_pd - min_eigenvalue(Q0));
    Q0 = add_identity(Q0, iota);

    // relaxed problem: the Q-update with rho = 0
    const CMatrix zero = CMatrix::Zero(s.M, s.M);
    InnerResult relaxed = inner_sca_q_update(obj, zero, 0, cfg, Q0);
    rep.inner_iterations += relaxed.iterations;
    CMatrix Q = std::move(relaxed.Q);
    CMatrix Z = psd_project(Q);
    {
        const Real r_pri = (Q - Z).norm();
        const Real eps_pri = M * cfg.eps_abs + cfg.eps_rel * std::max(Q.norm(), Z.norm());
        // the relative eta can stop far from the relaxed optimum when Q0 was shifted
        const Real eps_stat = M * cfg.eps_abs + cfg.eps_rel * Q.norm();
        if (r_pri <= eps_pri && relaxed.grad_norm <= eps_stat) {
            rep.relaxed_solution_psd = true;
            rep.converged = true;
            rep.psd_shift = restore_psd(Q);
            rep.objective = objective_value(obj, Q);
            rep.objectives.push_back(rep.objective);
            rep.Q = std::move(Q);
            return rep;
        }
    }

    CMatrix U = Q - Z;
    Real rho = cfg.rho0;
    for (Index t = 0; t < cfg.max_outer; ++t) {
        const CMatrix Q_bar = Z - U;
        InnerResult inner = inner_sca_q_update(obj, Q_bar, rho, cfg, Q);
        rep.inner_iterations += inner.iterations;
        Q = std::move(inner.Q);
        CMatrix Z_new = psd_project(Q + U);
        U += Q - Z_new;
        U = hermitian_part(U);

        const Real r_pri = (Q - Z_new).norm();
        const Real r_dual = rho * (Z_new - Z).norm();
        const Real eps_pri = M * cfg.eps_abs + cfg.eps_rel * std::max(Q.norm(), Z_new.norm());
        const Real eps_dual = M * cfg.eps_abs + cfg.eps_rel * (rho * U).norm();
        Z = std::move(Z_new);
        rep.iterations = t + 1;
        rep.primal_residuals.push_back(r_pri);
        rep.dual_residuals.push_back(r_dual);
        rep.penalties.push_back(rho);
        if (r_pri <= eps_pri && r_dual <= eps_dual) {
            rep.converged = true;
            break;
        }
        rho = adapt_penalty(rho, U, r_pri, r_dual, t, cfg);
    }
    rep.max_iterations_reached = !rep.converged;
    rep.psd_shift = restore_psd(Q);
    rep.objective = objective_value(obj, Q);
    rep.objectives.push_back(rep.objective);
    rep.Q = std::move(Q);
    return rep;
}

Cplx proximal_class_update(const ShiftClass& sc, Cplx q0, const ClassDerivative& d, Real rho, const CMatrix& B)
{
    Cplx bsum = 0;
    for (const Entry& e : sc.entries)
        bsum += B(e.row, e.col);
    const Real n = Real(sc.entries.size());
    if (sc.is_real) {
        const Real num = d.hess * q0.real() - d.grad.real() + rho * bsum.real();
        return Cplx(num / (d.hess + rho * n), 0);
    }
    return (d.hess * q0 - d.grad + 2 * rho * bsum) / (d.hess + 2 * rho * n);
}

SolverReport solve_sca(const Objective& obj, const SolverConfig& cfg)
{
    obj.validate();
    cfg.validate();
    const ShiftStructure& s = obj.structure;
    const Real M = Real(obj.M());

    SolverReport rep;
    rep.algorithm = Algorithm::sca;

    CMatrix Q = project_onto_structure(relaxed_closed_form(obj), s);
    restore_psd(Q);
    Linearization lin = linearize(obj, Q);
    rep.objectives.push_back(lin.f);

    for (Index t = 0; t < cfg.max_outer; ++t) {
        std::vector<ClassDerivative> d = class_derivatives(s, lin, lin.grad_f, 0);
        const Real floor_h = tiny_curvature(d);
        for (auto& x : d)
            x.hess = std::max(x.hess, floor_h);
        const CVector q0 = extract_q(Q, s);

        // inner ADMM on the separable quadratic over PSD and structure
        CVector q = q0;
        CMatrix Qi = Q;
        CMatrix Z = Q;
        CMatrix U = CMatrix::Zero(s.M, s.M);
        Real rho = cfg.rho0;
        const Real eps_abs = cfg.inner_tol_factor * cfg.eps_abs;
        const Real eps_rel = cfg.inner_tol_factor * cfg.eps_rel;
        for (Index l = 0; l < cfg.max_inner_admm; ++l) {
            const CMatrix B = Z - U;
            for (Index i = 0; i < s.size(); ++i)
                q(i) = proximal_class_update(s.classes[std::size_t(i)], q0(i), d[std::size_t(i)], rho, B);
            Qi = assemble_Q(q, s);
            CMatrix Z_new = psd_project(Qi + U);
            U += Qi - Z_new;
            U = hermitian_part(U);
            const Real r_pri = (Qi - Z_new).norm();
            const Real r_dual = rho * (Z_new - Z).norm();
            const Real eps_pri = M * eps_abs + eps_rel * std::max(Qi.norm(), Z_new.norm());
            const Real eps_dual = M * eps_abs + eps_rel * (rho * U).norm();
            Z = std::move(Z_new);
            ++rep.inner_iterations;
            if (r_pri <= eps_pri && r_dual <= eps_dual)
                break;
            rho = adapt_penalty(rho, U, r_pri, r_dual, l, cfg);
        }
        restore_psd(Qi);

        const CMatrix delta = Qi - Q;
        const Real slope = frobenius_inner(lin.grad_f, delta);
        rep.iterations = t + 1;
        if (!(slope < 0)) {
            rep.converged = true;
            break;
        }
        Real alpha = 1;
        bool accepted = false;
        CMatrix Q_next;
        Real f_next = 0;
        for (int k = 0; k < 60; ++k, alpha *= cfg.armijo_beta) {
            Q_next = Q + alpha * delta;
            auto f_trial = try_objective_value(obj, Q_next);
            if (f_trial && *f_trial <= lin.f + alpha * cfg.armijo_sigma * slope) {
                f_next = *f_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            rep.converged = true;
            break;
        }
        const Real change = (Q_next - Q).norm();
        const Real tol = M * cfg.eps_abs + cfg.eps_rel * Q.norm();
        Q = std::move(Q_next);
        lin = linearize(obj, Q);
        rep.objectives.push_back(f_next);
        rep.primal_residuals.push_back(change);
        if (change <= tol) {
            rep.converged = true;
            break;
        }
    }
    rep.max_iterations_reached = !rep.converged;
    rep.psd_shift = restore_psd(Q);
    rep.objective = objective_value(obj, Q);
    rep.Q = std::move(Q);
    return rep;
}

SolverReport solve(const Objective& obj, Algorithm a, const SolverConfig& cfg)
{
    return a == Algorithm::admm ? solve_admm(obj, cfg) : solve_sca(obj, cfg);
}

} // namespace sisparrow
