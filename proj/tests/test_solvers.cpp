#include <doctest.h>

#include "oracles.hpp"
#include "sisparrow/errors.hpp"
#include "sisparrow/freq_recovery.hpp"
#include "sisparrow/linalg.hpp"
#include "sisparrow/signal_sim.hpp"
#include "sisparrow/solvers.hpp"

using namespace sisparrow;

namespace {

Objective noiseless_single_source(const ArrayGeometry& g, FrequencyPair f, Index N, std::uint64_t seed)
{
    SourceScenario sc;
    sc.frequencies = {f};
    sc.source_covariance = CMatrix::Identity(1, 1);
    sc.snapshots = N;
    sc.noise_variance = 1e-12;
    sc.seed = seed;
    MeasurementSet ms = simulate(g, sc);
    Objective obj;
    obj.R = ms.R_hat;
    obj.lambda = 1e-6;
    obj.structure = build_shift_structure(g);
    if (!g.failed_sensors.empty())
        obj.observed = ms.observable_indices;
    return obj;
}

Real max_error(const std::vector<FrequencyPair>& est, FrequencyPair truth)
{
    REQUIRE(est.size() == 1);
    return std::max(wrap_distance(est[0].mu_x, truth.mu_x), wrap_distance(est[0].mu_y, truth.mu_y));
}

} // namespace

TEST_CASE("penalty adaptation")
{
    SolverConfig cfg;
    CMatrix U = CMatrix::Identity(2, 2);
    Real rho = adapt_penalty(1, U, 1.0, 0.05, 0, cfg);
    CHECK(rho == 2);
    CHECK((U - 0.5 * CMatrix::Identity(2, 2)).norm() < 1e-15);

    U = CMatrix::Identity(2, 2);
    rho = adapt_penalty(1, U, 0.05, 1.0, 3, cfg);
    CHECK(rho == 0.5);
    CHECK((U - 2.0 * CMatrix::Identity(2, 2)).norm() < 1e-15);

    U = CMatrix::Identity(2, 2);
    CHECK(adapt_penalty(1, U, 1.0, 0.5, 0, cfg) == 1);
    CHECK(adapt_penalty(1, U, 1.0, 0.05, cfg.t_max + 1, cfg) == 1);
}

TEST_CASE("PSD projection")
{
    CMatrix X(2, 2);
    X << 1, 0, 0, -2;
    CMatrix P = psd_project(X);
    CMatrix E(2, 2);
    E << 1, 0, 0, 0;
    CHECK((P - E).norm() < 1e-15);

    std::mt19937_64 rng(31);
    CMatrix S = oracle::random_pd(5, rng);
    CHECK((psd_project(S) - S).norm() < 1e-12 * S.norm());

    for (int t = 0; t < 10; ++t) {
        CMatrix H = oracle::random_hermitian(5, rng);
        CMatrix Z = psd_project(H);
        CHECK(min_eigenvalue(Z) > -1e-12);
        const Real best = (H - Z).norm();
        for (int k = 0; k < 200; ++k) {
            CMatrix cand = psd_project(Z + 0.3 * oracle::random_hermitian(5, rng));
            CHECK(best <= (H - cand).norm() + 1e-12);
        }
    }
}

TEST_CASE("inner update reaches the closed-form stationary point")
{
    std::mt19937_64 rng(41);
    for (Index M : {2, 5, 9, 12}) {
        Objective obj;
        obj.R = oracle::random_pd(M, rng);
        obj.lambda = 0.5;
        obj.structure = ShiftStructure::unstructured(M);
        CMatrix target = std::sqrt(Real(M)) * hermitian_sqrt(obj.R);
        target.diagonal().array() -= obj.lambda;
        // the default eta is relative to the first gradient; the limit
        // point is checked with an absolute one
        SolverConfig cfg;
        cfg.eta = 1e-8;
        cfg.max_inner = 5000;
        InnerResult r = inner_sca_q_update(obj, CMatrix::Zero(M, M), 0, cfg, CMatrix::Zero(M, M));
        CAPTURE(M);
        CHECK((r.Q - target).norm() <= 1e-6 * target.norm());
        CHECK(r.converged);

        InnerResult again = inner_sca_q_update(obj, CMatrix::Zero(M, M), 0, cfg, target);
        CHECK(again.iterations == 0);
    }
}

TEST_CASE("inner update decreases the proximal objective monotonically")
{
    std::mt19937_64 rng(42);
    for (int t = 0; t < 10; ++t) {
        auto in = oracle::random_instance(rng);
        CMatrix Q_bar = project_onto_structure(oracle::random_hermitian(in.obj.M(), rng), in.obj.structure);
        SolverConfig cfg;
        cfg.max_inner = 50;
        InnerResult r = inner_sca_q_update(in.obj, Q_bar, 0.7, cfg, in.Q);
        REQUIRE(r.values.size() >= 1);
        for (std::size_t k = 1; k < r.values.size(); ++k)
            CHECK(r.values[k] <= r.values[k - 1]);
        CHECK(structure_residual(r.Q, structural_identities(in.geom)) <= 1e-12 * r.Q.norm());
        CHECK(min_eigenvalue(r.Q) + in.obj.lambda > 0);
    }
}

TEST_CASE("per-class proximal update minimizes the scalar quadratic")
{
    std::mt19937_64 rng(43);
    std::normal_distribution<Real> n01;
    auto g = ArrayGeometry::uniform(2, 2, 2, 2, 3, 3);
    auto s = build_shift_structure(g);
    const Index M = g.num_sensors();
    for (int t = 0; t < 20; ++t) {
        CMatrix B = oracle::random_hermitian(M, rng);
        const Real rho = std::abs(n01(rng)) + 0.1;
        for (Index i = 0; i < s.size(); ++i) {
            const ShiftClass& sc = s.classes[std::size_t(i)];
            ClassDerivative d{Cplx(n01(rng), sc.is_real ? 0 : n01(rng)), std::abs(n01(rng)) + 0.5};
            Cplx q0(n01(rng), sc.is_real ? 0 : n01(rng));
            // phi over (Re q, Im q), evaluated through the dense footprint
            auto phi = [&](Real x, Real y) {
                Cplx q(x, y), dq = q - q0;
                Real v = (std::conj(d.grad) * dq).real() + d.hess / 2 * std::norm(dq);
                for (const Entry& e : sc.entries) {
                    v += rho / 2 * std::norm(q - B(e.row, e.col));
                    if (!sc.is_real)
                        v += rho / 2 * std::norm(std::conj(q) - B(e.col, e.row));
                }
                return v;
            };
            // a quadratic is recovered exactly by unit-step central differences
            Real gx = (phi(1, 0) - phi(-1, 0)) / 2, gy = (phi(0, 1) - phi(0, -1)) / 2;
            Real hxx = phi(1, 0) - 2 * phi(0, 0) + phi(-1, 0);
            Real hyy = phi(0, 1) - 2 * phi(0, 0) + phi(0, -1);
            Real hxy = (phi(1, 1) - phi(1, -1) - phi(-1, 1) + phi(-1, -1)) / 4;
            Cplx want;
            if (sc.is_real) {
                want = Cplx(-gx / hxx, 0);
            } else {
                Eigen::Matrix2d H;
                H << hxx, hxy, hxy, hyy;
                Eigen::Vector2d z = H.ldlt().solve(Eigen::Vector2d(-gx, -gy));
                want = Cplx(z(0), z(1));
            }
            Cplx got = proximal_class_update(sc, q0, d, rho, B);
            CHECK(std::abs(got - want) <= 1e-12 * std::max(Real(1), std::abs(want)));
        }
    }
}

TEST_CASE("ADMM returns the relaxed solution when it is already PSD")
{
    Objective obj;
    obj.R = 4.0 * CMatrix::Identity(4, 4);
    obj.lambda = 0.1;
    obj.structure = build_shift_structure(ArrayGeometry::uniform(2, 1, 2, 1, 2, 0));
    SolverReport r = solve_admm(obj, default_config(Algorithm::admm));
    CHECK(r.relaxed_solution_psd);
    CHECK(r.iterations == 0);
    CHECK((r.Q - (4.0 - 0.1) * CMatrix::Identity(4, 4)).norm() < 1e-8);
}

TEST_CASE("ADMM rejects a singular covariance")
{
    Objective obj;
    obj.R = CMatrix::Zero(4, 4);
    obj.R(0, 0) = 1;
    obj.lambda = 1;
    obj.structure = build_shift_structure(ArrayGeometry::uniform(2, 1, 2, 1, 2, 0));
    CHECK_THROWS_AS(solve_admm(obj, default_config(Algorithm::admm)), NotPositiveDefinite);
}

TEST_CASE("ADMM and SCA agree on a loaded instance")
{
    auto g = ArrayGeometry::uniform(2, 2, 2, 2, 49, 49);
    SourceScenario sc;
    sc.frequencies = {{0.5, 1.5}, {0.8, 1.2}};
    sc.source_covariance = SourceScenario::correlated_covariance(2, 0);
    sc.snapshots = 20;
    sc.noise_variance = 0.1;
    sc.seed = 8;
    MeasurementSet ms = simulate(g, sc);
    Objective obj;
    obj.R = diagonal_load(ms.R_hat, default_loading(ms.R_hat));
    obj.lambda = auto_lambda(std::sqrt(sc.noise_variance), 16, 20);
    obj.structure = build_shift_structure(g);
    SolverReport a = solve_admm(obj, default_config(Algorithm::admm));
    SolverReport s = solve_sca(obj, default_config(Algorithm::sca));
    CHECK(a.converged);
    CHECK(s.converged);
    CHECK(oracle::rel_err(s.objective, a.objective) < 1e-3);
    CHECK((a.Q - s.Q).norm() <= 1e-2 * a.Q.norm());
    auto ids = structural_identities(g);
    for (const SolverReport* r : {&a, &s}) {
        CHECK(min_eigenvalue(r->Q) >= -1e-6);
        CHECK(structure_residual(r->Q, ids) <= 1e-14 * r->Q.norm());
    }
    CHECK(a.primal_residuals.size() == a.dual_residuals.size());
    CHECK(a.penalties.size() == a.primal_residuals.size());
    for (std::size_t k = 1; k < s.objectives.size(); ++k)
        CHECK(s.objectives[k] <= s.objectives[k - 1]);
}

TEST_CASE("SCA accepts a rank-deficient covariance")
{
    auto g = ArrayGeometry::uniform(2, 2, 2, 2, 5, 5);
    SourceScenario sc;
    sc.frequencies = {{0.5, 1.5}, {-0.8, 1.2}};
    sc.source_covariance = SourceScenario::correlated_covariance(2, 0);
    sc.snapshots = 4;
    sc.noise_variance = 0.1;
    sc.seed = 12;
    MeasurementSet ms = simulate(g, sc);
    Objective obj;
    obj.R = ms.R_hat;
    obj.lambda = auto_lambda(std::sqrt(sc.noise_variance), 16, 4);
    obj.structure = build_shift_structure(g);
    SolverReport s = solve_sca(obj, default_config(Algorithm::sca));
    CHECK(std::isfinite(s.objective));
    CHECK(min_eigenvalue(s.Q) >= -1e-6);
}

TEST_CASE("noiseless single source is recovered")
{
    auto g = ArrayGeometry::uniform(2, 2, 2, 2, 49, 49);
    const FrequencyPair f{0.9, -1.3};
    Objective obj = noiseless_single_source(g, f, 20, 3);
    SolverReport r = solve_admm(obj, default_config(Algorithm::admm));
    CHECK(max_error(mi_md_esprit(r.Q, g, 1).pairs, f) <= 1e-3);

    auto gf = g;
    gf.failed_sensors = {5};
    Objective objf = noiseless_single_source(gf, f, 20, 3);
    SolverReport rf = solve_admm(objf, default_config(Algorithm::admm));
    CHECK(max_error(mi_md_esprit(rf.Q, g, 1).pairs, f) <= 1e-2);
}
