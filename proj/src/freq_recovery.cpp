#include "sisparrow/freq_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sisparrow/errors.hpp"
#include "sisparrow/linalg.hpp"

namespace sisparrow {

Subspace signal_subspace(const CMatrix& Q, Index ns)
{
    if (Q.rows() != Q.cols())
        throw DimensionMismatch("signal_subspace: matrix is not square");
    if (ns < 1 || ns >= Q.rows())
        throw InvalidArgument("signal_subspace: need 1 <= Ns < M");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(Q));
    if (es.info() != Eigen::Success)
        throw Error("signal_subspace: eigendecomposition failed");
    const Index M = Q.rows();
    Subspace s;
    s.eigenvalues = es.eigenvalues().reverse();
    s.basis = es.eigenvectors().rightCols(ns).rowwise().reverse();
    Real top = std::max(std::abs(s.eigenvalues(0)), std::numeric_limits<Real>::min());
    s.relative_gap = (s.eigenvalues(ns - 1) - s.eigenvalues(ns)) / top;
    s.degenerate = s.relative_gap < 1e-10 * Real(M);
    return s;
}

namespace {

Real off_energy(const std::vector<CMatrix>& D)
{
    Real off = 0;
    for (const auto& d : D)
        off += d.squaredNorm() - d.diagonal().squaredNorm();
    return off;
}

} // namespace

JointDiagonalization joint_diagonalize(const std::vector<CMatrix>& mats, Real tol, Index max_sweeps)
{
    if (mats.empty())
        throw InvalidArgument("joint_diagonalize: no matrices");
    const Index n = mats.front().rows();
    for (const auto& m : mats)
        if (m.rows() != n || m.cols() != n)
            throw DimensionMismatch("joint_diagonalize: matrices differ in size");

    Real total = 0;
    for (const auto& m : mats)
        total += m.squaredNorm();
    total = std::max(total, std::numeric_limits<Real>::min());

    // fixed seed keeps the pairing reproducible
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<Real> unif(0.5, 1.5);
    CMatrix combo = CMatrix::Zero(n, n);
    Real wsum = 0;
    for (const auto& m : mats) {
        Real w = unif(rng);
        combo += w * m;
        wsum += w;
    }
    combo /= wsum;

    Eigen::ComplexEigenSolver<CMatrix> ces(combo);
    if (ces.info() != Eigen::Success)
        throw Error("joint_diagonalize: eigendecomposition failed");

    JointDiagonalization out;
    out.T = ces.eigenvectors();
    for (Index c = 0; c < n; ++c)
        out.T.col(c).normalize();

    Eigen::FullPivLU<CMatrix> lu(out.T);
    if (!lu.isInvertible())
        throw Unidentifiable("joint_diagonalize: defective combination matrix");
    std::vector<CMatrix> D;
    D.reserve(mats.size());
    for (const auto& m : mats)
        D.push_back(lu.solve(m * out.T));

    Real off = off_energy(D) / total;
    Index sweep = 0;
    while (off > tol && sweep < max_sweeps) {
        ++sweep;
        const Real before = off;
        for (Index i = 0; i < n; ++i) {
            for (Index j = i + 1; j < n; ++j) {
                Cplx na(0), nb(0);
                Real den = 0;
                for (const auto& d : D) {
                    Cplx dl = d(i, i) - d(j, j);
                    na += std::conj(dl) * d(i, j);
                    nb += std::conj(dl) * d(j, i);
                    den += std::norm(dl);
                }
                if (den <= std::numeric_limits<Real>::min())
                    continue;
                Cplx a = -na / den;
                Cplx b = nb / den;
                Real cur = off_energy(D);
                for (int half = 0; half < 8; ++half) {
                    Cplx det = Cplx(1) - a * b;
                    if (std::abs(det) > 0.1) {
                        CMatrix S = CMatrix::Identity(n, n);
                        S(i, j) = a;
                        S(j, i) = b;
                        CMatrix Sinv = CMatrix::Identity(n, n);
                        Sinv(i, i) = Cplx(1) / det;
                        Sinv(j, j) = Cplx(1) / det;
                        Sinv(i, j) = -a / det;
                        Sinv(j, i) = -b / det;
                        std::vector<CMatrix> trial;
                        trial.reserve(D.size());
                        for (const auto& d : D)
                            trial.push_back(Sinv * d * S);
                        if (off_energy(trial) < cur) {
                            D = std::move(trial);
                            out.T = out.T * S;
                            break;
                        }
                    }
                    a *= 0.5;
                    b *= 0.5;
                }
            }
        }
        off = off_energy(D) / total;
        if (off > before * (1 - 1e-6))
            break; // stalled, noisy data cannot be diagonalized exactly
    }

    // rescale columns without changing the diagonalization
    for (Index c = 0; c < n; ++c) {
        Real nrm = out.T.col(c).norm();
        if (nrm > 0)
            out.T.col(c) /= nrm;
    }
    out.off_diagonal = off;
    out.sweeps = sweep;
    out.converged = off <= tol;
    for (const auto& d : D)
        out.eigenvalues.push_back(d.diagonal());
    return out;
}

namespace {

Real dml_value(const RVector& delta, const CVector& v_hat, Real mu)
{
    CVector v = subarray_response(delta, mu);
    return std::norm(v.dot(v_hat)) / Real(delta.size());
}

// sign of d/dmu |v(mu)^H v_hat|^2
Real dml_slope(const RVector& delta, const CVector& v_hat, Real mu)
{
    Cplx c = 0, dc = 0;
    for (Index k = 0; k < delta.size(); ++k) {
        Cplx t = std::polar(1.0, -mu * delta(k)) * v_hat(k);
        c += t;
        dc += Cplx(0, -delta(k)) * t;
    }
    return std::real(std::conj(c) * dc);
}

} // namespace

std::pair<Real, Real> dml_search(const RVector& delta, const CVector& v_hat, const DmlSearchConfig& cfg)
{
    if (delta.size() != v_hat.size())
        throw DimensionMismatch("dml_search: response length mismatch");
    if (cfg.grid_points < 3)
        throw InvalidArgument("dml_search: grid too coarse");
    const Real h = 2 * pi / Real(cfg.grid_points);
    Real best_mu = -pi;
    Real best = -1;
    for (Index g = 0; g < cfg.grid_points; ++g) {
        Real mu = -pi + h * Real(g);
        Real c = dml_value(delta, v_hat, mu);
        if (c > best) {
            best = c;
            best_mu = mu;
        }
    }
    // golden section on the bracket around the best grid point
    const Real gr = (std::sqrt(5.0) - 1) / 2;
    Real lo = best_mu - h;
    Real hi = best_mu + h;
    Real x1 = hi - gr * (hi - lo);
    Real x2 = lo + gr * (hi - lo);
    Real f1 = dml_value(delta, v_hat, x1);
    Real f2 = dml_value(delta, v_hat, x2);
    while (hi - lo > cfg.tolerance) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = dml_value(delta, v_hat, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = dml_value(delta, v_hat, x2);
        }
    }
    Real mu = 0.5 * (lo + hi);
    // the value is flat at the peak, so polish on the slope sign instead
    Real a = mu - 100 * cfg.tolerance, b = mu + 100 * cfg.tolerance;
    if (dml_slope(delta, v_hat, a) > 0 && dml_slope(delta, v_hat, b) < 0) {
        for (int it = 0; it < 60 && b - a > 1e-15; ++it) {
            Real m = 0.5 * (a + b);
            (dml_slope(delta, v_hat, m) > 0 ? a : b) = m;
        }
        mu = 0.5 * (a + b);
    }
    Real val = dml_value(delta, v_hat, mu);
    if (val < best) {
        mu = best_mu;
        val = best;
    }
    Real vnorm2 = v_hat.squaredNorm();
    return {wrap_angle(mu), vnorm2 > 0 ? val / vnorm2 : 0};
}

namespace {

CMatrix rows_of(const CMatrix& U, const IndexList& rows)
{
    CMatrix out(Index(rows.size()), U.cols());
    for (Index r = 0; r < Index(rows.size()); ++r)
        out.row(r) = U.row(rows[std::size_t(r)]);
    return out;
}

// Psi_l = pinv(U_1) U_l for every invariance l >= 1.
std::vector<CMatrix> invariance_operators(const CMatrix& Us, const std::vector<IndexList>& k_lists, const char* axis)
{
    std::vector<CMatrix> out;
    if (k_lists.size() < 2)
        return out;
    CMatrix U1 = rows_of(Us, k_lists[0]);
    Eigen::JacobiSVD<CMatrix> svd(U1, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const Index ns = Us.cols();
    if (U1.rows() < ns || sv(ns - 1) <= 1e-10 * std::max(sv(0), Real(1e-300)))
        throw InsufficientAperture(std::string("mi_md_esprit: rank-deficient selected subspace along ") + axis);
    for (std::size_t l = 1; l < k_lists.size(); ++l)
        out.push_back(svd.solve(rows_of(Us, k_lists[l])));
    return out;
}

} // namespace

FrequencyEstimate mi_md_esprit_from_subspace(const CMatrix& Us, const ArrayGeometry& geom, const DmlSearchConfig& cfg)
{
    geom.validate();
    if (Us.rows() != geom.num_sensors())
        throw DimensionMismatch("mi_md_esprit: subspace rows differ from sensor count");
    if (geom.Lx < 2 || geom.Ly < 2)
        throw InsufficientAperture("mi_md_esprit: need at least two sensors per subarray on each axis");
    const Index ns = Us.cols();
    SelectionSet sel = selection_matrices(geom);

    std::vector<CMatrix> psi_x = invariance_operators(Us, sel.kx, "x");
    std::vector<CMatrix> psi_y = invariance_operators(Us, sel.ky, "y");
    std::vector<CMatrix> all = psi_x;
    all.insert(all.end(), psi_y.begin(), psi_y.end());

    JointDiagonalization jd = joint_diagonalize(all);

    FrequencyEstimate est;
    est.method = "esprit";
    est.jd_converged = jd.converged;
    const std::size_t nx = psi_x.size();
    for (Index i = 0; i < ns; ++i) {
        CVector vx(geom.Lx), vy(geom.Ly);
        vx(0) = 1;
        vy(0) = 1;
        for (std::size_t l = 0; l < nx; ++l)
            vx(Index(l) + 1) = jd.eigenvalues[l](i);
        for (std::size_t l = 0; l < psi_y.size(); ++l)
            vy(Index(l) + 1) = jd.eigenvalues[nx + l](i);
        auto [mx, cx] = dml_search(geom.delta_x, vx, cfg);
        auto [my, cy] = dml_search(geom.delta_y, vy, cfg);
        est.pairs.push_back({mx, my});
        est.fit_x.push_back(cx);
        est.fit_y.push_back(cy);
    }
    return est;
}

FrequencyEstimate mi_md_esprit(const CMatrix& Q, const ArrayGeometry& geom, Index ns, const DmlSearchConfig& cfg)
{
    if (Q.rows() != geom.num_sensors() || Q.cols() != geom.num_sensors())
        throw DimensionMismatch("mi_md_esprit: covariance size differs from sensor count");
    Subspace s = signal_subspace(Q, ns);
    if (s.degenerate)
        throw Unidentifiable("mi_md_esprit: signal subspace is not separated from the noise subspace");
    FrequencyEstimate est = mi_md_esprit_from_subspace(s.basis, geom, cfg);
    est.subspace_gap = s.relative_gap;
    return est;
}

Real music_spectrum(const CMatrix& noise_projector, const ArrayGeometry& geom, Real mu_x, Real mu_y)
{
    CVector a = steering_vector(geom, mu_x, mu_y);
    Real d = std::real(a.dot(noise_projector * a));
    return 1 / std::max(d, std::numeric_limits<Real>::min());
}

namespace {

CMatrix axis_responses(const ArrayGeometry& geom, bool x_axis, Index grid)
{
    const Index P = x_axis ? geom.Px : geom.Py;
    const Index L = x_axis ? geom.Lx : geom.Ly;
    const RVector& delta = x_axis ? geom.delta_x : geom.delta_y;
    const RVector& Delta = x_axis ? *geom.Delta_x : *geom.Delta_y;
    CMatrix A(P * L, grid);
    for (Index g = 0; g < grid; ++g) {
        Real mu = -pi + 2 * pi * Real(g) / Real(grid);
        for (Index p = 0; p < P; ++p)
            for (Index k = 0; k < L; ++k)
                A(p * L + k, g) = std::polar(1.0, mu * (Delta(p) + delta(k)));
    }
    return A;
}

} // namespace

RMatrix music_grid(const CMatrix& signal_basis, const ArrayGeometry& geom, Index grid)
{
    if (!geom.fully_known())
        throw InvalidArgument("music: displacements must be known");
    if (grid < 3)
        throw InvalidArgument("music: grid too coarse");
    const Index Mx = geom.Mx(), My = geom.My(), M = geom.num_sensors();
    if (signal_basis.rows() != M)
        throw DimensionMismatch("music: basis rows differ from sensor count");
    CMatrix Ax = axis_responses(geom, true, grid);
    CMatrix Ay = axis_responses(geom, false, grid);
    // a^H Pi_n a = M - ||Us^H a||^2, with Us^H a = Ax^T conj(U_k) Ay per column
    RMatrix proj = RMatrix::Zero(grid, grid);
    for (Index k = 0; k < signal_basis.cols(); ++k) {
        CMatrix Uk(Mx, My);
        for (Index i = 0; i < Mx; ++i)
            for (Index j = 0; j < My; ++j)
                Uk(i, j) = std::conj(signal_basis(i * My + j, k));
        CMatrix C = Ax.transpose() * Uk * Ay;
        proj += C.cwiseAbs2();
    }
    RMatrix spec(grid, grid);
    for (Index i = 0; i < grid; ++i)
        for (Index j = 0; j < grid; ++j)
            spec(i, j) = 1 / std::max(Real(M) - proj(i, j), std::numeric_limits<Real>::min());
    return spec;
}

Index music_default_grid(const ArrayGeometry& geom)
{
    if (!geom.fully_known())
        throw InvalidArgument("music: displacements must be known");
    auto aperture = [](const RVector& Delta, const RVector& delta) {
        return (Delta.maxCoeff() - Delta.minCoeff()) + (delta.maxCoeff() - delta.minCoeff());
    };
    Real ap = std::max(aperture(*geom.Delta_x, geom.delta_x), aperture(*geom.Delta_y, geom.delta_y));
    // about eight points per mainlobe width 2 pi / aperture
    return std::max<Index>(256, Index(std::ceil(8 * ap)));
}

MusicResult music_2d_detailed(const CMatrix& R, const ArrayGeometry& geom, Index ns, const MusicConfig& cfg)
{
    if (R.rows() != geom.num_sensors() || R.cols() != geom.num_sensors())
        throw DimensionMismatch("music: covariance size differs from sensor count");
    if (ns == 0) {
        MusicResult empty;
        empty.estimate.method = "music";
        return empty;
    }
    Subspace s = signal_subspace(R, ns);
    const Index G = cfg.grid > 0 ? cfg.grid : music_default_grid(geom);
    RMatrix spec = music_grid(s.basis, geom, G);
    const Index M = geom.num_sensors();
    CMatrix Pn = CMatrix::Identity(M, M) - s.basis * s.basis.adjoint();

    struct Peak
    {
        Index i, j;
        Real v;
    };
    std::vector<Peak> peaks;
    for (Index i = 0; i < G; ++i) {
        for (Index j = 0; j < G; ++j) {
            Real v = spec(i, j);
            bool is_max = true;
            for (Index di = -1; di <= 1 && is_max; ++di)
                for (Index dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0)
                        continue;
                    Real w = spec((i + di + G) % G, (j + dj + G) % G);
                    // ties broken by index so plateaus yield a single peak
                    if (w > v || (w == v && (di < 0 || (di == 0 && dj < 0)))) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max)
                peaks.push_back({i, j, v});
        }
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.v > b.v; });
    // grating lobes of widely spaced subarrays can outrank the true peak on
    // the coarse grid, so more candidates than sources are refined
    const Index candidates = std::min<Index>(Index(peaks.size()), cfg.candidates_per_source * ns);
    peaks.resize(std::size_t(candidates));

    MusicResult out;
    out.estimate.method = "music";
    out.estimate.subspace_gap = s.relative_gap;

    struct Refined
    {
        Real mx, my, v;
        std::vector<Real> trace;
    };
    std::vector<Refined> refined;
    const Real step0 = 2 * pi / Real(G);
    const Real stop = cfg.crb_ref > 0 ? std::max(0.01 * std::sqrt(cfg.crb_ref), cfg.floor) : cfg.floor;
    for (const Peak& pk : peaks) {
        Real h = step0;
        Real mx = -pi + h * Real(pk.i);
        Real my = -pi + h * Real(pk.j);
        Real best = music_spectrum(Pn, geom, mx, my);
        std::vector<Real> trace{best};
        while (h > stop) {
            h *= 0.5;
            for (Index move = 0; move < cfg.max_moves; ++move) {
                Real bx = mx, by = my, bv = best;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj) {
                        if (di == 0 && dj == 0)
                            continue;
                        Real v = music_spectrum(Pn, geom, mx + di * h, my + dj * h);
                        if (v > bv) {
                            bv = v;
                            bx = mx + di * h;
                            by = my + dj * h;
                        }
                    }
                if (bv <= best)
                    break;
                best = bv;
                mx = bx;
                my = by;
            }
            trace.push_back(best);
        }
        refined.push_back({wrap_angle(mx), wrap_angle(my), best, std::move(trace)});
    }
    std::stable_sort(refined.begin(), refined.end(), [](const Refined& a, const Refined& b) { return a.v > b.v; });
    for (auto& r : refined) {
        if (Index(out.estimate.pairs.size()) == ns)
            break;
        // two candidates that climbed onto the same peak count once
        bool duplicate = false;
        for (const auto& p : out.estimate.pairs)
            if (wrap_distance(p.mu_x, r.mx) < step0 && wrap_distance(p.mu_y, r.my) < step0)
                duplicate = true;
        if (duplicate)
            continue;
        out.estimate.pairs.push_back({r.mx, r.my});
        out.estimate.fit_x.push_back(r.v);
        out.estimate.fit_y.push_back(r.v);
        out.refinement_trace.push_back(std::move(r.trace));
    }
    out.estimate.complete = Index(out.estimate.pairs.size()) == ns;
    return out;
}

FrequencyEstimate music_2d(const CMatrix& R, const ArrayGeometry& geom, Index ns, const MusicConfig& cfg)
{
    return music_2d_detailed(R, geom, ns, cfg).estimate;
}

namespace {

Real pair_error(const FrequencyPair& a, const FrequencyPair& b)
{
    Real dx = wrap_distance(a.mu_x, b.mu_x);
    Real dy = wrap_distance(a.mu_y, b.mu_y);
    return dx * dx + dy * dy;
}

void best_assignment(const std::vector<FrequencyPair>& est, const std::vector<FrequencyPair>& truth, std::size_t t,
                     std::vector<bool>& used, Real acc, Real& best)
{
    if (acc >= best)
        return;
    if (t == truth.size()) {
        best = acc;
        return;
    }
    bool any = false;
    for (std::size_t e = 0; e < est.size(); ++e) {
        if (used[e])
            continue;
        any = true;
        used[e] = true;
        best_assignment(est, truth, t + 1, used, acc + pair_error(est[e], truth[t]), best);
        used[e] = false;
    }
    // a truth is left unmatched only when there are fewer estimates than sources
    std::size_t free_est = std::size_t(std::count(used.begin(), used.end(), false));
    if (!any || free_est < truth.size() - t)
        best_assignment(est, truth, t + 1, used, acc + 2 * pi * pi, best);
}

} // namespace

Real trial_squared_error(const std::vector<FrequencyPair>& estimates, const std::vector<FrequencyPair>& truth)
{
    if (truth.empty())
        return 0;
    std::vector<bool> used(estimates.size(), false);
    Real best = std::numeric_limits<Real>::infinity();
    best_assignment(estimates, truth, 0, used, 0, best);
    return best;
}

Real match_and_rmse(const std::vector<std::vector<FrequencyPair>>& estimates, const std::vector<FrequencyPair>& truth)
{
    if (estimates.empty() || truth.empty())
        throw InvalidArgument("match_and_rmse: empty input");
    Real total = 0;
    for (const auto& e : estimates)
        total += trial_squared_error(e, truth);
    return std::sqrt(total / (Real(truth.size()) * Real(estimates.size())));
}

} // namespace sisparrow
