#include "sisparrow/signal_sim.hpp"

#include <cmath>

#include "sisparrow/errors.hpp"
#include "sisparrow/linalg.hpp"

namespace sisparrow {

CMatrix SourceScenario::correlated_covariance(Index ns, Cplx phi)
{
    if (std::abs(phi) > 1)
        throw InvalidArgument("correlation coefficient must satisfy |phi| <= 1");
    CMatrix P = CMatrix::Identity(ns, ns);
    for (Index i = 0; i < ns; ++i)
        for (Index j = i + 1; j < ns; ++j) {
            P(i, j) = phi;
            P(j, i) = std::conj(phi);
        }
    return P;
}

void SourceScenario::validate() const
{
    const Index ns = num_sources();
    if (snapshots < 1)
        throw InvalidArgument("at least one snapshot is required");
    if (noise_variance < 0)
        throw InvalidArgument("noise variance must be non-negative");
    if (source_covariance.rows() != ns || source_covariance.cols() != ns)
        throw DimensionMismatch("source covariance must be Ns x Ns");
    for (Index i = 0; i < ns; ++i) {
        if (std::abs(source_covariance(i, i) - Cplx(1)) > 1e-12)
            throw InvalidArgument("source covariance must have unit diagonal");
        for (Index j = i + 1; j < ns; ++j)
            if (wrap_distance(frequencies[i].mu_x, frequencies[j].mu_x) == 0 &&
                wrap_distance(frequencies[i].mu_y, frequencies[j].mu_y) == 0)
                throw InvalidArgument("source frequencies must be pairwise distinct");
    }
    if (ns > 0 && min_eigenvalue(source_covariance) < -1e-12)
        throw InvalidArgument("source covariance must be positive semidefinite");
}

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial)
{
    // splitmix64 over (base, trial)
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (trial + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CMatrix complex_gaussian(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<Real> n(0, std::sqrt(0.5));
    CMatrix out(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) {
            const Real re = n(rng);
            const Real im = n(rng);
            out(r, c) = Cplx(re, im);
        }
    return out;
}

MeasurementSet simulate(const ArrayGeometry& geom, const SourceScenario& scenario, std::mt19937_64& rng)
{
    if (!geom.fully_known())
        throw InvalidArgument("simulation requires known inter-subarray displacements");
    scenario.validate();
    const Index M = geom.num_sensors();
    const Index N = scenario.snapshots;
    const Index ns = scenario.num_sources();

    CMatrix Y = CMatrix::Zero(M, N);
    if (ns > 0) {
        const CMatrix A = steering_matrix(geom, scenario.frequencies);
        const CMatrix P_half = hermitian_sqrt(scenario.source_covariance);
        const CMatrix Psi = P_half * complex_gaussian(ns, N, rng);
        Y += A * Psi;
    }
    const CMatrix noise = complex_gaussian(M, N, rng);
    Y += std::sqrt(scenario.noise_variance) * noise;

    MeasurementSet out;
    out.observable_indices = geom.observable_indices();
    out.Y.resize(Index(out.observable_indices.size()), N);
    for (Index r = 0; r < Index(out.observable_indices.size()); ++r)
        out.Y.row(r) = Y.row(out.observable_indices[r]);
    out.R_hat = sample_covariance(out.Y);
    return out;
}

MeasurementSet simulate(const ArrayGeometry& geom, const SourceScenario& scenario)
{
    std::mt19937_64 rng(scenario.seed);
    return simulate(geom, scenario, rng);
}

CMatrix sample_covariance(const CMatrix& Y)
{
    if (Y.cols() < 1)
        throw InvalidArgument("sample covariance needs at least one snapshot");
    CMatrix R = Y * Y.adjoint() / Real(Y.cols());
    return hermitian_part(R);
}

CMatrix diagonal_load(const CMatrix& R, Real iota)
{
    if (iota < 0)
        throw InvalidArgument("diagonal loading must be non-negative");
    CMatrix out = R;
    out.diagonal().array() += iota;
    return out;
}

Real default_loading(const CMatrix& R)
{
    return 1e-6 * R.trace().real() / Real(R.rows());
}

} // namespace sisparrow
