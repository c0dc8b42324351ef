#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sisparrow/array_model.hpp"
#include "sisparrow/types.hpp"

namespace sisparrow {

struct SourceScenario
{
    std::vector<FrequencyPair> frequencies;
    CMatrix source_covariance;   // Ns x Ns, Hermitian PSD, unit diagonal
    Index snapshots = 1;
    Real noise_variance = 1;
    std::uint64_t seed = 0;

    Index num_sources() const { return Index(frequencies.size()); }

    /// Unit-power sources with a common pairwise correlation coefficient.
    static CMatrix correlated_covariance(Index ns, Cplx phi);

    void validate() const;
};

inline Real noise_variance_from_snr_db(Real snr_db) { return std::pow(10.0, -snr_db / 10.0); }

struct MeasurementSet
{
    CMatrix Y;                    // M' x N, observable rows only
    CMatrix R_hat;                // M' x M'
    IndexList observable_indices; // rows of the full array kept in Y
    bool loaded = false;
};

/// Derive an independent 64-bit stream seed for one trial.
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial);

/// Y = A(mu) Psi + N with Psi ~ CN(0, P) per column and noise ~ CN(0, sigma^2).
MeasurementSet simulate(const ArrayGeometry& geom, const SourceScenario& scenario);

/// Same as `simulate` but with an externally supplied generator.
MeasurementSet simulate(const ArrayGeometry& geom, const SourceScenario& scenario, std::mt19937_64& rng);

/// Matrix of i.i.d. CN(0, 1) samples.
CMatrix complex_gaussian(Index rows, Index cols, std::mt19937_64& rng);

CMatrix sample_covariance(const CMatrix& Y);

/// R + iota I. Throws for negative iota.
CMatrix diagonal_load(const CMatrix& R, Real iota);

/// Default loading level 1e-6 tr(R) / M used when N < M.
Real default_loading(const CMatrix& R);

} // namespace sisparrow
