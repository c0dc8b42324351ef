#pragma once

#include <vector>

#include "sisparrow/array_model.hpp"
#include "sisparrow/types.hpp"

namespace sisparrow {

enum class Calibration { partly, fully };

struct CrbInput
{
    ArrayGeometry geom; // displacements must be known
    std::vector<FrequencyPair> frequencies;
    CMatrix source_covariance;
    Real noise_variance = 1;
    Index snapshots = 1;
    Calibration mode = Calibration::partly;
};

/// Steering-vector derivatives, one column per source.
/// xi_x[p - 1] holds the derivative w.r.t. Re(h^x_{p,i}) for subarray p >= 1;
/// the imaginary-part blocks equal j * xi.
struct DerivativeBlocks
{
    CMatrix mu_x;
    CMatrix mu_y;
    std::vector<CMatrix> xi_x;
    std::vector<CMatrix> xi_y;

    /// Columns in parameter order [mu_x, mu_y, xi_x.., zeta_x.., xi_y.., zeta_y..].
    CMatrix stacked() const;
};

/// With Calibration::partly the frequency derivatives hold the subarray
/// phase vectors h fixed; with Calibration::fully they differentiate the whole
/// steering vector and no nuisance blocks are produced.
DerivativeBlocks derivative_blocks(const ArrayGeometry& geom, const std::vector<FrequencyPair>& freqs,
                                   Calibration mode = Calibration::partly);

struct CrbResult
{
    RMatrix mu_block;   // 2Ns x 2Ns, order [mu_x_1..mu_x_Ns, mu_y_1..mu_y_Ns]
    Real rmse_bound = 0;
    Real condition = 0; // of the Fisher block
    bool ill_conditioned = false;
};

/// Stochastic (unconditional) Cramer-Rao bound for the spatial frequencies.
CrbResult stochastic_crb(const CrbInput& input);

} // namespace sisparrow
