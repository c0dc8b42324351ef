#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sisparrow/array_model.hpp"
#include "sisparrow/config.hpp"
#include "sisparrow/io.hpp"
#include "sisparrow/solvers.hpp"

namespace sisparrow {

enum class SweepAxis { snr_db, snapshots, Lx };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

enum class Method { sisparrow_admm, sisparrow_sca, esprit_cov, music_cov, music_sisparrow };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ExperimentPlan
{
    ArrayGeometry geometry;        // Delta known: simulation needs the truth
    Real gap_x = 49;               // used to rebuild displacements in an Lx sweep
    Real gap_y = 49;
    std::vector<FrequencyPair> frequencies;
    Real correlation = 0;          // |phi|
    Real correlation_phase = 0;
    Index snapshots = 5;
    Real snr_db = 10;
    SweepAxis axis = SweepAxis::snr_db;
    std::vector<Real> sweep;
    std::vector<Method> methods;
    Index trials = 100;
    std::uint64_t seed = 1;
    Index threads = 0;             // 0 = hardware concurrency
    bool drop_incomplete = false;  // drop trials with fewer than Ns estimates instead of penalizing
    std::optional<Real> lambda;    // empty = sigma (sqrt(M/N) + 1)
    SolverConfig admm = default_config(Algorithm::admm);
    SolverConfig sca = default_config(Algorithm::sca);
    Index music_grid = 0;          // 0 = scaled to the aperture

    void validate() const;

    /// Geometry, N and noise variance at one sweep value.
    ArrayGeometry geometry_at(Real x) const;
    Index snapshots_at(Real x) const;
    Real snr_db_at(Real x) const;
};

ExperimentPlan plan_from_config(const Config& c);

struct CellResult
{
    Method method;
    Real rmse = 0;
    Real mean_iterations = 0;
    Real mean_runtime = 0; // seconds
    Index failures = 0;
    Index incomplete = 0;
    Index used_trials = 0;
};

struct PointResult
{
    Real x = 0;
    Index sensors = 0;
    Real lambda = 0;     // regularization used at this point
    Real crb_partly = 0; // rmse bounds
    Real crb_fully = 0;
    std::vector<CellResult> cells; // in plan.methods order
    std::vector<std::uint64_t> seeds;
};

struct ExperimentResult
{
    ExperimentPlan plan;
    std::vector<PointResult> points;
    Real wall_seconds = 0;
};

ExperimentResult run_experiment(const ExperimentPlan& plan);

/// One row per (sweep value, method).
void write_results_csv(const std::string& path, const ExperimentResult& r);

/// Per-figure tables (x, one column per method, crb_partly, crb_fully).
/// Returns the written file names.
std::vector<std::string> emit_plotdata(const ExperimentResult& r, const std::string& dir);

Json manifest(const ExperimentResult& r, const Config& resolved);

} // namespace sisparrow
