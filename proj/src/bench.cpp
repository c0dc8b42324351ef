#include "sisparrow/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <thread>

#include "sisparrow/crb.hpp"
#include "sisparrow/errors.hpp"
#include "sisparrow/freq_recovery.hpp"
#include "sisparrow/signal_sim.hpp"

#ifndef SISPARROW_VERSION
#define SISPARROW_VERSION "0.0.0"
#endif

namespace sisparrow {

std::string to_string(SweepAxis a)
{
    switch (a) {
    case SweepAxis::snr_db: return "snr_db";
    case SweepAxis::snapshots: return "snapshots";
    case SweepAxis::Lx: return "Lx";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s)
{
    if (s == "snr_db")
        return SweepAxis::snr_db;
    if (s == "snapshots")
        return SweepAxis::snapshots;
    if (s == "Lx")
        return SweepAxis::Lx;
    throw ConfigError("unknown sweep axis '" + s + "'");
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::sisparrow_admm: return "sisparrow_admm";
    case Method::sisparrow_sca: return "sisparrow_sca";
    case Method::esprit_cov: return "esprit_cov";
    case Method::music_cov: return "music_cov";
    case Method::music_sisparrow: return "music_sisparrow";
    }
    return "?";
}

Method method_from_string(const std::string& s)
{
    for (Method m : {Method::sisparrow_admm, Method::sisparrow_sca, Method::esprit_cov, Method::music_cov,
                     Method::music_sisparrow})
        if (to_string(m) == s)
            return m;
    throw ConfigError("unknown method '" + s + "'");
}

void ExperimentPlan::validate() const
{
    geometry.validate();
    if (!geometry.fully_known())
        throw ConfigError("plan: displacements must be known to simulate");
    if (frequencies.empty())
        throw ConfigError("plan: no sources");
    if (sweep.empty())
        throw ConfigError("plan: empty sweep");
    if (methods.empty())
        throw ConfigError("plan: no methods");
    if (trials < 1)
        throw ConfigError("plan: trials must be >= 1");
    if (std::abs(correlation) > 1)
        throw ConfigError("plan: |correlation| must be <= 1");
    for (Real x : sweep) {
        if (axis == SweepAxis::snapshots && (x < 1 || x != std::floor(x)))
            throw ConfigError("plan: snapshot counts must be positive integers");
        if (axis == SweepAxis::Lx && (x < 2 || x != std::floor(x)))
            throw ConfigError("plan: Lx values must be integers >= 2");
    }
    admm.validate();
    sca.validate();
}

ArrayGeometry ExperimentPlan::geometry_at(Real x) const
{
    if (axis != SweepAxis::Lx)
        return geometry;
    ArrayGeometry g = ArrayGeometry::uniform(geometry.Px, geometry.Py, Index(x), geometry.Ly, gap_x, gap_y);
    g.delta_y = geometry.delta_y;
    RVector Dy(geometry.Py);
    for (Index p = 0; p < geometry.Py; ++p)
        Dy(p) = (*geometry.Delta_y)(p);
    g.Delta_y = Dy;
    g.failed_sensors = geometry.failed_sensors;
    return g;
}

Index ExperimentPlan::snapshots_at(Real x) const
{
    return axis == SweepAxis::snapshots ? Index(x) : snapshots;
}

Real ExperimentPlan::snr_db_at(Real x) const { return axis == SweepAxis::snr_db ? x : snr_db; }

namespace {

RVector vec(const std::vector<double>& v) { return Eigen::Map<const RVector>(v.data(), Index(v.size())); }

SolverConfig solver_from_config(const Config& c, const std::string& prefix, SolverConfig s)
{
    s.eps_abs = c.get_real(prefix + "eps_abs", s.eps_abs);
    s.eps_rel = c.get_real(prefix + "eps_rel", s.eps_rel);
    s.rho0 = c.get_real(prefix + "rho0", s.rho0);
    s.kappa = c.get_real(prefix + "kappa", s.kappa);
    if (c.has(prefix + "tau"))
        s.tau_incr = s.tau_decr = c.get_real(prefix + "tau");
    s.tau_incr = c.get_real(prefix + "tau_incr", s.tau_incr);
    s.tau_decr = c.get_real(prefix + "tau_decr", s.tau_decr);
    s.t_max = Index(c.get_int(prefix + "t_max", s.t_max));
    s.max_outer = Index(c.get_int(prefix + "max_outer", s.max_outer));
    s.max_inner = Index(c.get_int(prefix + "max_inner", s.max_inner));
    s.armijo_beta = c.get_real(prefix + "armijo_beta", s.armijo_beta);
    s.armijo_sigma = c.get_real(prefix + "armijo_sigma", s.armijo_sigma);
    s.eta = c.get_real(prefix + "eta", s.eta);
    return s;
}

} // namespace

ExperimentPlan plan_from_config(const Config& c)
{
    ExperimentPlan p;
    ArrayGeometry& g = p.geometry;
    g.Px = Index(c.get_int("geometry.Px", 2));
    g.Py = Index(c.get_int("geometry.Py", 2));
    g.Lx = Index(c.get_int("geometry.Lx", 4));
    g.Ly = Index(c.get_int("geometry.Ly", 2));
    p.gap_x = c.get_real("geometry.gap_x", 49);
    p.gap_y = c.get_real("geometry.gap_y", 49);
    ArrayGeometry u = ArrayGeometry::uniform(g.Px, g.Py, g.Lx, g.Ly, p.gap_x, p.gap_y);
    g.delta_x = c.has("geometry.delta_x") ? vec(c.get_reals("geometry.delta_x")) : u.delta_x;
    g.delta_y = c.has("geometry.delta_y") ? vec(c.get_reals("geometry.delta_y")) : u.delta_y;
    g.Delta_x = u.Delta_x;
    g.Delta_y = u.Delta_y;
    if (c.has("geometry.Delta_x")) {
        auto d = c.get_optional_reals("geometry.Delta_x");
        g.Delta_x = d ? std::optional<RVector>(vec(*d)) : std::nullopt;
    }
    if (c.has("geometry.Delta_y")) {
        auto d = c.get_optional_reals("geometry.Delta_y");
        g.Delta_y = d ? std::optional<RVector>(vec(*d)) : std::nullopt;
    }
    if (c.has("geometry.failed_sensors"))
        for (double v : c.get_reals("geometry.failed_sensors"))
            g.failed_sensors.push_back(Index(v));

    auto mx = c.get_reals("scenario.mu_x");
    auto my = c.get_reals("scenario.mu_y");
    if (mx.size() != my.size())
        throw ConfigError("scenario: mu_x and mu_y differ in length");
    for (std::size_t i = 0; i < mx.size(); ++i)
        p.frequencies.push_back({mx[i], my[i]});
    p.correlation = c.get_real("scenario.correlation", c.get_real("scenario.corr", 0));
    p.correlation_phase = c.get_real("scenario.correlation_phase", 0);
    p.snapshots = Index(c.get_int("scenario.snapshots", 5));
    p.snr_db = c.get_real("scenario.snr_db", 10);
    for (const char* key : {"solver.lambda", "scenario.lambda"})
        if (c.has(key) && c.get_string(key) != "auto")
            p.lambda = c.get_real(key);

    p.axis = sweep_axis_from_string(c.get_string("sweep.axis"));
    p.sweep = c.get_reals("sweep.values");

    for (const auto& m : c.get_strings("run.methods"))
        p.methods.push_back(method_from_string(m));
    p.trials = Index(c.get_int("run.trials", c.get_int("scenario.trials", 100)));
    for (const char* key : {"scenario.seed", "run.seed"}) {
        if (!c.has(key))
            continue;
        const std::string v = c.get_string(key);
        std::size_t used = 0;
        try {
            p.seed = std::stoull(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != v.size() || v.front() == '-')
            throw ConfigError(std::string("config: ") + key + " expects an unsigned integer, got '" + v + "'");
    }
    p.threads = Index(c.get_int("run.threads", 0));
    const std::string scoring = c.get_string("run.scoring", "penalize");
    if (scoring != "penalize" && scoring != "drop")
        throw ConfigError("run.scoring must be penalize or drop");
    p.drop_incomplete = scoring == "drop";
    p.music_grid = Index(c.get_int("run.music_grid", 0));

    // [solver] applies to both algorithms, [admm] and [sca] override it
    if (c.has("solver.algorithm"))
        algorithm_from_string(c.get_string("solver.algorithm"));
    p.admm = solver_from_config(c, "admm.", solver_from_config(c, "solver.", p.admm));
    p.sca = solver_from_config(c, "sca.", solver_from_config(c, "solver.", p.sca));
    p.validate();
    return p;
}

namespace {

struct MethodOutcome
{
    bool ok = false;
    std::vector<FrequencyPair> pairs;
    Index iterations = 0;
    Real seconds = 0;
};

using Clock = std::chrono::steady_clock;

Real seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<Real>(Clock::now() - t0).count();
}

struct PointContext
{
    const ExperimentPlan* plan;
    ArrayGeometry truth;     // displacements known
    ArrayGeometry partial;   // displacements unknown
    SourceScenario scenario;
    ShiftStructure structure;
    Real lambda = 1;
    Real crb_fully_mu = 0;   // mean CRB of mu, guides MUSIC refinement
};

std::vector<MethodOutcome> run_trial(const PointContext& ctx, std::uint64_t seed)
{
    const ExperimentPlan& plan = *ctx.plan;
    SourceScenario sc = ctx.scenario;
    sc.seed = seed;
    MeasurementSet ms = simulate(ctx.truth, sc);
    const Index ns = sc.num_sources();
    const bool full_array = ctx.truth.failed_sensors.empty();

    // the ADMM solution is shared by the two methods that need it
    std::optional<SolverReport> admm_report;
    Real admm_seconds = 0;
    auto make_objective = [&](bool load) {
        Objective obj;
        obj.R = ms.R_hat;
        if (load && sc.snapshots < ms.R_hat.rows())
            obj.R = diagonal_load(ms.R_hat, default_loading(ms.R_hat));
        obj.lambda = ctx.lambda;
        obj.structure = ctx.structure;
        if (!full_array)
            obj.observed = ms.observable_indices;
        return obj;
    };
    auto admm_solution = [&]() -> const SolverReport& {
        if (!admm_report) {
            auto t0 = Clock::now();
            admm_report = solve_admm(make_objective(true), plan.admm);
            admm_seconds = seconds_since(t0);
        }
        return *admm_report;
    };

    MusicConfig mcfg;
    mcfg.grid = plan.music_grid;
    mcfg.crb_ref = ctx.crb_fully_mu;

    std::vector<MethodOutcome> out;
    for (Method m : plan.methods) {
        MethodOutcome o;
        try {
            auto t0 = Clock::now();
            FrequencyEstimate est;
            switch (m) {
            case Method::sisparrow_admm: {
                bool fresh = !admm_report;
                const SolverReport& r = admm_solution();
                est = mi_md_esprit(r.Q, ctx.partial, ns);
                o.iterations = r.iterations;
                o.seconds = seconds_since(t0) + (fresh ? 0 : admm_seconds);
                break;
            }
            case Method::sisparrow_sca: {
                SolverReport r = solve_sca(make_objective(false), plan.sca);
                est = mi_md_esprit(r.Q, ctx.partial, ns);
                o.iterations = r.iterations;
                o.seconds = seconds_since(t0);
                break;
            }
            case Method::esprit_cov:
                if (!full_array)
                    throw InvalidArgument("esprit_cov needs every sensor");
                est = mi_md_esprit(ms.R_hat, ctx.partial, ns);
                o.seconds = seconds_since(t0);
                break;
            case Method::music_cov:
                if (!full_array)
                    throw InvalidArgument("music_cov needs every sensor");
                est = music_2d(ms.R_hat, ctx.truth, ns, mcfg);
                o.seconds = seconds_since(t0);
                break;
            case Method::music_sisparrow: {
                bool fresh = !admm_report;
                const SolverReport& r = admm_solution();
                est = music_2d(r.Q, ctx.truth, ns, mcfg);
                o.iterations = r.iterations;
                o.seconds = seconds_since(t0) + (fresh ? 0 : admm_seconds);
                break;
            }
            }
            o.pairs = est.pairs;
            o.ok = true;
        } catch (const std::exception&) {
            o.ok = false;
        }
        out.push_back(std::move(o));
    }
    return out;
}

Real safe_crb(const CrbInput& in)
{
    try {
        return stochastic_crb(in).rmse_bound;
    } catch (const Error&) {
        return std::numeric_limits<Real>::quiet_NaN();
    }
}

} // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan)
{
    plan.validate();
    const auto t_start = Clock::now();
    ExperimentResult result;
    result.plan = plan;

    Index threads = plan.threads > 0 ? plan.threads : Index(std::thread::hardware_concurrency());
    threads = std::clamp<Index>(threads, 1, plan.trials);

    for (std::size_t pi_ = 0; pi_ < plan.sweep.size(); ++pi_) {
        const Real x = plan.sweep[pi_];
        PointContext ctx;
        ctx.plan = &plan;
        ctx.truth = plan.geometry_at(x);
        ctx.partial = ctx.truth;
        ctx.partial.Delta_x.reset();
        ctx.partial.Delta_y.reset();
        ctx.scenario.frequencies = plan.frequencies;
        ctx.scenario.source_covariance = SourceScenario::correlated_covariance(
            Index(plan.frequencies.size()), std::polar(plan.correlation, plan.correlation_phase));
        ctx.scenario.snapshots = plan.snapshots_at(x);
        ctx.scenario.noise_variance = noise_variance_from_snr_db(plan.snr_db_at(x));
        ctx.structure = build_shift_structure(ctx.truth);
        const Index observed = Index(ctx.truth.observable_indices().size());
        ctx.lambda = plan.lambda ? *plan.lambda
                                 : auto_lambda(std::sqrt(ctx.scenario.noise_variance), observed,
                                               ctx.scenario.snapshots);

        PointResult pr;
        pr.x = x;
        pr.sensors = ctx.truth.num_sensors();
        pr.lambda = ctx.lambda;
        CrbInput ci{ctx.truth, plan.frequencies, ctx.scenario.source_covariance, ctx.scenario.noise_variance,
                    ctx.scenario.snapshots, Calibration::partly};
        pr.crb_partly = safe_crb(ci);
        ci.mode = Calibration::fully;
        pr.crb_fully = safe_crb(ci);
        ctx.crb_fully_mu = std::isfinite(pr.crb_fully) ? pr.crb_fully * pr.crb_fully : 0;

        const std::uint64_t point_seed = trial_seed(plan.seed, std::uint64_t(pi_));
        for (Index t = 0; t < plan.trials; ++t)
            pr.seeds.push_back(trial_seed(point_seed, std::uint64_t(t)));

        std::vector<std::vector<MethodOutcome>> outcomes(std::size_t(plan.trials));
        std::atomic<Index> next{0};
        auto worker = [&]() {
            for (Index t = next++; t < plan.trials; t = next++)
                outcomes[std::size_t(t)] = run_trial(ctx, pr.seeds[std::size_t(t)]);
        };
        std::vector<std::thread> pool;
        for (Index w = 1; w < threads; ++w)
            pool.emplace_back(worker);
        worker();
        for (auto& th : pool)
            th.join();

        // reduce in trial order
        for (std::size_t mi = 0; mi < plan.methods.size(); ++mi) {
            CellResult cell;
            cell.method = plan.methods[mi];
            Real sq = 0, iters = 0, secs = 0;
            Index timed = 0;
            for (const auto& trial : outcomes) {
                const MethodOutcome& o = trial[mi];
                if (!o.ok) {
                    ++cell.failures;
                    continue;
                }
                iters += Real(o.iterations);
                secs += o.seconds;
                ++timed;
                const bool incomplete = o.pairs.size() != plan.frequencies.size();
                if (incomplete) {
                    ++cell.incomplete;
                    if (plan.drop_incomplete)
                        continue;
                }
                sq += trial_squared_error(o.pairs, plan.frequencies);
                ++cell.used_trials;
            }
            const Real ns = Real(plan.frequencies.size());
            cell.rmse = cell.used_trials > 0 ? std::sqrt(sq / (ns * Real(cell.used_trials)))
                                             : std::numeric_limits<Real>::quiet_NaN();
            cell.mean_iterations = timed > 0 ? iters / Real(timed) : 0;
            cell.mean_runtime = timed > 0 ? secs / Real(timed) : 0;
            pr.cells.push_back(cell);
        }
        result.points.push_back(std::move(pr));
    }
    result.wall_seconds = seconds_since(t_start);
    return result;
}

namespace {

std::ofstream open_csv(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidArgument("cannot write " + path);
    out.imbue(std::locale::classic());
    out << std::setprecision(17);
    return out;
}

} // namespace

void write_results_csv(const std::string& path, const ExperimentResult& r)
{
    auto out = open_csv(path);
    out << to_string(r.plan.axis)
        << ",method,rmse,mean_iterations,mean_runtime_s,failures,incomplete,used_trials,crb_partly,crb_fully\n";
    for (const auto& p : r.points)
        for (const auto& c : p.cells)
            out << p.x << ',' << to_string(c.method) << ',' << c.rmse << ',' << c.mean_iterations << ','
                << c.mean_runtime << ',' << c.failures << ',' << c.incomplete << ',' << c.used_trials << ','
                << p.crb_partly << ',' << p.crb_fully << '\n';
}

std::vector<std::string> emit_plotdata(const ExperimentResult& r, const std::string& dir)
{
    std::filesystem::create_directories(dir);
    struct Figure
    {
        std::string name;
        std::string x_label;
        bool runtime;
    };
    std::vector<Figure> figs;
    switch (r.plan.axis) {
    case SweepAxis::snr_db: figs.push_back({"rmse_vs_snr.csv", "snr_db", false}); break;
    case SweepAxis::snapshots:
        figs.push_back({"rmse_vs_n.csv", "snapshots", false});
        figs.push_back({"runtime_vs_n.csv", "snapshots", true});
        break;
    case SweepAxis::Lx: figs.push_back({"runtime_vs_m.csv", "sensors", true}); break;
    }

    std::vector<std::string> written;
    for (const auto& f : figs) {
        auto out = open_csv((std::filesystem::path(dir) / f.name).string());
        out << f.x_label;
        for (Method m : r.plan.methods)
            out << ',' << to_string(m);
        out << ",crb_partly,crb_fully\n";
        for (const auto& p : r.points) {
            if (p.cells.empty())
                continue;
            out << (r.plan.axis == SweepAxis::Lx ? Real(p.sensors) : p.x);
            for (const auto& c : p.cells)
                out << ',' << (f.runtime ? c.mean_runtime : c.rmse);
            out << ',' << p.crb_partly << ',' << p.crb_fully << '\n';
        }
        written.push_back(f.name);
    }
    return written;
}

Json manifest(const ExperimentResult& r, const Config& resolved)
{
    Json cfg = Json::object();
    for (const auto& [k, v] : resolved.entries())
        cfg[k] = v;
    Json points = Json::array();
    for (const auto& p : r.points) {
        Json cells = Json::array();
        for (const auto& c : p.cells)
            cells.push_back({{"method", to_string(c.method)},
                             {"rmse", c.rmse},
                             {"mean_iterations", c.mean_iterations},
                             {"mean_runtime_s", c.mean_runtime},
                             {"failures", c.failures},
                             {"incomplete", c.incomplete},
                             {"used_trials", c.used_trials}});
        points.push_back({{"x", p.x},
                          {"sensors", p.sensors},
                          {"lambda", p.lambda},
                          {"crb_partly", p.crb_partly},
                          {"crb_fully", p.crb_fully},
                          {"trial_seeds", p.seeds},
                          {"methods", cells}});
    }
    return {{"software", "sisparrow"},
            {"version", SISPARROW_VERSION},
            {"config", cfg},
            {"sweep_axis", to_string(r.plan.axis)},
            {"base_seed", r.plan.seed},
            {"trials", r.plan.trials},
            {"scoring", r.plan.drop_incomplete ? "drop" : "penalize"},
            {"wall_seconds", r.wall_seconds},
            {"points", points}};
}

} // namespace sisparrow
