// Command line front end: bench, simulate, solve, recover, crb.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "sisparrow/bench.hpp"
#include "sisparrow/crb.hpp"
#include "sisparrow/errors.hpp"
#include "sisparrow/freq_recovery.hpp"
#include "sisparrow/io.hpp"
#include "sisparrow/linalg.hpp"
#include "sisparrow/signal_sim.hpp"
#include "sisparrow/solvers.hpp"

using namespace sisparrow;

namespace {

std::vector<FrequencyPair> truth_of(const ExperimentPlan& p) { return p.frequencies; }

int cmd_bench(const std::string& config_path, const std::string& out_dir, int threads)
{
    Config cfg = Config::load(config_path);
    if (threads > 0)
        cfg.set("run.threads", std::to_string(threads));
    ExperimentPlan plan = plan_from_config(cfg);
    ExperimentResult res = run_experiment(plan);
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    write_results_csv((dir / "results.csv").string(), res);
    auto files = emit_plotdata(res, out_dir);
    write_json((dir / "manifest.json").string(), manifest(res, cfg));
    std::cout << "wrote results.csv";
    for (const auto& f : files)
        std::cout << ", " << f;
    std::cout << ", manifest.json to " << out_dir << " (" << std::fixed << std::setprecision(1)
              << res.wall_seconds << " s)\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out, std::uint64_t trial)
{
    Config cfg = Config::load(config_path);
    ExperimentPlan plan = plan_from_config(cfg);
    const Real x = plan.sweep.front();
    ArrayGeometry geom = plan.geometry_at(x);
    SourceScenario sc;
    sc.frequencies = truth_of(plan);
    sc.source_covariance = SourceScenario::correlated_covariance(Index(sc.frequencies.size()),
                                                                std::polar(plan.correlation, plan.correlation_phase));
    sc.snapshots = plan.snapshots_at(x);
    sc.noise_variance = noise_variance_from_snr_db(plan.snr_db_at(x));
    sc.seed = trial_seed(trial_seed(plan.seed, 0), trial);
    MeasurementSet ms = simulate(geom, sc);

    Json truth = Json::array();
    for (const auto& f : sc.frequencies)
        truth.push_back({{"mu_x", f.mu_x}, {"mu_y", f.mu_y}});
    Json j{{"geometry", to_json(geom)},
           {"snapshots", sc.snapshots},
           {"noise_variance", sc.noise_variance},
           {"seed", sc.seed},
           {"truth", truth},
           {"observable_indices", ms.observable_indices},
           {"Y", to_json(ms.Y)},
           {"R_hat", to_json(ms.R_hat)}};
    write_json(out, j);
    return 0;
}

int cmd_solve(const std::string& input, const std::string& out, const std::string& algo, double lambda,
              bool with_trace)
{
    Json in = read_json(input);
    ArrayGeometry geom = geometry_from_json(in.at("geometry"));
    Objective obj;
    obj.R = matrix_from_json(in.at("R_hat"));
    obj.structure = build_shift_structure(geom);
    if (!geom.failed_sensors.empty())
        obj.observed = geom.observable_indices();
    if (lambda > 0) {
        obj.lambda = lambda;
    } else {
        const Real sigma2 = in.value("noise_variance", 1.0);
        const Index N = in.value("snapshots", Index(1));
        obj.lambda = auto_lambda(std::sqrt(sigma2), obj.R.rows(), N);
    }
    Algorithm a = algorithm_from_string(algo);
    if (a == Algorithm::admm && !is_positive_definite(obj.R))
        obj.R = diagonal_load(obj.R, default_loading(obj.R));
    SolverReport r = solve(obj, a, default_config(a));
    Json j = to_json(r);
    if (!with_trace)
        j.erase("trace");
    j["geometry"] = in.at("geometry");
    j["lambda"] = obj.lambda;
    write_json(out, j);
    return 0;
}

int cmd_recover(const std::string& input, const std::string& method, int ns, const std::string& out)
{
    Json in = read_json(input);
    ArrayGeometry geom = geometry_from_json(in.at("geometry"));
    std::vector<CMatrix> mats;
    if (in.contains("trials"))
        for (const auto& t : in.at("trials"))
            mats.push_back(matrix_from_json(t.contains("Q") ? t.at("Q") : t));
    else
        mats.push_back(matrix_from_json(in.at("Q")));

    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file)
            throw InvalidArgument("cannot write " + out);
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << "trial,source,mu_x,mu_y,method\n";
    for (std::size_t t = 0; t < mats.size(); ++t) {
        FrequencyEstimate est;
        if (method == "esprit") {
            ArrayGeometry partial = geom;
            partial.Delta_x.reset();
            partial.Delta_y.reset();
            est = mi_md_esprit(mats[t], partial, ns);
        } else if (method == "music") {
            est = music_2d(mats[t], geom, ns);
        } else {
            throw InvalidArgument("unknown method " + method);
        }
        for (std::size_t s = 0; s < est.pairs.size(); ++s)
            os << t << ',' << s << ',' << est.pairs[s].mu_x << ',' << est.pairs[s].mu_y << ',' << method << '\n';
    }
    return 0;
}

int cmd_crb(const std::string& config_path, const std::string& out)
{
    Config cfg = Config::load(config_path);
    ExperimentPlan plan = plan_from_config(cfg);
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file)
            throw InvalidArgument("cannot write " + out);
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << "snr_db,snapshots,crb_partly,crb_fully\n";
    for (Real x : plan.sweep) {
        CrbInput in;
        in.geom = plan.geometry_at(x);
        in.frequencies = plan.frequencies;
        in.source_covariance = SourceScenario::correlated_covariance(
            Index(plan.frequencies.size()), std::polar(plan.correlation, plan.correlation_phase));
        in.noise_variance = noise_variance_from_snr_db(plan.snr_db_at(x));
        in.snapshots = plan.snapshots_at(x);
        in.mode = Calibration::partly;
        Real partly = stochastic_crb(in).rmse_bound;
        in.mode = Calibration::fully;
        Real fully = stochastic_crb(in).rmse_bound;
        os << plan.snr_db_at(x) << ',' << in.snapshots << ',' << partly << ',' << fully << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Gridless DOA estimation for partly calibrated rectangular arrays"};
    app.require_subcommand(1);

    std::string config, out_dir, out, input, algo = "admm", method = "esprit";
    int threads = 0, ns = 1;
    double lambda = 0;
    bool trace = true;
    std::uint64_t trial = 0;

    auto* bench = app.add_subcommand("bench", "Run a Monte-Carlo experiment");
    bench->add_option("--config", config, "Experiment plan")->required()->check(CLI::ExistingFile);
    bench->add_option("--out", out_dir, "Output directory")->required();
    bench->add_option("--threads", threads, "Worker threads (overrides run.threads)");

    auto* sim = app.add_subcommand("simulate", "Simulate one trial of the first sweep point");
    sim->add_option("--config", config, "Experiment plan")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "Output JSON")->required();
    sim->add_option("--trial", trial, "Trial index");

    auto* solve_cmd = app.add_subcommand("solve", "Solve SI-SPARROW for a simulated measurement");
    solve_cmd->add_option("--input", input, "Measurement JSON (from simulate)")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--out", out, "Report JSON")->required();
    solve_cmd->add_option("--algorithm", algo, "admm or sca")->check(CLI::IsMember({"admm", "sca"}));
    solve_cmd->add_option("--lambda", lambda, "Regularization (default: automatic)");
    solve_cmd->add_flag("!--no-trace", trace, "Omit residual traces");

    auto* rec = app.add_subcommand("recover", "Recover frequencies from a structured covariance");
    rec->add_option("--input", input, "JSON with geometry and Q (or trials)")->required()->check(CLI::ExistingFile);
    rec->add_option("--method", method, "esprit or music")->check(CLI::IsMember({"esprit", "music"}));
    rec->add_option("--ns", ns, "Number of sources")->required()->check(CLI::PositiveNumber);
    rec->add_option("--out", out, "Output CSV (default: stdout)");

    auto* crb = app.add_subcommand("crb", "Stochastic CRB along the plan's sweep");
    crb->add_option("--config", config, "Experiment plan")->required()->check(CLI::ExistingFile);
    crb->add_option("--out", out, "Output CSV (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*bench)
            return cmd_bench(config, out_dir, threads);
        if (*sim)
            return cmd_simulate(config, out, trial);
        if (*solve_cmd)
            return cmd_solve(input, out, algo, lambda, trace);
        if (*rec)
            return cmd_recover(input, method, ns, out);
        if (*crb)
            return cmd_crb(config, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
