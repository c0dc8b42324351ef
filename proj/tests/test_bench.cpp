#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sisparrow/bench.hpp"
#include "sisparrow/errors.hpp"

using namespace sisparrow;

namespace {

ExperimentPlan small_plan()
{
    ExperimentPlan p;
    p.geometry = ArrayGeometry::uniform(2, 2, 2, 2, 49, 49);
    p.frequencies = {{0.5, 1.5}, {0.8, 1.2}};
    p.snapshots = 20;
    p.axis = SweepAxis::snr_db;
    p.sweep = {20};
    p.methods = {Method::sisparrow_admm, Method::esprit_cov, Method::music_cov};
    p.trials = 3;
    p.seed = 99;
    p.threads = 1;
    return p;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    REQUIRE(in);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

struct TempDir
{
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name)
    {
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("noiseless single trial")
{
    ExperimentPlan p = small_plan();
    p.geometry = ArrayGeometry::uniform(2, 2, 4, 2, 49, 49);
    p.sweep = {120};
    p.snapshots = 50;
    p.trials = 1;
    p.methods = {Method::sisparrow_admm};
    ExperimentResult r = run_experiment(p);
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].cells[0].failures == 0);
    CHECK(r.points[0].cells[0].rmse <= 1e-3);
}

TEST_CASE("automatic regularization per sweep point")
{
    ExperimentPlan p = small_plan();
    p.sweep = {0};
    p.snapshots = 4;
    p.trials = 1;
    p.methods = {Method::esprit_cov};
    ExperimentResult r = run_experiment(p);
    CHECK(r.points[0].sensors == 16);
    CHECK(r.points[0].lambda == doctest::Approx(3));
}

TEST_CASE("results are reproducible and independent of the thread count")
{
    ExperimentPlan p = small_plan();
    ExperimentResult a = run_experiment(p);
    ExperimentResult b = run_experiment(p);
    p.threads = 3;
    ExperimentResult c = run_experiment(p);
    for (std::size_t m = 0; m < p.methods.size(); ++m) {
        CHECK(a.points[0].cells[m].rmse == b.points[0].cells[m].rmse);
        CHECK(a.points[0].cells[m].rmse == c.points[0].cells[m].rmse);
        CHECK(a.points[0].cells[m].rmse >= 0);
    }
    CHECK(a.points[0].seeds == c.points[0].seeds);
    CHECK(a.points[0].crb_partly > 0);
    CHECK(a.points[0].crb_fully > 0);
    CHECK(a.points[0].crb_partly >= a.points[0].crb_fully);
}

TEST_CASE("emitted tables round-trip")
{
    ExperimentPlan p = small_plan();
    p.sweep = {10, 20};
    p.trials = 2;
    ExperimentResult r = run_experiment(p);
    TempDir dir("sisparrow_bench_roundtrip");
    auto files = emit_plotdata(r, dir.path.string());
    REQUIRE(files == std::vector<std::string>{"rmse_vs_snr.csv"});
    auto rows = read_csv(dir.path / files[0]);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"snr_db", "sisparrow_admm", "esprit_cov", "music_cov", "crb_partly",
                                              "crb_fully"});
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& row = rows[i + 1];
        REQUIRE(row.size() == 1 + p.methods.size() + 2);
        CHECK(std::stod(row[0]) == r.points[i].x);
        for (std::size_t m = 0; m < p.methods.size(); ++m)
            CHECK(std::stod(row[1 + m]) == r.points[i].cells[m].rmse);
        CHECK(std::stod(row[4]) == r.points[i].crb_partly);
        CHECK(std::stod(row[5]) == r.points[i].crb_fully);
    }

    write_results_csv((dir.path / "results.csv").string(), r);
    auto res = read_csv(dir.path / "results.csv");
    REQUIRE(res.size() == 1 + 2 * p.methods.size());
    CHECK(res[0][0] == "snr_db");
    CHECK(res[0].size() == 10);
    CHECK(res[1][1] == "sisparrow_admm");
    CHECK(std::stod(res[1][2]) == r.points[0].cells[0].rmse);
    CHECK(std::stoll(res[1][7]) == r.points[0].cells[0].used_trials);

    Json man = manifest(r, Config::parse_string("[run]\nseed = 99\n"));
    CHECK(man["config"]["run.seed"] == "99");
    CHECK(man["points"][1]["trial_seeds"].size() == 2);
    CHECK(man["points"][0]["methods"][0]["rmse"] == r.points[0].cells[0].rmse);
    CHECK(man.contains("version"));
}

TEST_CASE("table with no surviving methods has only a header")
{
    ExperimentResult r;
    r.plan = small_plan();
    PointResult pr;
    pr.x = 10;
    r.points.push_back(pr);
    TempDir dir("sisparrow_bench_empty");
    auto files = emit_plotdata(r, dir.path.string());
    auto rows = read_csv(dir.path / files[0]);
    CHECK(rows.size() == 1);
}

TEST_CASE("snapshot and array-size sweeps")
{
    ExperimentPlan p = small_plan();
    p.axis = SweepAxis::snapshots;
    p.sweep = {10, 40};
    p.trials = 1;
    p.methods = {Method::esprit_cov};
    ExperimentResult r = run_experiment(p);
    CHECK(r.points[1].crb_partly < r.points[0].crb_partly);
    TempDir dir("sisparrow_bench_axes");
    CHECK(emit_plotdata(r, dir.path.string()) == std::vector<std::string>{"rmse_vs_n.csv", "runtime_vs_n.csv"});

    p.axis = SweepAxis::Lx;
    p.sweep = {2, 3};
    ExperimentResult m = run_experiment(p);
    CHECK(m.points[0].sensors == 16);
    CHECK(m.points[1].sensors == 24);
    auto files = emit_plotdata(m, dir.path.string());
    REQUIRE(files == std::vector<std::string>{"runtime_vs_m.csv"});
    auto rows = read_csv(dir.path / files[0]);
    CHECK(rows[0][0] == "sensors");
    CHECK(std::stod(rows[2][0]) == 24);
}

TEST_CASE("failed sensors: covariance baselines fail, the solver does not")
{
    ExperimentPlan p = small_plan();
    p.geometry.failed_sensors = {6};
    p.sweep = {120};
    p.trials = 2;
    p.methods = {Method::sisparrow_admm, Method::esprit_cov};
    ExperimentResult r = run_experiment(p);
    CHECK(r.points[0].cells[0].failures == 0);
    CHECK(r.points[0].cells[0].rmse <= 1e-2);
    CHECK(r.points[0].cells[1].failures == 2);
    CHECK(r.points[0].cells[1].used_trials == 0);
}
