#include "sisparrow/io.hpp"

#include <fstream>

#include "sisparrow/errors.hpp"

namespace sisparrow {

Json to_json(const CMatrix& m)
{
    std::vector<Real> re, im;
    re.reserve(std::size_t(m.size()));
    im.reserve(std::size_t(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) {
            re.push_back(m(r, c).real());
            im.push_back(m(r, c).imag());
        }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

CMatrix matrix_from_json(const Json& j)
{
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto re = j.at("re").get<std::vector<Real>>();
    std::vector<Real> im(re.size(), 0.0);
    if (j.contains("im"))
        im = j.at("im").get<std::vector<Real>>();
    if (Index(re.size()) != rows * cols || im.size() != re.size())
        throw DimensionMismatch("matrix json: entry count does not match shape");
    CMatrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            m(r, c) = Cplx(re[std::size_t(r * cols + c)], im[std::size_t(r * cols + c)]);
    return m;
}

namespace {

std::vector<Real> to_std(const RVector& v) { return {v.data(), v.data() + v.size()}; }

RVector to_eigen(const std::vector<Real>& v)
{
    return Eigen::Map<const RVector>(v.data(), Index(v.size()));
}

} // namespace

Json to_json(const ArrayGeometry& g)
{
    Json j{{"Px", g.Px}, {"Py", g.Py}, {"Lx", g.Lx}, {"Ly", g.Ly},
           {"delta_x", to_std(g.delta_x)}, {"delta_y", to_std(g.delta_y)},
           {"failed_sensors", g.failed_sensors}};
    j["Delta_x"] = g.Delta_x ? Json(to_std(*g.Delta_x)) : Json("unknown");
    j["Delta_y"] = g.Delta_y ? Json(to_std(*g.Delta_y)) : Json("unknown");
    return j;
}

ArrayGeometry geometry_from_json(const Json& j)
{
    ArrayGeometry g;
    g.Px = j.at("Px").get<Index>();
    g.Py = j.at("Py").get<Index>();
    g.Lx = j.at("Lx").get<Index>();
    g.Ly = j.at("Ly").get<Index>();
    g.delta_x = to_eigen(j.at("delta_x").get<std::vector<Real>>());
    g.delta_y = to_eigen(j.at("delta_y").get<std::vector<Real>>());
    auto displacement = [&](const char* key) -> std::optional<RVector> {
        if (!j.contains(key) || j.at(key).is_string())
            return std::nullopt;
        return to_eigen(j.at(key).get<std::vector<Real>>());
    };
    g.Delta_x = displacement("Delta_x");
    g.Delta_y = displacement("Delta_y");
    if (j.contains("failed_sensors"))
        g.failed_sensors = j.at("failed_sensors").get<IndexList>();
    g.validate();
    return g;
}

Json to_json(const SolverReport& r, bool include_Q)
{
    Json j{{"algorithm", to_string(r.algorithm)},
           {"objective", r.objective},
           {"iterations", r.iterations},
           {"inner_iterations", r.inner_iterations},
           {"converged", r.converged},
           {"max_iterations_reached", r.max_iterations_reached},
           {"relaxed_solution_psd", r.relaxed_solution_psd},
           {"psd_shift", r.psd_shift},
           {"trace",
            {{"primal_residual", r.primal_residuals},
             {"dual_residual", r.dual_residuals},
             {"penalty", r.penalties},
             {"objective", r.objectives}}}};
    if (include_Q)
        j["Q"] = to_json(r.Q);
    return j;
}

Json to_json(const FrequencyEstimate& e)
{
    Json pairs = Json::array();
    for (const auto& p : e.pairs)
        pairs.push_back({{"mu_x", p.mu_x}, {"mu_y", p.mu_y}});
    return {{"method", e.method}, {"pairs", pairs}, {"fit_x", e.fit_x}, {"fit_y", e.fit_y},
            {"subspace_gap", e.subspace_gap}, {"complete", e.complete}, {"jd_converged", e.jd_converged}};
}

Json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const Json& j)
{
    std::ofstream out(path);
    if (!out)
        throw InvalidArgument("cannot write " + path);
    out << j.dump(2) << '\n';
}

} // namespace sisparrow
