#include "eplab/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace eplab {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void Table::add(std::vector<std::string> row) {
    require(row.size() == header.size(), "Table: row width does not match header");
    rows.push_back(std::move(row));
}

std::string Table::csv() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
}

std::string Table::text() const {
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << "  ";
            out << std::string(width[i] - cells[i].size(), ' ') << cells[i];
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out.str();
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

Table sweep_table(const std::vector<SweepRow>& rows) {
    Table t{{"v0", "e0", "delta", "blew_up", "t_star"}, {}};
    for (const auto& r : rows)
        t.add({format_number(r.v0), format_number(r.e0), format_number(r.delta), r.blew_up ? "1" : "0", opt(r.t_star)});
    return t;
}

Table snapshot_table(const FieldState& s, const Grid1D& grid) {
    Table t{{"t", "x", "V", "E", "n"}, {}};
    const Field n = s.density(grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.add({format_number(s.t), format_number(grid.x(i)), format_number(s.V[i]), format_number(s.E[i]),
               format_number(n[i])});
    return t;
}

Table moments_table(const MomentFields& m) {
    Table t{{"t", "x", "rho", "Vhat", "Ehat"}, {}};
    for (std::size_t i = 0; i < m.grid.size(); ++i)
        t.add({format_number(m.t), format_number(m.grid.x(i)), format_number(m.rho[i]), format_number(m.Vhat[i]),
               format_number(m.Ehat[i])});
    return t;
}

Table series_table(const std::vector<SeriesPoint>& series) {
    Table t{{"t", "max_vx", "max_nx", "max_ex", "min_n", "max_n", "min_vx_over_n"}, {}};
    for (const auto& p : series)
        t.add({format_number(p.t), format_number(p.max_vx), format_number(p.max_nx), format_number(p.max_ex),
               format_number(p.min_n), format_number(p.max_n), format_number(p.min_vx_over_n)});
    return t;
}

Table reconciliation_table(const ReconciliationReport& rep) {
    Table t{{"x", "lhs", "rhs", "criterion", "solver", "agree", "band"}, {}};
    for (const auto& p : rep.points)
        t.add({format_number(p.x), format_number(p.lhs), format_number(p.rhs), p.criterion_blowup ? "blowup" : "smooth",
               rep.solver_blowup ? "blowup" : "smooth", p.criterion_blowup == rep.solver_blowup ? "1" : "0",
               p.boundary ? "1" : "0"});
    return t;
}

std::string reconciliation_json(const ReconciliationReport& rep) {
    nlohmann::ordered_json j;
    j["criterion"] = rep.pressure ? "delta_p" : "delta";
    j["argmax_x"] = rep.argmax_x;
    j["max_margin"] = rep.max_margin;
    j["criterion_blowup"] = rep.criterion_blowup;
    j["solver_blowup"] = rep.solver_blowup;
    j["t_star"] = opt_json(rep.t_star);
    j["trigger"] = rep.trigger;
    j["t_end"] = rep.t_end;
    j["agree"] = rep.agree;
    j["in_band"] = rep.in_band;
    j["failed"] = rep.failed();
    auto& pts = j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : rep.points)
        pts.push_back({{"x", p.x}, {"lhs", p.lhs}, {"rhs", p.rhs}, {"criterion_blowup", p.criterion_blowup},
                       {"boundary", p.boundary}});
    return j.dump(2) + "\n";
}

std::string run_json(const RunResult& run) {
    nlohmann::ordered_json j;
    j["grid"] = {{"x_min", run.grid.x_min()}, {"x_max", run.grid.x_max()}, {"n_cells", run.grid.n_cells()}};
    const RegularizerSpec& r = run.reg;
    j["regularizers"] = {{"nu", r.nu_const},
                         {"nu_density", r.nu_density ? nlohmann::ordered_json{{"nu0", r.nu_density->nu0},
                                                                              {"gamma", r.nu_density->gamma}}
                                                     : nlohmann::ordered_json(nullptr)},
                         {"alpha", r.alpha},
                         {"gamma_p", r.gamma_p},
                         {"mu", r.mu},
                         {"exotic_viscosity", r.exotic_viscosity},
                         {"kappa", r.kappa},
                         {"b12", r.b12}};
    j["blew_up"] = run.report.blew_up;
    j["t_star"] = opt_json(run.report.t_star);
    j["witness"] = std::string(witness_name(run.report.witness));
    j["trigger"] = run.trigger;
    j["steps"] = run.steps;
    auto& snaps = j["snapshots"] = nlohmann::ordered_json::array();
    for (const auto& s : run.snapshots) {
        // Non-finite values cannot appear: the solver refuses to keep such states.
        snaps.push_back({{"t", s.t}, {"V", s.V}, {"E", s.E}, {"n", s.density(run.grid)}});
    }
    return j.dump() + "\n";
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open " + path + " for writing");
    out << content;
    if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

std::vector<std::string> write_snapshots(const RunResult& run, const std::string& dir, const std::string& run_id) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
        const std::string path = (std::filesystem::path(dir) / (run_id + "_" + std::to_string(k) + ".csv")).string();
        write_text(path, snapshot_table(run.snapshots[k], run.grid).csv());
        paths.push_back(path);
    }
    return paths;
}

}  // namespace eplab
