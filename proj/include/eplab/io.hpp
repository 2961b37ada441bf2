#pragma once

#include <string>
#include <vector>

#include "eplab/characteristics.hpp"
#include "eplab/diagnostics.hpp"
#include "eplab/fields.hpp"
#include "eplab/stochastic.hpp"

namespace eplab {

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);

/// Simple table rendered as CSV or as an aligned text block.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string csv() const;
    std::string text() const;
};

Table sweep_table(const std::vector<SweepRow>& rows);
Table snapshot_table(const FieldState& s, const Grid1D& grid);
Table moments_table(const MomentFields& m);
Table series_table(const std::vector<SeriesPoint>& series);
Table reconciliation_table(const ReconciliationReport& rep);
std::string reconciliation_json(const ReconciliationReport& rep);
/// Whole run (grid, regularizers, report, snapshots) as one JSON document.
std::string run_json(const RunResult& run);

/// Writes `{run_id}_{t_index}.csv` per snapshot into `dir`; returns the paths.
std::vector<std::string> write_snapshots(const RunResult& run, const std::string& dir, const std::string& run_id);
void write_text(const std::string& path, const std::string& content);

}  // namespace eplab
