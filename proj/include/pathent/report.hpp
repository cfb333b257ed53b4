#pragma once

// Tabular run reports with one wide fixed schema, rendered to CSV or JSON
// byte-deterministically: no timestamps, full-precision floats, explicit
// null markers for columns a command does not fill.

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathent/estimation.hpp"
#include "pathent/version.hpp"

namespace pathent {

using CellValue = std::variant<std::monostate, double, long long, std::string, bool>;

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols = {
        "command", "n", "probe", "variant", "basis", "t", "eta", "phi", "trials", "seed",
        "success_probability", "fidelity", "achieved_phase", "herald_failed",
        "closed_form", "closed_form_exact", "asymptotic", "ratio_asymptotic_to_exact",
        "shot_noise_limit", "heisenberg_limit",
        "delta_phi_closed", "delta_phi_mc", "mc_mean", "mc_variance", "singular"};
    return cols;
}

struct ReportRow {
    std::map<std::string, CellValue> cells;

    void set(const std::string& column, CellValue v) {
        bool known = false;
        for (const auto& c : report_columns())
            if (c == column) known = true;
        if (!known) throw std::invalid_argument("unknown report column " + column);
        cells[column] = std::move(v);
    }
};

struct Report {
    std::uint64_t base_seed = 0;
    nlohmann::json config;  // canonical echo of the resolved run configuration
    std::vector<ReportRow> rows;
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string render_cell_csv(const CellValue& v) {
    if (std::holds_alternative<std::monostate>(v)) return "NA";
    if (std::holds_alternative<double>(v)) return format_double(std::get<double>(v));
    if (std::holds_alternative<long long>(v)) return std::to_string(std::get<long long>(v));
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
    return std::get<std::string>(v);
}

inline std::string render_csv(const Report& rep) {
    std::string out;
    out += "# artifact ";
    out += kVersion;
    out += "\n# rng=";
    out += kRngIdentifier;
    out += "\n# base_seed=" + std::to_string(rep.base_seed);
    out += "\n# config=" + rep.config.dump();
    out += "\n";
    const auto& cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        out += (i ? "," : "") + cols[i];
    out += "\n";
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out += ",";
            auto it = row.cells.find(cols[i]);
            out += render_cell_csv(it == row.cells.end() ? CellValue{} : it->second);
        }
        out += "\n";
    }
    return out;
}

inline nlohmann::json cell_to_json(const CellValue& v) {
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<long long>(v)) return std::get<long long>(v);
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    return nullptr;
}

inline std::string render_json(const Report& rep) {
    nlohmann::json j;
    j["header"] = {{"version", kVersion},
                   {"rng", kRngIdentifier},
                   {"base_seed", rep.base_seed},
                   {"config", rep.config}};
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rep.rows) {
        nlohmann::json jr;
        for (const auto& col : report_columns()) {
            auto it = row.cells.find(col);
            jr[col] = cell_to_json(it == row.cells.end() ? CellValue{} : it->second);
        }
        j["rows"].push_back(std::move(jr));
    }
    return j.dump(2) + "\n";
}

}  // namespace pathent
