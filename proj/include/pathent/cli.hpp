#pragma once

// Run configuration, row planning, and command execution shared between the
// command-line tool and the tests.  Every simulated row is reproducible by a
// library call with the parameters echoed in the report.

#include <atomic>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pathent/protocols.hpp"
#include "pathent/report.hpp"

namespace pathent {

// Configuration and argument problems; the tool maps these to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::vector<int> ns;                  // per-command defaults applied late
    std::optional<std::vector<double>> ts;  // absent means optimal per n
    std::vector<double> etas = {1.0};
    std::string variant = "paper";        // paper | exact
    std::string basis = "diagonal";       // diagonal | insensitive
    long trials = 100000;
    std::uint64_t seed = 12345;
    std::optional<double> phi;
    std::string out_path;                 // empty writes to stdout
    std::string format = "csv";           // csv | json
    int workers = 1;
    int sim_cap = 8;
    double threshold = 1.0 - 1e-9;
};

// ---- range parsing: "3", "2,4,6", "2..8", "2..8:2", "0.5..0.95:0.05" ----

namespace detail {

inline double parse_one_double(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw UsageError("cannot parse number '" + s + "'");
    }
    if (pos != s.size()) throw UsageError("cannot parse number '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace detail

inline std::vector<double> parse_double_list(const std::string& spec) {
    if (spec.empty()) throw UsageError("empty value list");
    std::vector<double> out;
    if (spec.find("..") != std::string::npos) {
        std::string body = spec;
        double step = 0.0;
        bool has_step = false;
        if (auto colon = spec.rfind(':'); colon != std::string::npos && colon > spec.find("..")) {
            step = detail::parse_one_double(spec.substr(colon + 1));
            has_step = true;
            body = spec.substr(0, colon);
        }
        auto dots = body.find("..");
        double lo = detail::parse_one_double(body.substr(0, dots));
        double hi = detail::parse_one_double(body.substr(dots + 2));
        if (!has_step) step = 1.0;
        if (step <= 0.0) throw UsageError("range step must be positive");
        if (hi < lo) throw UsageError("empty range '" + spec + "'");
        for (double v = lo; v <= hi + 1e-9 * step; v += step) out.push_back(v);
    } else {
        for (const auto& part : detail::split(spec, ','))
            out.push_back(detail::parse_one_double(part));
    }
    if (out.empty()) throw UsageError("empty range '" + spec + "'");
    return out;
}

inline std::vector<int> parse_int_list(const std::string& spec) {
    std::vector<int> out;
    for (double v : parse_double_list(spec)) {
        int i = int(std::lround(v));
        if (std::abs(v - double(i)) > 1e-9) throw UsageError("expected integer in '" + spec + "'");
        out.push_back(i);
    }
    return out;
}

// ---- JSON configuration files: exact RunConfig mirror, unknown keys rejected ----

inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
    static const std::vector<std::string> known = {
        "command", "n", "t", "eta", "phase_variant", "basis", "trials",
        "seed", "phi", "out", "format", "workers", "cap", "threshold"};
    if (!j.is_object()) throw UsageError("config root must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const auto& k : known) ok = ok || k == key;
        if (!ok) throw UsageError("unknown config key '" + key + "'");
    }
    auto list_of_numbers = [](const nlohmann::json& v, const char* what) {
        std::vector<double> out;
        if (v.is_number()) {
            out.push_back(v.get<double>());
        } else if (v.is_string()) {
            out = parse_double_list(v.get<std::string>());
        } else if (v.is_array()) {
            for (const auto& e : v) {
                if (!e.is_number()) throw UsageError(std::string(what) + " entries must be numbers");
                out.push_back(e.get<double>());
            }
        } else {
            throw UsageError(std::string(what) + " must be a number, list, or range string");
        }
        return out;
    };
    if (j.contains("command")) cfg.command = j["command"].get<std::string>();
    if (j.contains("n")) {
        cfg.ns.clear();
        for (double v : list_of_numbers(j["n"], "n")) {
            int i = int(std::lround(v));
            if (std::abs(v - double(i)) > 1e-9) throw UsageError("n must be integral");
            cfg.ns.push_back(i);
        }
    }
    if (j.contains("t")) {
        const auto& tv = j["t"];
        if (tv.is_string() && tv.get<std::string>() == "optimal")
            cfg.ts.reset();
        else
            cfg.ts = list_of_numbers(tv, "t");
    }
    if (j.contains("eta")) cfg.etas = list_of_numbers(j["eta"], "eta");
    if (j.contains("phase_variant")) cfg.variant = j["phase_variant"].get<std::string>();
    if (j.contains("basis")) cfg.basis = j["basis"].get<std::string>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<long>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("phi")) cfg.phi = j["phi"].get<double>();
    if (j.contains("out")) cfg.out_path = j["out"].get<std::string>();
    if (j.contains("format")) cfg.format = j["format"].get<std::string>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("cap")) cfg.sim_cap = j["cap"].get<int>();
    if (j.contains("threshold")) cfg.threshold = j["threshold"].get<double>();
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + path + " is not valid JSON: " + e.what());
    }
    apply_config_json(cfg, j);
}

// ---- validation and shared row machinery ----

namespace detail {

inline void validate_common(const RunConfig& cfg) {
    if (cfg.format != "csv" && cfg.format != "json")
        throw UsageError("format must be csv or json");
    if (cfg.variant != "paper" && cfg.variant != "exact")
        throw UsageError("phase variant must be paper or exact");
    if (cfg.basis != "diagonal" && cfg.basis != "insensitive")
        throw UsageError("basis must be diagonal or insensitive");
    if (cfg.workers < 1) throw UsageError("workers must be >= 1");
    if (cfg.sim_cap < 2) throw UsageError("cap must be >= 2");
    if (cfg.trials < 2) throw UsageError("trials must be >= 2");
    if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0))
        throw UsageError("threshold must lie in (0,1]");
    for (double e : cfg.etas)
        if (!(e >= 0.0 && e <= 1.0)) throw UsageError("eta must lie in [0,1]");
    if (cfg.ts)
        for (double t : *cfg.ts)
            if (!(t >= 0.0 && t <= 1.0)) throw UsageError("t must lie in [0,1]");
    if (cfg.etas.empty()) throw UsageError("empty eta list");
}

inline PhaseVariant variant_for(int n, const std::string& variant) {
    if (n % 2 != 0) return PhaseVariant::PaperOdd;
    return variant == "exact" ? PhaseVariant::ExactTarget : PhaseVariant::PaperEven;
}

// Expands the t specification to one transmission per conditional element.
inline std::vector<double> element_transmissions(int n, const std::optional<std::vector<double>>& ts,
                                                 std::optional<double> uniform_override = {}) {
    int count = n % 2 == 0 ? n / 2 : n;
    if (uniform_override) return std::vector<double>(count, *uniform_override);
    if (!ts) return std::vector<double>(count, optimal_transmission(n));
    if (ts->size() == 1) return std::vector<double>(count, ts->front());
    if (int(ts->size()) == count) return *ts;
    throw UsageError("t list must have one entry or one per element (" + std::to_string(count) +
                     " for n=" + std::to_string(n) + ")");
}

inline Circuit build_protocol_circuit(int n, const std::vector<double>& ts,
                                      const std::string& variant, const std::string& basis,
                                      DetectorModel det) {
    PhaseSchedule schedule = resolve_phase_roots(n, variant_for(n, variant));
    if (n % 2 == 0) return build_even_circuit(n, ts, schedule, det);
    DetectionBasis b = basis == "diagonal" ? DetectionBasis::DiagonalProjection
                                           : DetectionBasis::PolarizationInsensitive;
    return build_odd_circuit(n, ts, schedule, b, det);
}

inline bool uniform_value(const std::vector<double>& ts, double& value) {
    if (ts.empty()) return false;
    for (double t : ts)
        if (t != ts.front()) return false;
    value = ts.front();
    return true;
}

// Fills the simulation cells shared by verify, scan, and detector rows.
inline void fill_protocol_cells(ReportRow& row, int n, const std::vector<double>& ts,
                                const ProtocolRun& run) {
    row.set("n", (long long)n);
    double t_uniform = 0.0;
    if (uniform_value(ts, t_uniform))
        row.set("t", t_uniform);
    row.set("success_probability", run.success_probability);
    row.set("fidelity", run.fidelity);
    row.set("achieved_phase", run.achieved_phase);
    row.set("herald_failed", run.herald_failed);
    if (n % 2 == 0 && uniform_value(ts, t_uniform) &&
        std::abs(t_uniform - optimal_transmission(n)) < 1e-12) {
        BigRational exact = analytic_success_probability(n);
        row.set("closed_form", to_double(exact));
        row.set("closed_form_exact", rational_string(exact));
    }
}

inline nlohmann::json config_echo(const RunConfig& cfg) {
    nlohmann::json j;
    j["command"] = cfg.command;
    j["n"] = cfg.ns;
    if (cfg.ts)
        j["t"] = *cfg.ts;
    else
        j["t"] = "optimal";
    j["eta"] = cfg.etas;
    j["phase_variant"] = cfg.variant;
    j["basis"] = cfg.basis;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    if (cfg.phi)
        j["phi"] = *cfg.phi;
    else
        j["phi"] = nullptr;
    j["format"] = cfg.format;
    j["workers"] = cfg.workers;
    j["cap"] = cfg.sim_cap;
    j["threshold"] = cfg.threshold;
    return j;  // out path deliberately left out: identical runs to different files match
}

// Runs row tasks on a small pool; each task owns one output slot, so the
// assembled order never depends on the worker count.
inline std::vector<ReportRow> run_rows(int workers,
                                       const std::vector<std::function<ReportRow()>>& tasks) {
    std::vector<ReportRow> rows(tasks.size());
    if (workers <= 1 || tasks.size() <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) rows[i] = tasks[i]();
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                rows[i] = tasks[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int count = int(std::min(std::size_t(workers), tasks.size()));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

}  // namespace detail

struct CommandOutcome {
    Report report;
    int exit_code = 0;
};

// ---- commands ----

inline CommandOutcome cmd_verify(RunConfig cfg) {
    cfg.command = "verify";
    detail::validate_common(cfg);
    if (cfg.ns.empty()) cfg.ns = {2, 3, 4, 5, 6, 7, 8};
    for (int n : cfg.ns) {
        if (n < 2) throw UsageError("verify needs n >= 2");
        if (n > cfg.sim_cap)
            throw UsageError("n=" + std::to_string(n) + " exceeds the simulation cap " +
                             std::to_string(cfg.sim_cap));
    }
    std::vector<std::function<ReportRow()>> tasks;
    for (int n : cfg.ns) {
        tasks.push_back([n, &cfg] {
            std::vector<double> ts = detail::element_transmissions(n, cfg.ts);
            Circuit c = detail::build_protocol_circuit(n, ts, cfg.variant, cfg.basis, {});
            ProtocolRun run = run_circuit(c);
            ReportRow row;
            row.set("command", std::string("verify"));
            row.set("variant", n % 2 == 0 ? cfg.variant : std::string("paper"));
            if (n % 2 != 0) row.set("basis", cfg.basis);
            row.set("eta", 1.0);
            detail::fill_protocol_cells(row, n, ts, run);
            return row;
        });
    }
    CommandOutcome out;
    out.report.base_seed = cfg.seed;
    out.report.config = detail::config_echo(cfg);
    out.report.rows = detail::run_rows(cfg.workers, tasks);
    for (const auto& row : out.report.rows) {
        double f = std::get<double>(row.cells.at("fidelity"));
        if (f < cfg.threshold) out.exit_code = 1;
    }
    return out;
}

inline CommandOutcome cmd_scan(RunConfig cfg) {
    cfg.command = "scan";
    detail::validate_common(cfg);
    if (cfg.ns.empty()) throw UsageError("scan needs an n range");
    for (int n : cfg.ns)
        if (n < 2) throw UsageError("scan needs n >= 2");
    std::vector<std::optional<double>> t_points;
    if (cfg.ts)
        for (double t : *cfg.ts) t_points.push_back(t);
    else
        t_points.push_back(std::nullopt);  // optimal per n
    std::vector<std::function<ReportRow()>> tasks;
    for (int n : cfg.ns)
        for (const auto& t : t_points) {
            tasks.push_back([n, t, &cfg] {
                std::vector<double> ts = detail::element_transmissions(n, std::nullopt, t);
                ReportRow row;
                row.set("command", std::string("scan"));
                row.set("eta", 1.0);
                if (n <= cfg.sim_cap) {
                    Circuit c = detail::build_protocol_circuit(n, ts, cfg.variant, cfg.basis, {});
                    ProtocolRun run = run_circuit(c);
                    row.set("variant", n % 2 == 0 ? cfg.variant : std::string("paper"));
                    if (n % 2 != 0) row.set("basis", cfg.basis);
                    detail::fill_protocol_cells(row, n, ts, run);
                } else {
                    // Beyond the cap only the closed forms are reported.
                    row.set("n", (long long)n);
                    double t_uniform = 0.0;
                    if (detail::uniform_value(ts, t_uniform)) row.set("t", t_uniform);
                    if (n % 2 == 0 && detail::uniform_value(ts, t_uniform) &&
                        std::abs(t_uniform - optimal_transmission(n)) < 1e-12) {
                        BigRational exact = analytic_success_probability(n);
                        row.set("closed_form", to_double(exact));
                        row.set("closed_form_exact", rational_string(exact));
                    }
                }
                return row;
            });
        }
    CommandOutcome out;
    out.report.base_seed = cfg.seed;
    out.report.config = detail::config_echo(cfg);
    out.report.rows = detail::run_rows(cfg.workers, tasks);
    return out;
}

inline CommandOutcome cmd_detector(RunConfig cfg) {
    cfg.command = "detector";
    detail::validate_common(cfg);
    if (cfg.ns.empty()) throw UsageError("detector needs an n range");
    for (int n : cfg.ns) {
        if (n < 2) throw UsageError("detector needs n >= 2");
        if (n > cfg.sim_cap)
            throw UsageError("n=" + std::to_string(n) + " exceeds the simulation cap " +
                             std::to_string(cfg.sim_cap));
        if (n % 2 != 0 && cfg.basis == "insensitive")
            throw UsageError("lossy detectors need the diagonal heralding basis");
    }
    std::vector<std::optional<double>> t_points;
    if (cfg.ts)
        for (double t : *cfg.ts) t_points.push_back(t);
    else
        t_points.push_back(std::nullopt);
    std::vector<std::function<ReportRow()>> tasks;
    for (int n : cfg.ns)
        for (double eta : cfg.etas)
            for (const auto& t : t_points) {
                tasks.push_back([n, eta, t, &cfg] {
                    std::vector<double> ts = detail::element_transmissions(n, std::nullopt, t);
                    // Click detectors model the loss; a unit-efficiency row is
                    // the ideal reference and certifies exact counts again.
                    DetectorModel det{eta, eta >= 1.0};
                    Circuit c = detail::build_protocol_circuit(n, ts, cfg.variant, cfg.basis, det);
                    ProtocolRun run = run_circuit(c);
                    ReportRow row;
                    row.set("command", std::string("detector"));
                    row.set("variant", n % 2 == 0 ? cfg.variant : std::string("paper"));
                    if (n % 2 != 0) row.set("basis", cfg.basis);
                    row.set("eta", eta);
                    detail::fill_protocol_cells(row, n, ts, run);
                    if (n % 2 == 0) row.set("asymptotic", asymptotic_probability(n, eta));
                    return row;
                });
            }
    CommandOutcome out;
    out.report.base_seed = cfg.seed;
    out.report.config = detail::config_echo(cfg);
    out.report.rows = detail::run_rows(cfg.workers, tasks);
    return out;
}

inline CommandOutcome cmd_estimate(RunConfig cfg) {
    cfg.command = "estimate";
    detail::validate_common(cfg);
    if (cfg.ns.empty()) throw UsageError("estimate needs an n range");
    for (int n : cfg.ns)
        if (n < 1) throw UsageError("estimate needs n >= 1");
    std::vector<std::function<ReportRow()>> tasks;
    long long row_index = 0;
    for (ProbeKind kind : {ProbeKind::Uncorrelated, ProbeKind::Entangled})
        for (int n : cfg.ns) {
            std::uint64_t row_seed = cfg.seed + std::uint64_t(row_index++);
            tasks.push_back([kind, n, row_seed, &cfg] {
                double phi = cfg.phi ? *cfg.phi : kPi / (2.0 * n);
                PhaseUncertainty closed = closed_form_uncertainty(kind, n, phi);
                EstimationSample mc =
                    monte_carlo_phase_estimate(kind, n, phi, cfg.trials, row_seed);
                PrecisionLimits lim = precision_limits(n);
                ReportRow row;
                row.set("command", std::string("estimate"));
                row.set("probe", std::string(kind == ProbeKind::Uncorrelated ? "uncorrelated"
                                                                             : "entangled"));
                row.set("n", (long long)n);
                row.set("phi", phi);
                row.set("trials", (long long)cfg.trials);
                row.set("seed", (long long)row_seed);
                row.set("delta_phi_closed", closed.value);
                row.set("delta_phi_mc", mc.uncertainty.value);
                row.set("mc_mean", mc.mean);
                row.set("mc_variance", mc.variance);
                row.set("singular", closed.singular || mc.uncertainty.singular);
                row.set("shot_noise_limit", lim.shot_noise);
                row.set("heisenberg_limit", lim.heisenberg);
                return row;
            });
        }
    CommandOutcome out;
    out.report.base_seed = cfg.seed;
    out.report.config = detail::config_echo(cfg);
    out.report.rows = detail::run_rows(cfg.workers, tasks);
    return out;
}

inline CommandOutcome cmd_scaling(RunConfig cfg) {
    cfg.command = "scaling";
    detail::validate_common(cfg);
    if (cfg.ns.empty())
        for (int n = 2; n <= 64; n += 2) cfg.ns.push_back(n);
    for (int n : cfg.ns)
        if (n < 2 || n % 2 != 0)
            throw UsageError("scaling closed forms cover even n >= 2");
    std::vector<std::function<ReportRow()>> tasks;
    for (int n : cfg.ns)
        for (double eta : cfg.etas) {
            tasks.push_back([n, eta] {
                BigRational exact = analytic_success_probability(n);
                double exact_d = to_double(exact);
                ReportRow row;
                row.set("command", std::string("scaling"));
                row.set("n", (long long)n);
                row.set("eta", eta);
                row.set("closed_form", exact_d);
                row.set("closed_form_exact", rational_string(exact));
                row.set("asymptotic", asymptotic_probability(n, eta));
                row.set("ratio_asymptotic_to_exact", asymptotic_probability(n, 1.0) / exact_d);
                return row;
            });
        }
    CommandOutcome out;
    out.report.base_seed = cfg.seed;
    out.report.config = detail::config_echo(cfg);
    out.report.rows = detail::run_rows(cfg.workers, tasks);
    return out;
}

inline CommandOutcome run_command(const RunConfig& cfg) {
    if (cfg.command == "verify") return cmd_verify(cfg);
    if (cfg.command == "scan") return cmd_scan(cfg);
    if (cfg.command == "detector") return cmd_detector(cfg);
    if (cfg.command == "estimate") return cmd_estimate(cfg);
    if (cfg.command == "scaling") return cmd_scaling(cfg);
    throw UsageError("unknown command '" + cfg.command + "'");
}

inline std::string render_report(const Report& rep, const std::string& format) {
    return format == "json" ? render_json(rep) : render_csv(rep);
}

// Renders and writes only after the computation finished, so usage errors
// never leave a partial output file behind.
inline void write_report(const Report& rep, const RunConfig& cfg, std::ostream& fallback) {
    std::string body = render_report(rep, cfg.format);
    if (cfg.out_path.empty()) {
        fallback << body;
        return;
    }
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) throw UsageError("cannot open output file " + cfg.out_path);
    out << body;
}

}  // namespace pathent
