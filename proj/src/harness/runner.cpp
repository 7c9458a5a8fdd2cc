#include "starkqfi/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "starkqfi/analytic_bound.hpp"
#include "starkqfi/dynamic_qfi.hpp"
#include "starkqfi/equilibrium_qfi.hpp"
#include "starkqfi/errors.hpp"
#include "starkqfi/harness/csv.hpp"
#include "starkqfi/model.hpp"
#include "starkqfi/scaling.hpp"
#include "starkqfi/spectral.hpp"

#ifndef STARKQFI_VERSION
#define STARKQFI_VERSION "unknown"
#endif

namespace starkqfi::harness {

namespace fs = std::filesystem;
using Row = std::vector<Cell>;

std::size_t RunReport::failures() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const auto& p) { return !p.ok; }));
}

std::string tool_version() { return STARKQFI_VERSION; }

int resolve_workers(int configured) {
    if (configured > 0) return configured;
    if (const char* env = std::getenv("STARKQFI_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
        throw ConfigError(std::string("STARKQFI_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex error_mutex;
    auto loop = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first) first = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        loop();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(loop);
        for (auto& t : pool) t.join();
    }
    if (first) std::rethrow_exception(first);
}

namespace {

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string probe_name(ProbeClass p) { return p == ProbeClass::SingleParticle ? "sp" : "mb"; }

ProbeSpec base_spec(const ExperimentConfig& cfg, int L, double a) {
    return cfg.probe == ProbeClass::SingleParticle ? ProbeSpec::single_particle(L, a, 0.0)
                                                   : ProbeSpec::many_body(L, a, 0.0);
}

// Rows and statuses from one (a, L) task. Concatenated in task order afterwards.
struct TaskOutput {
    std::map<std::string, std::vector<Row>> rows;
    std::vector<PointStatus> points;
};

struct FileFamily {
    std::string name;
    std::vector<std::string> header;
    bool enabled = true;
};

void ensure_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
    const fs::path probe = dir / ".write_test";
    std::ofstream out(probe);
    if (!out) throw ConfigError("output directory " + dir.string() + " is not writable");
    out.close();
    fs::remove(probe, ec);
}

std::string iso_time(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Clock {
    std::chrono::system_clock::time_point wall = std::chrono::system_clock::now();
    std::chrono::steady_clock::time_point mono = std::chrono::steady_clock::now();
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - mono).count(); }
};

void write_manifest(const std::map<std::string, std::string>& snapshot, const RunReport& report, const Clock& clock,
                    int workers) {
    nlohmann::ordered_json j;
    j["tool"] = "starkqfi";
    j["version"] = tool_version();
    j["config"] = snapshot;
    j["started"] = iso_time(clock.wall);
    j["wall_seconds"] = clock.seconds();
    j["workers"] = workers;
    auto files = nlohmann::ordered_json::array();
    for (const auto& f : report.files) files.push_back(f.filename().string());
    j["files"] = files;
    j["points_total"] = report.points.size();
    j["points_failed"] = report.failures();
    auto pts = nlohmann::ordered_json::array();
    for (const auto& p : report.points) {
        nlohmann::ordered_json e;
        e["id"] = p.id;
        e["status"] = p.ok ? "ok" : "failed";
        if (!p.message.empty()) e["message"] = p.message;
        pts.push_back(e);
    }
    j["points"] = pts;
    std::ofstream out(report.output_dir / "manifest.json", std::ios::binary);
    if (!out) throw Error("cannot write manifest in " + report.output_dir.string());
    out << j.dump(2) << "\n";
}

// Runs tasks over the (a, L) product, a-major, and writes each enabled family in task order.
RunReport run_product(const ExperimentConfig& cfg, const std::vector<FileFamily>& families,
                      const std::function<void(double a, int L, TaskOutput&)>& task, int workers) {
    const std::size_t nL = cfg.L.size();
    std::vector<TaskOutput> outputs(cfg.a.size() * nL);
    parallel_for(outputs.size(), workers, [&](std::size_t i) {
        const double a = cfg.a[i / nL];
        const int L = cfg.L[i % nL];
        try {
            task(a, L, outputs[i]);
        } catch (const std::exception& e) {
            outputs[i].points.push_back({probe_name(cfg.probe) + " L=" + std::to_string(L) + " a=" + short_num(a), false,
                                         e.what()});
        }
    });

    RunReport report;
    report.output_dir = cfg.output;
    for (const auto& fam : families) {
        if (!fam.enabled) continue;
        CsvWriter w(cfg.output / fam.name, fam.header);
        for (const auto& o : outputs) {
            const auto it = o.rows.find(fam.name);
            if (it == o.rows.end()) continue;
            for (const auto& r : it->second) w.row(r);
        }
        w.flush();
        report.files.push_back(cfg.output / fam.name);
    }
    for (auto& o : outputs)
        for (auto& p : o.points) report.points.push_back(std::move(p));
    return report;
}

std::string point_id(const ExperimentConfig& cfg, int L, double a, const std::string& what) {
    return probe_name(cfg.probe) + " L=" + std::to_string(L) + " a=" + short_num(a) + " " + what;
}

// ---------------------------------------------------------------- eq-sweep

RunReport run_eq_sweep(const ExperimentConfig& cfg, int workers) {
    const std::vector<FileFamily> families = {
        {"eq_sweep.csv", {"probe", "L", "a", "h", "qfi", "method"}, cfg.write_curves},
        {"transitions.csv", {"probe", "state", "L", "a", "field_sign", "h_max", "qfi_h0", "qfi_hmax"}, cfg.transition},
    };
    std::vector<double> points;
    if (cfg.h_values.empty()) {
        points = cfg.h_grid();
    } else {
        for (const auto& w : cfg.h_values) points.push_back(std::stod(w));
    }
    const QfiOptions opts{cfg.method, SolverPath::Auto, std::nullopt};
    const std::string probe = probe_name(cfg.probe);

    return run_product(cfg, families, [&](double a, int L, TaskOutput& out) {
        const ProbeSpec base = base_spec(cfg, L, a);
        auto qfi = [&](double h) { return qfi_at(base.with_field(cfg.field_sign * h), cfg.state, opts); };
        std::vector<double> ok_h, ok_f;
        for (double h : points) {
            const std::string id = point_id(cfg, L, a, "h=" + short_num(cfg.field_sign * h));
            try {
                const double f = qfi(h);
                out.rows["eq_sweep.csv"].push_back(
                    {probe, std::int64_t{L}, a, cfg.field_sign * h, f, to_string(cfg.method)});
                if (h > 0.0) {
                    ok_h.push_back(h);
                    ok_f.push_back(f);
                }
                out.points.push_back({id, true, ""});
            } catch (const std::exception& e) {
                out.points.push_back({id, false, e.what()});
            }
        }
        if (!cfg.transition) return;
        const std::string id = point_id(cfg, L, a, "transition");
        try {
            if (ok_h.size() < 3) throw NoInteriorPeakError("fewer than 3 usable grid points");
            const TransitionPoint tp = locate_transition(qfi, ok_h, ok_f, cfg.transition_rule);
            const double f0 = qfi(0.0);
            out.rows["transitions.csv"].push_back(
                {probe, cfg.state.label(), std::int64_t{L}, a, cfg.field_sign, tp.h_max, f0, tp.value});
            out.points.push_back({id, true, ""});
        } catch (const std::exception& e) {
            out.points.push_back({id, false, e.what()});
        }
    }, workers);
}

// ---------------------------------------------------------------- dyn-sweep

RunReport run_dyn_sweep(const ExperimentConfig& cfg, int workers) {
    const bool mb = cfg.probe == ProbeClass::ManyBody;
    const std::string agg = mb ? "qfi_over_t2" : "qfi_avg";
    const bool wants_hmax = std::count(cfg.h_values.begin(), cfg.h_values.end(), "hmax") > 0;
    const bool search = cfg.transition || wants_hmax;
    const std::vector<FileFamily> families = {
        {"dyn_sweep.csv", {"probe", "L", "a", "h", "t", "qfi"}, cfg.write_series},
        {"dyn_aggregate.csv", {"probe", "L", "a", "h", agg}, true},
        {"dyn_transitions.csv", {"probe", "L", "a", "field_sign", "h_max", "fom_h0", "fom_hmax"}, search},
    };
    const std::vector<double> times = cfg.time_grid();
    const std::vector<double> window = integer_times(cfg.avg_t_min, cfg.avg_t_max);
    const std::string probe = probe_name(cfg.probe);

    return run_product(cfg, families, [&](double a, int L, TaskOutput& out) {
        const ProbeSpec base = base_spec(cfg, L, a);
        struct Eval {
            double aggregate;
            TimeSeries series;
        };
        std::map<double, Eval> cache;
        auto evaluate = [&](double h) -> const Eval& {
            if (auto it = cache.find(h); it != cache.end()) return it->second;
            const DynamicQfi dq = make_dynamic(base.with_field(cfg.field_sign * h), cfg.initial);
            const TimeSeries w = dq.series(window);
            Eval e;
            e.aggregate = mb ? mean_normalized_qfi(w, cfg.avg_t_min, cfg.avg_t_max)
                             : time_average(w, cfg.avg_t_min, cfg.avg_t_max);
            if (cfg.write_series) e.series = dq.series(times);
            return cache.emplace(h, std::move(e)).first->second;
        };
        auto fom = [&](double h) { return evaluate(h).aggregate; };

        std::optional<TransitionPoint> tp;
        if (search) {
            const std::string id = point_id(cfg, L, a, "transition");
            try {
                const std::vector<double> grid = cfg.h_grid();
                std::vector<double> gh, gf;
                for (double h : grid) {
                    try {
                        gf.push_back(fom(h));
                        gh.push_back(h);
                    } catch (const std::exception& e) {
                        out.points.push_back({point_id(cfg, L, a, "grid h=" + short_num(h)), false, e.what()});
                    }
                }
                if (gh.size() < 3) throw NoInteriorPeakError("fewer than 3 usable grid points");
                tp = locate_transition(fom, gh, gf, cfg.transition_rule);
                const double f0 = fom(0.0);
                out.rows["dyn_transitions.csv"].push_back(
                    {probe, std::int64_t{L}, a, cfg.field_sign, tp->h_max, f0, tp->value});
                out.points.push_back({id, true, ""});
            } catch (const std::exception& e) {
                out.points.push_back({id, false, e.what()});
            }
        }

        std::vector<double> points;
        if (cfg.h_values.empty()) {
            points = cfg.h_grid();
        } else {
            for (const auto& w : cfg.h_values) {
                if (w != "hmax") points.push_back(std::stod(w));
                else if (tp) points.push_back(tp->h_max);
                else out.points.push_back({point_id(cfg, L, a, "h=hmax"), false, "transition search failed"});
            }
        }
        for (double h : points) {
            const std::string id = point_id(cfg, L, a, "h=" + short_num(cfg.field_sign * h));
            try {
                const Eval& e = evaluate(h);
                const double hs = cfg.field_sign * h;
                for (std::size_t k = 0; k < e.series.times.size(); ++k)
                    out.rows["dyn_sweep.csv"].push_back(
                        {probe, std::int64_t{L}, a, hs, e.series.times[k], e.series.values[k]});
                out.rows["dyn_aggregate.csv"].push_back({probe, std::int64_t{L}, a, hs, e.aggregate});
                out.points.push_back({id, true, ""});
            } catch (const std::exception& e) {
                out.points.push_back({id, false, e.what()});
            }
        }
    }, workers);
}

// ---------------------------------------------------------------- gap-scan / bound-check

RunReport run_gap_scan(const ExperimentConfig& cfg, int workers) {
    const std::vector<FileFamily> families = {{"gap_scan.csv", {"probe", "L", "a", "gap"}, true}};
    const double h = cfg.h_values.empty() ? 0.0 : cfg.field_sign * std::stod(cfg.h_values.front());
    const std::string probe = probe_name(cfg.probe);
    return run_product(cfg, families, [&](double a, int L, TaskOutput& out) {
        const ProbeSpec spec = base_spec(cfg, L, a).with_field(h);
        EigenDecomposition d;
        if (cfg.probe == ProbeClass::SingleParticle) {
            d = eigendecompose(build_sp_hamiltonian(spec));
        } else {
            const SectorBasis basis(L);
            d = basis.size() <= kDenseLimit ? eigendecompose(build_mb_hamiltonian(spec, basis))
                                            : lowest_eigenpairs(build_mb_sparse(spec, basis), 2);
        }
        const GapResult g = energy_gap(d);
        out.rows["gap_scan.csv"].push_back({probe, std::int64_t{L}, a, g.value});
        out.points.push_back({point_id(cfg, L, a, "gap"), true, g.degenerate ? "degenerate ground state" : ""});
    }, workers);
}

RunReport run_bound_check(const ExperimentConfig& cfg, int workers) {
    const std::vector<FileFamily> families = {{"bound_check.csv", {"L", "a", "bound_log", "qfi_log", "ok"}, true}};
    return run_product(cfg, families, [&](double a, int L, TaskOutput& out) {
        const double bound_log = qfi_lower_bound(a, L).log();
        const double qfi_log = std::log(qfi_at(ProbeSpec::single_particle(L, a, 0.0), StateSelector::ground()));
        out.rows["bound_check.csv"].push_back({std::int64_t{L}, a, bound_log, qfi_log, bound_log < qfi_log});
        out.points.push_back({point_id(cfg, L, a, "bound"), true, ""});
    }, workers);
}

// ---------------------------------------------------------------- fit

FitResult fit_by_kind(const std::string& kind, const std::vector<double>& x, const std::vector<double>& y) {
    if (kind == "exp") return fit_exponential_in_L(x, y);
    if (kind == "power") return fit_power_law(x, y);
    if (kind == "hmax") return fit_hmax_scaling(x, y);
    return fit_linear(x, y);
}

Row fit_row(const std::string& group, const std::string& kind, const FitResult& r) {
    return {group, kind, r.slope, r.intercept, r.r_squared, r.window_lo, r.window_hi, std::int64_t{r.n_points}};
}

RunReport run_fit(const ExperimentConfig& cfg) {
    const CsvTable table = CsvTable::read(cfg.input);
    const std::size_t xcol = table.column(cfg.fit_x);
    const bool grouped = !cfg.fit_group.empty();
    const std::size_t gcol = grouped ? table.column(cfg.fit_group) : 0;

    RunReport report;
    report.output_dir = cfg.output;
    CsvWriter w(cfg.output / cfg.fits_output,
                {"group", "kind", "slope", "intercept", "r2", "win_lo", "win_hi", "n"}, true);
    for (const auto& yname : cfg.fit_y) {
        const std::size_t ycol = table.column(yname);
        // group value -> (label, x, y); ordered by numeric value
        std::map<double, std::tuple<std::string, std::vector<double>, std::vector<double>>> groups;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const double key = grouped ? table.number(r, gcol) : 0.0;
            auto& g = groups[key];
            if (std::get<0>(g).empty()) std::get<0>(g) = grouped ? cfg.fit_group + "=" + table.rows[r][gcol] : "all";
            std::get<1>(g).push_back(table.number(r, xcol));
            std::get<2>(g).push_back(table.number(r, ycol));
        }
        const std::string kind = cfg.fit_kind + ":" + yname;
        std::vector<double> keys, slopes;
        for (const auto& [key, g] : groups) {
            const auto& [label, xs, ys] = g;
            if (xs.size() < 3)
                throw ConfigError("group '" + label + "' has " + std::to_string(xs.size()) +
                                  " row(s); a fit needs at least 3");
            const FitResult r = fit_by_kind(cfg.fit_kind, xs, ys);
            w.row(fit_row(label, kind, r));
            report.points.push_back({label + " " + kind, true, ""});
            keys.push_back(key);
            slopes.push_back(r.slope);
        }
        if (cfg.meta) {
            if (keys.size() < 3) throw ConfigError("meta fit over '" + cfg.fit_group + "' needs at least 3 groups");
            w.row(fit_row("meta", "meta:" + kind, meta_fit_linear_in_a(keys, slopes)));
        }
    }
    w.flush();
    report.files.push_back(cfg.output / cfg.fits_output);
    return report;
}

// ---------------------------------------------------------------- reproduce / table1

fs::path project_columns(const fs::path& source, const std::vector<std::string>& columns, const fs::path& target) {
    const CsvTable t = CsvTable::read(source);
    std::vector<std::size_t> idx;
    for (const auto& c : columns) idx.push_back(t.column(c));
    std::ofstream out(target, std::ios::binary);
    if (!out) throw Error("cannot write " + target.string());
    for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < idx.size(); ++k) out << (k ? "," : "") << row[idx[k]];
        out << "\n";
    }
    return target;
}

RunReport run_table1(const ConfigMap& map);

RunReport run_reproduce(const ConfigMap& map) {
    const ExperimentConfig outer = build_config(map);
    const ConfigMap preset = load_preset(outer.config_dir, outer.figure);
    ConfigMap merged = preset;
    for (const auto& [k, v] : map.values())
        if (k != "experiment" && k != "figure") merged.set(k, v);
    if (!map.has("output")) merged.set("output", (fs::path("out") / outer.figure).string());
    if (preset.get("experiment") == std::optional<std::string>("table1")) return run_table1(merged);

    const Clock clock;
    const ExperimentConfig inner = build_config(merged);
    RunReport report = run(inner);
    if (!inner.columns.empty()) {
        if (inner.source.empty()) throw ConfigError("preset " + outer.figure + " lists columns without a source");
        const fs::path projected =
            project_columns(inner.output / inner.source, inner.columns, inner.output / (outer.figure + ".csv"));
        report.files.push_back(projected);
        if (!inner.fit_y.empty()) {
            ExperimentConfig fit = inner;
            fit.kind = ExperimentKind::Fit;
            fit.input = projected;
            fs::remove(inner.output / inner.fits_output);
            const RunReport f = run_fit(fit);
            report.files.insert(report.files.end(), f.files.begin(), f.files.end());
        }
    }
    auto snapshot = merged.values();
    snapshot["figure"] = outer.figure;
    write_manifest(snapshot, report, clock, resolve_workers(inner.workers));
    return report;
}

RunReport run_table1(const ConfigMap& map) {
    const Clock clock;
    const ExperimentConfig cfg = build_config(map);
    ensure_output_dir(cfg.output);
    RunReport report;
    report.output_dir = cfg.output;
    CsvWriter table(cfg.output / "table1.csv", {"preset", "quantity", "c1", "c0", "r2", "n_groups"});
    for (const auto& name : cfg.presets) {
        ConfigMap sub;
        sub.set("experiment", "reproduce");
        sub.set("figure", name);
        sub.set("config_dir", cfg.config_dir.string());
        sub.set("output", (cfg.output / name).string());
        if (auto w = map.get("workers")) sub.set("workers", *w);
        try {
            const RunReport r = run_reproduce(sub);
            for (const auto& p : r.points) report.points.push_back({name + ": " + p.id, p.ok, p.message});
            const ExperimentConfig inner = build_config(load_preset(cfg.config_dir, name));
            const fs::path fits = cfg.output / name / inner.fits_output;
            if (!fs::exists(fits)) continue;
            const CsvTable t = CsvTable::read(fits);
            const std::size_t g = t.column("group"), k = t.column("kind"), s = t.column("slope"),
                              i = t.column("intercept"), r2 = t.column("r2"), n = t.column("n");
            for (const auto& row : t.rows) {
                if (row[g] != "meta") continue;
                table.row({name, row[k].substr(row[k].rfind(':') + 1), std::stod(row[s]), std::stod(row[i]),
                           std::stod(row[r2]), static_cast<std::int64_t>(std::stol(row[n]))});
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            report.points.push_back({name, false, e.what()});
        }
    }
    table.flush();
    report.files.push_back(cfg.output / "table1.csv");
    write_manifest(map.values(), report, clock, resolve_workers(cfg.workers));
    return report;
}

}  // namespace

ConfigMap load_preset(const fs::path& config_dir, const std::string& name) {
    if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("bad preset name '" + name + "'");
    const fs::path path = config_dir / (name + ".cfg");
    if (!fs::exists(path)) throw ConfigError("no preset named '" + name + "' in " + config_dir.string());
    return ConfigMap::from_file(path);
}

RunReport run(const ExperimentConfig& cfg) {
    if (cfg.kind == ExperimentKind::Reproduce || cfg.kind == ExperimentKind::Table1)
        throw ConfigError("reproduce and table1 run from a ConfigMap");
    const Clock clock;
    use_single_threaded_blas();
    ensure_output_dir(cfg.output);
    const int workers = resolve_workers(cfg.workers);
    RunReport report;
    switch (cfg.kind) {
        case ExperimentKind::EqSweep: report = run_eq_sweep(cfg, workers); break;
        case ExperimentKind::DynSweep: report = run_dyn_sweep(cfg, workers); break;
        case ExperimentKind::GapScan: report = run_gap_scan(cfg, workers); break;
        case ExperimentKind::BoundCheck: report = run_bound_check(cfg, workers); break;
        case ExperimentKind::Fit: report = run_fit(cfg); break;
        default: break;
    }
    write_manifest(cfg.snapshot, report, clock, workers);
    return report;
}

RunReport run(const ConfigMap& map) {
    const auto kind = map.get("experiment");
    if (kind == std::optional<std::string>("reproduce")) return run_reproduce(map);
    if (kind == std::optional<std::string>("table1")) return run_table1(map);
    return run(build_config(map));
}

}  // namespace starkqfi::harness
