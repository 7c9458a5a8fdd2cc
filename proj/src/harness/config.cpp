#include "starkqfi/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "starkqfi/errors.hpp"

#ifndef STARKQFI_CONFIG_DIR
#define STARKQFI_CONFIG_DIR "configs"
#endif

namespace starkqfi::harness {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
    }
}

int to_int(const std::string& key, const std::string& text) {
    const double v = to_double(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + key + "': expected an integer, got '" + text + "'");
    return static_cast<int>(v);
}

}  // namespace

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::EqSweep: return "eq-sweep";
        case ExperimentKind::DynSweep: return "dyn-sweep";
        case ExperimentKind::BoundCheck: return "bound-check";
        case ExperimentKind::GapScan: return "gap-scan";
        case ExperimentKind::Fit: return "fit";
        case ExperimentKind::Reproduce: return "reproduce";
        case ExperimentKind::Table1: return "table1";
    }
    return "?";
}

ExperimentKind parse_kind(const std::string& text) {
    for (auto k : {ExperimentKind::EqSweep, ExperimentKind::DynSweep, ExperimentKind::BoundCheck, ExperimentKind::GapScan,
                   ExperimentKind::Fit, ExperimentKind::Reproduce, ExperimentKind::Table1})
        if (to_string(k) == text) return k;
    throw ConfigError("unknown experiment '" + text + "'");
}

ConfigMap ConfigMap::from_text(const std::string& text, const std::string& origin) {
    ConfigMap m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        m.set(key, trim(line.substr(eq + 1)));
    }
    return m;
}

ConfigMap ConfigMap::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str(), path.string());
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

void ConfigMap::merge(const ConfigMap& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::optional<std::string> ConfigMap::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "experiment", "probe",      "a",           "L",          "h_scale",        "h_min",     "h_max",
        "h_count",    "h_values",   "field_sign",  "state",      "method",         "transition", "transition_rule",
        "write_curves", "initial",  "t_scale",     "t_min",      "t_max",          "t_count",   "avg_t_min",
        "avg_t_max",  "write_series", "output",    "workers",    "input",          "fit_kind",  "fit_x",
        "fit_y",      "fit_group",  "meta",        "fits_output", "figure",        "config_dir", "columns",
        "source",     "presets"};
    return keys;
}

std::vector<double> parse_number_list(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return {};
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(t);
        std::string p;
        while (std::getline(ss, p, ':')) parts.push_back(trim(p));
        if (parts.size() < 2 || parts.size() > 3) throw ConfigError("range must be lo:hi or lo:hi:step, got '" + t + "'");
        const double lo = to_double("range", parts[0]), hi = to_double("range", parts[1]);
        const double step = parts.size() == 3 ? to_double("range", parts[2]) : 1.0;
        if (!(step > 0.0)) throw ConfigError("range step must be positive");
        if (hi < lo) throw ConfigError("range '" + t + "' is empty");
        std::vector<double> out;
        const long n = std::lround(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (long i = 0; i < n; ++i) {
            // lo + i*step drifts (0.030000000000000002); 12 significant digits is plenty for grid labels
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.12g", lo + step * double(i));
            out.push_back(std::strtod(buf, nullptr));
        }
        return out;
    }
    std::vector<double> out;
    for (const auto& w : parse_word_list(t)) out.push_back(to_double("list", w));
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_number_list(text)) {
        if (v != std::floor(v)) throw ConfigError("expected integers in '" + text + "'");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::vector<std::string> parse_word_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string w;
    while (std::getline(ss, w, ',')) {
        w = trim(w);
        if (!w.empty()) out.push_back(w);
    }
    return out;
}

bool parse_bool(const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("expected a boolean, got '" + text + "'");
}

std::vector<double> ExperimentConfig::h_grid() const {
    if (h_count < 1) throw ConfigError("h_count must be >= 1");
    if (h_scale == "log") {
        if (!(h_min > 0.0) || !(h_max > h_min)) throw ConfigError("log h grid needs 0 < h_min < h_max");
        return log_grid(h_min, h_max, h_count);
    }
    if (h_scale == "linear") {
        if (!(h_min >= 0.0) || !(h_max > h_min)) throw ConfigError("linear h grid needs 0 <= h_min < h_max");
        return linear_grid(h_min, h_max, h_count);
    }
    throw ConfigError("h_scale must be log or linear");
}

std::vector<double> ExperimentConfig::time_grid() const {
    if (t_scale == "integer") {
        if (t_min != std::floor(t_min) || t_max != std::floor(t_max) || t_max < t_min || t_min < 0)
            throw ConfigError("integer time grid needs integer 0 <= t_min <= t_max");
        return integer_times(static_cast<int>(t_min), static_cast<int>(t_max));
    }
    if (t_count < 2) throw ConfigError("t_count must be >= 2");
    if (t_scale == "log") {
        if (!(t_min > 0.0) || !(t_max > t_min)) throw ConfigError("log time grid needs 0 < t_min < t_max");
        return log_grid(t_min, t_max, t_count);
    }
    if (t_scale == "linear") {
        if (!(t_min >= 0.0) || !(t_max > t_min)) throw ConfigError("linear time grid needs 0 <= t_min < t_max");
        return linear_grid(t_min, t_max, t_count);
    }
    throw ConfigError("t_scale must be integer, log or linear");
}

std::filesystem::path default_config_dir() { return STARKQFI_CONFIG_DIR; }

ExperimentConfig build_config(const ConfigMap& map) {
    ExperimentConfig c;
    auto get = [&](const std::string& k) { return map.get(k); };
    const auto kind = get("experiment");
    if (!kind) throw ConfigError("missing 'experiment'");
    c.kind = parse_kind(*kind);

    try {
        if (auto v = get("probe")) {
            if (*v == "sp" || *v == "single-particle") c.probe = ProbeClass::SingleParticle;
            else if (*v == "mb" || *v == "many-body") c.probe = ProbeClass::ManyBody;
            else throw ConfigError("probe must be sp or mb");
        }
        if (c.probe == ProbeClass::ManyBody) c.initial = InitialState::Neel;
        if (auto v = get("a")) c.a = parse_number_list(*v);
        if (auto v = get("L")) c.L = parse_int_list(*v);
        if (auto v = get("h_scale")) c.h_scale = *v;
        if (auto v = get("h_min")) c.h_min = to_double("h_min", *v);
        if (auto v = get("h_max")) c.h_max = to_double("h_max", *v);
        if (auto v = get("h_count")) c.h_count = to_int("h_count", *v);
        if (auto v = get("h_values")) c.h_values = parse_word_list(*v);
        if (auto v = get("field_sign")) {
            c.field_sign = to_double("field_sign", *v);
            if (c.field_sign != 1.0 && c.field_sign != -1.0) throw ConfigError("field_sign must be +1 or -1");
        }
        if (auto v = get("state")) c.state = StateSelector::parse(*v);
        if (auto v = get("method")) c.method = parse_method(*v);
        if (c.method == Method::Dynamic) throw ConfigError("method 'dynamic' belongs to dyn-sweep");
        if (auto v = get("transition")) c.transition = parse_bool(*v);
        if (auto v = get("transition_rule")) {
            if (*v == "global") c.transition_rule = PeakRule::GlobalMaximum;
            else if (*v == "after-dip") c.transition_rule = PeakRule::AfterFirstDip;
            else throw ConfigError("transition_rule must be global or after-dip");
        }
        if (auto v = get("write_curves")) c.write_curves = parse_bool(*v);
        if (auto v = get("initial")) {
            if (*v == "center") c.initial = InitialState::CenterSite;
            else if (*v == "neel") c.initial = InitialState::Neel;
            else throw ConfigError("initial must be center or neel");
        }
        if (auto v = get("t_scale")) c.t_scale = *v;
        if (auto v = get("t_min")) c.t_min = to_double("t_min", *v);
        if (auto v = get("t_max")) c.t_max = to_double("t_max", *v);
        if (auto v = get("t_count")) c.t_count = to_int("t_count", *v);
        if (auto v = get("avg_t_min")) c.avg_t_min = to_int("avg_t_min", *v);
        if (auto v = get("avg_t_max")) c.avg_t_max = to_int("avg_t_max", *v);
        if (auto v = get("write_series")) c.write_series = parse_bool(*v);
        if (auto v = get("output")) c.output = *v;
        if (auto v = get("workers")) c.workers = to_int("workers", *v);
        if (auto v = get("input")) c.input = *v;
        if (auto v = get("fit_kind")) c.fit_kind = *v;
        if (auto v = get("fit_x")) c.fit_x = *v;
        if (auto v = get("fit_y")) c.fit_y = parse_word_list(*v);
        if (auto v = get("fit_group")) c.fit_group = *v;
        if (auto v = get("meta")) c.meta = parse_bool(*v);
        if (auto v = get("fits_output")) c.fits_output = *v;
        if (auto v = get("figure")) c.figure = *v;
        c.config_dir = default_config_dir();
        if (auto v = get("config_dir")) c.config_dir = *v;
        if (auto v = get("columns")) c.columns = parse_word_list(*v);
        if (auto v = get("source")) c.source = *v;
        if (auto v = get("presets")) c.presets = parse_word_list(*v);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    // per-kind validation
    const bool needs_grid = c.kind == ExperimentKind::EqSweep || c.kind == ExperimentKind::DynSweep ||
                            c.kind == ExperimentKind::BoundCheck || c.kind == ExperimentKind::GapScan;
    if (needs_grid) {
        if (c.a.empty()) throw ConfigError("'a' grid is empty");
        if (c.L.empty()) throw ConfigError("'L' grid is empty");
        for (double a : c.a)
            if (!(a >= 0.0)) throw ConfigError("'a' values must be >= 0");
        for (int L : c.L) {
            if (L < 2) throw ConfigError("'L' values must be >= 2");
            if (c.probe == ProbeClass::ManyBody && L % 2) throw ConfigError("many-body L must be even");
        }
    }
    if (c.kind == ExperimentKind::EqSweep || c.kind == ExperimentKind::DynSweep) {
        if (c.h_values.empty()) (void)c.h_grid();
        for (const auto& w : c.h_values) {
            if (w == "hmax") {
                if (c.kind != ExperimentKind::DynSweep) throw ConfigError("'hmax' in h_values is a dyn-sweep feature");
                continue;
            }
            if (!(to_double("h_values", w) >= 0.0)) throw ConfigError("h_values must be >= 0 (sign via field_sign)");
        }
        if (c.transition || std::count(c.h_values.begin(), c.h_values.end(), "hmax")) (void)c.h_grid();
    }
    if (c.kind == ExperimentKind::DynSweep) {
        (void)c.time_grid();
        if (c.avg_t_max <= c.avg_t_min) throw ConfigError("avg_t_max must exceed avg_t_min");
        if ((c.initial == InitialState::Neel) != (c.probe == ProbeClass::ManyBody))
            throw ConfigError("initial state does not match the probe (center: sp, neel: mb)");
    }
    if (c.kind == ExperimentKind::BoundCheck) {
        if (c.probe != ProbeClass::SingleParticle) throw ConfigError("bound-check applies to the single-particle probe");
        for (double a : c.a)
            if (!(a > 0.0)) throw ConfigError("bound-check needs a > 0");
    }
    if (c.kind == ExperimentKind::Fit) {
        if (c.input.empty()) throw ConfigError("fit needs 'input'");
        if (c.fit_y.empty()) throw ConfigError("fit needs 'fit_y'");
        static const std::vector<std::string> kinds = {"exp", "power", "hmax", "linear"};
        if (std::find(kinds.begin(), kinds.end(), c.fit_kind) == kinds.end())
            throw ConfigError("fit_kind must be exp, power, hmax or linear");
        if (c.meta && c.fit_group.empty()) throw ConfigError("meta fit needs 'fit_group'");
    }
    if (c.kind == ExperimentKind::Reproduce && c.figure.empty()) throw ConfigError("reproduce needs 'figure'");
    if (c.kind == ExperimentKind::Table1 && c.presets.empty()) throw ConfigError("table1 needs 'presets'");
    if (c.workers < 0) throw ConfigError("workers must be >= 0");
    c.snapshot = map.values();
    c.snapshot["experiment"] = to_string(c.kind);
    return c;
}

}  // namespace starkqfi::harness
