#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "starkqfi/dynamic_qfi.hpp"
#include "starkqfi/equilibrium_qfi.hpp"
#include "starkqfi/model.hpp"
#include "starkqfi/spectral.hpp"

namespace starkqfi::harness {

enum class ExperimentKind { EqSweep, DynSweep, BoundCheck, GapScan, Fit, Reproduce, Table1 };

std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& text);

/// Flat key/value pairs. Later assignments win.
class ConfigMap {
public:
    static ConfigMap from_file(const std::filesystem::path& path);
    static ConfigMap from_text(const std::string& text, const std::string& origin = "<text>");

    void set(const std::string& key, const std::string& value);
    void merge(const ConfigMap& other);
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Every key a config file or CLI flag may carry.
const std::vector<std::string>& known_keys();

/// "0.02,0.03" or "lo:hi" (step 1) or "lo:hi:step".
std::vector<double> parse_number_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::vector<std::string> parse_word_list(const std::string& text);
bool parse_bool(const std::string& text);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::EqSweep;
    std::map<std::string, std::string> snapshot;  ///< every key after defaults and overrides

    ProbeClass probe = ProbeClass::SingleParticle;
    std::vector<double> a;
    std::vector<int> L;

    // field grid (magnitudes); applied field is field_sign * h
    std::string h_scale = "log";
    double h_min = 1e-14, h_max = 10.0;
    int h_count = 151;
    std::vector<std::string> h_values;  ///< explicit points; may hold the token "hmax"
    double field_sign = 1.0;

    StateSelector state = StateSelector::ground();
    Method method = Method::EigenSum;
    bool transition = false;
    PeakRule transition_rule = PeakRule::GlobalMaximum;
    bool write_curves = true;

    InitialState initial = InitialState::CenterSite;
    std::string t_scale = "integer";
    double t_min = 0.0, t_max = 1000.0;
    int t_count = 101;
    int avg_t_min = 100, avg_t_max = 1000;
    bool write_series = true;

    std::filesystem::path output = "out";
    int workers = 0;  ///< 0: STARKQFI_WORKERS or hardware concurrency

    // fit
    std::filesystem::path input;
    std::string fit_kind = "exp";
    std::string fit_x = "L";
    std::vector<std::string> fit_y;
    std::string fit_group;
    bool meta = false;
    std::string fits_output = "fits.csv";

    // reproduce / table1
    std::string figure;
    std::filesystem::path config_dir;
    std::vector<std::string> columns;
    std::string source;
    std::vector<std::string> presets;

    /// Field points generated from h_scale/h_min/h_max/h_count.
    std::vector<double> h_grid() const;
    /// Output times for dynamics.
    std::vector<double> time_grid() const;
};

/// Defaults + map -> validated config. Throws ConfigError.
ExperimentConfig build_config(const ConfigMap& map);

/// Location of the shipped presets.
std::filesystem::path default_config_dir();

}  // namespace starkqfi::harness
