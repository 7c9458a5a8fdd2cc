// starkqfi <subcommand> [--config file] [--key value ...]

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "starkqfi/errors.hpp"
#include "starkqfi/harness/config.hpp"
#include "starkqfi/harness/runner.hpp"

namespace h = starkqfi::harness;

namespace {

struct Subcommand {
    CLI::App* app = nullptr;
    std::string config_file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stark-probe quantum Fisher information sweeps"};
    app.set_version_flag("--version", h::tool_version());
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> kinds = {
        {"eq-sweep", "equilibrium QFI over (a, L, h) grids"},
        {"dyn-sweep", "quench dynamics QFI over (a, L, h) grids"},
        {"bound-check", "analytic lower bound against the numerical QFI"},
        {"gap-scan", "ground-state gap over (a, L)"},
        {"fit", "scaling fits on a CSV produced by another run"},
        {"reproduce", "run a shipped preset (--figure fig1b, table1, ...)"},
    };
    std::vector<Subcommand> subs(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        auto& s = subs[i];
        s.app = app.add_subcommand(kinds[i].first, kinds[i].second);
        s.app->add_option("--config", s.config_file, "key = value file")->check(CLI::ExistingFile);
        for (const auto& key : h::known_keys()) {
            if (key == "experiment") continue;
            s.options[key] = s.app->add_option("--" + key, s.values[key]);
        }
    }

    CLI11_PARSE(app, argc, argv);

    for (std::size_t i = 0; i < kinds.size(); ++i) {
        auto& s = subs[i];
        if (!s.app->parsed()) continue;
        try {
            h::ConfigMap map;
            if (!s.config_file.empty()) map = h::ConfigMap::from_file(s.config_file);
            if (auto e = map.get("experiment"); e && *e != kinds[i].first)
                throw starkqfi::ConfigError("config file describes '" + *e + "', not '" + kinds[i].first + "'");
            map.set("experiment", kinds[i].first);
            for (const auto& [key, opt] : s.options)
                if (opt->count() > 0) map.set(key, s.values[key]);

            const h::RunReport report = h::run(map);
            for (const auto& f : report.files) std::cout << f.string() << "\n";
            if (report.failures() > 0)
                std::cerr << report.failures() << " of " << report.points.size()
                          << " points failed; see manifest.json\n";
            return report.all_failed() ? 2 : 0;
        } catch (const starkqfi::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 1;
}
