#include "CLI11.hpp"

#include "evcosim/error.hpp"
#include "evcosim/gridcore.hpp"
#include "evcosim/kvfile.hpp"
#include "evcosim/scenario.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace evcosim;
using Overrides = std::vector<std::pair<std::string, std::string>>;

namespace {

// Exit codes: 0 success, 1 runtime failure, 2 bad arguments, 3 validation.
constexpr int kExitRuntime = 1;
constexpr int kExitBadArgs = 2;
constexpr int kExitValidation = 3;

std::string one_line(const std::string& msg) {
    std::string out = msg;
    for (auto& c : out)
        if (c == '\n' || c == '\r') c = ' ';
    return out;
}

int fail(const std::string& what, int code) {
    std::cerr << "error: " << one_line(what) << "\n";
    return code;
}

std::string hex16(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// "key=value" with the key a section.key path; used verbatim as an override.
std::pair<std::string, std::string> parse_set(const std::string& expr) {
    const auto eq = expr.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 > expr.size())
        throw Error(Errc::BadArguments, "--set expects section.key=value, got '" + expr + "'");
    return {expr.substr(0, eq), expr.substr(eq + 1)};
}

int cmd_validate(const std::vector<std::string>& files) {
    bool all_ok = true;
    for (const auto& path : files) {
        try {
            const kv::Document doc = kv::parse_file(path);
            if (doc.sections.empty())
                throw Error(Errc::BadFile, path + ": no sections");
            const std::string& kind = doc.sections.front().name;
            if (kind == "case") {
                gridcore::validate_case(gridcore::load_case(path));
            } else if (kind == "profile") {
                gridcore::load_profile(path);
            } else if (kind == "scenario") {
                scenario::validate_scenario(scenario::load_scenario(path));
            } else {
                throw Error(Errc::ValidationFailed,
                            path + ": unrecognized file, first section is [" + kind + "]");
            }
            std::cout << "ok " << kind << " " << path << "\n";
        } catch (const std::exception& e) {
            std::cerr << "error: " << one_line(e.what()) << "\n";
            all_ok = false;
        }
    }
    return all_ok ? 0 : kExitValidation;
}

int cmd_run(const std::string& scenario_path, const Overrides& overrides) {
    scenario::ScenarioSpec spec;
    try {
        spec = scenario::load_scenario(scenario_path, overrides);
        scenario::validate_scenario(spec);
    } catch (const std::exception& e) {
        return fail(e.what(), kExitValidation);
    }
    try {
        const auto sum = scenario::run_scenario(spec);
        std::cerr << "outputs: " << spec.outputs_dir << "\n";
        std::cout << kv::read_file(sum.outputs.at("summary"));
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what(), kExitRuntime);
    }
}

int cmd_report(const std::string& dir) {
    try {
        const std::string text = scenario::summarize_outputs(dir);
        std::ofstream out(fs::path(dir) / "summary.txt", std::ios::binary);
        if (!out) throw Error(Errc::BadFile, "cannot write summary.txt in " + dir);
        out << text;
        std::cout << text;
        return 0;
    } catch (const std::exception& e) {
        return fail(e.what(), kExitValidation);
    }
}

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (auto& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-' &&
            c != '=')
            c = '-';
    return out;
}

int cmd_sweep(const std::string& scenario_path, const Overrides& base,
              const std::vector<std::string>& set_exprs, const std::string& out_root, int jobs) {
    // Axes in flag order; each --set value is a comma-separated list.
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    try {
        for (const auto& expr : set_exprs) {
            auto [key, list] = parse_set(expr);
            std::vector<std::string> values;
            std::string v;
            std::istringstream in(list);
            while (std::getline(in, v, ',')) values.push_back(v);
            if (values.empty())
                throw Error(Errc::BadArguments, "--set " + key + " has no values");
            axes.emplace_back(key, values);
        }
    } catch (const std::exception& e) {
        return fail(e.what(), kExitBadArgs);
    }

    // The base scenario must stand on its own before any point runs.
    try {
        scenario::validate_scenario(scenario::load_scenario(scenario_path, base));
    } catch (const std::exception& e) {
        return fail(e.what(), kExitValidation);
    }

    struct Point {
        std::string dir;
        Overrides overrides;
    };
    std::vector<Point> points;
    std::vector<std::size_t> idx(axes.size(), 0);
    bool done = false;
    while (!done) {
        Point p;
        p.overrides = base;
        const std::string serial = std::to_string(points.size());
        std::string name = "p" + std::string(serial.size() < 3 ? 3 - serial.size() : 0, '0') + serial;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const auto& [key, values] = axes[a];
            p.overrides.emplace_back(key, values[idx[a]]);
            name += "_" + sanitize(key + "=" + values[idx[a]]);
        }
        p.dir = (fs::path(out_root) / name).string();
        p.overrides.emplace_back("outputs.dir", p.dir);
        points.push_back(std::move(p));

        // Odometer increment, last axis fastest; full wrap ends the product.
        done = true;
        for (std::size_t a = axes.size(); a-- > 0;) {
            if (++idx[a] < axes[a].second.size()) {
                done = false;
                break;
            }
            idx[a] = 0;
        }
    }

    std::vector<std::string> lines(points.size());
    std::vector<char> ok(points.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
            try {
                const auto sum = scenario::run_scenario(
                    scenario::load_scenario(scenario_path, points[i].overrides));
                lines[i] = points[i].dir + " ok config_hash=" + hex16(sum.config_hash);
                ok[i] = 1;
            } catch (const std::exception& e) {
                lines[i] = points[i].dir + " error: " + one_line(e.what());
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    bool all_ok = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::cout << lines[i] << "\n";
        if (!ok[i]) all_ok = false;
    }
    return all_ok ? 0 : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV charging ecosystem and power grid co-simulation"};
    app.require_subcommand(1);

    std::vector<std::string> files;
    auto* validate = app.add_subcommand("validate", "Check case, profile and scenario files");
    validate->add_option("files", files, "files to check")->required()->expected(-1);

    std::string scenario_path, out_dir;
    std::uint64_t seed = 0;
    std::vector<std::string> sets;
    auto* run = app.add_subcommand("run", "Run one scenario and print its summary");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override sim.seed");
    run->add_option("--out", out_dir, "override the outputs directory");
    run->add_option("--set", sets, "override one key: section.key=value");

    std::string sweep_scenario, sweep_out = "sweep";
    std::uint64_t sweep_seed = 0;
    std::vector<std::string> sweep_sets;
    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of --set value lists");
    sweep->add_option("--scenario", sweep_scenario, "scenario file")->required();
    auto* sweep_seed_opt = sweep->add_option("--seed", sweep_seed, "override sim.seed");
    sweep->add_option("--out", sweep_out, "root directory for the point outputs");
    sweep->add_option("--set", sweep_sets, "axis: section.key=v1,v2,...");
    sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    std::string report_dir;
    auto* report = app.add_subcommand("report", "Regenerate summary.txt from written outputs");
    report->add_option("--out", report_dir, "outputs directory of a previous run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(std::string("BadArguments: ") + e.what(), kExitBadArgs);
    }

    if (*validate) return cmd_validate(files);
    if (*run) {
        Overrides ov;
        try {
            for (const auto& s : sets) ov.push_back(parse_set(s));
        } catch (const std::exception& e) {
            return fail(e.what(), kExitBadArgs);
        }
        if (*seed_opt) ov.emplace_back("sim.seed", std::to_string(seed));
        if (!out_dir.empty()) ov.emplace_back("outputs.dir", out_dir);
        return cmd_run(scenario_path, ov);
    }
    if (*sweep) {
        Overrides base;
        if (*sweep_seed_opt) base.emplace_back("sim.seed", std::to_string(sweep_seed));
        return cmd_sweep(sweep_scenario, base, sweep_sets, sweep_out, jobs);
    }
    return cmd_report(report_dir);
}
