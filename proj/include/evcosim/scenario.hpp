#pragma once

#include "evcosim/botnet.hpp"
#include "evcosim/ecosim.hpp"
#include "evcosim/gridcore.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace evcosim::scenario {

struct PopulationConfig {
    int n_victims = 0;
    int n_bots = 0;
    // Stations are generated on every load bus (consumer load > 0), ids
    // "st<bus>-<k>" with k starting at 1, pairing codes "pc<bus>-<k>".
    int stations_per_bus = 1;
    double connector_kw = 11.0;
};

struct ArrivalConfig {
    bool weekend = false;
    int start_hour = 0; // hour of day that sim time zero maps to
    botnet::ArrivalModel model = botnet::default_arrival_model();
    // Gap between plugging in and the owner's own start command.
    double start_delay_min_s = 20.0;
    double start_delay_max_s = 90.0;
    double charge_min_s = 1800.0;
    double charge_max_s = 7200.0;
    // Post-charge dwell (vehicle left on the connector), lognormal seconds.
    double dwell_mu_log = 7.5;
    double dwell_sigma_log = 0.6;
};

struct SimConfig {
    double horizon_s = 3600.0;
    double macro_step_s = 1.0;
    double dt_s = 0.01;
    std::uint64_t seed = 0; // no default in files: the key is mandatory
    // Profile hour scaling the base case for trace/dynamics/cascade;
    // -1 keeps the case as shipped.  Impact rows always cover all 24 hours.
    int hour = -1;
};

struct ScenarioSpec {
    std::string name;
    std::string grid_case_path; // as written in the file
    std::string profile_path;
    std::string base_dir; // directory the relative paths resolve against
    ecosim::PolicyConfig policy;
    PopulationConfig population;
    ArrivalConfig arrival;
    std::optional<botnet::AttackPlan> attack;
    SimConfig sim;
    std::string outputs_dir; // default "out/<name>"
};

// Overrides address one section key as "section.key" (the same dotted paths
// the CLI's --set flag accepts) and are applied to the parsed document
// before the spec is built, so every derived default and the config hash see
// the overridden value.
ScenarioSpec parse_scenario(const std::string& text, const std::string& origin,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});
ScenarioSpec load_scenario(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& overrides = {});

std::string resolve_path(const ScenarioSpec& spec, const std::string& path);

// Flat sorted "section.key = value" rendering of every result-affecting
// field with defaults applied.  Excludes the scenario name, file paths and
// the outputs directory; referenced files enter the config hash as bytes.
std::string canonical_spec(const ScenarioSpec& spec);

struct LoadedScenario {
    ScenarioSpec spec;
    gridcore::GridCase grid;
    gridcore::LoadProfile profile;
    std::uint64_t config_hash = 0;
};

// Loads and validates the referenced files and every cross-field invariant;
// the result carries everything a run needs.
LoadedScenario validate_scenario(const ScenarioSpec& spec);

// Per-bus MW drawn by the given charging sessions: sum of connector kW per
// bus, divided by 1000 once, so kW-granular inputs aggregate exactly.
// Buses without sessions are absent from the map.
std::map<int, double> couple_sessions_to_loads(
    const std::vector<ecosim::SessionRecord>& active_sessions,
    const std::map<std::string, ecosim::StationRecord>& stations);

struct RunSummary {
    std::string name;
    std::uint64_t config_hash = 0;

    std::size_t sessions_started = 0;
    ecosim::ClassificationCounts tuples;
    bool hijack_ran = false;
    botnet::HijackReport hijack;

    // Peaks and frequency extremes are sampled at macro resolution,
    // matching the trace.csv rows they are derived from.
    double peak_session_mw = 0.0;
    double peak_attack_mw = 0.0;
    double min_freq_hz = 60.0;
    double max_freq_hz = 60.0;
    int sheds = 0;
    int gen_trips = 0;
    bool near_blackout = false;
    std::optional<gridcore::CascadeReport> cascade;
    std::vector<gridcore::ImpactReport> impacts; // hours 0..23

    std::map<std::string, std::string> outputs; // label -> written path
};

// Full co-simulation: seeded victim/attacker event loop over the ecosystem,
// per-macro-step session-to-bus coupling, grid evaluation (impact rows for
// every plan; frequency dynamics for oscillatory plans, cascading failure
// for targeted trips), and deterministic CSV outputs in spec.outputs_dir:
// audit.csv, trace.csv, events.csv, impact.csv, run.kv, summary.txt.
// Equal specs produce byte-identical files.
RunSummary run_scenario(const ScenarioSpec& spec);

// Rebuilds the summary text purely from the files in an output directory.
// run_scenario writes summary.txt through this same function, so `report`
// regenerates it byte-identically.
std::string summarize_outputs(const std::string& dir);

} // namespace evcosim::scenario
