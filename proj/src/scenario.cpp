#include "evcosim/scenario.hpp"

#include "evcosim/dynamics.hpp"
#include "evcosim/error.hpp"
#include "evcosim/kvfile.hpp"
#include "evcosim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <variant>

namespace evcosim::scenario {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

// Canonical number rendering: shortest form that round-trips the values
// scenario files carry, stable across runs.
std::string num(double v) { return fmt_double("%.10g", v); }

const kv::Section* at_most_one(const kv::Document& doc, const std::string& name) {
    auto all = doc.all(name);
    if (all.size() > 1)
        throw Error(Errc::BadFile, "section [" + name + "] must appear at most once");
    return all.empty() ? nullptr : all.front();
}

std::map<int, double> parse_bus_mw(const std::string& value, const std::string& what) {
    std::map<int, double> out;
    std::istringstream in(value);
    std::string tok;
    while (in >> tok) {
        const auto colon = tok.find(':');
        bool ok = colon != std::string::npos && colon > 0 && colon + 1 < tok.size();
        int bus = 0;
        double mw = 0;
        if (ok) {
            try {
                size_t p1 = 0, p2 = 0;
                bus = std::stoi(tok.substr(0, colon), &p1);
                mw = std::stod(tok.substr(colon + 1), &p2);
                ok = p1 == colon && p2 == tok.size() - colon - 1;
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok) throw Error(Errc::BadFile, what + ": expected bus:mw pairs, got '" + tok + "'");
        if (!out.emplace(bus, mw).second)
            throw Error(Errc::BadFile, what + ": duplicate bus " + std::to_string(bus));
    }
    if (out.empty()) throw Error(Errc::BadFile, what + ": empty bus:mw list");
    return out;
}

std::vector<int> parse_bus_list(const std::string& value, const std::string& what) {
    std::vector<int> out;
    for (double v : kv::parse_number_list(value)) {
        if (v != std::floor(v))
            throw Error(Errc::BadFile, what + ": bus ids must be integers");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw Error(Errc::BadFile, what + ": empty bus list");
    return out;
}

std::array<double, 24> parse_hours(const kv::Section& s, const std::string& key,
                                   const std::array<double, 24>& fallback) {
    if (!s.has(key)) return fallback;
    auto v = kv::parse_number_list(s.get(key));
    if (v.size() != 24)
        throw Error(Errc::ValidationFailed, "[arrival] " + key + " needs exactly 24 entries");
    std::array<double, 24> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

std::string join_hours(const std::array<double, 24>& hours) {
    std::string out;
    for (int h = 0; h < 24; ++h) {
        if (h) out += ' ';
        out += num(hours[h]);
    }
    return out;
}

std::string join_bus_mw(const std::map<int, double>& m) {
    std::string out;
    for (const auto& [bus, mw] : m) {
        if (!out.empty()) out += ' ';
        out += std::to_string(bus) + ":" + num(mw);
    }
    return out;
}

botnet::AttackPlan parse_attack(const kv::Section& a) {
    const std::string kind = a.get("kind");
    if (kind == "hijack") {
        botnet::HijackPlan p;
        p.target_station = a.get_or("target_station", "auto");
        p.probe_min_s = a.get_double_or("probe_min_s", p.probe_min_s);
        p.probe_max_s = a.get_double_or("probe_max_s", p.probe_max_s);
        return p;
    }
    if (kind == "mass_charge") {
        botnet::MassChargePlan p;
        p.bus_mw = parse_bus_mw(a.get("bus_mw"), "[attack] bus_mw");
        p.start_s = a.get_double_or("start_s", 0.0);
        return p;
    }
    if (kind == "targeted_trip") {
        botnet::TargetedTripPlan p;
        p.bus_mw = parse_bus_mw(a.get("bus_mw"), "[attack] bus_mw");
        return p;
    }
    if (kind == "oscillatory" || kind == "v2g") {
        botnet::OscillatoryPlan o;
        o.buses = parse_bus_list(a.get("buses"), "[attack] buses");
        o.start_s = a.get_double_or("start_s", o.start_s);
        o.on_duration_s = a.get_double_or("on_duration_s", o.on_duration_s);
        o.cycle_period_s = a.get_double_or("cycle_period_s", o.cycle_period_s);
        o.initial_mw_per_bus = a.get_double_or("initial_mw_per_bus", o.initial_mw_per_bus);
        o.increment_mw_per_bus = a.get_double_or("increment_mw_per_bus", o.increment_mw_per_bus);
        o.cycles = a.get_int_or("cycles", o.cycles);
        if (kind == "oscillatory") return o;
        botnet::V2GAmplifiedPlan v;
        v.oscillation = o;
        v.discharge_mw_per_bus = a.get_double_or("discharge_mw_per_bus", 0.0);
        return v;
    }
    throw Error(Errc::ValidationFailed, "[attack] unknown kind '" + kind + "'");
}

std::vector<ecosim::StationRecord> build_stations(const gridcore::GridCase& grid,
                                                  const PopulationConfig& pop) {
    std::vector<ecosim::StationRecord> out;
    for (const auto& bus : grid.buses) {
        if (bus.load_mw <= 0) continue;
        for (int k = 1; k <= pop.stations_per_bus; ++k) {
            ecosim::StationRecord st;
            st.id = "st" + std::to_string(bus.id) + "-" + std::to_string(k);
            st.bus = bus.id;
            st.connector_kw = pop.connector_kw;
            st.pairing_code = "pc" + std::to_string(bus.id) + "-" + std::to_string(k);
            out.push_back(std::move(st));
        }
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::BadFile, "cannot write " + path);
    out << content;
    if (!out) throw Error(Errc::BadFile, "write failed: " + path);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    return out;
}

} // namespace

ScenarioSpec parse_scenario(const std::string& text, const std::string& origin,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
    kv::Document doc = kv::parse_string(text, origin);
    for (const auto& [key, value] : overrides) {
        const auto dot = key.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 >= key.size())
            throw Error(Errc::BadArguments, "override key must be section.key: '" + key + "'");
        const std::string section = key.substr(0, dot);
        kv::Section* target = nullptr;
        for (auto& s : doc.sections)
            if (s.name == section) {
                target = &s;
                break;
            }
        if (!target) {
            doc.sections.push_back(kv::Section{section, 0, {}});
            target = &doc.sections.back();
        }
        target->values[key.substr(dot + 1)] = value;
    }

    ScenarioSpec spec;
    const fs::path origin_path(origin);
    spec.base_dir = origin_path.parent_path().string();

    const kv::Section& sc = doc.only("scenario");
    spec.name = sc.get_or("name", origin_path.stem().string());
    spec.grid_case_path = sc.get("grid_case");
    spec.profile_path = sc.get("profile");

    if (const auto* p = at_most_one(doc, "policy")) {
        spec.policy.verify_ownership = p->get_bool_or("verify_ownership", false);
        spec.policy.authorize_critical = p->get_bool_or("authorize_critical", false);
        spec.policy.require_station_code = p->get_bool_or("require_station_code", false);
        spec.policy.proximity_check = p->get_bool_or("proximity_check", false);
        spec.policy.rate_limit_count = p->get_int_or("rate_limit_count", 0);
        spec.policy.rate_limit_window_s = p->get_double_or("rate_limit_window_s", 60.0);
        spec.policy.grace_period_s = p->get_double_or("grace_period_s", 300.0);
    }
    if (const auto* p = at_most_one(doc, "population")) {
        spec.population.n_victims = p->get_int_or("n_victims", 0);
        spec.population.n_bots = p->get_int_or("n_bots", 0);
        spec.population.stations_per_bus = p->get_int_or("stations_per_bus", 1);
        spec.population.connector_kw = p->get_double_or("connector_kw", 11.0);
    }
    if (const auto* p = at_most_one(doc, "arrival")) {
        const std::string day = p->get_or("day", "weekday");
        if (day != "weekday" && day != "weekend")
            throw Error(Errc::ValidationFailed, "[arrival] day must be weekday or weekend");
        spec.arrival.weekend = day == "weekend";
        spec.arrival.start_hour = p->get_int_or("start_hour", 0);
        spec.arrival.model.weekday = parse_hours(*p, "weekday", spec.arrival.model.weekday);
        spec.arrival.model.weekend = parse_hours(*p, "weekend", spec.arrival.model.weekend);
        spec.arrival.start_delay_min_s = p->get_double_or("start_delay_min_s", 20.0);
        spec.arrival.start_delay_max_s = p->get_double_or("start_delay_max_s", 90.0);
        spec.arrival.charge_min_s = p->get_double_or("charge_min_s", 1800.0);
        spec.arrival.charge_max_s = p->get_double_or("charge_max_s", 7200.0);
        spec.arrival.dwell_mu_log = p->get_double_or("dwell_mu_log", 7.5);
        spec.arrival.dwell_sigma_log = p->get_double_or("dwell_sigma_log", 0.6);
    }
    if (const auto* a = at_most_one(doc, "attack")) {
        // kind = none keeps the section (handy for sweeps) without a plan.
        if (a->get("kind") != "none") spec.attack = parse_attack(*a);
    }

    const kv::Section& sim = doc.only("sim");
    if (!sim.has("seed")) throw Error(Errc::ValidationFailed, origin + ": [sim] seed is mandatory");
    try {
        size_t pos = 0;
        spec.sim.seed = std::stoull(sim.get("seed"), &pos);
        if (pos != sim.get("seed").size()) throw std::invalid_argument("seed");
    } catch (const std::exception&) {
        throw Error(Errc::BadFile, "[sim] seed: not an unsigned integer");
    }
    spec.sim.horizon_s = sim.get_double_or("horizon_s", 3600.0);
    spec.sim.macro_step_s = sim.get_double_or("macro_step_s", 1.0);
    spec.sim.dt_s = sim.get_double_or("dt_s", 0.01);
    spec.sim.hour = sim.get_int_or("hour", -1);

    if (const auto* o = at_most_one(doc, "outputs"))
        spec.outputs_dir = o->get_or("dir", "");
    if (spec.outputs_dir.empty()) spec.outputs_dir = "out/" + spec.name;
    return spec;
}

ScenarioSpec load_scenario(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& overrides) {
    return parse_scenario(kv::read_file(path), path, overrides);
}

std::string resolve_path(const ScenarioSpec& spec, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute() || spec.base_dir.empty()) return path;
    return (fs::path(spec.base_dir) / p).string();
}

std::string canonical_spec(const ScenarioSpec& spec) {
    std::vector<std::pair<std::string, std::string>> entries;
    auto add = [&](const std::string& k, const std::string& v) { entries.emplace_back(k, v); };
    auto add_d = [&](const std::string& k, double v) { add(k, num(v)); };
    auto add_i = [&](const std::string& k, long long v) { add(k, std::to_string(v)); };
    auto add_b = [&](const std::string& k, bool v) { add(k, v ? "true" : "false"); };

    add_b("policy.verify_ownership", spec.policy.verify_ownership);
    add_b("policy.authorize_critical", spec.policy.authorize_critical);
    add_b("policy.require_station_code", spec.policy.require_station_code);
    add_b("policy.proximity_check", spec.policy.proximity_check);
    add_i("policy.rate_limit_count", spec.policy.rate_limit_count);
    add_d("policy.rate_limit_window_s", spec.policy.rate_limit_window_s);
    add_d("policy.grace_period_s", spec.policy.grace_period_s);

    add_i("population.n_victims", spec.population.n_victims);
    add_i("population.n_bots", spec.population.n_bots);
    add_i("population.stations_per_bus", spec.population.stations_per_bus);
    add_d("population.connector_kw", spec.population.connector_kw);

    add("arrival.day", spec.arrival.weekend ? "weekend" : "weekday");
    add_i("arrival.start_hour", spec.arrival.start_hour);
    add("arrival.weekday", join_hours(spec.arrival.model.weekday));
    add("arrival.weekend", join_hours(spec.arrival.model.weekend));
    add_d("arrival.start_delay_min_s", spec.arrival.start_delay_min_s);
    add_d("arrival.start_delay_max_s", spec.arrival.start_delay_max_s);
    add_d("arrival.charge_min_s", spec.arrival.charge_min_s);
    add_d("arrival.charge_max_s", spec.arrival.charge_max_s);
    add_d("arrival.dwell_mu_log", spec.arrival.dwell_mu_log);
    add_d("arrival.dwell_sigma_log", spec.arrival.dwell_sigma_log);

    if (!spec.attack) {
        add("attack.kind", "none");
    } else if (const auto* h = std::get_if<botnet::HijackPlan>(&*spec.attack)) {
        add("attack.kind", "hijack");
        add("attack.target_station", h->target_station);
        add_d("attack.probe_min_s", h->probe_min_s);
        add_d("attack.probe_max_s", h->probe_max_s);
    } else if (const auto* m = std::get_if<botnet::MassChargePlan>(&*spec.attack)) {
        add("attack.kind", "mass_charge");
        add("attack.bus_mw", join_bus_mw(m->bus_mw));
        add_d("attack.start_s", m->start_s);
    } else if (const auto* t = std::get_if<botnet::TargetedTripPlan>(&*spec.attack)) {
        add("attack.kind", "targeted_trip");
        add("attack.bus_mw", join_bus_mw(t->bus_mw));
    } else {
        const auto* v = std::get_if<botnet::V2GAmplifiedPlan>(&*spec.attack);
        const botnet::OscillatoryPlan& o =
            v ? v->oscillation : std::get<botnet::OscillatoryPlan>(*spec.attack);
        add("attack.kind", v ? "v2g" : "oscillatory");
        std::string buses;
        for (int b : o.buses) {
            if (!buses.empty()) buses += ' ';
            buses += std::to_string(b);
        }
        add("attack.buses", buses);
        add_d("attack.start_s", o.start_s);
        add_d("attack.on_duration_s", o.on_duration_s);
        add_d("attack.cycle_period_s", o.cycle_period_s);
        add_d("attack.initial_mw_per_bus", o.initial_mw_per_bus);
        add_d("attack.increment_mw_per_bus", o.increment_mw_per_bus);
        add_i("attack.cycles", o.cycles);
        if (v) add_d("attack.discharge_mw_per_bus", v->discharge_mw_per_bus);
    }

    add_d("sim.horizon_s", spec.sim.horizon_s);
    add_d("sim.macro_step_s", spec.sim.macro_step_s);
    add_d("sim.dt_s", spec.sim.dt_s);
    add("sim.seed", std::to_string(spec.sim.seed));
    add_i("sim.hour", spec.sim.hour);

    std::sort(entries.begin(), entries.end());
    std::string out;
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out;
}

LoadedScenario validate_scenario(const ScenarioSpec& spec) {
    LoadedScenario L;
    L.spec = spec;

    const std::string case_path = resolve_path(spec, spec.grid_case_path);
    const std::string profile_path = resolve_path(spec, spec.profile_path);
    const std::string case_bytes = kv::read_file(case_path);
    const std::string profile_bytes = kv::read_file(profile_path);
    L.grid = gridcore::parse_case(case_bytes, case_path);
    gridcore::validate_case(L.grid);
    L.profile = gridcore::parse_profile(profile_bytes, profile_path);

    auto fail = [](const std::string& msg) { throw Error(Errc::ValidationFailed, msg); };

    const SimConfig& sim = spec.sim;
    if (!(sim.horizon_s > 0)) fail("[sim] horizon_s must be positive");
    if (!(sim.macro_step_s > 0)) fail("[sim] macro_step_s must be positive");
    if (!(sim.dt_s >= 0.001 && sim.dt_s <= 0.05)) fail("[sim] dt_s must lie in [0.001, 0.05]");
    if (sim.macro_step_s < sim.dt_s) fail("[sim] macro_step_s must be >= dt_s");
    if (sim.horizon_s / sim.macro_step_s > 2e6) fail("[sim] horizon exceeds 2e6 macro steps");
    if (sim.hour < -1 || sim.hour > 23) fail("[sim] hour must be -1..23");

    const PopulationConfig& pop = spec.population;
    if (pop.n_victims < 0 || pop.n_bots < 0) fail("[population] counts must be non-negative");
    if (pop.stations_per_bus < 0) fail("[population] stations_per_bus must be non-negative");
    if (!(pop.connector_kw > 0)) fail("[population] connector_kw must be positive");
    const auto stations = build_stations(L.grid, pop);
    if (pop.n_victims > static_cast<int>(stations.size()))
        fail("[population] n_victims exceeds the " + std::to_string(stations.size()) +
             " generated stations");

    const ArrivalConfig& arr = spec.arrival;
    if (arr.start_hour < 0 || arr.start_hour > 23) fail("[arrival] start_hour must be 0..23");
    if (arr.start_delay_min_s < 0 || arr.start_delay_max_s < arr.start_delay_min_s)
        fail("[arrival] start delay bounds out of order");
    if (!(arr.charge_min_s > 0) || arr.charge_max_s < arr.charge_min_s)
        fail("[arrival] charge duration bounds out of order");
    if (arr.dwell_sigma_log < 0) fail("[arrival] dwell_sigma_log must be non-negative");
    for (double v : arr.model.weekday)
        if (v < 0) fail("[arrival] weekday entries must be non-negative");
    for (double v : arr.model.weekend)
        if (v < 0) fail("[arrival] weekend entries must be non-negative");

    if (spec.attack) {
        auto check_bus = [&](int bus) {
            if (L.grid.bus_index(bus) < 0)
                fail("[attack] bus " + std::to_string(bus) + " not in the grid case");
        };
        auto check_map = [&](const std::map<int, double>& m) {
            for (const auto& [bus, mw] : m) {
                check_bus(bus);
                if (mw < 0) fail("[attack] megawatts must be non-negative");
            }
        };
        if (const auto* h = std::get_if<botnet::HijackPlan>(&*spec.attack)) {
            if (pop.n_bots < 1) fail("[attack] hijack needs at least one bot account");
            if (h->probe_min_s < 1 || h->probe_max_s < h->probe_min_s)
                fail("[attack] probe interval bounds out of order");
            if (h->target_station == "auto") {
                if (pop.n_victims < 1) fail("[attack] target_station auto needs a victim");
            } else {
                const bool known =
                    std::any_of(stations.begin(), stations.end(),
                                [&](const auto& st) { return st.id == h->target_station; });
                if (!known) fail("[attack] target_station '" + h->target_station + "' not generated");
            }
        } else if (const auto* m = std::get_if<botnet::MassChargePlan>(&*spec.attack)) {
            check_map(m->bus_mw);
            if (m->start_s < 0 || m->start_s > sim.horizon_s)
                fail("[attack] start_s outside the horizon");
        } else if (const auto* t = std::get_if<botnet::TargetedTripPlan>(&*spec.attack)) {
            check_map(t->bus_mw);
        } else {
            const auto* v = std::get_if<botnet::V2GAmplifiedPlan>(&*spec.attack);
            const botnet::OscillatoryPlan& o =
                v ? v->oscillation : std::get<botnet::OscillatoryPlan>(*spec.attack);
            for (int b : o.buses) check_bus(b);
            if (o.start_s < 0) fail("[attack] start_s must be non-negative");
            if (v && v->discharge_mw_per_bus < 0) fail("[attack] discharge must be non-negative");
            // Shares the plan validation, then bounds the schedule.
            const auto events = botnet::attack_schedule(*spec.attack);
            for (const auto& e : events)
                if (e.time_s > sim.horizon_s) fail("[attack] schedule exceeds the horizon");
        }
    }
    if (spec.outputs_dir.empty()) fail("[outputs] dir must not be empty");

    std::uint64_t h = kv::fnv1a64(canonical_spec(spec));
    h = kv::fnv1a64(case_bytes, h);
    L.config_hash = kv::fnv1a64(profile_bytes, h);
    return L;
}

std::map<int, double> couple_sessions_to_loads(
    const std::vector<ecosim::SessionRecord>& active_sessions,
    const std::map<std::string, ecosim::StationRecord>& stations) {
    // Accumulate kW per bus and divide once, so integral kW stay exact.
    std::map<int, double> kw;
    for (const auto& s : active_sessions) {
        auto it = stations.find(s.station_id);
        if (it == stations.end()) throw Error(Errc::UnknownStation, s.station_id);
        kw[it->second.bus] += it->second.connector_kw;
    }
    std::map<int, double> mw;
    for (const auto& [bus, k] : kw) mw[bus] = k / 1000.0;
    return mw;
}

namespace {

struct VictimPlan {
    std::string user, vin, station;
    double arrive = 0, start = 0, stop = 0, unplug = 0;
};

// Draw order per victim, in index order: arrival slot, offset within the
// slot, bus pick, start delay, charge duration, dwell (two draws).  The
// probe stream seed is the next u64 after the last victim.
std::vector<VictimPlan> draw_victims(Rng& rng, const ScenarioSpec& spec,
                                     const gridcore::GridCase& grid,
                                     const std::vector<ecosim::StationRecord>& stations) {
    const ArrivalConfig& arr = spec.arrival;
    const auto& hours = arr.weekend ? arr.model.weekend : arr.model.weekday;
    const double horizon = spec.sim.horizon_s;

    const int n_slots = static_cast<int>(std::ceil(horizon / 3600.0));
    std::vector<double> slot_w(n_slots), slot_len(n_slots);
    for (int j = 0; j < n_slots; ++j) {
        slot_len[j] = std::min(3600.0, horizon - j * 3600.0);
        slot_w[j] = hours[(arr.start_hour + j) % 24] * slot_len[j] / 3600.0;
    }
    const double w_total = std::accumulate(slot_w.begin(), slot_w.end(), 0.0);

    // Free stations grouped by bus, kept in generation order.
    std::map<int, std::vector<std::string>> free_by_bus;
    for (const auto& st : stations) free_by_bus[st.bus].push_back(st.id);
    auto bus_load = [&](int bus) { return grid.buses[grid.bus_index(bus)].load_mw; };

    std::vector<VictimPlan> out;
    for (int i = 1; i <= spec.population.n_victims; ++i) {
        VictimPlan v;
        v.user = "victim" + std::to_string(i);
        v.vin = "vin" + std::to_string(i);

        double u = rng.uniform01();
        int slot = n_slots - 1;
        if (w_total > 0) {
            double acc = 0;
            for (int j = 0; j < n_slots; ++j) {
                acc += slot_w[j] / w_total;
                if (u < acc) {
                    slot = j;
                    break;
                }
            }
        } else {
            slot = std::min(static_cast<int>(u * n_slots), n_slots - 1);
        }
        v.arrive = slot * 3600.0 + rng.uniform01() * slot_len[slot];

        double load_total = 0;
        for (const auto& [bus, ids] : free_by_bus)
            if (!ids.empty()) load_total += bus_load(bus);
        double pick = rng.uniform01() * load_total;
        int chosen = -1;
        for (const auto& [bus, ids] : free_by_bus) {
            if (ids.empty()) continue;
            chosen = bus;
            pick -= bus_load(bus);
            if (pick < 0) break;
        }
        auto& ids = free_by_bus[chosen];
        v.station = ids.front();
        ids.erase(ids.begin());

        v.start = v.arrive + rng.uniform(arr.start_delay_min_s, arr.start_delay_max_s);
        v.stop = v.start + rng.uniform(arr.charge_min_s, arr.charge_max_s);
        v.unplug = v.stop + rng.lognormal(arr.dwell_mu_log, arr.dwell_sigma_log);
        out.push_back(std::move(v));
    }
    return out;
}

struct CyberEvent {
    enum class Kind { Plug, Start, Stop, Unplug };
    double t = 0;
    int victim = 0; // index into the plan vector
    Kind kind = Kind::Plug;
};

void apply_cyber_event(ecosim::World& world, const VictimPlan& v, const CyberEvent& ev) {
    auto& stations = world.registry().stations;
    const ecosim::StationRecord& st = stations.at(v.station);
    switch (ev.kind) {
        case CyberEvent::Kind::Plug:
            world.advance_to(std::max(world.now(), ev.t));
            world.login(v.user);
            world.plug_vehicle(v.station, v.vin);
            break;
        case CyberEvent::Kind::Start: {
            ecosim::Command cmd;
            cmd.kind = ecosim::CommandKind::StartCharge;
            cmd.user_id = v.user;
            cmd.station_id = v.station;
            cmd.vin = v.vin;
            cmd.station_code = st.pairing_code;
            cmd.at_station = true;
            cmd.time_s = ev.t;
            world.submit_command(cmd);
            break;
        }
        case CyberEvent::Kind::Stop: {
            // Only the owner of the running session bothers stopping it; a
            // hijacked vehicle just gets unplugged later.
            if (st.evcs_state != ecosim::Phase::S4 || st.session_user != v.user) break;
            ecosim::Command cmd;
            cmd.kind = ecosim::CommandKind::StopCharge;
            cmd.user_id = v.user;
            cmd.station_id = v.station;
            cmd.vin = v.vin;
            cmd.station_code = st.pairing_code;
            cmd.at_station = true;
            cmd.time_s = ev.t;
            world.submit_command(cmd);
            break;
        }
        case CyberEvent::Kind::Unplug:
            world.advance_to(std::max(world.now(), ev.t));
            if (st.connected_vin == v.vin) world.unplug_vehicle(v.station);
            break;
    }
}

std::string hex16(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

RunSummary run_scenario(const ScenarioSpec& raw_spec) {
    LoadedScenario L = validate_scenario(raw_spec);
    const ScenarioSpec& spec = L.spec;
    std::string phase = "setup";
    double phase_t = 0.0;
    try {
        RunSummary sum;
        sum.name = spec.name;
        sum.config_hash = L.config_hash;

        ecosim::World world(spec.policy);
        const auto station_records = build_stations(L.grid, spec.population);
        for (const auto& st : station_records) world.add_station(st);
        for (int i = 1; i <= spec.population.n_victims; ++i) {
            ecosim::UserAccount u;
            u.id = "victim" + std::to_string(i);
            u.owned_vins = {"vin" + std::to_string(i)};
            world.add_user(u);
        }
        for (int i = 1; i <= spec.population.n_bots; ++i) {
            ecosim::UserAccount u;
            u.id = "bot" + std::to_string(i);
            u.owned_vins = {"botvin" + std::to_string(i)};
            u.adversarial = true;
            world.add_user(u);
        }

        Rng rng(spec.sim.seed);
        const auto victims = draw_victims(rng, spec, L.grid, station_records);
        const std::uint64_t probe_seed = rng.next_u64();

        std::vector<CyberEvent> events;
        for (int i = 0; i < static_cast<int>(victims.size()); ++i) {
            const VictimPlan& v = victims[i];
            auto push = [&](double t, CyberEvent::Kind k) {
                if (t <= spec.sim.horizon_s) events.push_back({t, i, k});
            };
            push(v.arrive, CyberEvent::Kind::Plug);
            push(v.start, CyberEvent::Kind::Start);
            push(v.stop, CyberEvent::Kind::Stop);
            push(v.unplug, CyberEvent::Kind::Unplug);
        }
        std::stable_sort(events.begin(), events.end(),
                         [](const CyberEvent& a, const CyberEvent& b) { return a.t < b.t; });

        // Cyber phase.  The attacker's probe loop interleaves with the victim
        // timeline exactly as the clock orders them; ties replay the timeline
        // first so a plug-in can be captured by an already-armed grace.
        phase = "cyber";
        const auto* hijack = spec.attack ? std::get_if<botnet::HijackPlan>(&*spec.attack) : nullptr;
        std::string attacker, target;
        Rng probe_rng(probe_seed);
        double next_probe = std::numeric_limits<double>::infinity();
        bool probing = false;
        if (hijack) {
            attacker = "bot1";
            target = hijack->target_station == "auto" ? victims.front().station
                                                      : hijack->target_station;
            world.login(attacker);
            probing = true;
            next_probe = static_cast<double>(probe_rng.uniform_int(
                static_cast<std::int64_t>(hijack->probe_min_s),
                static_cast<std::int64_t>(hijack->probe_max_s)));
            sum.hijack_ran = true;
        }
        auto attacker_owns = [&]() {
            const auto& st = world.registry().stations.at(target);
            return st.evcs_state == ecosim::Phase::S4 && st.session_user == attacker;
        };

        std::size_t ei = 0;
        while (ei < events.size() || (probing && next_probe <= spec.sim.horizon_s)) {
            const bool probe_due = probing && next_probe <= spec.sim.horizon_s;
            if (ei < events.size() && (!probe_due || events[ei].t <= next_probe)) {
                phase_t = events[ei].t;
                apply_cyber_event(world, victims[events[ei].victim], events[ei]);
                if (probing && !sum.hijack.success && attacker_owns()) {
                    sum.hijack.success = true;
                    sum.hijack.success_time_s = events[ei].t;
                    probing = false;
                }
                ++ei;
            } else if (probe_due) {
                phase_t = next_probe;
                world.advance_to(std::max(world.now(), next_probe));
                ecosim::Command cmd;
                cmd.kind = ecosim::CommandKind::StartCharge;
                cmd.user_id = attacker;
                cmd.station_id = target;
                cmd.vin = "botvin1";
                cmd.at_station = false;
                cmd.time_s = next_probe;
                const auto res = world.submit_command(cmd);
                ++sum.hijack.attempts;
                switch (res.decision.outcome) {
                    case ecosim::CmsDecision::Outcome::Denied:
                        ++sum.hijack.denied;
                        break;
                    case ecosim::CmsDecision::Outcome::RateLimited:
                        ++sum.hijack.rate_limited;
                        break;
                    case ecosim::CmsDecision::Outcome::Forwarded:
                        if (res.evcs.kind == ecosim::EvcsOutcome::Kind::ChargingStarted) {
                            sum.hijack.success = true;
                            sum.hijack.success_time_s = next_probe;
                            probing = false;
                        } else if (res.evcs.kind == ecosim::EvcsOutcome::Kind::Rejected) {
                            ++sum.hijack.rejected;
                        }
                        break;
                }
                if (probing)
                    next_probe += static_cast<double>(probe_rng.uniform_int(
                        static_cast<std::int64_t>(hijack->probe_min_s),
                        static_cast<std::int64_t>(hijack->probe_max_s)));
            } else {
                break;
            }
        }
        world.advance_to(spec.sim.horizon_s);
        sum.sessions_started = world.registry().sessions.size();
        sum.tuples = world.classification_counts();

        // Grid phase: one row per macro step sampling the coupled bus loads.
        phase = "grid";
        const gridcore::GridCase base =
            spec.sim.hour >= 0 ? gridcore::scale_loads(L.grid, L.profile, spec.sim.hour) : L.grid;
        const double consumer_mw = base.total_load_mw();
        const double macro = spec.sim.macro_step_s;
        const int n_rows = static_cast<int>(std::floor(spec.sim.horizon_s / macro + 1e-9)) + 1;

        const auto& all_sessions = world.registry().sessions;
        const auto& station_map = world.registry().stations;
        std::vector<std::map<int, double>> session_bus(n_rows);
        std::vector<double> session_mw(n_rows, 0.0);
        for (int k = 0; k < n_rows; ++k) {
            const double t = k * macro;
            std::vector<ecosim::SessionRecord> active;
            for (const auto& s : all_sessions)
                if (s.started_s <= t && (s.stopped_s < 0 || s.stopped_s > t)) active.push_back(s);
            session_bus[k] = couple_sessions_to_loads(active, station_map);
            for (const auto& [bus, mw] : session_bus[k]) session_mw[k] += mw;
        }

        const auto attack_events =
            spec.attack ? botnet::attack_schedule(*spec.attack) : std::vector<botnet::LoadEvent>{};
        std::vector<double> attack_mw(n_rows, 0.0);
        {
            std::size_t p = 0;
            double cum = 0;
            for (int k = 0; k < n_rows; ++k) {
                const double t = k * macro;
                while (p < attack_events.size() && attack_events[p].time_s <= t)
                    cum += attack_events[p++].delta_mw;
                attack_mw[k] = cum;
            }
        }

        const bool oscillating =
            spec.attack && (std::holds_alternative<botnet::OscillatoryPlan>(*spec.attack) ||
                            std::holds_alternative<botnet::V2GAmplifiedPlan>(*spec.attack));
        std::vector<double> freq(n_rows, 60.0);
        std::string events_csv_text = "t_s,kind,magnitude_mw,detail\n";

        if (oscillating) {
            phase = "dynamics";
            std::vector<dynamics::LoadEvent> dyn_events;
            for (const auto& e : attack_events) dyn_events.push_back({e.time_s, e.bus, e.delta_mw});
            // Session load enters the swing model as steps on the macro grid.
            for (int k = 0; k < n_rows; ++k) {
                const std::map<int, double> prev =
                    k ? session_bus[k - 1] : std::map<int, double>{};
                std::map<int, double> delta;
                for (const auto& [bus, mw] : session_bus[k]) delta[bus] += mw;
                for (const auto& [bus, mw] : prev) delta[bus] -= mw;
                for (const auto& [bus, d] : delta)
                    if (d != 0) dyn_events.push_back({k * macro, bus, d});
            }
            const auto trace =
                dynamics::run_transient(base, dynamics::default_machines(base), {},
                                        std::move(dyn_events), spec.sim.horizon_s, spec.sim.dt_s);
            for (int k = 0; k < n_rows; ++k) {
                auto idx = static_cast<std::size_t>(std::llround(k * macro / spec.sim.dt_s));
                idx = std::min(idx, trace.samples.size() - 1);
                freq[k] = trace.samples[idx].freq_hz;
            }
            for (const auto& e : trace.events) {
                if (e.kind == dynamics::TraceEventKind::Shed) ++sum.sheds;
                if (e.kind == dynamics::TraceEventKind::GenTrip) ++sum.gen_trips;
            }
            events_csv_text = dynamics::events_csv(trace);
            if (trace.outcome == dynamics::TraceOutcome::NearBlackout) {
                sum.near_blackout = true;
                events_csv_text += fmt_double("%.3f", trace.samples.back().t_s) +
                                   ",NearBlackout,0.000000,load exceeds remaining generation\n";
            }
        } else if (spec.attack && std::holds_alternative<botnet::TargetedTripPlan>(*spec.attack)) {
            phase = "cascade";
            const auto& plan = std::get<botnet::TargetedTripPlan>(*spec.attack);
            sum.cascade = gridcore::cascade(gridcore::with_attack(base, plan.bus_mw));
            for (const auto& [from, to] : sum.cascade->tripped_lines)
                events_csv_text += "0.000,LineTrip,0.000000,line " + std::to_string(from) + "-" +
                                   std::to_string(to) + "\n";
            for (const auto& island : sum.cascade->islands) {
                std::string buses;
                for (int b : island) buses += (buses.empty() ? "" : " ") + std::to_string(b);
                events_csv_text += "0.000,Island,0.000000,buses " + buses + "\n";
            }
            if (!sum.cascade->tripped_lines.empty())
                events_csv_text += "0.000,Unserved," +
                                   fmt_double("%.6f", sum.cascade->unserved_load_mw) + "," +
                                   fmt_double("%.2f", sum.cascade->unserved_fraction * 100.0) +
                                   "% of consumer load\n";
        } else if (spec.attack && std::holds_alternative<botnet::MassChargePlan>(*spec.attack)) {
            for (const auto& e : attack_events)
                events_csv_text += fmt_double("%.3f", e.time_s) +
                                   (e.delta_mw >= 0 ? ",AttackOn," : ",AttackOff,") +
                                   fmt_double("%.6f", std::abs(e.delta_mw)) + ",bus " +
                                   std::to_string(e.bus) + "\n";
        } else if (hijack && sum.hijack.success) {
            const auto& st = station_map.at(target);
            events_csv_text += fmt_double("%.3f", sum.hijack.success_time_s) + ",HijackSuccess," +
                               fmt_double("%.6f", st.connector_kw / 1000.0) + ",station " + target +
                               "\n";
        }

        phase = "impact";
        std::map<int, double> impact_attack;
        if (spec.attack) {
            if (const auto* m = std::get_if<botnet::MassChargePlan>(&*spec.attack)) {
                impact_attack = m->bus_mw;
            } else if (const auto* t = std::get_if<botnet::TargetedTripPlan>(&*spec.attack)) {
                impact_attack = t->bus_mw;
            } else if (oscillating) {
                const auto* v = std::get_if<botnet::V2GAmplifiedPlan>(&*spec.attack);
                const botnet::OscillatoryPlan& o =
                    v ? v->oscillation : std::get<botnet::OscillatoryPlan>(*spec.attack);
                const double peak = o.initial_mw_per_bus + (o.cycles - 1) * o.increment_mw_per_bus;
                for (int b : o.buses) impact_attack[b] += peak;
            }
        }
        for (int h = 0; h < 24; ++h) {
            phase_t = h;
            sum.impacts.push_back(gridcore::attack_impact_report(L.grid, impact_attack, h, L.profile));
        }

        // Outputs.  Every writer uses fixed formats so equal specs produce
        // byte-identical files.
        phase = "outputs";
        fs::create_directories(spec.outputs_dir);
        const auto out_path = [&](const char* name) {
            return (fs::path(spec.outputs_dir) / name).string();
        };

        std::string trace_text = "t_s,freq_hz,consumer_mw,session_mw,attack_mw,total_mw\n";
        for (int k = 0; k < n_rows; ++k) {
            trace_text += fmt_double("%.3f", k * macro) + ',' + fmt_double("%.6f", freq[k]) + ',' +
                          fmt_double("%.6f", consumer_mw) + ',' + fmt_double("%.6f", session_mw[k]) +
                          ',' + fmt_double("%.6f", attack_mw[k]) + ',' +
                          fmt_double("%.6f", consumer_mw + session_mw[k] + attack_mw[k]) + '\n';
            sum.peak_session_mw = std::max(sum.peak_session_mw, session_mw[k]);
            sum.peak_attack_mw = std::max(sum.peak_attack_mw, attack_mw[k]);
            sum.min_freq_hz = std::min(sum.min_freq_hz, freq[k]);
            sum.max_freq_hz = std::max(sum.max_freq_hz, freq[k]);
        }

        std::string impact_text =
            "hour,served_load_mw,attack_mw,losses_before_mw,losses_after_mw,loss_increase_pct,"
            "cost_before_usd_h,cost_after_usd_h,cost_delta_usd_h,annualized_delta_usd,"
            "lambda_before,lambda_after\n";
        for (const auto& r : sum.impacts) {
            impact_text += std::to_string(r.hour) + ',' + fmt_double("%.6f", r.served_load_mw) +
                           ',' + fmt_double("%.6f", r.attack_mw) + ',' +
                           fmt_double("%.6f", r.losses_before_mw) + ',' +
                           fmt_double("%.6f", r.losses_after_mw) + ',' +
                           fmt_double("%.6f", r.loss_increase_pct) + ',' +
                           fmt_double("%.6f", r.cost_before_usd_h) + ',' +
                           fmt_double("%.6f", r.cost_after_usd_h) + ',' +
                           fmt_double("%.6f", r.cost_delta_usd_h) + ',' +
                           fmt_double("%.6f", r.annualized_delta_usd) + ',' +
                           fmt_double("%.6f", r.lambda_before) + ',' +
                           fmt_double("%.6f", r.lambda_after) + '\n';
        }

        std::string run_kv = "[run]\nname = " + spec.name + "\nconfig_hash = " +
                             hex16(L.config_hash) + "\n\n[spec]\n" + canonical_spec(spec);
        if (sum.hijack_ran) {
            run_kv += "\n[hijack_result]\n";
            run_kv += "attempts = " + std::to_string(sum.hijack.attempts) + "\n";
            run_kv += "denied = " + std::to_string(sum.hijack.denied) + "\n";
            run_kv += "rate_limited = " + std::to_string(sum.hijack.rate_limited) + "\n";
            run_kv += "rejected = " + std::to_string(sum.hijack.rejected) + "\n";
            run_kv += std::string("success = ") + (sum.hijack.success ? "true" : "false") + "\n";
            run_kv += "success_time_s = " + fmt_double("%.3f", sum.hijack.success_time_s) + "\n";
        }

        write_file(out_path("audit.csv"), ecosim::audit_csv(world.audit()));
        write_file(out_path("trace.csv"), trace_text);
        write_file(out_path("events.csv"), events_csv_text);
        write_file(out_path("impact.csv"), impact_text);
        write_file(out_path("run.kv"), run_kv);
        write_file(out_path("summary.txt"), summarize_outputs(spec.outputs_dir));

        sum.outputs = {{"audit", out_path("audit.csv")},     {"trace", out_path("trace.csv")},
                       {"events", out_path("events.csv")},   {"impact", out_path("impact.csv")},
                       {"run", out_path("run.kv")},          {"summary", out_path("summary.txt")}};
        return sum;
    } catch (const Error& e) {
        throw Error(e.code(), spec.name + " [" + phase + " t=" + fmt_double("%.3f", phase_t) +
                                  "]: " + e.what());
    }
}

std::string summarize_outputs(const std::string& dir) {
    const auto file = [&](const char* name) { return (fs::path(dir) / name).string(); };
    const kv::Document run = kv::parse_file(file("run.kv"));
    const kv::Section& run_s = run.only("run");
    const kv::Section& spec_s = run.only("spec");
    const kv::Section* hijack_s = run.first("hijack_result");

    const auto audit = split_lines(kv::read_file(file("audit.csv")));
    const auto trace = split_lines(kv::read_file(file("trace.csv")));
    const auto events = split_lines(kv::read_file(file("events.csv")));
    const auto impact = split_lines(kv::read_file(file("impact.csv")));

    std::size_t sessions = 0, legal = 0, suspect = 0, other = 0;
    for (std::size_t i = 1; i < audit.size(); ++i) {
        const auto f = split_csv(audit[i]);
        if (f.size() < 7) continue;
        if (f[2].find("charging_started") != std::string::npos) ++sessions;
        if (f[6] == "legal") ++legal;
        else if (f[6] == "hijack_suspect") ++suspect;
        else ++other;
    }

    // Quote winning rows as written so regeneration is byte-stable.
    std::string freq_min = "60.000000", freq_max = "60.000000";
    double freq_min_v = 1e18, freq_max_v = -1e18;
    double peak_session = -1e18, peak_attack = -1e18;
    std::string peak_session_s = "0.000000", peak_attack_s = "0.000000";
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const auto f = split_csv(trace[i]);
        if (f.size() < 6) continue;
        const double fr = std::stod(f[1]), se = std::stod(f[3]), at = std::stod(f[4]);
        if (fr < freq_min_v) { freq_min_v = fr; freq_min = f[1]; }
        if (fr > freq_max_v) { freq_max_v = fr; freq_max = f[1]; }
        if (se > peak_session) { peak_session = se; peak_session_s = f[3]; }
        if (at > peak_attack) { peak_attack = at; peak_attack_s = f[4]; }
    }

    int sheds = 0, trips = 0, line_trips = 0, islands = 0;
    bool near_blackout = false;
    std::string unserved_mw, unserved_pct;
    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto f = split_csv(events[i]);
        if (f.size() < 4) continue;
        if (f[1] == "Shed") ++sheds;
        else if (f[1] == "GenTrip") ++trips;
        else if (f[1] == "LineTrip") ++line_trips;
        else if (f[1] == "Island") ++islands;
        else if (f[1] == "NearBlackout") near_blackout = true;
        else if (f[1] == "Unserved") {
            unserved_mw = f[2];
            unserved_pct = f[3].substr(0, f[3].find('%'));
        }
    }

    // Impact rows bracketing the load range, quoted verbatim.
    std::vector<std::string> row_min, row_max;
    double served_min = 1e18, served_max = -1e18;
    for (std::size_t i = 1; i < impact.size(); ++i) {
        const auto f = split_csv(impact[i]);
        if (f.size() < 12) continue;
        const double served = std::stod(f[1]);
        if (served < served_min) { served_min = served; row_min = f; }
        if (served > served_max) { served_max = served; row_max = f; }
    }

    std::string out;
    out += "scenario " + run_s.get("name") + "\n";
    out += "config_hash " + run_s.get("config_hash") + "\n";
    out += "\n[spec]\n";
    for (const auto& [k, v] : spec_s.values) out += k + " = " + v + "\n";
    out += "\n[results]\n";
    out += "sessions_started = " + std::to_string(sessions) + "\n";
    out += "tuples = legal:" + std::to_string(legal) + " hijack_suspect:" + std::to_string(suspect) +
           " other_illegal:" + std::to_string(other) + "\n";
    if (hijack_s) {
        out += "hijack = attempts:" + hijack_s->get("attempts") + " denied:" +
               hijack_s->get("denied") + " rate_limited:" + hijack_s->get("rate_limited") +
               " rejected:" + hijack_s->get("rejected") + " success:" + hijack_s->get("success") +
               " success_time_s:" + hijack_s->get("success_time_s") + "\n";
    }
    out += "peak_session_mw = " + peak_session_s + "\n";
    out += "peak_attack_mw = " + peak_attack_s + "\n";
    out += "freq_hz = min:" + freq_min + " max:" + freq_max + "\n";
    out += "protection = sheds:" + std::to_string(sheds) + " gen_trips:" + std::to_string(trips) +
           "\n";
    if (near_blackout) out += "near_blackout = true\n";
    if (line_trips > 0) {
        out += "cascade = line_trips:" + std::to_string(line_trips) +
               " islands:" + std::to_string(islands) + " unserved_mw:" + unserved_mw +
               " unserved_pct:" + unserved_pct + "\n";
    }
    if (!row_min.empty()) {
        out += "impact_min_load = hour:" + row_min[0] + " served_mw:" + row_min[1] +
               " attack_mw:" + row_min[2] + " cost_delta_usd_h:" + row_min[8] +
               " annualized_usd:" + row_min[9] + "\n";
        out += "impact_peak_load = hour:" + row_max[0] + " served_mw:" + row_max[1] +
               " attack_mw:" + row_max[2] + " cost_delta_usd_h:" + row_max[8] +
               " annualized_usd:" + row_max[9] + "\n";
    }
    out += "outputs = audit.csv events.csv impact.csv trace.csv\n";
    return out;
}

} // namespace evcosim::scenario
