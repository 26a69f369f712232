#include "evcosim/botnet.hpp"

#include "evcosim/error.hpp"
#include "evcosim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evcosim::botnet {

using ecosim::Phase;
using ecosim::World;

const char* seen_status_name(SeenStatus s) {
    switch (s) {
        case SeenStatus::Available: return "available";
        case SeenStatus::PluggedIdle: return "plugged_idle";
        case SeenStatus::InUse: return "in_use";
    }
    return "?";
}

namespace {

SeenStatus public_status(const World& world, const std::string& station_id) {
    const auto& st = world.registry().stations.at(station_id);
    return st.evcs_state == Phase::S3 || st.evcs_state == Phase::S4 ? SeenStatus::InUse
                                                                    : SeenStatus::Available;
}

// Probe reply: a start answered by an immediate stop, netting out to the
// original station state while revealing whether a vehicle is parked.
SeenStatus probed_status(const World& world, const std::string& station_id) {
    const auto& st = world.registry().stations.at(station_id);
    return st.evcs_state == Phase::S2 ? SeenStatus::PluggedIdle : SeenStatus::Available;
}

std::string owner_of_vin(const World& world, const std::string& vin) {
    for (const auto& [id, u] : world.registry().users)
        if (std::find(u.owned_vins.begin(), u.owned_vins.end(), vin) != u.owned_vins.end())
            return id;
    throw Error(Errc::UnknownVehicle, vin);
}

void apply_occupancy_event(World& world, const OccupancyEvent& ev) {
    world.advance_to(std::max(world.now(), ev.time_s));
    const auto& stations = world.registry().stations;
    auto st_it = stations.find(ev.station_id);
    if (st_it == stations.end()) throw Error(Errc::UnknownStation, ev.station_id);

    switch (ev.kind) {
        case OccupancyEvent::Kind::Plug:
            world.plug_vehicle(ev.station_id, ev.vin);
            break;
        case OccupancyEvent::Kind::Unplug:
            world.unplug_vehicle(ev.station_id);
            break;
        case OccupancyEvent::Kind::Start: {
            const std::string vin = !ev.vin.empty() ? ev.vin : st_it->second.connected_vin;
            if (vin.empty()) throw Error(Errc::NoVehicleConnected, ev.station_id);
            const std::string owner = owner_of_vin(world, vin);
            world.login(owner);
            ecosim::Command cmd;
            cmd.kind = ecosim::CommandKind::StartCharge;
            cmd.user_id = owner;
            cmd.station_id = ev.station_id;
            cmd.vin = vin;
            cmd.at_station = true;
            cmd.station_code = st_it->second.pairing_code;
            cmd.time_s = ev.time_s;
            world.submit_command(cmd);
            break;
        }
        case OccupancyEvent::Kind::Stop: {
            std::string user = st_it->second.session_user;
            if (user.empty() && !st_it->second.connected_vin.empty())
                user = owner_of_vin(world, st_it->second.connected_vin);
            if (user.empty()) throw Error(Errc::NotCharging, ev.station_id);
            world.login(user);
            ecosim::Command cmd;
            cmd.kind = ecosim::CommandKind::StopCharge;
            cmd.user_id = user;
            cmd.station_id = ev.station_id;
            cmd.at_station = true;
            cmd.station_code = st_it->second.pairing_code;
            cmd.time_s = std::max(world.now(), ev.time_s);
            world.submit_command(cmd);
            break;
        }
    }
}

} // namespace

std::vector<ReconObservation> recon_poll(World& world, const std::vector<std::string>& station_ids,
                                         double poll_interval_s, double horizon_s,
                                         const std::vector<OccupancyEvent>& timeline) {
    if (poll_interval_s <= 0) throw Error(Errc::BadArguments, "poll interval must be positive");
    for (const auto& id : station_ids)
        if (!world.registry().stations.count(id)) throw Error(Errc::UnknownStation, id);

    std::vector<OccupancyEvent> events = timeline;
    std::stable_sort(events.begin(), events.end(),
                     [](const OccupancyEvent& a, const OccupancyEvent& b) {
                         return a.time_s < b.time_s;
                     });
    std::size_t next_event = 0;

    std::vector<ReconObservation> out;
    std::map<std::string, SeenStatus> last_seen;
    const int ticks = static_cast<int>(std::floor(horizon_s / poll_interval_s + 1e-9));
    for (int k = 1; k <= ticks; ++k) {
        const double t = k * poll_interval_s;
        while (next_event < events.size() && events[next_event].time_s <= t)
            apply_occupancy_event(world, events[next_event++]);
        world.advance_to(std::max(world.now(), t));

        for (const auto& id : station_ids) {
            ReconObservation obs;
            obs.station_id = id;
            obs.time_s = t;
            obs.status = public_status(world, id);
            auto prev = last_seen.find(id);
            if (prev != last_seen.end() && prev->second != obs.status) {
                obs.transition = {prev->second, obs.status};
                if (prev->second == SeenStatus::InUse && obs.status == SeenStatus::Available) {
                    obs.status = probed_status(world, id);
                    obs.probed = true;
                }
            }
            last_seen[id] = public_status(world, id);
            out.push_back(std::move(obs));
        }
    }
    return out;
}

ArrivalModel default_arrival_model() {
    ArrivalModel m;
    m.weekday = {20, 15, 12, 10, 12, 18, 40, 120, 260, 380, 400, 340,
                 300, 280, 260, 250, 260, 290, 310, 280, 220, 150, 80, 40};
    m.weekend = {30, 22, 18, 15, 15, 20, 35, 70, 150, 260, 300, 250,
                 240, 235, 230, 228, 230, 240, 250, 230, 190, 140, 90, 50};
    return m;
}

std::vector<AttackWindow> estimate_attack_windows(const std::array<double, 24>& hourly_arrivals,
                                                  int dwell_hours) {
    if (dwell_hours < 1 || dwell_hours > 24)
        throw Error(Errc::BadArguments, "dwell_hours must be 1..24");
    for (double v : hourly_arrivals)
        if (v < 0) throw Error(Errc::BadArguments, "negative arrival count");

    std::vector<AttackWindow> windows;
    for (int h = 0; h < 24; ++h) {
        double present = 0;
        for (int d = 0; d < dwell_hours; ++d) present += hourly_arrivals[(h - d + 24) % 24];
        if (present > 0) windows.push_back({h, h + dwell_hours, present});
    }
    std::sort(windows.begin(), windows.end(), [](const AttackWindow& a, const AttackWindow& b) {
        if (a.expected_connected != b.expected_connected)
            return a.expected_connected > b.expected_connected;
        return a.start_hour < b.start_hour;
    });
    return windows;
}

std::vector<AttackWindow> estimate_attack_windows(const std::vector<ReconObservation>& observations,
                                                  int dwell_hours) {
    if (observations.empty()) throw Error(Errc::EmptyInput, "no observations");
    std::array<double, 24> arrivals{};
    for (const auto& obs : observations) {
        const int hour = static_cast<int>(std::fmod(obs.time_s / 3600.0, 24.0));
        // A flip into in-use is a vehicle arriving to charge; a probe finding
        // a parked vehicle is an arrival discovered after the fact.
        if (obs.transition && obs.transition->second == SeenStatus::InUse)
            arrivals[hour] += 1;
        else if (obs.probed && obs.status == SeenStatus::PluggedIdle)
            arrivals[hour] += 1;
    }
    return estimate_attack_windows(arrivals, dwell_hours);
}

std::vector<LoadEvent> oscillatory_schedule(const OscillatoryPlan& plan) {
    if (plan.cycles < 1) throw Error(Errc::BadArguments, "cycles must be >= 1");
    if (plan.on_duration_s <= 0 || plan.cycle_period_s <= 0)
        throw Error(Errc::BadArguments, "oscillation durations must be positive");
    if (plan.initial_mw_per_bus < 0 || plan.increment_mw_per_bus < 0)
        throw Error(Errc::BadArguments, "attack megawatts must be non-negative");

    std::vector<LoadEvent> events;
    for (int k = 0; k < plan.cycles; ++k) {
        const double on_t = plan.start_s + k * plan.cycle_period_s;
        const double mw = plan.initial_mw_per_bus + k * plan.increment_mw_per_bus;
        for (int bus : plan.buses) events.push_back({on_t, bus, mw});
        for (int bus : plan.buses) events.push_back({on_t + plan.on_duration_s, bus, -mw});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const LoadEvent& a, const LoadEvent& b) { return a.time_s < b.time_s; });
    return events;
}

std::vector<LoadEvent> v2g_schedule(const V2GAmplifiedPlan& plan) {
    if (plan.discharge_mw_per_bus < 0)
        throw Error(Errc::BadArguments, "discharge must be non-negative");
    std::vector<LoadEvent> events = oscillatory_schedule(plan.oscillation);
    const auto& osc = plan.oscillation;
    if (plan.discharge_mw_per_bus > 0) {
        for (int k = 0; k < osc.cycles; ++k) {
            const double off_t = osc.start_s + k * osc.cycle_period_s + osc.on_duration_s;
            // Discharge holds until the next ON; the final one gets a tail of
            // one on-duration before recovery so the schedule nets to zero.
            const double rec_t = k + 1 < osc.cycles
                                     ? osc.start_s + (k + 1) * osc.cycle_period_s
                                     : off_t + osc.on_duration_s;
            if (rec_t <= off_t) continue; // continuous alternation: dip is instantaneous
            for (int bus : osc.buses) events.push_back({off_t, bus, -plan.discharge_mw_per_bus});
            for (int bus : osc.buses) events.push_back({rec_t, bus, plan.discharge_mw_per_bus});
        }
        std::stable_sort(events.begin(), events.end(),
                         [](const LoadEvent& a, const LoadEvent& b) { return a.time_s < b.time_s; });
    }
    return events;
}

std::vector<LoadEvent> attack_schedule(const AttackPlan& plan) {
    std::vector<LoadEvent> events;
    if (const auto* mass = std::get_if<MassChargePlan>(&plan)) {
        for (const auto& [bus, mw] : mass->bus_mw) {
            if (mw < 0) throw Error(Errc::BadArguments, "attack megawatts must be non-negative");
            events.push_back({mass->start_s, bus, mw});
        }
    } else if (const auto* osc = std::get_if<OscillatoryPlan>(&plan)) {
        events = oscillatory_schedule(*osc);
    } else if (const auto* v2g = std::get_if<V2GAmplifiedPlan>(&plan)) {
        events = v2g_schedule(*v2g);
    }
    // Hijack and targeted-trip plans act through sessions and the cascade
    // engine respectively, not through a load-shape timetable.
    return events;
}

HijackReport execute_hijack(World& world, const HijackPlan& plan, const std::string& attacker_id,
                            double horizon_s, std::uint64_t seed,
                            const std::vector<OccupancyEvent>& timeline) {
    if (!world.registry().stations.count(plan.target_station))
        throw Error(Errc::UnknownStation, plan.target_station);
    if (!world.registry().users.count(attacker_id)) throw Error(Errc::UnknownUser, attacker_id);
    if (plan.probe_min_s < 1 || plan.probe_max_s < plan.probe_min_s)
        throw Error(Errc::BadArguments, "bad probe interval");
    world.login(attacker_id);

    const auto& attacker = world.registry().users.at(attacker_id);
    const std::string own_vin = attacker.owned_vins.empty() ? "" : attacker.owned_vins[0];

    std::vector<OccupancyEvent> events = timeline;
    std::stable_sort(events.begin(), events.end(),
                     [](const OccupancyEvent& a, const OccupancyEvent& b) {
                         return a.time_s < b.time_s;
                     });
    std::size_t next_event = 0;

    Rng rng(seed);
    HijackReport rep;

    auto attacker_charging = [&]() {
        const auto& st = world.registry().stations.at(plan.target_station);
        return st.evcs_state == Phase::S4 && st.session_user == attacker_id;
    };

    // Drains timeline events up to `until`; returns the time the attacker's
    // session went live (a plug-in can activate a probe-armed grace), or -1.
    auto drain_events = [&](double until) {
        while (next_event < events.size() && events[next_event].time_s <= until) {
            apply_occupancy_event(world, events[next_event]);
            if (!rep.success && attacker_charging()) {
                rep.success = true;
                rep.success_time_s = events[next_event].time_s;
            }
            ++next_event;
        }
    };

    double probe_t = world.now();
    for (;;) {
        probe_t += static_cast<double>(rng.uniform_int(
            static_cast<std::int64_t>(plan.probe_min_s), static_cast<std::int64_t>(plan.probe_max_s)));
        if (probe_t > horizon_s) break;
        drain_events(probe_t);
        if (rep.success) return rep;

        world.advance_to(std::max(world.now(), probe_t));
        ecosim::Command cmd;
        cmd.kind = ecosim::CommandKind::StartCharge;
        cmd.user_id = attacker_id;
        cmd.station_id = plan.target_station;
        cmd.vin = own_vin;
        cmd.at_station = false;
        cmd.time_s = probe_t;
        auto res = world.submit_command(cmd);
        ++rep.attempts;

        switch (res.decision.outcome) {
            case ecosim::CmsDecision::Outcome::Denied:
                ++rep.denied;
                break;
            case ecosim::CmsDecision::Outcome::RateLimited:
                ++rep.rate_limited;
                break;
            case ecosim::CmsDecision::Outcome::Forwarded:
                if (res.evcs.kind == ecosim::EvcsOutcome::Kind::ChargingStarted) {
                    rep.success = true;
                    rep.success_time_s = probe_t;
                    return rep;
                }
                if (res.evcs.kind == ecosim::EvcsOutcome::Kind::Rejected) ++rep.rejected;
                // GraceEntered stays armed: a vehicle plugged in during the
                // window starts the attacker's session without another probe.
                break;
        }
    }
    drain_events(horizon_s);
    return rep;
}

} // namespace evcosim::botnet
