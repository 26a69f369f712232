#pragma once

#include "evcosim/ecosim.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace evcosim::botnet {

// Station status as visible to an outside observer.  The public listing only
// distinguishes available from in-use; whether an "available" unit actually
// has a vehicle parked on the connector takes a probe request to find out.
enum class SeenStatus { Available, PluggedIdle, InUse };

const char* seen_status_name(SeenStatus s);

struct ReconObservation {
    std::string station_id;
    double time_s = 0.0;
    SeenStatus status = SeenStatus::Available;
    // Set when this tick saw a public-status change since the previous one.
    std::optional<std::pair<SeenStatus, SeenStatus>> transition;
    bool probed = false; // an in-use -> available flip was probed this tick
};

// Ground-truth occupancy timeline replayed between poll ticks.  Start/stop
// act through the owner's account with truthful physical context.
struct OccupancyEvent {
    enum class Kind { Plug, Unplug, Start, Stop };
    double time_s = 0.0;
    Kind kind = Kind::Plug;
    std::string station_id;
    std::string vin; // required for Plug; resolved from the station otherwise
};

// Polls every station each tick (first tick one interval in).  A station
// flipping in-use -> available is immediately probed: a start request
// answered by an instant stop, which nets out to no state change but reveals
// a parked vehicle.  The probe is therefore modeled as a refined read.
std::vector<ReconObservation> recon_poll(ecosim::World& world,
                                         const std::vector<std::string>& station_ids,
                                         double poll_interval_s, double horizon_s,
                                         const std::vector<OccupancyEvent>& timeline = {});

struct ArrivalModel {
    std::array<double, 24> weekday{};
    std::array<double, 24> weekend{};
};

// Fleet-wide plug-in expectations for a metropolitan station population:
// 400 connections in the 10:00 weekday peak hour, 300 on weekends.
ArrivalModel default_arrival_model();

struct AttackWindow {
    int start_hour = 0;
    int end_hour = 0; // exclusive, may exceed 24 when the window wraps
    double expected_connected = 0.0;
};

// Ranks candidate windows by the expected number of simultaneously connected
// (plugged, possibly idle) vehicles: arrivals during the preceding
// dwell_hours are still on the connector.  Zero-expectation windows are
// dropped; ties rank the earlier start hour first.
std::vector<AttackWindow> estimate_attack_windows(const std::array<double, 24>& hourly_arrivals,
                                                  int dwell_hours = 2);
// Empirical variant over reconnaissance output; throws EmptyInput when there
// is nothing to estimate from.
std::vector<AttackWindow> estimate_attack_windows(const std::vector<ReconObservation>& observations,
                                                  int dwell_hours = 2);

struct HijackPlan {
    std::string target_station;
    double probe_min_s = 180.0;
    double probe_max_s = 240.0;
};

struct MassChargePlan {
    std::map<int, double> bus_mw;
    double start_s = 0.0;
};

struct OscillatoryPlan {
    std::vector<int> buses;
    double start_s = 15.0;
    double on_duration_s = 10.0;
    double cycle_period_s = 10.0; // ON-to-ON spacing; equal to on_duration_s
                                  // means continuous alternation
    double initial_mw_per_bus = 20.0;
    double increment_mw_per_bus = 5.5;
    int cycles = 1;
};

struct TargetedTripPlan {
    std::map<int, double> bus_mw;
};

// Oscillation whose OFF phase discharges vehicle batteries back into the
// grid: each OFF adds -discharge_mw_per_bus until the next ON; after the
// final OFF the discharge holds for one on_duration_s, then everything
// returns to zero.
struct V2GAmplifiedPlan {
    OscillatoryPlan oscillation;
    double discharge_mw_per_bus = 0.0;
};

using AttackPlan =
    std::variant<HijackPlan, MassChargePlan, OscillatoryPlan, TargetedTripPlan, V2GAmplifiedPlan>;

struct LoadEvent {
    double time_s = 0.0;
    int bus = 0;
    double delta_mw = 0.0;
};

// Cycle k switches ON at start_s + k*cycle_period_s adding
// initial + k*increment MW on every listed bus, and OFF on_duration_s later
// removing exactly what it added, so the net load change over the full
// schedule is zero on every bus.
std::vector<LoadEvent> oscillatory_schedule(const OscillatoryPlan& plan);

std::vector<LoadEvent> v2g_schedule(const V2GAmplifiedPlan& plan);

// Time-domain events for any plan; hijack and targeted-trip plans shape no
// bus load directly and yield an empty schedule.
std::vector<LoadEvent> attack_schedule(const AttackPlan& plan);

struct HijackReport {
    int attempts = 0;
    bool success = false;
    double success_time_s = -1.0;
    int denied = 0;
    int rate_limited = 0;
    int rejected = 0;
};

// Runs the probing loop against the live world: start requests spaced by a
// seeded uniform integer draw from [probe_min_s, probe_max_s], interleaved
// with the ground-truth timeline, until the attacker owns a charging session
// or the horizon passes.  Every message goes through the same CMS validation
// path as legitimate traffic.
HijackReport execute_hijack(ecosim::World& world, const HijackPlan& plan,
                            const std::string& attacker_id, double horizon_s, std::uint64_t seed,
                            const std::vector<OccupancyEvent>& timeline = {});

} // namespace evcosim::botnet
