#pragma once

#include <string>
#include <vector>

#include "evcosim/gridcore.hpp"

namespace evcosim::dynamics {

// Calibrated integral gain: strong secondary control whose windup during a
// sustained dip is what amplifies the rebound when an attack load drops out
// (see scripts/calibrate_dynamics.py for the tuning run).
inline constexpr double kDefaultAgcGain = 1.10;

// Synchronous machine reduced to a swing equation with a first-order droop
// governor and an integral frequency-restoration (AGC) term.  inertia_h_s and
// damping_d_pu are per-unit on the machine's own rating.  The defaults are
// calibrated jointly (scripts/calibrate_dynamics.py): nearly flat primary
// droop with AGC carrying regulation, so a 40 MW surge on an 800 MW system
// moves frequency far enough to exercise the protection scheme.
struct MachineParams {
    int bus = 0;
    double inertia_h_s = 2.9;
    double damping_d_pu = 1.0;
    double droop_r_pu = 5.0;
    double governor_tc_s = 0.5;
    double p_rated_mw = 0.0;
    // d(Pref)/dt = -agc_gain * rated * speed deviation; 1/s on machine base.
    double agc_gain = kDefaultAgcGain;
};

// One machine per in-service generator, rated at its p_max.
std::vector<MachineParams> default_machines(const gridcore::GridCase& c);

struct ProtectionConfig {
    bool enabled = true;
    double ufls_threshold_hz = 59.3;
    double ufls_shed_fraction = 0.05; // of current total load, per violation
    double ufls_lockout_s = 5.0;
    double of_trip_threshold_hz = 61.8;
};

struct ProtectionState {
    double ufls_lockout_until_s = -1e18;
    bool of_armed = true; // re-arms when frequency returns below the trip level
};

struct ProtectionAction {
    enum class Kind { Shed, GenTrip };
    Kind kind = Kind::Shed;
    double magnitude_mw = 0.0;
    int machine = -1; // index into the machine list for GenTrip
};

// Relay pass run once per sample.  UFLS sheds a fixed fraction of the current
// total load and then locks out; over-frequency trips the largest in-service
// machine once per excursion above the threshold.
std::vector<ProtectionAction> protection_step(double freq_hz, double t_s,
                                              const ProtectionConfig& cfg,
                                              ProtectionState& state,
                                              double total_load_mw,
                                              const std::vector<MachineParams>& machines,
                                              const std::vector<bool>& in_service);

// Step change in bus load; negative delta (or an explicit Off pairing) lowers
// it.  Times are snapped up to the integration grid.
struct LoadEvent {
    double time_s = 0.0;
    int bus = 0;
    double delta_mw = 0.0;
};

struct TraceSample {
    double t_s = 0.0;
    double freq_hz = 60.0;
    double total_load_mw = 0.0;
    double total_gen_mw = 0.0;
};

enum class TraceEventKind { AttackOn, AttackOff, Shed, GenTrip };

std::string trace_event_kind_name(TraceEventKind k);

struct TraceEvent {
    double t_s = 0.0;
    TraceEventKind kind = TraceEventKind::AttackOn;
    double magnitude_mw = 0.0;
    std::string detail;
};

enum class TraceOutcome { Completed, NearBlackout };

struct FrequencyTrace {
    double dt_s = 0.0;
    std::vector<TraceSample> samples; // uniform grid, includes t = 0
    std::vector<TraceEvent> events;   // times lie on the sample grid
    TraceOutcome outcome = TraceOutcome::Completed;

    double min_freq_hz() const;
    double max_freq_hz() const;
    // Downward (upward) grid crossings of the given threshold.
    int dips_below(double freq_hz) const;
    int rises_above(double freq_hz) const;
};

// "t_s,freq_hz,total_load_mw,total_gen_mw" rows.
std::string trace_csv(const FrequencyTrace& t);
// "t_s,kind,magnitude_mw,detail" rows.
std::string events_csv(const FrequencyTrace& t);

// Uniform-frequency transient simulation.  Electrical power is the current
// total load, allocated to machines in proportion to rating; integration is
// fixed-step RK4.  Stops early with NearBlackout when remaining capacity no
// longer covers the remaining load.  Throws UnstableIntegration when the
// speed deviation leaves +-10%.
FrequencyTrace run_transient(const gridcore::GridCase& c,
                             std::vector<MachineParams> machines,
                             const ProtectionConfig& protection,
                             std::vector<LoadEvent> load_events,
                             double duration_s, double dt_s = 0.01);

} // namespace evcosim::dynamics
