#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

namespace evcosim::ecosim {

// Every entity class walks the same four-phase lifecycle; what a phase means
// depends on the entity:
//   app   S1 signed out, S2 station discovery, S3 request pending, S4 session view
//   cms   S1 idle, S2 request received, S3 command relayed, S4 session active
//   evcs  S1 available, S2 plugged idle, S3 start pending (grace), S4 charging
// CMS request handling is synchronous here, so S2 is never observable from
// outside a command cycle; it remains part of the vocabulary.
enum class Phase : std::uint8_t { S1 = 1, S2, S3, S4 };

const char* phase_name(Phase p);

// Joint (cms, evcs, app) snapshot for one station, where the app column is
// the station's legitimate party: the account owning the connected vehicle
// when one is present, otherwise the designated watch user.
struct EcosystemTuple {
    Phase cms = Phase::S1;
    Phase evcs = Phase::S1;
    Phase app = Phase::S1;

    auto operator<=>(const EcosystemTuple&) const = default;
};

enum class Classification { Legal, HijackSuspect, OtherIllegal };

const char* classification_name(Classification c);

// Legal: all three aligned, or an idle CMS with the station and app no
// further along than plugged/browsing.  A charging station whose session is
// active while the legitimate party's app never left browsing is the
// session-hijack signature; everything else is some other inconsistency.
Classification classify_tuple(const EcosystemTuple& t);

struct UserAccount {
    std::string id;
    std::vector<std::string> owned_vins;
    // Label used by attack tooling and reporting only.  Nothing on the CMS
    // decision path ever reads it: the backend cannot tell bots apart.
    bool adversarial = false;
};

struct StationRecord {
    std::string id;
    int bus = 0;
    double connector_kw = 0.0;
    // Code printed on the unit, readable only in person.
    std::string pairing_code;

    Phase cms_state = Phase::S1;
    Phase evcs_state = Phase::S1;
    std::string connected_vin;     // empty = no vehicle
    std::string session_user;      // initiator of the pending/active session
    double grace_deadline_s = -1.0; // meaningful while evcs_state == S3
};

struct SessionRecord {
    std::string id;
    std::string user_id;
    std::string station_id;
    std::string vin;
    double started_s = 0.0;
    double stopped_s = -1.0; // -1 while running
};

struct PolicyConfig {
    bool verify_ownership = false;
    bool authorize_critical = false;
    bool require_station_code = false;
    bool proximity_check = false;
    // 0 disables the limiter; otherwise at most this many commands per user
    // within any sliding window of the given width (rejected attempts count).
    int rate_limit_count = 0;
    double rate_limit_window_s = 60.0;
    double grace_period_s = 300.0;
};

enum class CommandKind { StartCharge, StopCharge };

struct Command {
    CommandKind kind = CommandKind::StartCharge;
    std::string user_id;
    std::string station_id;
    std::string vin;          // vehicle the sender claims to act for
    std::string station_code; // physically read pairing code, if any
    bool at_station = false;  // sender's co-location assertion
    double time_s = 0.0;
};

struct Registry {
    std::map<std::string, UserAccount> users;
    std::map<std::string, StationRecord> stations;
    std::vector<SessionRecord> sessions;
    // Sliding-window limiter state, kept only while the limiter is enabled.
    std::map<std::string, std::deque<double>> command_times;
    int session_counter = 0;
};

enum class DenyReason {
    None,
    UnknownUser,
    UnknownStation,
    StationCodeMismatch,
    ProximityFailed,
    OwnershipMismatch,
    NotInitiator,
};

const char* deny_reason_name(DenyReason r);

struct CmsDecision {
    enum class Outcome { Forwarded, Denied, RateLimited };
    Outcome outcome = Outcome::Forwarded;
    DenyReason reason = DenyReason::None;
};

// Backend policy gate.  Checks run in a fixed order (rate limit, identity,
// station code, proximity, ownership for starts, initiator for stops); the
// first failure wins.  With every flag off only identity is checked, which
// is the vulnerable configuration under study.
CmsDecision cms_handle_command(Registry& reg, const PolicyConfig& policy, const Command& cmd);

struct EvcsOutcome {
    enum class Kind { ChargingStarted, GraceEntered, GraceCancelled, ChargingStopped, Rejected };
    enum class Reject { None, AlreadyCharging, StartPending, NotCharging };
    Kind kind = Kind::Rejected;
    Reject reject = Reject::None;
};

const char* evcs_outcome_name(EvcsOutcome::Kind k);

// Station-side execution of a forwarded command.  A start on an empty
// station arms the grace timer instead of failing: the charger waits
// grace_period_s for a vehicle, and a plug-in during that window starts the
// session for whoever sent the remote start.
EvcsOutcome evcs_apply_command(Registry& reg, const PolicyConfig& policy, const Command& cmd);

struct AuditRow {
    double time_s = 0.0;
    std::string entity; // station id
    std::string event;
    EcosystemTuple tuple;
    Classification classification = Classification::Legal;
};

std::string audit_csv(const std::vector<AuditRow>& rows);

struct ClassificationCounts {
    std::size_t legal = 0;
    std::size_t hijack_suspect = 0;
    std::size_t other_illegal = 0;
};

// One ecosystem instance: registry plus the per-user app projections and the
// clock.  All mutations are synchronous; each station-scoped event appends
// one audit row with the settled tuple.
class World {
public:
    explicit World(PolicyConfig policy, bool record_audit = true);

    void add_user(const UserAccount& user);
    void add_station(const StationRecord& station);

    // Moves time forward (never backward) and fires due grace expiries in
    // deadline order; a station reverts to available exactly at its deadline.
    void advance_to(double time_s);
    double now() const { return clock_; }

    void login(const std::string& user_id);
    void logout(const std::string& user_id);

    // Full synchronous cycle: CMS gate, station execution, initiator app
    // update.  Command time must not precede the world clock.
    struct CommandResult {
        CmsDecision decision;
        EvcsOutcome evcs; // meaningful when decision.outcome == Forwarded
    };
    CommandResult submit_command(const Command& cmd);

    void plug_vehicle(const std::string& station_id, const std::string& vin);
    void unplug_vehicle(const std::string& station_id);

    Phase app_phase(const std::string& user_id) const;
    const std::string& app_station(const std::string& user_id) const;
    EcosystemTuple station_tuple(const std::string& station_id) const;

    // Search support: forces one app projection when a world is rebuilt from
    // an encoded state.  Not part of the simulation surface.
    void restore_app_state(const std::string& user_id, Phase phase, const std::string& station);

    // Designated legitimate party used for the app column when a station has
    // no connected vehicle.  Empty means "nobody": the column reads S1.
    void set_watch_user(const std::string& user_id) { watch_user_ = user_id; }

    const Registry& registry() const { return reg_; }
    Registry& registry() { return reg_; }
    const PolicyConfig& policy() const { return policy_; }
    const std::vector<AuditRow>& audit() const { return audit_; }
    ClassificationCounts classification_counts() const;

private:
    struct AppState {
        Phase phase = Phase::S1;
        std::string station; // request/session target while S3 or S4
    };

    StationRecord& station_or_throw(const std::string& id);
    const UserAccount& user_or_throw(const std::string& id) const;
    void settle_graces();
    void expire_grace(StationRecord& st, double at_s);
    void record(const StationRecord& st, double time_s, const std::string& event);
    void app_to(const std::string& user_id, Phase phase, const std::string& station);

    PolicyConfig policy_;
    Registry reg_;
    std::map<std::string, AppState> apps_;
    std::vector<AuditRow> audit_;
    double clock_ = 0.0;
    bool record_audit_ = true;
    std::string watch_user_;
};

struct ReachabilityReport {
    std::vector<EcosystemTuple> tuples; // sorted, deduplicated
    std::size_t states_explored = 0;
    int max_depth_reached = 0;

    bool contains(const EcosystemTuple& t) const;
    std::size_t illegal_count() const;
};

// Exhaustive interleaving search over the closed ecosystem: user 0 is the
// watched legitimate owner (physically present, knows pairing codes), the
// rest are remote accounts; every user owns one vehicle.  Actions are logins,
// plug/unplug, start/stop commands and grace expiries, applied through the
// same World transitions the simulator uses.  Time-window rate limiting has
// no meaning in the time-abstract search and is ignored.  Bounds: at most 3
// users, 2 stations, depth 14; exceeding state_budget distinct states throws
// BudgetExceeded.
ReachabilityReport enumerate_reachable(const PolicyConfig& policy, int n_users, int n_stations,
                                       int max_depth, std::size_t state_budget = 2000000);

} // namespace evcosim::ecosim
