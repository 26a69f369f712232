#include "evcosim/ecosim.hpp"

#include "evcosim/error.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <queue>
#include <set>
#include <unordered_set>

namespace evcosim::ecosim {

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::S1: return "S1";
        case Phase::S2: return "S2";
        case Phase::S3: return "S3";
        case Phase::S4: return "S4";
    }
    return "?";
}

const char* classification_name(Classification c) {
    switch (c) {
        case Classification::Legal: return "legal";
        case Classification::HijackSuspect: return "hijack_suspect";
        case Classification::OtherIllegal: return "other_illegal";
    }
    return "?";
}

Classification classify_tuple(const EcosystemTuple& t) {
    const bool aligned = t.cms == t.evcs && t.evcs == t.app;
    const bool quiescent = t.cms == Phase::S1 &&
                           (t.evcs == Phase::S1 || t.evcs == Phase::S2) &&
                           (t.app == Phase::S1 || t.app == Phase::S2);
    if (aligned || quiescent) return Classification::Legal;
    if (t.cms == Phase::S4 && t.evcs == Phase::S4 &&
        (t.app == Phase::S1 || t.app == Phase::S2))
        return Classification::HijackSuspect;
    return Classification::OtherIllegal;
}

const char* deny_reason_name(DenyReason r) {
    switch (r) {
        case DenyReason::None: return "none";
        case DenyReason::UnknownUser: return "unknown_user";
        case DenyReason::UnknownStation: return "unknown_station";
        case DenyReason::StationCodeMismatch: return "station_code_mismatch";
        case DenyReason::ProximityFailed: return "proximity_failed";
        case DenyReason::OwnershipMismatch: return "ownership_mismatch";
        case DenyReason::NotInitiator: return "not_initiator";
    }
    return "?";
}

const char* evcs_outcome_name(EvcsOutcome::Kind k) {
    switch (k) {
        case EvcsOutcome::Kind::ChargingStarted: return "charging_started";
        case EvcsOutcome::Kind::GraceEntered: return "grace_entered";
        case EvcsOutcome::Kind::GraceCancelled: return "grace_cancelled";
        case EvcsOutcome::Kind::ChargingStopped: return "charging_stopped";
        case EvcsOutcome::Kind::Rejected: return "rejected";
    }
    return "?";
}

CmsDecision cms_handle_command(Registry& reg, const PolicyConfig& policy, const Command& cmd) {
    // The limiter sees every arrival, authorized or not: a flood of failing
    // requests must still exhaust the sender's quota.
    if (policy.rate_limit_count > 0) {
        auto& times = reg.command_times[cmd.user_id];
        const double horizon = cmd.time_s - policy.rate_limit_window_s;
        while (!times.empty() && times.front() <= horizon) times.pop_front();
        times.push_back(cmd.time_s);
        if (static_cast<int>(times.size()) > policy.rate_limit_count)
            return {CmsDecision::Outcome::RateLimited, DenyReason::None};
    }

    auto user_it = reg.users.find(cmd.user_id);
    if (user_it == reg.users.end())
        return {CmsDecision::Outcome::Denied, DenyReason::UnknownUser};
    auto st_it = reg.stations.find(cmd.station_id);
    if (st_it == reg.stations.end())
        return {CmsDecision::Outcome::Denied, DenyReason::UnknownStation};
    const UserAccount& user = user_it->second;
    const StationRecord& st = st_it->second;

    if (policy.require_station_code && cmd.station_code != st.pairing_code)
        return {CmsDecision::Outcome::Denied, DenyReason::StationCodeMismatch};
    if (policy.proximity_check && !cmd.at_station)
        return {CmsDecision::Outcome::Denied, DenyReason::ProximityFailed};

    if (cmd.kind == CommandKind::StartCharge && policy.verify_ownership) {
        const bool owned = std::find(user.owned_vins.begin(), user.owned_vins.end(), cmd.vin) !=
                           user.owned_vins.end();
        if (!owned || cmd.vin != st.connected_vin)
            return {CmsDecision::Outcome::Denied, DenyReason::OwnershipMismatch};
    }
    if (cmd.kind == CommandKind::StopCharge && policy.authorize_critical) {
        if (st.session_user != cmd.user_id || st.session_user.empty())
            return {CmsDecision::Outcome::Denied, DenyReason::NotInitiator};
    }
    return {CmsDecision::Outcome::Forwarded, DenyReason::None};
}

EvcsOutcome evcs_apply_command(Registry& reg, const PolicyConfig& policy, const Command& cmd) {
    auto st_it = reg.stations.find(cmd.station_id);
    if (st_it == reg.stations.end()) throw Error(Errc::UnknownStation, cmd.station_id);
    StationRecord& st = st_it->second;

    if (cmd.kind == CommandKind::StartCharge) {
        switch (st.evcs_state) {
            case Phase::S1:
                st.evcs_state = Phase::S3;
                st.session_user = cmd.user_id;
                st.grace_deadline_s = cmd.time_s + policy.grace_period_s;
                return {EvcsOutcome::Kind::GraceEntered, EvcsOutcome::Reject::None};
            case Phase::S2: {
                st.evcs_state = Phase::S4;
                st.session_user = cmd.user_id;
                SessionRecord s;
                s.id = "s" + std::to_string(reg.session_counter++);
                s.user_id = cmd.user_id;
                s.station_id = st.id;
                s.vin = st.connected_vin; // the vehicle actually charged
                s.started_s = cmd.time_s;
                reg.sessions.push_back(std::move(s));
                return {EvcsOutcome::Kind::ChargingStarted, EvcsOutcome::Reject::None};
            }
            case Phase::S3:
                return {EvcsOutcome::Kind::Rejected, EvcsOutcome::Reject::StartPending};
            case Phase::S4:
                return {EvcsOutcome::Kind::Rejected, EvcsOutcome::Reject::AlreadyCharging};
        }
    } else {
        switch (st.evcs_state) {
            case Phase::S3:
                st.evcs_state = Phase::S1;
                st.session_user.clear();
                st.grace_deadline_s = -1.0;
                return {EvcsOutcome::Kind::GraceCancelled, EvcsOutcome::Reject::None};
            case Phase::S4: {
                st.evcs_state = Phase::S2;
                st.session_user.clear();
                for (auto it = reg.sessions.rbegin(); it != reg.sessions.rend(); ++it)
                    if (it->station_id == st.id && it->stopped_s < 0) {
                        it->stopped_s = cmd.time_s;
                        break;
                    }
                return {EvcsOutcome::Kind::ChargingStopped, EvcsOutcome::Reject::None};
            }
            default:
                return {EvcsOutcome::Kind::Rejected, EvcsOutcome::Reject::NotCharging};
        }
    }
    return {EvcsOutcome::Kind::Rejected, EvcsOutcome::Reject::None};
}

std::string audit_csv(const std::vector<AuditRow>& rows) {
    std::string out = "time_s,entity,event,tuple_cms,tuple_evcs,tuple_app,classification\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.3f", r.time_s);
        out += buf;
        out += ',' + r.entity + ',' + r.event + ',';
        out += phase_name(r.tuple.cms);
        out += ',';
        out += phase_name(r.tuple.evcs);
        out += ',';
        out += phase_name(r.tuple.app);
        out += ',';
        out += classification_name(r.classification);
        out += '\n';
    }
    return out;
}

World::World(PolicyConfig policy, bool record_audit)
    : policy_(policy), record_audit_(record_audit) {}

void World::add_user(const UserAccount& user) {
    if (user.id.empty()) throw Error(Errc::BadArguments, "empty user id");
    if (!reg_.users.emplace(user.id, user).second)
        throw Error(Errc::DuplicateId, "user " + user.id);
    apps_.emplace(user.id, AppState{});
}

void World::add_station(const StationRecord& station) {
    if (station.id.empty()) throw Error(Errc::BadArguments, "empty station id");
    if (!reg_.stations.emplace(station.id, station).second)
        throw Error(Errc::DuplicateId, "station " + station.id);
}

StationRecord& World::station_or_throw(const std::string& id) {
    auto it = reg_.stations.find(id);
    if (it == reg_.stations.end()) throw Error(Errc::UnknownStation, id);
    return it->second;
}

const UserAccount& World::user_or_throw(const std::string& id) const {
    auto it = reg_.users.find(id);
    if (it == reg_.users.end()) throw Error(Errc::UnknownUser, id);
    return it->second;
}

void World::advance_to(double time_s) {
    if (time_s < clock_) throw Error(Errc::BadArguments, "time moved backward");
    clock_ = time_s;
    settle_graces();
}

void World::settle_graces() {
    // Expire in deadline order so audit timestamps are monotonic.
    for (;;) {
        StationRecord* due = nullptr;
        for (auto& [id, st] : reg_.stations) {
            if (st.evcs_state != Phase::S3 || st.grace_deadline_s > clock_) continue;
            if (!due || st.grace_deadline_s < due->grace_deadline_s ||
                (st.grace_deadline_s == due->grace_deadline_s && st.id < due->id))
                due = &st;
        }
        if (!due) return;
        expire_grace(*due, due->grace_deadline_s);
    }
}

void World::expire_grace(StationRecord& st, double at_s) {
    const std::string initiator = st.session_user;
    st.evcs_state = Phase::S1;
    st.cms_state = Phase::S1;
    st.session_user.clear();
    st.grace_deadline_s = -1.0;
    if (!initiator.empty()) {
        auto it = apps_.find(initiator);
        if (it != apps_.end() && it->second.phase == Phase::S3 && it->second.station == st.id)
            app_to(initiator, Phase::S2, "");
    }
    record(st, at_s, "grace_expired");
}

void World::login(const std::string& user_id) {
    user_or_throw(user_id);
    auto& app = apps_.at(user_id);
    if (app.phase == Phase::S1) app = {Phase::S2, ""};
}

void World::logout(const std::string& user_id) {
    user_or_throw(user_id);
    apps_.at(user_id) = {Phase::S1, ""};
}

void World::app_to(const std::string& user_id, Phase phase, const std::string& station) {
    apps_.at(user_id) = {phase, station};
}

World::CommandResult World::submit_command(const Command& cmd) {
    advance_to(std::max(cmd.time_s, clock_));
    if (cmd.time_s < clock_) throw Error(Errc::BadArguments, "command in the past");
    user_or_throw(cmd.user_id);
    if (apps_.at(cmd.user_id).phase == Phase::S1)
        throw Error(Errc::BadArguments, "user " + cmd.user_id + " not signed in");

    CommandResult res;
    res.decision = cms_handle_command(reg_, policy_, cmd);
    const char* verb = cmd.kind == CommandKind::StartCharge ? "start" : "stop";

    if (res.decision.outcome != CmsDecision::Outcome::Forwarded) {
        // Denied and rate-limited commands never reach the station; nothing
        // changes but the audit trail (and the limiter window).
        auto it = reg_.stations.find(cmd.station_id);
        if (it != reg_.stations.end()) {
            std::string what = res.decision.outcome == CmsDecision::Outcome::RateLimited
                                   ? "rate_limited"
                                   : std::string("denied:") + deny_reason_name(res.decision.reason);
            record(it->second, cmd.time_s, std::string(verb) + " " + cmd.user_id + " " + what);
        }
        return res;
    }

    StationRecord& st = station_or_throw(cmd.station_id);
    res.evcs = evcs_apply_command(reg_, policy_, cmd);
    auto& app = apps_.at(cmd.user_id);
    switch (res.evcs.kind) {
        case EvcsOutcome::Kind::ChargingStarted:
            st.cms_state = Phase::S4;
            app_to(cmd.user_id, Phase::S4, st.id);
            break;
        case EvcsOutcome::Kind::GraceEntered:
            st.cms_state = Phase::S3;
            app_to(cmd.user_id, Phase::S3, st.id);
            break;
        case EvcsOutcome::Kind::GraceCancelled:
        case EvcsOutcome::Kind::ChargingStopped:
            // Only the stopping user gets a confirmation.  The original
            // initiator's app keeps showing a session that no longer exists,
            // which is exactly the inconsistency the tuples are meant to
            // catch when someone else kills a session.
            st.cms_state = Phase::S1;
            if (app.phase != Phase::S1) app_to(cmd.user_id, Phase::S2, "");
            break;
        case EvcsOutcome::Kind::Rejected:
            break;
    }
    std::string what = res.evcs.kind == EvcsOutcome::Kind::Rejected
                           ? std::string("rejected:") +
                                 (res.evcs.reject == EvcsOutcome::Reject::AlreadyCharging
                                      ? "already_charging"
                                      : res.evcs.reject == EvcsOutcome::Reject::StartPending
                                            ? "start_pending"
                                            : "not_charging")
                           : evcs_outcome_name(res.evcs.kind);
    record(st, cmd.time_s, std::string(verb) + " " + cmd.user_id + " " + what);
    return res;
}

void World::plug_vehicle(const std::string& station_id, const std::string& vin) {
    settle_graces();
    StationRecord& st = station_or_throw(station_id);
    const UserAccount* owner = nullptr;
    for (const auto& [id, u] : reg_.users)
        if (std::find(u.owned_vins.begin(), u.owned_vins.end(), vin) != u.owned_vins.end()) {
            owner = &u;
            break;
        }
    if (!owner) throw Error(Errc::UnknownVehicle, vin);
    for (const auto& [id, other] : reg_.stations)
        if (other.connected_vin == vin)
            throw Error(Errc::VehicleAlreadyConnected, vin + " at " + id);

    switch (st.evcs_state) {
        case Phase::S1:
            st.evcs_state = Phase::S2;
            st.connected_vin = vin;
            record(st, clock_, "plug " + vin);
            break;
        case Phase::S3: {
            // A vehicle arriving inside the grace window starts the waiting
            // session, whoever requested it.
            st.evcs_state = Phase::S4;
            st.cms_state = Phase::S4;
            st.connected_vin = vin;
            st.grace_deadline_s = -1.0;
            SessionRecord s;
            s.id = "s" + std::to_string(reg_.session_counter++);
            s.user_id = st.session_user;
            s.station_id = st.id;
            s.vin = vin;
            s.started_s = clock_;
            reg_.sessions.push_back(std::move(s));
            auto it = apps_.find(st.session_user);
            if (it != apps_.end() && it->second.phase == Phase::S3 && it->second.station == st.id)
                app_to(st.session_user, Phase::S4, st.id);
            record(st, clock_, "plug " + vin + " charging_started");
            break;
        }
        default:
            throw Error(Errc::VehicleAlreadyConnected, "station " + st.id + " occupied");
    }
}

void World::unplug_vehicle(const std::string& station_id) {
    settle_graces();
    StationRecord& st = station_or_throw(station_id);
    if (st.evcs_state != Phase::S2 && st.evcs_state != Phase::S4)
        throw Error(Errc::NoVehicleConnected, station_id);
    const std::string vin = st.connected_vin;

    if (st.evcs_state == Phase::S4) {
        for (auto it = reg_.sessions.rbegin(); it != reg_.sessions.rend(); ++it)
            if (it->station_id == st.id && it->stopped_s < 0) {
                it->stopped_s = clock_;
                break;
            }
        st.session_user.clear();
        st.cms_state = Phase::S1;
    }
    st.evcs_state = Phase::S1;
    st.connected_vin.clear();

    // Whoever drives off is standing at the unit; their own app view resets.
    for (const auto& [id, u] : reg_.users)
        if (std::find(u.owned_vins.begin(), u.owned_vins.end(), vin) != u.owned_vins.end()) {
            auto& app = apps_.at(id);
            if ((app.phase == Phase::S3 || app.phase == Phase::S4) && app.station == st.id)
                app_to(id, Phase::S2, "");
            break;
        }
    record(st, clock_, "unplug " + vin);
}

void World::restore_app_state(const std::string& user_id, Phase phase, const std::string& station) {
    user_or_throw(user_id);
    apps_.at(user_id) = {phase, station};
}

Phase World::app_phase(const std::string& user_id) const {
    auto it = apps_.find(user_id);
    if (it == apps_.end()) throw Error(Errc::UnknownUser, user_id);
    return it->second.phase;
}

const std::string& World::app_station(const std::string& user_id) const {
    auto it = apps_.find(user_id);
    if (it == apps_.end()) throw Error(Errc::UnknownUser, user_id);
    return it->second.station;
}

EcosystemTuple World::station_tuple(const std::string& station_id) const {
    auto it = reg_.stations.find(station_id);
    if (it == reg_.stations.end()) throw Error(Errc::UnknownStation, station_id);
    const StationRecord& st = it->second;

    // App column: the connected vehicle's owner when present, else the
    // designated watch user, else nobody (reads as signed out).
    std::string party;
    if (!st.connected_vin.empty()) {
        for (const auto& [id, u] : reg_.users)
            if (std::find(u.owned_vins.begin(), u.owned_vins.end(), st.connected_vin) !=
                u.owned_vins.end()) {
                party = id;
                break;
            }
    }
    if (party.empty()) party = watch_user_;
    Phase app = Phase::S1;
    if (!party.empty()) {
        auto ap = apps_.find(party);
        if (ap != apps_.end()) app = ap->second.phase;
    }
    return {st.cms_state, st.evcs_state, app};
}

void World::record(const StationRecord& st, double time_s, const std::string& event) {
    if (!record_audit_) return;
    EcosystemTuple t = station_tuple(st.id);
    audit_.push_back({time_s, st.id, event, t, classify_tuple(t)});
}

ClassificationCounts World::classification_counts() const {
    ClassificationCounts c;
    for (const auto& r : audit_) {
        if (r.classification == Classification::Legal) ++c.legal;
        else if (r.classification == Classification::HijackSuspect) ++c.hijack_suspect;
        else ++c.other_illegal;
    }
    return c;
}

bool ReachabilityReport::contains(const EcosystemTuple& t) const {
    return std::binary_search(tuples.begin(), tuples.end(), t);
}

std::size_t ReachabilityReport::illegal_count() const {
    std::size_t n = 0;
    for (const auto& t : tuples)
        if (classify_tuple(t) != Classification::Legal) ++n;
    return n;
}

namespace {

// Compact search state: everything the transition relation can read.
struct MicroState {
    struct St {
        std::uint8_t cms = 0, evcs = 0; // Phase - 1
        std::int8_t owner = -1;         // connected vehicle's owner index
        std::int8_t sess = -1;          // pending/active session initiator
    };
    struct Ap {
        std::uint8_t phase = 0;  // Phase - 1
        std::int8_t station = -1;
    };
    std::array<St, 2> st{};
    std::array<Ap, 3> ap{};

    std::uint64_t key(int n_users, int n_stations) const {
        std::uint64_t k = 0;
        for (int s = 0; s < n_stations; ++s) {
            k = k << 2 | st[s].cms;
            k = k << 2 | st[s].evcs;
            k = k << 2 | static_cast<std::uint64_t>(st[s].owner + 1);
            k = k << 2 | static_cast<std::uint64_t>(st[s].sess + 1);
        }
        for (int u = 0; u < n_users; ++u) {
            k = k << 2 | ap[u].phase;
            k = k << 2 | static_cast<std::uint64_t>(ap[u].station + 1);
        }
        return k;
    }
};

std::string user_name(int i) { return "u" + std::to_string(i); }
std::string vin_name(int i) { return "veh" + std::to_string(i); }
std::string station_name(int i) { return "st" + std::to_string(i); }
std::string code_name(int i) { return "code" + std::to_string(i); }

struct SearchContext {
    PolicyConfig policy;
    int n_users = 0;
    int n_stations = 0;
};

int user_index(const SearchContext& ctx, const std::string& id) {
    for (int i = 0; i < ctx.n_users; ++i)
        if (user_name(i) == id) return i;
    return -1;
}

} // namespace

ReachabilityReport enumerate_reachable(const PolicyConfig& policy, int n_users, int n_stations,
                                       int max_depth, std::size_t state_budget) {
    if (n_users < 1 || n_users > 3) throw Error(Errc::BadArguments, "n_users must be 1..3");
    if (n_stations < 1 || n_stations > 2) throw Error(Errc::BadArguments, "n_stations must be 1..2");
    if (max_depth < 0 || max_depth > 14) throw Error(Errc::BadArguments, "max_depth must be 0..14");

    SearchContext ctx{policy, n_users, n_stations};
    // Window-based rate limiting has no meaning in the time-abstract search.
    ctx.policy.rate_limit_count = 0;

    auto build = [&](const MicroState& m) {
        World w(ctx.policy, /*record_audit=*/false);
        for (int i = 0; i < n_users; ++i) {
            UserAccount u;
            u.id = user_name(i);
            u.owned_vins = {vin_name(i)};
            u.adversarial = i > 0;
            w.add_user(u);
        }
        for (int s = 0; s < n_stations; ++s) {
            StationRecord st;
            st.id = station_name(s);
            st.bus = 1;
            st.connector_kw = 11.0;
            st.pairing_code = code_name(s);
            w.add_station(st);
        }
        w.set_watch_user(user_name(0));
        Registry& reg = w.registry();
        for (int s = 0; s < n_stations; ++s) {
            StationRecord& st = reg.stations.at(station_name(s));
            st.cms_state = static_cast<Phase>(m.st[s].cms + 1);
            st.evcs_state = static_cast<Phase>(m.st[s].evcs + 1);
            if (m.st[s].owner >= 0) st.connected_vin = vin_name(m.st[s].owner);
            if (m.st[s].sess >= 0) st.session_user = user_name(m.st[s].sess);
            if (st.evcs_state == Phase::S3) st.grace_deadline_s = ctx.policy.grace_period_s;
        }
        for (int u = 0; u < n_users; ++u)
            w.restore_app_state(user_name(u), static_cast<Phase>(m.ap[u].phase + 1),
                                m.ap[u].station >= 0 ? station_name(m.ap[u].station) : "");
        return w;
    };

    auto extract = [&](const World& w) {
        MicroState m;
        const Registry& reg = w.registry();
        for (int s = 0; s < n_stations; ++s) {
            const StationRecord& st = reg.stations.at(station_name(s));
            m.st[s].cms = static_cast<std::uint8_t>(st.cms_state) - 1;
            m.st[s].evcs = static_cast<std::uint8_t>(st.evcs_state) - 1;
            m.st[s].owner = -1;
            if (!st.connected_vin.empty())
                for (int i = 0; i < n_users; ++i)
                    if (vin_name(i) == st.connected_vin) m.st[s].owner = static_cast<std::int8_t>(i);
            m.st[s].sess = static_cast<std::int8_t>(user_index(ctx, st.session_user));
        }
        for (int u = 0; u < n_users; ++u) {
            m.ap[u].phase = static_cast<std::uint8_t>(w.app_phase(user_name(u))) - 1;
            const std::string& target = w.app_station(user_name(u));
            m.ap[u].station = -1;
            for (int s = 0; s < n_stations; ++s)
                if (station_name(s) == target) m.ap[u].station = static_cast<std::int8_t>(s);
        }
        return m;
    };

    // Action alphabet, fixed order for determinism.  User 0 is physically
    // present at whichever station holds their vehicle; everyone acts
    // remotely otherwise.  Returns false when the action's guard fails.
    auto apply = [&](const MicroState& m, int action, MicroState& out) -> bool {
        const int n_cmd = 4; // plug, unplug, start, stop
        int a = action;
        if (a < n_users) { // login
            int u = a;
            if (m.ap[u].phase != 0) return false;
            World w = build(m);
            w.login(user_name(u));
            out = extract(w);
            return true;
        }
        a -= n_users;
        if (a < n_users * n_stations * n_cmd) {
            int u = a / (n_stations * n_cmd);
            int rest = a % (n_stations * n_cmd);
            int s = rest / n_cmd;
            int what = rest % n_cmd;
            const MicroState::St& st = m.st[s];

            switch (what) {
                case 0: { // plug own vehicle
                    for (int k = 0; k < n_stations; ++k)
                        if (m.st[k].owner == u) return false;
                    if (st.evcs != 0 && st.evcs != 2) return false; // S1 or S3
                    World w = build(m);
                    w.plug_vehicle(station_name(s), vin_name(u));
                    out = extract(w);
                    return true;
                }
                case 1: { // unplug own vehicle
                    if (st.owner != u) return false;
                    if (st.evcs != 1 && st.evcs != 3) return false; // S2 or S4
                    World w = build(m);
                    w.unplug_vehicle(station_name(s));
                    out = extract(w);
                    return true;
                }
                case 2:   // start command
                case 3: { // stop command
                    const bool is_start = what == 2;
                    if (is_start && m.ap[u].phase != 1) return false;            // app browsing
                    if (!is_start && m.ap[u].phase != 1 && m.ap[u].phase != 3) return false;
                    Command cmd;
                    cmd.kind = is_start ? CommandKind::StartCharge : CommandKind::StopCharge;
                    cmd.user_id = user_name(u);
                    cmd.station_id = station_name(s);
                    // Strongest available claim: the connected vehicle's vin
                    // if known, else the sender's own.
                    cmd.vin = st.owner >= 0 ? vin_name(st.owner) : vin_name(u);
                    cmd.at_station = st.owner == u;
                    cmd.station_code = cmd.at_station ? code_name(s) : "";
                    cmd.time_s = 0.0;
                    World w = build(m);
                    w.submit_command(cmd);
                    out = extract(w);
                    return true;
                }
            }
            return false;
        }
        a -= n_users * n_stations * n_cmd;
        { // grace expiry
            int s = a;
            if (m.st[s].evcs != 2) return false; // S3
            World w = build(m);
            w.advance_to(ctx.policy.grace_period_s);
            out = extract(w);
            return true;
        }
    };

    const int n_actions = n_users + n_users * n_stations * 4 + n_stations;

    ReachabilityReport rep;
    std::set<EcosystemTuple> tuples;
    std::unordered_set<std::uint64_t> visited;
    std::queue<std::pair<MicroState, int>> frontier;

    auto observe = [&](const MicroState& m) {
        // The app column follows the station's legitimate party, mirroring
        // World::station_tuple: vehicle owner if present, else user 0.
        for (int s = 0; s < n_stations; ++s) {
            int party = m.st[s].owner >= 0 ? m.st[s].owner : 0;
            tuples.insert({static_cast<Phase>(m.st[s].cms + 1),
                           static_cast<Phase>(m.st[s].evcs + 1),
                           static_cast<Phase>(m.ap[party].phase + 1)});
        }
    };

    MicroState init;
    visited.insert(init.key(n_users, n_stations));
    observe(init);
    frontier.push({init, 0});

    while (!frontier.empty()) {
        auto [m, depth] = frontier.front();
        frontier.pop();
        rep.max_depth_reached = std::max(rep.max_depth_reached, depth);
        if (depth >= max_depth) continue;
        for (int a = 0; a < n_actions; ++a) {
            MicroState next;
            if (!apply(m, a, next)) continue;
            observe(next);
            if (visited.insert(next.key(n_users, n_stations)).second) {
                if (visited.size() > state_budget)
                    throw Error(Errc::BudgetExceeded,
                                "reachability exceeded " + std::to_string(state_budget) + " states");
                frontier.push({next, depth + 1});
            }
        }
    }

    rep.states_explored = visited.size();
    rep.tuples.assign(tuples.begin(), tuples.end());
    return rep;
}

} // namespace evcosim::ecosim
