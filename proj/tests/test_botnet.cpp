#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evcosim/botnet.hpp"
#include "evcosim/error.hpp"

#include <cmath>
#include <map>
#include <random>

using namespace evcosim;
using namespace evcosim::botnet;
using ecosim::Phase;

namespace {

ecosim::World recon_world(ecosim::PolicyConfig policy = {}) {
    ecosim::World w(policy);
    ecosim::UserAccount owner;
    owner.id = "drv1";
    owner.owned_vins = {"veh1"};
    ecosim::UserAccount bot;
    bot.id = "bot1";
    bot.owned_vins = {"botveh"};
    bot.adversarial = true;
    w.add_user(owner);
    w.add_user(bot);
    for (const char* id : {"stA", "stB"}) {
        ecosim::StationRecord st;
        st.id = id;
        st.bus = 4;
        st.connector_kw = 11.0;
        st.pairing_code = std::string("pc-") + id;
        w.add_station(st);
    }
    w.set_watch_user("drv1");
    return w;
}

} // namespace

TEST_CASE("poll tick arithmetic: two stations over an hour at five-minute ticks") {
    auto w = recon_world();
    auto obs = recon_poll(w, {"stA", "stB"}, 300.0, 3600.0);
    CHECK(obs.size() == 24); // 2 stations x 12 ticks
    for (const auto& o : obs) {
        CHECK(o.status == SeenStatus::Available);
        CHECK_FALSE(o.transition.has_value());
        CHECK_FALSE(o.probed);
    }
}

TEST_CASE("a station charging the whole horizon streams in-use and is never probed") {
    auto w = recon_world();
    std::vector<OccupancyEvent> timeline = {
        {1.0, OccupancyEvent::Kind::Plug, "stA", "veh1"},
        {2.0, OccupancyEvent::Kind::Start, "stA", ""},
    };
    auto obs = recon_poll(w, {"stA"}, 300.0, 3600.0, timeline);
    CHECK(obs.size() == 12);
    for (const auto& o : obs) {
        CHECK(o.status == SeenStatus::InUse);
        CHECK_FALSE(o.probed);
    }
}

TEST_CASE("session end with the car left on the connector is probed as plugged-idle") {
    auto w = recon_world();
    std::vector<OccupancyEvent> timeline = {
        {1.0, OccupancyEvent::Kind::Plug, "stA", "veh1"},
        {2.0, OccupancyEvent::Kind::Start, "stA", ""},
        {3500.0, OccupancyEvent::Kind::Stop, "stA", ""},
    };
    auto obs = recon_poll(w, {"stA"}, 600.0, 7200.0, timeline);
    REQUIRE(obs.size() == 12);
    // Ticks at 600..3000 see in-use; the 3600 tick observes the flip.
    CHECK(obs[4].status == SeenStatus::InUse);
    CHECK(obs[5].time_s == 3600.0);
    CHECK(obs[5].probed);
    CHECK(obs[5].status == SeenStatus::PluggedIdle);
    REQUIRE(obs[5].transition.has_value());
    CHECK(obs[5].transition->first == SeenStatus::InUse);
    CHECK(obs[5].transition->second == SeenStatus::Available);
    // Later ticks go back to unprobed available: the public page can't tell.
    CHECK(obs[6].status == SeenStatus::Available);
    CHECK_FALSE(obs[6].probed);
}

TEST_CASE("window estimation matches a brute-force presence convolution") {
    std::mt19937_64 gen(77);
    std::array<double, 24> arr{};
    for (auto& v : arr) v = static_cast<double>(gen() % 100);
    const int dwell = 3;

    auto windows = estimate_attack_windows(arr, dwell);
    REQUIRE(windows.size() == 24);

    // Oracle: a vehicle arriving in hour j occupies hours j..j+dwell-1 (mod
    // 24); expected presence in hour h is the sum over contributing hours.
    std::array<double, 24> present{};
    for (int j = 0; j < 24; ++j)
        for (int d = 0; d < dwell; ++d) present[(j + d) % 24] += arr[j];

    for (const auto& wdw : windows) {
        CHECK(wdw.expected_connected == doctest::Approx(present[wdw.start_hour]));
        CHECK(wdw.end_hour == wdw.start_hour + dwell);
    }
    // Ranking: non-increasing, ties by earlier hour.
    for (std::size_t i = 1; i < windows.size(); ++i) {
        const bool ordered =
            windows[i - 1].expected_connected > windows[i].expected_connected ||
            (windows[i - 1].expected_connected == windows[i].expected_connected &&
             windows[i - 1].start_hour < windows[i].start_hour);
        CHECK(ordered);
    }
}

TEST_CASE("window estimation corner cases") {
    std::array<double, 24> peaked{};
    peaked[18] = 50;
    auto w = estimate_attack_windows(peaked, 2);
    REQUIRE(w.size() == 2); // hours 18 and 19 hold vehicles; everything else is empty
    CHECK(w[0].start_hour == 18);
    CHECK(w[0].end_hour == 20);
    CHECK(w[0].expected_connected == 50);

    std::array<double, 24> zero{};
    CHECK(estimate_attack_windows(zero, 2).empty());

    std::array<double, 24> flat;
    flat.fill(5);
    auto tied = estimate_attack_windows(flat, 2);
    CHECK(tied[0].start_hour == 0); // all equal: earlier hour wins

    auto model = default_arrival_model();
    CHECK(*std::max_element(model.weekday.begin(), model.weekday.end()) == 400);
    CHECK(*std::max_element(model.weekend.begin(), model.weekend.end()) == 300);
    auto best = estimate_attack_windows(model.weekday, 2);
    CHECK(best[0].start_hour <= 10);
    CHECK(best[0].end_hour > 10);

    CHECK_THROWS_AS(estimate_attack_windows(std::vector<ReconObservation>{}, 2), Error);
}

TEST_CASE("windows can be estimated from reconnaissance output") {
    auto w = recon_world();
    std::vector<OccupancyEvent> timeline = {
        {36000.0, OccupancyEvent::Kind::Plug, "stA", "veh1"},   // hour 10
        {36100.0, OccupancyEvent::Kind::Start, "stA", ""},
        {39000.0, OccupancyEvent::Kind::Stop, "stA", ""},       // parked, hour 10
    };
    auto obs = recon_poll(w, {"stA"}, 600.0, 14 * 3600.0, timeline);
    auto windows = estimate_attack_windows(obs, 2);
    REQUIRE_FALSE(windows.empty());
    CHECK(windows[0].start_hour == 10);
}

TEST_CASE("oscillation schedule follows the ramp cadence") {
    OscillatoryPlan plan;
    plan.buses = {3, 5};
    plan.cycles = 3;
    auto ev = oscillatory_schedule(plan);
    REQUIRE(ev.size() == 12);
    // Cycle 0: ON at 15 s with 20 MW per bus, OFF at 25 s.
    CHECK(ev[0].time_s == 15.0);
    CHECK(ev[0].bus == 3);
    CHECK(ev[0].delta_mw == 20.0);
    CHECK(ev[1].bus == 5);
    // Boundary at 25 s: cycle-0 OFF precedes cycle-1 ON.
    CHECK(ev[2].time_s == 25.0);
    CHECK(ev[2].delta_mw == -20.0);
    CHECK(ev[4].time_s == 25.0);
    CHECK(ev[4].delta_mw == 20.0 + 5.5);
    // Cycle 2 switches on at 35 s with 31 MW.
    bool found = false;
    for (const auto& e : ev)
        if (e.time_s == 35.0 && e.delta_mw == doctest::Approx(31.0)) found = true;
    CHECK(found);

    OscillatoryPlan none;
    none.buses = {};
    CHECK(oscillatory_schedule(none).empty());
    OscillatoryPlan bad = plan;
    bad.cycles = 0;
    CHECK_THROWS_AS(oscillatory_schedule(bad), Error);
}

TEST_CASE("every oscillatory ON has a matching OFF and the books balance") {
    OscillatoryPlan plan;
    plan.buses = {2, 4, 7};
    plan.cycles = 50;
    auto ev = oscillatory_schedule(plan);
    std::map<int, double> net;
    std::map<int, int> on_count, off_count;
    for (const auto& e : ev) {
        net[e.bus] += e.delta_mw;
        (e.delta_mw > 0 ? on_count : off_count)[e.bus] += 1;
    }
    for (int bus : plan.buses) {
        CHECK(std::abs(net[bus]) < 1e-9);
        CHECK(on_count[bus] == 50);
        CHECK(off_count[bus] == 50);
    }
    // Per-cycle ON magnitude grows by exactly the increment.
    double prev = 0;
    for (int k = 0; k < 50; ++k) {
        const double on_t = 15.0 + 10.0 * k;
        for (const auto& e : ev)
            if (e.time_s == on_t && e.bus == 2 && e.delta_mw > 0) {
                if (k > 0) CHECK(e.delta_mw - prev == doctest::Approx(5.5));
                prev = e.delta_mw;
            }
    }
}

TEST_CASE("v2g amplification discharges during gaps and still nets to zero") {
    V2GAmplifiedPlan plan;
    plan.oscillation.buses = {3};
    plan.oscillation.cycles = 2;
    plan.oscillation.cycle_period_s = 20.0; // 10 s on, 10 s gap
    plan.discharge_mw_per_bus = 8.0;
    auto ev = v2g_schedule(plan);

    std::map<double, double> level_changes;
    double net = 0;
    for (const auto& e : ev) {
        level_changes[e.time_s] += e.delta_mw;
        net += e.delta_mw;
    }
    CHECK(std::abs(net) < 1e-9);
    // At the first OFF (t=25) the bus swings from +20 to -8 MW.
    CHECK(level_changes[25.0] == doctest::Approx(-28.0));
    // Recovery rides the next ON at t=35: +8 discharge release +25.5 on.
    CHECK(level_changes[35.0] == doctest::Approx(8.0 + 25.5));
    // Final OFF at t=45 dips again; tail recovers one on-duration later.
    CHECK(level_changes[45.0] == doctest::Approx(-25.5 - 8.0));
    CHECK(level_changes[55.0] == doctest::Approx(8.0));

    // Continuous alternation absorbs interior dips entirely.
    V2GAmplifiedPlan cont = plan;
    cont.oscillation.cycle_period_s = 10.0;
    auto ev2 = v2g_schedule(cont);
    int v2g_events = 0;
    for (const auto& e : ev2)
        if (std::abs(std::abs(e.delta_mw) - 8.0) < 1e-12) ++v2g_events;
    CHECK(v2g_events == 2); // final dip and its recovery only
}

TEST_CASE("attack schedule dispatch covers every plan variant") {
    CHECK(attack_schedule(HijackPlan{"stA"}).empty());
    CHECK(attack_schedule(TargetedTripPlan{{{4, 20.0}, {5, 64.0}}}).empty());
    auto mass = attack_schedule(MassChargePlan{{{2, 10.0}, {6, 5.0}}, 30.0});
    REQUIRE(mass.size() == 2);
    CHECK(mass[0].time_s == 30.0);
    CHECK(mass[0].bus == 2);
    CHECK(mass[0].delta_mw == 10.0);
}

TEST_CASE("hijack loop succeeds within one probe interval of the plug-in") {
    for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
        CAPTURE(seed);
        auto w = recon_world({}); // vulnerable
        std::vector<OccupancyEvent> timeline = {
            {1500.0, OccupancyEvent::Kind::Plug, "stA", "veh1"},
        };
        auto rep = execute_hijack(w, HijackPlan{"stA"}, "bot1", 3600.0, seed, timeline);
        REQUIRE(rep.success);
        CHECK(rep.success_time_s >= 1500.0);
        CHECK(rep.success_time_s <= 1500.0 + 240.0);
        // The charging session belongs to the bot, on the victim's car.
        const auto& st = w.registry().stations.at("stA");
        CHECK(st.session_user == "bot1");
        CHECK(st.connected_vin == "veh1");

        auto w2 = recon_world({});
        auto rep2 = execute_hijack(w2, HijackPlan{"stA"}, "bot1", 3600.0, seed, timeline);
        CHECK(rep2.attempts == rep.attempts);
        CHECK(rep2.success_time_s == rep.success_time_s);
    }
}

TEST_CASE("ownership verification turns every probe into a denial") {
    ecosim::PolicyConfig p;
    p.verify_ownership = true;
    auto w = recon_world(p);
    std::vector<OccupancyEvent> timeline = {
        {1500.0, OccupancyEvent::Kind::Plug, "stA", "veh1"},
    };
    auto rep = execute_hijack(w, HijackPlan{"stA"}, "bot1", 2100.0, 5, timeline);
    CHECK_FALSE(rep.success);
    CHECK(rep.denied == rep.attempts);
    // Probe spacing is 180..240 s, so a 2100 s horizon fits 8..11 probes.
    CHECK(rep.attempts >= 8);
    CHECK(rep.attempts <= 11);
    CHECK(w.registry().sessions.empty());
}

TEST_CASE("an untouched station yields failure with reverting grace entries") {
    auto w = recon_world({});
    auto rep = execute_hijack(w, HijackPlan{"stA"}, "bot1", 2000.0, 11);
    CHECK_FALSE(rep.success);
    CHECK(rep.attempts >= 1);
    CHECK(w.registry().sessions.empty());
    int grace_entered = 0, grace_expired = 0;
    for (const auto& row : w.audit()) {
        if (row.event.find("grace_entered") != std::string::npos) ++grace_entered;
        if (row.event == "grace_expired") ++grace_expired;
    }
    CHECK(grace_entered >= 1);
    // Probes arrive faster than the 300 s grace, so pending starts are
    // rejected until the active window lapses and the next probe re-arms it.
    CHECK(grace_expired >= 1);
    CHECK(rep.rejected >= 1);
    CHECK(w.registry().stations.at("stA").evcs_state != Phase::S4);

    CHECK_THROWS_AS(execute_hijack(w, HijackPlan{"ghost"}, "bot1", 100.0, 1), Error);
}

TEST_CASE("seeded hijack replay is all-or-nothing across policies") {
    int vulnerable_hits = 0, mitigated_hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<OccupancyEvent> timeline = {
            {900.0, OccupancyEvent::Kind::Plug, "stA", "veh1"},
        };
        auto wv = recon_world({});
        if (execute_hijack(wv, HijackPlan{"stA"}, "bot1", 3600.0, seed, timeline).success)
            ++vulnerable_hits;
        ecosim::PolicyConfig p;
        p.verify_ownership = true;
        p.authorize_critical = true;
        auto wm = recon_world(p);
        if (execute_hijack(wm, HijackPlan{"stA"}, "bot1", 3600.0, seed, timeline).success)
            ++mitigated_hits;
    }
    CHECK(vulnerable_hits == 20);
    CHECK(mitigated_hits == 0);
}
