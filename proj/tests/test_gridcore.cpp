#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evcosim/error.hpp"
#include "evcosim/gridcore.hpp"
#include "evcosim/kvfile.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace evcosim;
using namespace evcosim::gridcore;

namespace {

GridCase two_bus_case() {
    // Slack 1.0 pu feeding a 100 MW unity-pf load over r=0.01 x=0.1 pu.
    return parse_case(R"(
[case]
name = twobus
base_mva = 100

[bus]
id = 1
kind = slack
v_setpoint_pu = 1.0

[bus]
id = 2
kind = pq
load_mw = 100
load_mvar = 0

[line]
from = 1
to = 2
r_pu = 0.01
x_pu = 0.1
mva_rating = 200

[generator]
bus = 1
p_max_mw = 500
cost_b = 10
)",
                      "twobus");
}

} // namespace

TEST_CASE("kv parser reports location of malformed input") {
    CHECK_THROWS_AS(kv::parse_string("[bus\nid = 1\n", "bad"), Error);
    try {
        kv::parse_string("[bus]\nid\n", "bad");
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("bad:2") != std::string::npos);
    }
    CHECK_THROWS_AS(kv::parse_string("key = 1\n", "bad"), Error);       // key outside section
    CHECK_THROWS_AS(kv::parse_string("[a]\nk = 1\nk = 2\n", "bad"), Error); // duplicate key
}

TEST_CASE("case validation rejects structural defects") {
    auto base = two_bus_case();

    SUBCASE("two slack buses") {
        auto c = base;
        c.buses[1].kind = BusKind::Slack;
        CHECK_THROWS_AS(validate_case(c), Error);
    }
    SUBCASE("line to unknown bus") {
        auto c = base;
        c.lines[0].to = 9;
        CHECK_THROWS_AS(validate_case(c), Error);
    }
    SUBCASE("generator on pq bus") {
        auto c = base;
        c.generators[0].bus = 2;
        CHECK_THROWS_AS(validate_case(c), Error);
    }
    SUBCASE("disconnected network") {
        auto c = base;
        c.lines[0].in_service = false;
        CHECK_THROWS_AS(validate_case(c), Error);
    }
    SUBCASE("nonpositive rating") {
        auto c = base;
        c.lines[0].mva_rating = 0;
        CHECK_THROWS_AS(validate_case(c), Error);
    }
}

TEST_CASE("flat unloaded case solves in zero iterations") {
    auto c = two_bus_case();
    c.buses[1].load_mw = 0;
    auto sol = solve_ac_power_flow(c, {0.0});
    CHECK(sol.iterations == 0);
    CHECK(sol.total_losses_mw == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.v_pu[1] == doctest::Approx(1.0));
}

TEST_CASE("two-bus power flow matches Gauss-Seidel fixed-point oracle") {
    auto c = two_bus_case();
    auto sol = solve_ac_power_flow(c, {0.0});

    // Independent oracle: Gauss-Seidel on the same equations.
    const std::complex<double> y = 1.0 / std::complex<double>(0.01, 0.1);
    const std::complex<double> V1(1.0, 0.0);
    const std::complex<double> S2(-1.0, 0.0);
    std::complex<double> V2(1.0, 0.0);
    for (int i = 0; i < 500; ++i) V2 = (std::conj(S2) / std::conj(V2) + y * V1) / y;

    CHECK(sol.v_pu[1] == doctest::Approx(std::abs(V2)).epsilon(1e-6));
    CHECK(sol.theta_rad[1] == doctest::Approx(std::arg(V2)).epsilon(1e-6));

    // Frozen oracle values (500 GS iterations, converged to machine precision).
    CHECK(sol.v_pu[1] == doctest::Approx(0.984674135098141).epsilon(1e-9));
    CHECK(sol.theta_rad[1] == doctest::Approx(-0.1017318261265716).epsilon(1e-9));
    CHECK(std::abs(sol.total_losses_mw - 1.0313710563097) < 1e-5);
    CHECK(std::abs(sol.slack_p_mw - 101.0313710563) < 1e-5);

    // Power balance: slack generation covers load plus losses.
    CHECK(std::abs(sol.slack_p_mw - (100.0 + sol.total_losses_mw)) < 1e-4);
}

TEST_CASE("line losses equal independent I^2 R recomputation") {
    auto c = two_bus_case();
    auto sol = solve_ac_power_flow(c, {0.0});
    double recomputed = 0.0;
    for (const auto& l : c.lines) {
        int i = c.bus_index(l.from), j = c.bus_index(l.to);
        std::complex<double> vi = std::polar(sol.v_pu[i], sol.theta_rad[i]);
        std::complex<double> vj = std::polar(sol.v_pu[j], sol.theta_rad[j]);
        std::complex<double> I = (vi - vj) / std::complex<double>(l.r_pu, l.x_pu);
        recomputed += std::norm(I) * l.r_pu;
    }
    CHECK(std::abs(recomputed * c.base_mva - sol.total_losses_mw) < 1e-4);
}

TEST_CASE("power flow on a disconnected case raises IslandWithoutSlack") {
    auto c = two_bus_case();
    c.lines[0].in_service = false;
    try {
        solve_ac_power_flow(c, {0.0});
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::IslandWithoutSlack);
    }
}

TEST_CASE("scaling by a flat profile is the identity") {
    auto c = two_bus_case();
    LoadProfile p;
    p.hourly_mw.fill(800.0);
    auto s = scale_loads(c, p, 13);
    CHECK(s.total_load_mw() == doctest::Approx(c.total_load_mw()).epsilon(1e-12));
}

TEST_CASE("scaling tracks hourly-to-average ratio and leaves attack load alone") {
    auto c = two_bus_case();
    c.buses[1].attack_mw = 7.0;
    LoadProfile p;
    p.hourly_mw.fill(800.0);
    p.hourly_mw[19] = 943.0;
    p.hourly_mw[3] = 657.0; // keeps the mean at 800
    CHECK(p.average_mw() == doctest::Approx(800.0).epsilon(1e-12));
    auto s = scale_loads(c, p, 19);
    CHECK(s.total_load_mw() == doctest::Approx(100.0 * 943.0 / 800.0).epsilon(1e-12));
    CHECK(s.buses[1].attack_mw == 7.0);
    CHECK_THROWS_AS(scale_loads(c, p, 24), Error);
}

TEST_CASE("equal-cost dispatch splits demand between twins") {
    std::vector<Generator> gens(2);
    for (auto& g : gens) {
        g.p_max_mw = 100;
        g.cost_b = 12;
        g.cost_c = 0.01;
    }
    gens[0].bus = 1;
    gens[1].bus = 2;
    auto r = economic_dispatch(gens, 100.0);
    CHECK(r.p_mw[0] == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(r.p_mw[1] == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("dispatch reproduces the closed-form equal-lambda solution") {
    // cost1 = 10p + 0.01p^2, cost2 = 10p + 0.02p^2, demand 300
    // => p1 = 200, p2 = 100, lambda = 14 (hand-solved KKT system).
    std::vector<Generator> gens(2);
    gens[0].bus = 1;
    gens[0].p_max_mw = 400;
    gens[0].cost_b = 10;
    gens[0].cost_c = 0.01;
    gens[1].bus = 2;
    gens[1].p_max_mw = 400;
    gens[1].cost_b = 10;
    gens[1].cost_c = 0.02;
    auto r = economic_dispatch(gens, 300.0);
    CHECK(std::abs(r.p_mw[0] - 200.0) < 1e-6);
    CHECK(std::abs(r.p_mw[1] - 100.0) < 1e-6);
    CHECK(std::abs(r.lambda_usd_per_mwh - 14.0) < 1e-6);
    CHECK(r.total_cost_usd_per_h == doctest::Approx(10 * 200 + 0.01 * 200 * 200 + 10 * 100 + 0.02 * 100 * 100));
}

TEST_CASE("dispatch at the demand boundaries pins units to their limits") {
    std::vector<Generator> gens(2);
    gens[0] = {1, 20, 120, 0, 9, 0.02, true};
    gens[1] = {2, 10, 90, 0, 14, 0.01, true};
    auto lo = economic_dispatch(gens, 30.0);
    CHECK(lo.p_mw[0] == doctest::Approx(20.0));
    CHECK(lo.p_mw[1] == doctest::Approx(10.0));
    auto hi = economic_dispatch(gens, 210.0);
    CHECK(hi.p_mw[0] == doctest::Approx(120.0));
    CHECK(hi.p_mw[1] == doctest::Approx(90.0));
    CHECK_THROWS_AS(economic_dispatch(gens, 29.0), Error);
    CHECK_THROWS_AS(economic_dispatch(gens, 211.0), Error);
}

TEST_CASE("dispatch satisfies KKT optimality on random convex cases") {
    std::mt19937_64 rng(20240811);
    auto urand = [&](double a, double b) {
        return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5);
        std::vector<Generator> gens(n);
        double pmin_sum = 0, pmax_sum = 0;
        for (int i = 0; i < n; ++i) {
            gens[i].bus = i + 1;
            gens[i].p_min_mw = urand(0, 30);
            gens[i].p_max_mw = gens[i].p_min_mw + urand(20, 300);
            gens[i].cost_a = urand(0, 500);
            gens[i].cost_b = urand(5, 30);
            gens[i].cost_c = urand(0.001, 0.05);
            pmin_sum += gens[i].p_min_mw;
            pmax_sum += gens[i].p_max_mw;
        }
        const double demand = urand(pmin_sum + 1.0, pmax_sum - 1.0);
        auto r = economic_dispatch(gens, demand);

        double total = 0;
        for (int i = 0; i < n; ++i) {
            total += r.p_mw[i];
            CHECK(r.p_mw[i] >= gens[i].p_min_mw - 1e-9);
            CHECK(r.p_mw[i] <= gens[i].p_max_mw + 1e-9);
        }
        CHECK(total == doctest::Approx(demand).epsilon(1e-9));

        // Transferring epsilon between any feasible pair must not cut cost.
        auto cost = [&](const std::vector<double>& p) {
            double s = 0;
            for (int i = 0; i < n; ++i)
                s += gens[i].cost_a + gens[i].cost_b * p[i] + gens[i].cost_c * p[i] * p[i];
            return s;
        };
        const double base_cost = cost(r.p_mw);
        const double eps = 0.1;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                if (r.p_mw[i] + eps > gens[i].p_max_mw || r.p_mw[j] - eps < gens[j].p_min_mw) continue;
                auto p = r.p_mw;
                p[i] += eps;
                p[j] -= eps;
                CHECK(cost(p) >= base_cost - 1e-9);
            }
        }
    }
}

TEST_CASE("dispatch_and_solve converges dispatch and losses together") {
    auto c = two_bus_case();
    // Second unit on the load side so the fixed point moves generation.
    c.buses[1].kind = BusKind::PV;
    c.buses[1].v_setpoint_pu = 1.0;
    Generator g2;
    g2.bus = 2;
    g2.p_max_mw = 200;
    g2.cost_b = 12;
    g2.cost_c = 0.01;
    c.generators.push_back(g2);
    c.generators[0].cost_c = 0.01;

    auto d = dispatch_and_solve(c);
    double gen_total = 0;
    for (double p : d.dispatch.p_mw) gen_total += p;
    CHECK(std::abs(gen_total - (100.0 + d.pf.total_losses_mw)) < 1e-4);
}

TEST_CASE("attack spreading honours the distribution and sums to the total") {
    auto c = two_bus_case();
    c.buses[0].load_mw = 0; // only bus 2 carries load
    auto prop = distribute_attack(c, 84.0, AttackDistribution::Proportional, 1);
    CHECK(prop.size() == 1);
    CHECK(prop.at(2) == doctest::Approx(84.0));

    GridCase c3 = c;
    Bus extra;
    extra.id = 3;
    extra.kind = BusKind::PQ;
    extra.load_mw = 300;
    c3.buses.push_back(extra);
    Line l;
    l.from = 1;
    l.to = 3;
    l.r_pu = 0.01;
    l.x_pu = 0.1;
    l.mva_rating = 500;
    c3.lines.push_back(l);

    auto prop3 = distribute_attack(c3, 84.0, AttackDistribution::Proportional, 1);
    CHECK(prop3.at(2) == doctest::Approx(84.0 * 100.0 / 400.0));
    CHECK(prop3.at(3) == doctest::Approx(84.0 * 300.0 / 400.0));

    auto eq3 = distribute_attack(c3, 84.0, AttackDistribution::Equal, 1);
    CHECK(eq3.at(2) == doctest::Approx(42.0));
    CHECK(eq3.at(3) == doctest::Approx(42.0));

    auto r1 = distribute_attack(c3, 84.0, AttackDistribution::Random, 99);
    auto r2 = distribute_attack(c3, 84.0, AttackDistribution::Random, 99);
    CHECK(r1 == r2);
    double sum = 0;
    for (auto& [b, mw] : r1) sum += mw;
    CHECK(sum == doctest::Approx(84.0).epsilon(1e-12));
}

TEST_CASE("triangle cascade trips exactly the engineered overload") {
    // Hand-built 3-bus triangle: generation at bus 1, load at 2 and 3.
    // Line 1-2 is rated below its base flow; after it trips the reroute
    // through bus 3 stays within ratings, so there is exactly one trip,
    // one island, and no load shed.
    auto c = parse_case(R"(
[case]
name = triangle
base_mva = 100

[bus]
id = 1
kind = slack
v_setpoint_pu = 1.0

[bus]
id = 2
kind = pq
load_mw = 80
load_mvar = 10

[bus]
id = 3
kind = pq
load_mw = 40
load_mvar = 5

[line]
from = 1
to = 2
r_pu = 0.01
x_pu = 0.08
mva_rating = 60

[line]
from = 1
to = 3
r_pu = 0.01
x_pu = 0.08
mva_rating = 200

[line]
from = 2
to = 3
r_pu = 0.01
x_pu = 0.08
mva_rating = 200

[generator]
bus = 1
p_max_mw = 300
cost_b = 10
cost_c = 0.01
)",
                        "triangle");
    auto rep = cascade(c);
    REQUIRE(rep.tripped_lines.size() == 1);
    CHECK(rep.tripped_lines[0] == std::pair(1, 2));
    CHECK(rep.islands.size() == 1);
    CHECK(rep.unserved_load_mw == doctest::Approx(0.0));
    CHECK(rep.diverged == false);

    auto rep2 = cascade(c);
    CHECK(rep2.tripped_lines == rep.tripped_lines); // deterministic rerun
}

TEST_CASE("cascade sheds islands that lose all generation") {
    // Radial 1-2-3 chain; tripping 2-3 strands the bus-3 load.
    auto c = parse_case(R"(
[case]
name = chain
base_mva = 100

[bus]
id = 1
kind = slack
v_setpoint_pu = 1.0

[bus]
id = 2
kind = pq
load_mw = 50

[bus]
id = 3
kind = pq
load_mw = 60

[line]
from = 1
to = 2
r_pu = 0.005
x_pu = 0.05
mva_rating = 300

[line]
from = 2
to = 3
r_pu = 0.005
x_pu = 0.05
mva_rating = 55

[generator]
bus = 1
p_max_mw = 300
cost_b = 10
cost_c = 0.01
)",
                        "chain");
    auto rep = cascade(c);
    REQUIRE(rep.tripped_lines.size() == 1);
    CHECK(rep.tripped_lines[0] == std::pair(2, 3));
    CHECK(rep.unserved_load_mw == doctest::Approx(60.0));
    CHECK(rep.unserved_fraction == doctest::Approx(60.0 / 110.0));
    REQUIRE(rep.islands.size() == 2);
    CHECK(rep.islands[0] == std::vector<int>{1, 2});
    CHECK(rep.islands[1] == std::vector<int>{3});
}

TEST_CASE("annualized delta is plain arithmetic") {
    CHECK(annualize_delta(1451.95) == doctest::Approx(529961.75).epsilon(1e-9));
    CHECK(annualize_delta(10.0, 2.0, 10.0) == doctest::Approx(200.0));
}

TEST_CASE("shipped profile hits the study-hour totals exactly") {
    auto c = load_case(std::string(EVCOSIM_DATA_DIR) + "/cases/glover7.case");
    auto p = load_profile(std::string(EVCOSIM_DATA_DIR) + "/profiles/nsw_daily.profile");
    CHECK(p.average_mw() == doctest::Approx(800.0).epsilon(1e-12));
    CHECK(c.total_load_mw() == doctest::Approx(800.0).epsilon(1e-12));
    // Consumer totals scale to hourly demand: exact, not approximate.
    CHECK(std::abs(scale_loads(c, p, 3).total_load_mw() - 677.0) < 0.01);
    CHECK(std::abs(scale_loads(c, p, 22).total_load_mw() - 800.0) < 0.01);
    CHECK(std::abs(scale_loads(c, p, 19).total_load_mw() - 943.0) < 0.01);
}

TEST_CASE("every shipped case solves with a closed power balance") {
    for (const char* name : {"twobus.case", "threebus.case", "glover7.case"}) {
        CAPTURE(name);
        auto c = load_case(std::string(EVCOSIM_DATA_DIR) + "/cases/" + name);
        validate_case(c);
        auto d = dispatch_and_solve(c);
        double gen_total = 0;
        for (double p : d.dispatch.p_mw) gen_total += p;
        CHECK(std::abs(gen_total - (c.total_load_mw() + d.pf.total_losses_mw)) < 1e-4);
        CHECK(d.pf.max_mismatch_pu < 1e-6);
    }
}

TEST_CASE("concentrated 84 MW attack on the study case cascades to islanding") {
    auto c = load_case(std::string(EVCOSIM_DATA_DIR) + "/cases/glover7.case");
    auto p = load_profile(std::string(EVCOSIM_DATA_DIR) + "/profiles/nsw_daily.profile");
    auto attacked = with_attack(scale_loads(c, p, 22), {{4, 20.0}, {5, 64.0}});
    auto rep = cascade(attacked);
    REQUIRE(rep.tripped_lines.size() == 7);
    CHECK(rep.tripped_lines[0] == std::pair(1, 2));
    // Bus 5 ends up stranded; its consumer load is what is lost.
    REQUIRE(rep.islands.size() == 2);
    CHECK(rep.islands[1] == std::vector<int>{5});
    CHECK(rep.unserved_load_mw == doctest::Approx(280.0));
    CHECK(rep.unserved_fraction == doctest::Approx(0.35));
    CHECK(rep.diverged == false);

    // Without the attack the same operating point rides through untouched.
    auto calm = cascade(scale_loads(c, p, 22));
    CHECK(calm.tripped_lines.empty());
    CHECK(calm.unserved_load_mw == doctest::Approx(0.0));
}
