#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace evcosim::gridcore {

enum class BusKind { Slack, PV, PQ };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double load_mw = 0.0;
    double load_mvar = 0.0;
    // Adversarial EV charging load, tracked apart from consumer load so
    // impact accounting can report what consumers lose.  Negative = V2G.
    double attack_mw = 0.0;
    double v_setpoint_pu = 1.0;
};

struct Line {
    int from = 0;
    int to = 0;
    double r_pu = 0.0;
    double x_pu = 0.0;
    double mva_rating = 0.0;
    bool in_service = true;
};

struct Generator {
    int bus = 0;
    double p_min_mw = 0.0;
    double p_max_mw = 0.0;
    // Hourly cost a + b*p + c*p^2, p in MW.
    double cost_a = 0.0;
    double cost_b = 0.0;
    double cost_c = 0.0;
    bool in_service = true;
};

struct GridCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;

    int bus_index(int id) const; // -1 when absent
    double total_load_mw() const;
    double total_attack_mw() const;
};

GridCase load_case(const std::string& path);
GridCase parse_case(const std::string& text, const std::string& origin);
void validate_case(const GridCase& c);

struct LoadProfile {
    std::array<double, 24> hourly_mw{};
    double average_mw() const;
};

LoadProfile load_profile(const std::string& path);
LoadProfile parse_profile(const std::string& text, const std::string& origin);

// Scales consumer load (P and Q) by hourly/average; attack load is untouched.
GridCase scale_loads(const GridCase& c, const LoadProfile& profile, int hour);

GridCase with_attack(const GridCase& c, const std::map<int, double>& attack_bus_mw);

enum class AttackDistribution { Proportional, Equal, Random };

// Splits total_mw across load buses (load_mw > 0).  Random weights are drawn
// from the given seed and normalized.
std::map<int, double> distribute_attack(const GridCase& c, double total_mw,
                                        AttackDistribution dist, std::uint64_t seed);

struct LineFlow {
    int from = 0;
    int to = 0;
    double p_from_mw = 0.0;
    double q_from_mvar = 0.0;
    double p_to_mw = 0.0;
    double q_to_mvar = 0.0;
    double loss_mw = 0.0;
    double loading_pct = 0.0; // max-end MVA over rating
};

struct PowerFlowSolution {
    std::vector<double> v_pu;      // by bus position in GridCase
    std::vector<double> theta_rad; // slack angle 0
    std::vector<LineFlow> flows;   // in-service lines, case order
    double total_losses_mw = 0.0;
    double slack_p_mw = 0.0;
    double slack_q_mvar = 0.0;
    int iterations = 0;
    double max_mismatch_pu = 0.0;
};

struct PowerFlowOptions {
    double tolerance_pu = 1e-6;
    int max_iterations = 30;
};

// Newton-Raphson from flat start.  Generator in-service P output must already
// be reflected in bus injections via gen_p_mw (see dispatch_and_solve), the
// slack bus closes the balance.
PowerFlowSolution solve_ac_power_flow(const GridCase& c, const std::vector<double>& gen_p_mw,
                                      const PowerFlowOptions& opts = {});

struct DispatchResult {
    std::vector<double> p_mw; // by generator position, out-of-service = 0
    double lambda_usd_per_mwh = 0.0;
    double total_cost_usd_per_h = 0.0;
};

// Equal incremental cost with limit clamping.  demand_mw must lie within
// [sum p_min, sum p_max] of in-service units.
DispatchResult economic_dispatch(const std::vector<Generator>& gens, double demand_mw);

struct DispatchedCase {
    DispatchResult dispatch;       // slack generator adjusted to actual output
    PowerFlowSolution pf;
    double demand_mw = 0.0;        // consumer + attack load served
};

// Economic dispatch and power flow coupled through a loss fixed point
// (at most three passes: losses from the previous flow feed the next
// dispatch).  Cost is evaluated at the final outputs.
DispatchedCase dispatch_and_solve(const GridCase& c, const PowerFlowOptions& opts = {});

struct CascadeReport {
    std::vector<std::pair<int, int>> tripped_lines; // trip order
    std::vector<std::vector<int>> islands;          // final bus partition, each sorted
    double unserved_load_mw = 0.0;                  // consumer load lost
    double unserved_fraction = 0.0;                 // of original consumer load
    int iterations = 0;
    bool diverged = false; // a re-solve failed; report reflects the last solvable state
};

struct CascadeOptions {
    double trip_threshold_pct = 100.0;
    PowerFlowOptions pf{};
};

// Quasi-static cascade: repeatedly solve, trip the single most overloaded
// line (ties by lowest (from,to)), handle islanding, until no overloads.
CascadeReport cascade(const GridCase& c, const CascadeOptions& opts = {});

struct ImpactReport {
    int hour = 0;
    double served_load_mw = 0.0;   // consumer load at this hour, before attack
    double attack_mw = 0.0;
    double losses_before_mw = 0.0;
    double losses_after_mw = 0.0;
    double loss_increase_pct = 0.0;
    double cost_before_usd_h = 0.0;
    double cost_after_usd_h = 0.0;
    double cost_delta_usd_h = 0.0;
    double annualized_delta_usd = 0.0; // one attacked hour per day, 365 days
    double lambda_before = 0.0;
    double lambda_after = 0.0;
};

double annualize_delta(double cost_delta_usd_h, double hours_per_day = 1.0, double days = 365.0);

ImpactReport attack_impact_report(const GridCase& c, const std::map<int, double>& attack_bus_mw,
                                  int hour, const LoadProfile& profile);

} // namespace evcosim::gridcore
