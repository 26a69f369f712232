#include "evcosim/gridcore.hpp"

#include "evcosim/error.hpp"
#include "evcosim/kvfile.hpp"
#include "evcosim/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace evcosim::gridcore {

namespace {

using cplx = std::complex<double>;

BusKind parse_bus_kind(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "pv") return BusKind::PV;
    if (s == "pq") return BusKind::PQ;
    throw Error(Errc::BadFile, "unknown bus kind '" + s + "'");
}

// Connected components over in-service lines; isolated buses form singletons.
std::vector<std::vector<int>> components(const GridCase& c) {
    const int n = static_cast<int>(c.buses.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& l : c.lines) {
        if (!l.in_service) continue;
        int a = find(c.bus_index(l.from));
        int b = find(c.bus_index(l.to));
        if (a != b) parent[a] = b;
    }
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
}

} // namespace

int GridCase::bus_index(int id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

double GridCase::total_load_mw() const {
    double s = 0;
    for (const auto& b : buses) s += b.load_mw;
    return s;
}

double GridCase::total_attack_mw() const {
    double s = 0;
    for (const auto& b : buses) s += b.attack_mw;
    return s;
}

GridCase parse_case(const std::string& text, const std::string& origin) {
    auto doc = kv::parse_string(text, origin);
    GridCase c;
    const auto& head = doc.only("case");
    c.name = head.get_or("name", "unnamed");
    c.base_mva = head.get_double_or("base_mva", 100.0);
    for (const auto* s : doc.all("bus")) {
        Bus b;
        b.id = s->get_int("id");
        b.kind = parse_bus_kind(s->get_or("kind", "pq"));
        b.load_mw = s->get_double_or("load_mw", 0.0);
        b.load_mvar = s->get_double_or("load_mvar", 0.0);
        b.attack_mw = s->get_double_or("attack_mw", 0.0);
        b.v_setpoint_pu = s->get_double_or("v_setpoint_pu", 1.0);
        c.buses.push_back(b);
    }
    for (const auto* s : doc.all("line")) {
        Line l;
        l.from = s->get_int("from");
        l.to = s->get_int("to");
        l.r_pu = s->get_double_or("r_pu", 0.0);
        l.x_pu = s->get_double("x_pu");
        l.mva_rating = s->get_double("mva_rating");
        l.in_service = s->get_bool_or("in_service", true);
        c.lines.push_back(l);
    }
    for (const auto* s : doc.all("generator")) {
        Generator g;
        g.bus = s->get_int("bus");
        g.p_min_mw = s->get_double_or("p_min_mw", 0.0);
        g.p_max_mw = s->get_double("p_max_mw");
        g.cost_a = s->get_double_or("cost_a", 0.0);
        g.cost_b = s->get_double_or("cost_b", 0.0);
        g.cost_c = s->get_double_or("cost_c", 0.0);
        g.in_service = s->get_bool_or("in_service", true);
        c.generators.push_back(g);
    }
    validate_case(c);
    return c;
}

GridCase load_case(const std::string& path) { return parse_case(kv::read_file(path), path); }

void validate_case(const GridCase& c) {
    auto fail = [&](const std::string& msg) {
        throw Error(Errc::ValidationFailed, "case '" + c.name + "': " + msg);
    };
    if (c.base_mva <= 0) fail("base_mva must be positive");
    if (c.buses.empty()) fail("no buses");
    std::set<int> ids;
    int slack_count = 0;
    for (const auto& b : c.buses) {
        if (b.id <= 0) fail("bus ids must be positive");
        if (!ids.insert(b.id).second) fail("duplicate bus id " + std::to_string(b.id));
        if (b.kind == BusKind::Slack) ++slack_count;
        if (b.load_mw < 0) fail("negative load_mw at bus " + std::to_string(b.id));
        if (b.v_setpoint_pu < 0.5 || b.v_setpoint_pu > 1.5)
            fail("v_setpoint_pu out of range at bus " + std::to_string(b.id));
    }
    if (slack_count != 1) fail("expected exactly one slack bus, found " + std::to_string(slack_count));
    for (const auto& l : c.lines) {
        if (!ids.count(l.from) || !ids.count(l.to))
            fail("line endpoints " + std::to_string(l.from) + "-" + std::to_string(l.to) + " must be buses");
        if (l.from == l.to) fail("line endpoints must differ");
        if (l.r_pu < 0) fail("negative r_pu on line " + std::to_string(l.from) + "-" + std::to_string(l.to));
        if (l.x_pu <= 0) fail("x_pu must be positive on line " + std::to_string(l.from) + "-" + std::to_string(l.to));
        if (l.mva_rating <= 0) fail("mva_rating must be positive on line " + std::to_string(l.from) + "-" + std::to_string(l.to));
    }
    std::set<int> gen_buses;
    for (const auto& g : c.generators) {
        if (!ids.count(g.bus)) fail("generator references unknown bus " + std::to_string(g.bus));
        if (g.p_min_mw < 0 || g.p_max_mw < g.p_min_mw)
            fail("generator limits invalid at bus " + std::to_string(g.bus));
        if (g.cost_c < 0) fail("generator cost_c must be nonnegative at bus " + std::to_string(g.bus));
        gen_buses.insert(g.bus);
        const Bus& b = c.buses[c.bus_index(g.bus)];
        if (b.kind == BusKind::PQ) fail("generator on pq bus " + std::to_string(g.bus));
    }
    for (const auto& b : c.buses)
        if ((b.kind == BusKind::Slack || b.kind == BusKind::PV) && !gen_buses.count(b.id))
            fail("bus " + std::to_string(b.id) + " holds voltage but has no generator");
    // Every bus must reach the slack over in-service lines.
    auto comps = components(c);
    if (comps.size() != 1)
        fail("in-service network is not connected (" + std::to_string(comps.size()) + " islands)");
}

double LoadProfile::average_mw() const {
    double s = 0;
    for (double v : hourly_mw) s += v;
    return s / 24.0;
}

LoadProfile parse_profile(const std::string& text, const std::string& origin) {
    auto doc = kv::parse_string(text, origin);
    const auto& s = doc.only("profile");
    auto vals = kv::parse_number_list(s.get("hourly_mw"));
    if (vals.size() != 24)
        throw Error(Errc::BadFile, origin + ": hourly_mw must list 24 values, got " + std::to_string(vals.size()));
    LoadProfile p;
    for (int h = 0; h < 24; ++h) {
        if (vals[h] <= 0) throw Error(Errc::BadFile, origin + ": hourly_mw values must be positive");
        p.hourly_mw[h] = vals[h];
    }
    return p;
}

LoadProfile load_profile(const std::string& path) { return parse_profile(kv::read_file(path), path); }

GridCase scale_loads(const GridCase& c, const LoadProfile& profile, int hour) {
    if (hour < 0 || hour > 23) throw Error(Errc::BadArguments, "hour must be in [0,23]");
    const double ratio = profile.hourly_mw[hour] / profile.average_mw();
    GridCase out = c;
    for (auto& b : out.buses) {
        b.load_mw *= ratio;
        b.load_mvar *= ratio;
    }
    return out;
}

GridCase with_attack(const GridCase& c, const std::map<int, double>& attack_bus_mw) {
    GridCase out = c;
    for (const auto& [bus, mw] : attack_bus_mw) {
        int i = out.bus_index(bus);
        if (i < 0) throw Error(Errc::UnknownBus, "attack targets unknown bus " + std::to_string(bus));
        out.buses[i].attack_mw += mw;
    }
    return out;
}

std::map<int, double> distribute_attack(const GridCase& c, double total_mw,
                                        AttackDistribution dist, std::uint64_t seed) {
    std::vector<const Bus*> load_buses;
    for (const auto& b : c.buses)
        if (b.load_mw > 0) load_buses.push_back(&b);
    if (load_buses.empty()) throw Error(Errc::BadArguments, "case has no load buses");
    std::map<int, double> out;
    switch (dist) {
        case AttackDistribution::Proportional: {
            double total_load = 0;
            for (const auto* b : load_buses) total_load += b->load_mw;
            for (const auto* b : load_buses) out[b->id] = total_mw * b->load_mw / total_load;
            break;
        }
        case AttackDistribution::Equal: {
            for (const auto* b : load_buses) out[b->id] = total_mw / load_buses.size();
            break;
        }
        case AttackDistribution::Random: {
            Rng rng(seed);
            std::vector<double> w(load_buses.size());
            double sum = 0;
            for (auto& v : w) {
                v = rng.uniform01() + 1e-9;
                sum += v;
            }
            for (size_t i = 0; i < w.size(); ++i) out[load_buses[i]->id] = total_mw * w[i] / sum;
            break;
        }
    }
    return out;
}

PowerFlowSolution solve_ac_power_flow(const GridCase& c, const std::vector<double>& gen_p_mw,
                                      const PowerFlowOptions& opts) {
    if (gen_p_mw.size() != c.generators.size())
        throw Error(Errc::BadArguments, "gen_p_mw size mismatch");
    const int n = static_cast<int>(c.buses.size());
    auto comps = components(c);
    if (comps.size() != 1) throw Error(Errc::IslandWithoutSlack, "network is not connected");

    // Ybus from series impedances only (no shunts, no taps).
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& l : c.lines) {
        if (!l.in_service) continue;
        int i = c.bus_index(l.from), j = c.bus_index(l.to);
        cplx y = 1.0 / cplx(l.r_pu, l.x_pu);
        Y(i, i) += y;
        Y(j, j) += y;
        Y(i, j) -= y;
        Y(j, i) -= y;
    }

    // Net scheduled injections in pu.
    std::vector<double> p_spec(n, 0.0), q_spec(n, 0.0);
    for (int i = 0; i < n; ++i) {
        p_spec[i] = -(c.buses[i].load_mw + c.buses[i].attack_mw) / c.base_mva;
        q_spec[i] = -c.buses[i].load_mvar / c.base_mva;
    }
    for (size_t g = 0; g < c.generators.size(); ++g)
        if (c.generators[g].in_service)
            p_spec[c.bus_index(c.generators[g].bus)] += gen_p_mw[g] / c.base_mva;

    int slack = -1;
    std::vector<int> ang_idx, volt_idx; // buses with unknown angle / magnitude
    for (int i = 0; i < n; ++i) {
        if (c.buses[i].kind == BusKind::Slack) slack = i;
        else ang_idx.push_back(i);
        if (c.buses[i].kind == BusKind::PQ) volt_idx.push_back(i);
    }

    std::vector<double> V(n), th(n, 0.0);
    for (int i = 0; i < n; ++i)
        V[i] = (c.buses[i].kind == BusKind::PQ) ? 1.0 : c.buses[i].v_setpoint_pu;

    auto injections = [&](int i, double& p, double& q) {
        p = 0;
        q = 0;
        for (int j = 0; j < n; ++j) {
            const double g = Y(i, j).real(), b = Y(i, j).imag();
            const double d = th[i] - th[j];
            p += V[i] * V[j] * (g * std::cos(d) + b * std::sin(d));
            q += V[i] * V[j] * (g * std::sin(d) - b * std::cos(d));
        }
    };

    const int na = static_cast<int>(ang_idx.size());
    const int nv = static_cast<int>(volt_idx.size());
    const int m = na + nv;
    Eigen::VectorXd mism(m);
    Eigen::MatrixXd J(m, m);
    PowerFlowSolution sol;
    sol.iterations = 0;

    auto fill_mismatch = [&]() {
        for (int k = 0; k < na; ++k) {
            double p, q;
            injections(ang_idx[k], p, q);
            mism(k) = p_spec[ang_idx[k]] - p;
        }
        for (int k = 0; k < nv; ++k) {
            double p, q;
            injections(volt_idx[k], p, q);
            mism(na + k) = q_spec[volt_idx[k]] - q;
        }
        return mism.size() ? mism.cwiseAbs().maxCoeff() : 0.0;
    };

    double max_mism = fill_mismatch();
    while (max_mism > opts.tolerance_pu && sol.iterations < opts.max_iterations) {
        // Standard polar Jacobian blocks.
        for (int r = 0; r < m; ++r) {
            const bool row_p = r < na;
            const int i = row_p ? ang_idx[r] : volt_idx[r - na];
            double pi, qi;
            injections(i, pi, qi);
            for (int cidx = 0; cidx < m; ++cidx) {
                const bool col_ang = cidx < na;
                const int j = col_ang ? ang_idx[cidx] : volt_idx[cidx - na];
                const double g = Y(i, j).real(), b = Y(i, j).imag();
                const double d = th[i] - th[j];
                double v = 0;
                if (row_p && col_ang) {
                    v = (i == j) ? -qi - b * V[i] * V[i]
                                 : V[i] * V[j] * (g * std::sin(d) - b * std::cos(d));
                } else if (row_p && !col_ang) {
                    v = (i == j) ? pi / V[i] + g * V[i]
                                 : V[i] * (g * std::cos(d) + b * std::sin(d));
                } else if (!row_p && col_ang) {
                    v = (i == j) ? pi - g * V[i] * V[i]
                                 : -V[i] * V[j] * (g * std::cos(d) + b * std::sin(d));
                } else {
                    v = (i == j) ? qi / V[i] - b * V[i]
                                 : V[i] * (g * std::sin(d) - b * std::cos(d));
                }
                J(r, cidx) = v;
            }
        }
        Eigen::VectorXd dx = J.partialPivLu().solve(mism);
        if (!dx.allFinite()) throw Error(Errc::Diverged, "power flow produced non-finite update");
        for (int k = 0; k < na; ++k) th[ang_idx[k]] += dx(k);
        for (int k = 0; k < nv; ++k) V[volt_idx[k]] += dx(na + k);
        for (int k = 0; k < nv; ++k)
            if (V[volt_idx[k]] <= 0) throw Error(Errc::Diverged, "voltage collapsed below zero");
        ++sol.iterations;
        max_mism = fill_mismatch();
    }
    if (max_mism > opts.tolerance_pu)
        throw Error(Errc::Diverged, "power flow did not converge: mismatch " + std::to_string(max_mism));

    sol.max_mismatch_pu = max_mism;
    sol.v_pu = V;
    sol.theta_rad = th;

    double losses_pu = 0;
    for (const auto& l : c.lines) {
        if (!l.in_service) continue;
        int i = c.bus_index(l.from), j = c.bus_index(l.to);
        cplx vi = std::polar(V[i], th[i]), vj = std::polar(V[j], th[j]);
        cplx y = 1.0 / cplx(l.r_pu, l.x_pu);
        cplx sf = vi * std::conj((vi - vj) * y);
        cplx st = vj * std::conj((vj - vi) * y);
        LineFlow f;
        f.from = l.from;
        f.to = l.to;
        f.p_from_mw = sf.real() * c.base_mva;
        f.q_from_mvar = sf.imag() * c.base_mva;
        f.p_to_mw = st.real() * c.base_mva;
        f.q_to_mvar = st.imag() * c.base_mva;
        f.loss_mw = (sf.real() + st.real()) * c.base_mva;
        f.loading_pct = std::max(std::abs(sf), std::abs(st)) * c.base_mva / l.mva_rating * 100.0;
        losses_pu += sf.real() + st.real();
        sol.flows.push_back(f);
    }
    sol.total_losses_mw = losses_pu * c.base_mva;

    double ps, qs;
    {
        double p = 0, q = 0;
        for (int j = 0; j < n; ++j) {
            const double g = Y(slack, j).real(), b = Y(slack, j).imag();
            const double d = th[slack] - th[j];
            p += V[slack] * V[j] * (g * std::cos(d) + b * std::sin(d));
            q += V[slack] * V[j] * (g * std::sin(d) - b * std::cos(d));
        }
        ps = p;
        qs = q;
    }
    // Report the generator output needed at the slack bus, not the net injection.
    sol.slack_p_mw = ps * c.base_mva + c.buses[slack].load_mw + c.buses[slack].attack_mw;
    sol.slack_q_mvar = qs * c.base_mva + c.buses[slack].load_mvar;
    return sol;
}

DispatchResult economic_dispatch(const std::vector<Generator>& gens, double demand_mw) {
    std::vector<size_t> live;
    double pmin_sum = 0, pmax_sum = 0;
    for (size_t i = 0; i < gens.size(); ++i) {
        if (!gens[i].in_service) continue;
        live.push_back(i);
        pmin_sum += gens[i].p_min_mw;
        pmax_sum += gens[i].p_max_mw;
    }
    if (live.empty()) throw Error(Errc::InfeasibleDemand, "no in-service generators");
    const double slop = 1e-7;
    if (demand_mw < pmin_sum - slop || demand_mw > pmax_sum + slop)
        throw Error(Errc::InfeasibleDemand,
                    "demand " + std::to_string(demand_mw) + " MW outside [" +
                        std::to_string(pmin_sum) + ", " + std::to_string(pmax_sum) + "]");
    demand_mw = std::clamp(demand_mw, pmin_sum, pmax_sum);

    auto output_at = [&](const Generator& g, double lam) {
        if (g.cost_c <= 0) return lam < g.cost_b ? g.p_min_mw : g.p_max_mw;
        return std::clamp((lam - g.cost_b) / (2 * g.cost_c), g.p_min_mw, g.p_max_mw);
    };
    auto total_at = [&](double lam) {
        double s = 0;
        for (size_t i : live) s += output_at(gens[i], lam);
        return s;
    };

    double lo = 0, hi = 0;
    bool first = true;
    for (size_t i : live) {
        const auto& g = gens[i];
        double ml = g.cost_b + 2 * g.cost_c * g.p_min_mw;
        double mh = g.cost_b + 2 * g.cost_c * g.p_max_mw;
        lo = first ? ml : std::min(lo, ml);
        hi = first ? mh : std::max(hi, mh);
        first = false;
    }
    lo -= 1.0;
    hi += 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (total_at(mid) < demand_mw) lo = mid;
        else hi = mid;
    }
    const double lambda = 0.5 * (lo + hi);

    DispatchResult r;
    r.p_mw.assign(gens.size(), 0.0);
    for (size_t i : live) r.p_mw[i] = output_at(gens[i], lambda);

    // Residual lands on units that are strictly interior (or, for flat-cost
    // units sitting exactly at the step, any headroom they have).
    double residual = demand_mw;
    for (size_t i : live) residual -= r.p_mw[i];
    if (std::abs(residual) > 1e-12) {
        for (size_t i : live) {
            const auto& g = gens[i];
            double room = residual > 0 ? g.p_max_mw - r.p_mw[i] : g.p_min_mw - r.p_mw[i];
            if (std::abs(room) < std::abs(residual)) continue;
            bool marginal = g.cost_c <= 0
                                ? std::abs(lambda - g.cost_b) < 1e-6
                                : r.p_mw[i] > g.p_min_mw + 1e-12 && r.p_mw[i] < g.p_max_mw - 1e-12;
            if (marginal || std::abs(residual) < 1e-6) {
                r.p_mw[i] += residual;
                residual = 0;
                break;
            }
        }
        if (std::abs(residual) > 1e-9) {
            // Spread whatever is left across headroom in bus order.
            for (size_t i : live) {
                double room = residual > 0 ? gens[i].p_max_mw - r.p_mw[i] : gens[i].p_min_mw - r.p_mw[i];
                double take = residual > 0 ? std::min(residual, room) : std::max(residual, room);
                r.p_mw[i] += take;
                residual -= take;
                if (std::abs(residual) < 1e-12) break;
            }
        }
    }

    r.lambda_usd_per_mwh = lambda;
    r.total_cost_usd_per_h = 0;
    for (size_t i : live) {
        const auto& g = gens[i];
        const double p = r.p_mw[i];
        r.total_cost_usd_per_h += g.cost_a + g.cost_b * p + g.cost_c * p * p;
    }
    return r;
}

DispatchedCase dispatch_and_solve(const GridCase& c, const PowerFlowOptions& opts) {
    DispatchedCase out;
    const double demand = c.total_load_mw() + c.total_attack_mw();
    out.demand_mw = demand;
    double losses = 0.0;
    for (int pass = 0; pass < 3; ++pass) {
        out.dispatch = economic_dispatch(c.generators, demand + losses);
        out.pf = solve_ac_power_flow(c, out.dispatch.p_mw, opts);
        if (std::abs(out.pf.total_losses_mw - losses) < 1e-9) {
            losses = out.pf.total_losses_mw;
            break;
        }
        losses = out.pf.total_losses_mw;
    }
    // Fold the slack residual into the slack-bus units so reported cost
    // matches delivered power.
    int slack_idx = -1;
    for (size_t i = 0; i < c.buses.size(); ++i)
        if (c.buses[i].kind == BusKind::Slack) slack_idx = static_cast<int>(i);
    const int slack_id = c.buses[slack_idx].id;
    double dispatched_slack = 0, cap_slack = 0;
    for (size_t g = 0; g < c.generators.size(); ++g) {
        if (!c.generators[g].in_service || c.generators[g].bus != slack_id) continue;
        dispatched_slack += out.dispatch.p_mw[g];
        cap_slack += c.generators[g].p_max_mw;
    }
    if (cap_slack > 0) {
        const double delta = out.pf.slack_p_mw - dispatched_slack;
        for (size_t g = 0; g < c.generators.size(); ++g) {
            if (!c.generators[g].in_service || c.generators[g].bus != slack_id) continue;
            out.dispatch.p_mw[g] += delta * c.generators[g].p_max_mw / cap_slack;
        }
        out.dispatch.total_cost_usd_per_h = 0;
        for (size_t g = 0; g < c.generators.size(); ++g) {
            if (!c.generators[g].in_service) continue;
            const auto& gen = c.generators[g];
            const double p = out.dispatch.p_mw[g];
            out.dispatch.total_cost_usd_per_h += gen.cost_a + gen.cost_b * p + gen.cost_c * p * p;
        }
    }
    return out;
}

namespace {

// Emergency island slack: the bus of the largest in-service unit.
int island_slack_bus(const GridCase& sub) {
    int best = -1;
    double best_cap = -1;
    for (const auto& g : sub.generators) {
        if (!g.in_service) continue;
        if (g.p_max_mw > best_cap || (g.p_max_mw == best_cap && g.bus < best)) {
            best_cap = g.p_max_mw;
            best = g.bus;
        }
    }
    return best;
}

} // namespace

CascadeReport cascade(const GridCase& c, const CascadeOptions& opts) {
    CascadeReport rep;
    const double total_consumer = c.total_load_mw();
    GridCase work = c;
    std::vector<double> serve_frac(work.buses.size(), 1.0);

    const int max_rounds = static_cast<int>(work.lines.size()) + 1;
    std::vector<LineFlow> prev_flows; // last fully solved round, for collapse fallback
    for (int round = 0; round < max_rounds; ++round) {
        auto comps = components(work);
        std::vector<LineFlow> all_flows;
        bool solved_all = true;
        for (const auto& comp : comps) {
            double demand = 0;
            std::vector<size_t> comp_gens;
            for (int bi : comp) {
                demand += work.buses[bi].load_mw * serve_frac[bi] + work.buses[bi].attack_mw * (serve_frac[bi] > 0 ? 1.0 : 0.0);
            }
            for (size_t g = 0; g < work.generators.size(); ++g)
                if (work.generators[g].in_service &&
                    std::find_if(comp.begin(), comp.end(), [&](int bi) {
                        return work.buses[bi].id == work.generators[g].bus;
                    }) != comp.end())
                    comp_gens.push_back(g);

            double cap = 0;
            for (size_t g : comp_gens) cap += work.generators[g].p_max_mw;

            if (demand <= 1e-9) continue; // idle island, nothing flows
            if (comp_gens.empty() || cap <= 0) {
                // Dead island: consumer load here is lost for good.
                for (int bi : comp) serve_frac[bi] = 0.0;
                continue;
            }
            // Capacity shortfall curtails the whole island proportionally
            // (sticky: serve fractions only ever decrease).
            double frac = 1.0;
            if (cap < demand) frac = std::max(0.0, cap * 0.995 / demand);
            for (int bi : comp)
                if (serve_frac[bi] > 0) serve_frac[bi] *= frac;

            // Build the island sub-case.
            GridCase sub;
            sub.name = work.name + "/island";
            sub.base_mva = work.base_mva;
            std::set<int> comp_ids;
            for (int bi : comp) {
                Bus b = work.buses[bi];
                b.load_mw *= serve_frac[bi];
                b.load_mvar *= serve_frac[bi];
                b.attack_mw *= (serve_frac[bi] > 0 ? frac : 0.0);
                comp_ids.insert(b.id);
                sub.buses.push_back(b);
            }
            for (const auto& l : work.lines)
                if (l.in_service && comp_ids.count(l.from) && comp_ids.count(l.to))
                    sub.lines.push_back(l);
            for (size_t g : comp_gens) sub.generators.push_back(work.generators[g]);

            // Keep the global slack if present, otherwise promote the largest unit's bus.
            bool has_slack = false;
            for (auto& b : sub.buses)
                if (b.kind == BusKind::Slack) has_slack = true;
            if (!has_slack) {
                int sb = island_slack_bus(sub);
                for (auto& b : sub.buses)
                    if (b.id == sb) b.kind = BusKind::Slack;
            }
            // Emergency operation: units may back down below their market floor.
            double sub_demand = 0;
            for (const auto& b : sub.buses) sub_demand += b.load_mw + b.attack_mw;
            double sub_pmin = 0;
            for (auto& g : sub.generators) sub_pmin += g.p_min_mw;
            if (sub_pmin > sub_demand)
                for (auto& g : sub.generators) g.p_min_mw = 0.0;

            try {
                auto solved = dispatch_and_solve(sub, opts.pf);
                for (const auto& f : solved.pf.flows) all_flows.push_back(f);
            } catch (const Error&) {
                solved_all = false;
            }
        }
        // Collapse fallback: a diverged island means voltage instability, and
        // distance protection clears the most-stressed line still in service,
        // judged from the last solvable state.
        const std::vector<LineFlow>& pool = solved_all ? all_flows : prev_flows;
        const LineFlow* worst = nullptr;
        for (const auto& f : pool) {
            if (f.loading_pct <= opts.trip_threshold_pct) continue;
            if (!solved_all) {
                bool live = false;
                for (const auto& l : work.lines)
                    if (l.in_service && l.from == f.from && l.to == f.to) { live = true; break; }
                if (!live) continue;
            }
            if (!worst || f.loading_pct > worst->loading_pct ||
                (f.loading_pct == worst->loading_pct &&
                 std::pair(f.from, f.to) < std::pair(worst->from, worst->to)))
                worst = &f;
        }
        if (!worst) {
            rep.diverged = !solved_all;
            break;
        }
        for (auto& l : work.lines)
            if (l.in_service && l.from == worst->from && l.to == worst->to) {
                l.in_service = false;
                break;
            }
        rep.tripped_lines.emplace_back(worst->from, worst->to);
        ++rep.iterations;
        if (solved_all) prev_flows = all_flows;
    }

    for (const auto& comp : components(work)) {
        std::vector<int> ids;
        for (int bi : comp) ids.push_back(work.buses[bi].id);
        std::sort(ids.begin(), ids.end());
        rep.islands.push_back(std::move(ids));
    }
    std::sort(rep.islands.begin(), rep.islands.end());
    for (size_t i = 0; i < work.buses.size(); ++i)
        rep.unserved_load_mw += work.buses[i].load_mw * (1.0 - serve_frac[i]);
    rep.unserved_fraction = total_consumer > 0 ? rep.unserved_load_mw / total_consumer : 0.0;
    return rep;
}

double annualize_delta(double cost_delta_usd_h, double hours_per_day, double days) {
    return cost_delta_usd_h * hours_per_day * days;
}

ImpactReport attack_impact_report(const GridCase& c, const std::map<int, double>& attack_bus_mw,
                                  int hour, const LoadProfile& profile) {
    GridCase scaled = scale_loads(c, profile, hour);
    auto before = dispatch_and_solve(scaled);
    auto after = dispatch_and_solve(with_attack(scaled, attack_bus_mw));

    ImpactReport r;
    r.hour = hour;
    r.served_load_mw = scaled.total_load_mw();
    for (const auto& [bus, mw] : attack_bus_mw) r.attack_mw += mw;
    r.losses_before_mw = before.pf.total_losses_mw;
    r.losses_after_mw = after.pf.total_losses_mw;
    r.loss_increase_pct = r.losses_before_mw > 1e-12
                              ? (r.losses_after_mw - r.losses_before_mw) / r.losses_before_mw * 100.0
                              : 0.0;
    r.cost_before_usd_h = before.dispatch.total_cost_usd_per_h;
    r.cost_after_usd_h = after.dispatch.total_cost_usd_per_h;
    r.cost_delta_usd_h = r.cost_after_usd_h - r.cost_before_usd_h;
    r.annualized_delta_usd = annualize_delta(r.cost_delta_usd_h);
    r.lambda_before = before.dispatch.lambda_usd_per_mwh;
    r.lambda_after = after.dispatch.lambda_usd_per_mwh;
    return r;
}

} // namespace evcosim::gridcore
