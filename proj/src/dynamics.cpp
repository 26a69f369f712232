#include "evcosim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "evcosim/error.hpp"

namespace evcosim::dynamics {

namespace {

std::string fmt_double(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void validate_machines(const gridcore::GridCase& c, const std::vector<MachineParams>& machines) {
    if (machines.empty()) throw Error(Errc::BadArguments, "no machines");
    for (std::size_t i = 0; i < machines.size(); ++i) {
        const auto& m = machines[i];
        const std::string at = "machine " + std::to_string(i);
        if (c.bus_index(m.bus) < 0) throw Error(Errc::BadArguments, at + ": unknown bus " + std::to_string(m.bus));
        if (!(m.p_rated_mw > 0)) throw Error(Errc::BadArguments, at + ": p_rated_mw must be positive");
        if (!(m.inertia_h_s > 0)) throw Error(Errc::BadArguments, at + ": inertia_h_s must be positive");
        if (!(m.governor_tc_s > 0)) throw Error(Errc::BadArguments, at + ": governor_tc_s must be positive");
        if (!(m.droop_r_pu > 0)) throw Error(Errc::BadArguments, at + ": droop_r_pu must be positive");
        if (m.damping_d_pu < 0) throw Error(Errc::BadArguments, at + ": damping_d_pu must be non-negative");
        if (m.agc_gain < 0) throw Error(Errc::BadArguments, at + ": agc_gain must be non-negative");
    }
}

} // namespace

std::vector<MachineParams> default_machines(const gridcore::GridCase& c) {
    std::vector<MachineParams> out;
    for (const auto& g : c.generators) {
        if (!g.in_service || g.p_max_mw <= 0) continue;
        MachineParams m;
        m.bus = g.bus;
        m.p_rated_mw = g.p_max_mw;
        out.push_back(m);
    }
    return out;
}

std::vector<ProtectionAction> protection_step(double freq_hz, double t_s,
                                              const ProtectionConfig& cfg,
                                              ProtectionState& state,
                                              double total_load_mw,
                                              const std::vector<MachineParams>& machines,
                                              const std::vector<bool>& in_service) {
    std::vector<ProtectionAction> actions;
    if (!cfg.enabled) return actions;
    if (machines.size() != in_service.size())
        throw Error(Errc::BadArguments, "machine/in_service size mismatch");

    if (freq_hz < cfg.ufls_threshold_hz && t_s >= state.ufls_lockout_until_s && total_load_mw > 0) {
        ProtectionAction a;
        a.kind = ProtectionAction::Kind::Shed;
        a.magnitude_mw = cfg.ufls_shed_fraction * total_load_mw;
        actions.push_back(a);
        state.ufls_lockout_until_s = t_s + cfg.ufls_lockout_s;
    }

    if (freq_hz <= cfg.of_trip_threshold_hz) {
        state.of_armed = true;
    } else if (state.of_armed) {
        int pick = -1;
        for (std::size_t i = 0; i < machines.size(); ++i) {
            if (!in_service[i]) continue;
            if (pick < 0 || machines[i].p_rated_mw > machines[pick].p_rated_mw) pick = int(i);
        }
        if (pick >= 0) {
            ProtectionAction a;
            a.kind = ProtectionAction::Kind::GenTrip;
            a.machine = pick;
            actions.push_back(a);
            state.of_armed = false;
        }
    }
    return actions;
}

double FrequencyTrace::min_freq_hz() const {
    double m = 60.0;
    for (const auto& s : samples) m = std::min(m, s.freq_hz);
    return m;
}

double FrequencyTrace::max_freq_hz() const {
    double m = 60.0;
    for (const auto& s : samples) m = std::max(m, s.freq_hz);
    return m;
}

int FrequencyTrace::dips_below(double freq_hz) const {
    int n = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i - 1].freq_hz >= freq_hz && samples[i].freq_hz < freq_hz) ++n;
    return n;
}

int FrequencyTrace::rises_above(double freq_hz) const {
    int n = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (samples[i - 1].freq_hz <= freq_hz && samples[i].freq_hz > freq_hz) ++n;
    return n;
}

std::string trace_event_kind_name(TraceEventKind k) {
    switch (k) {
        case TraceEventKind::AttackOn: return "AttackOn";
        case TraceEventKind::AttackOff: return "AttackOff";
        case TraceEventKind::Shed: return "Shed";
        case TraceEventKind::GenTrip: return "GenTrip";
    }
    return "?";
}

std::string trace_csv(const FrequencyTrace& t) {
    std::string out = "t_s,freq_hz,total_load_mw,total_gen_mw\n";
    for (const auto& s : t.samples) {
        out += fmt_double("%.3f", s.t_s);
        out += ',';
        out += fmt_double("%.6f", s.freq_hz);
        out += ',';
        out += fmt_double("%.6f", s.total_load_mw);
        out += ',';
        out += fmt_double("%.6f", s.total_gen_mw);
        out += '\n';
    }
    return out;
}

std::string events_csv(const FrequencyTrace& t) {
    std::string out = "t_s,kind,magnitude_mw,detail\n";
    for (const auto& e : t.events) {
        out += fmt_double("%.3f", e.t_s);
        out += ',';
        out += trace_event_kind_name(e.kind);
        out += ',';
        out += fmt_double("%.6f", e.magnitude_mw);
        out += ',';
        out += e.detail;
        out += '\n';
    }
    return out;
}

FrequencyTrace run_transient(const gridcore::GridCase& c,
                             std::vector<MachineParams> machines,
                             const ProtectionConfig& protection,
                             std::vector<LoadEvent> load_events,
                             double duration_s, double dt_s) {
    if (!(dt_s >= 0.001 && dt_s <= 0.05))
        throw Error(Errc::BadArguments, "dt_s must lie in [0.001, 0.05]");
    if (!(duration_s > 0)) throw Error(Errc::BadArguments, "duration_s must be positive");
    const double steps = duration_s / dt_s;
    if (steps > 5e6) throw Error(Errc::BadArguments, "too many integration steps");
    if (machines.empty()) machines = default_machines(c);
    validate_machines(c, machines);

    // Consumer plus attack load per bus; protection sheds scale every bus.
    std::map<int, double> bus_load;
    for (const auto& b : c.buses) {
        const double p = b.load_mw + b.attack_mw;
        if (p != 0) bus_load[b.id] = p;
    }

    const int n_steps = int(std::llround(std::ceil(steps - 1e-9)));
    for (std::size_t i = 0; i < load_events.size(); ++i) {
        const auto& e = load_events[i];
        const std::string at = "load event " + std::to_string(i);
        if (!(e.time_s >= 0 && e.time_s <= duration_s))
            throw Error(Errc::BadArguments, at + ": time outside [0, duration]");
        if (c.bus_index(e.bus) < 0)
            throw Error(Errc::BadArguments, at + ": unknown bus " + std::to_string(e.bus));
        if (!std::isfinite(e.delta_mw)) throw Error(Errc::BadArguments, at + ": bad delta");
    }
    std::stable_sort(load_events.begin(), load_events.end(),
                     [](const LoadEvent& a, const LoadEvent& b) { return a.time_s < b.time_s; });

    const std::size_t n = machines.size();
    std::vector<bool> in_service(n, true);
    std::vector<double> pm(n), pref(n);

    auto total_load = [&] {
        double s = 0;
        for (const auto& [_, p] : bus_load) s += p;
        return s;
    };
    auto capacity = [&] {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (in_service[i]) s += machines[i].p_rated_mw;
        return s;
    };

    const double cap0 = capacity();
    double load_now = total_load();
    for (std::size_t i = 0; i < n; ++i) {
        pm[i] = load_now * machines[i].p_rated_mw / cap0;
        pref[i] = pm[i];
    }
    double dw = 0.0; // speed deviation, per unit of synchronous speed

    FrequencyTrace trace;
    trace.dt_s = dt_s;
    trace.samples.reserve(std::size_t(n_steps) + 1);
    ProtectionState prot_state;

    auto derivatives = [&](double w, const std::vector<double>& pm_v, const std::vector<double>& pref_v,
                           double pe_tot, double& dwdt, std::vector<double>& dpm, std::vector<double>& dpref) {
        double pm_tot = 0, m_sys = 0, d_sys = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_service[i]) continue;
            pm_tot += pm_v[i];
            m_sys += 2.0 * machines[i].inertia_h_s * machines[i].p_rated_mw;
            d_sys += machines[i].damping_d_pu * machines[i].p_rated_mw;
        }
        dwdt = (pm_tot - pe_tot - d_sys * w) / m_sys;
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_service[i]) {
                dpm[i] = dpref[i] = 0;
                continue;
            }
            const auto& mc = machines[i];
            dpm[i] = (pref_v[i] - pm_v[i] - w / mc.droop_r_pu * mc.p_rated_mw) / mc.governor_tc_s;
            dpref[i] = -mc.agc_gain * mc.p_rated_mw * w;
        }
    };

    std::size_t next_event = 0;
    std::vector<double> k1p(n), k2p(n), k3p(n), k4p(n);
    std::vector<double> k1r(n), k2r(n), k3r(n), k4r(n);
    std::vector<double> tp(n), tr(n);

    for (int k = 0; k <= n_steps; ++k) {
        const double t = k * dt_s;

        // Attack steps due at this grid point (times snap up to the grid).
        while (next_event < load_events.size()) {
            const auto& e = load_events[next_event];
            const int due = int(std::llround(std::ceil(e.time_s / dt_s - 1e-9)));
            if (due > k) break;
            if (e.delta_mw != 0) {
                bus_load[e.bus] += e.delta_mw;
                TraceEvent ev;
                ev.t_s = t;
                ev.kind = e.delta_mw > 0 ? TraceEventKind::AttackOn : TraceEventKind::AttackOff;
                ev.magnitude_mw = std::abs(e.delta_mw);
                ev.detail = "bus " + std::to_string(e.bus);
                trace.events.push_back(ev);
            }
            ++next_event;
        }

        const double freq = 60.0 * (1.0 + dw);
        load_now = total_load();
        for (const auto& a : protection_step(freq, t, protection, prot_state, load_now, machines, in_service)) {
            TraceEvent ev;
            ev.t_s = t;
            if (a.kind == ProtectionAction::Kind::Shed) {
                const double before = load_now;
                const double scale = before > 0 ? (before - a.magnitude_mw) / before : 0.0;
                for (auto& [_, p] : bus_load) p *= scale;
                load_now = total_load();
                ev.kind = TraceEventKind::Shed;
                ev.magnitude_mw = before - load_now;
                ev.detail = "ufls";
            } else {
                in_service[a.machine] = false;
                ev.kind = TraceEventKind::GenTrip;
                ev.magnitude_mw = pm[a.machine];
                ev.detail = "bus " + std::to_string(machines[a.machine].bus);
                pm[a.machine] = pref[a.machine] = 0;
            }
            trace.events.push_back(ev);
        }

        double pm_tot = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (in_service[i]) pm_tot += pm[i];
        TraceSample s;
        s.t_s = t;
        s.freq_hz = freq;
        s.total_load_mw = load_now;
        s.total_gen_mw = pm_tot;
        trace.samples.push_back(s);

        if (capacity() < load_now - 1e-9) {
            trace.outcome = TraceOutcome::NearBlackout;
            break;
        }
        if (k == n_steps) break;

        // RK4 over [t, t+dt] with the load held constant.
        const double pe = load_now;
        double kw1, kw2, kw3, kw4;
        derivatives(dw, pm, pref, pe, kw1, k1p, k1r);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = pm[i] + 0.5 * dt_s * k1p[i];
            tr[i] = pref[i] + 0.5 * dt_s * k1r[i];
        }
        derivatives(dw + 0.5 * dt_s * kw1, tp, tr, pe, kw2, k2p, k2r);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = pm[i] + 0.5 * dt_s * k2p[i];
            tr[i] = pref[i] + 0.5 * dt_s * k2r[i];
        }
        derivatives(dw + 0.5 * dt_s * kw2, tp, tr, pe, kw3, k3p, k3r);
        for (std::size_t i = 0; i < n; ++i) {
            tp[i] = pm[i] + dt_s * k3p[i];
            tr[i] = pref[i] + dt_s * k3r[i];
        }
        derivatives(dw + dt_s * kw3, tp, tr, pe, kw4, k4p, k4r);

        dw += dt_s / 6.0 * (kw1 + 2 * kw2 + 2 * kw3 + kw4);
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_service[i]) continue;
            pm[i] += dt_s / 6.0 * (k1p[i] + 2 * k2p[i] + 2 * k3p[i] + k4p[i]);
            pref[i] += dt_s / 6.0 * (k1r[i] + 2 * k2r[i] + 2 * k3r[i] + k4r[i]);
            pm[i] = std::clamp(pm[i], 0.0, machines[i].p_rated_mw);
            pref[i] = std::clamp(pref[i], 0.0, machines[i].p_rated_mw);
        }
        if (std::abs(dw) > 0.10)
            throw Error(Errc::UnstableIntegration,
                        "speed deviation " + std::to_string(dw) + " pu at t=" + std::to_string(t + dt_s));
    }
    return trace;
}

} // namespace evcosim::dynamics
