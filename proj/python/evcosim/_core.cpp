#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evcosim/botnet.hpp"
#include "evcosim/dynamics.hpp"
#include "evcosim/ecosim.hpp"
#include "evcosim/gridcore.hpp"
#include "evcosim/scenario.hpp"

namespace py = pybind11;
using namespace evcosim;

namespace {

void bind_gridcore(py::module_& m) {
    using namespace gridcore;
    auto g = m.def_submodule("grid", "grid model: cases, power flow, dispatch, cascade");

    py::enum_<BusKind>(g, "BusKind")
        .value("Slack", BusKind::Slack)
        .value("PV", BusKind::PV)
        .value("PQ", BusKind::PQ);

    py::class_<Bus>(g, "Bus")
        .def(py::init<>())
        .def_readwrite("id", &Bus::id)
        .def_readwrite("kind", &Bus::kind)
        .def_readwrite("load_mw", &Bus::load_mw)
        .def_readwrite("load_mvar", &Bus::load_mvar)
        .def_readwrite("attack_mw", &Bus::attack_mw)
        .def_readwrite("v_setpoint_pu", &Bus::v_setpoint_pu);

    py::class_<Line>(g, "Line")
        .def(py::init<>())
        .def_readwrite("from_bus", &Line::from)
        .def_readwrite("to_bus", &Line::to)
        .def_readwrite("r_pu", &Line::r_pu)
        .def_readwrite("x_pu", &Line::x_pu)
        .def_readwrite("mva_rating", &Line::mva_rating)
        .def_readwrite("in_service", &Line::in_service);

    py::class_<Generator>(g, "Generator")
        .def(py::init<>())
        .def_readwrite("bus", &Generator::bus)
        .def_readwrite("p_min_mw", &Generator::p_min_mw)
        .def_readwrite("p_max_mw", &Generator::p_max_mw)
        .def_readwrite("cost_a", &Generator::cost_a)
        .def_readwrite("cost_b", &Generator::cost_b)
        .def_readwrite("cost_c", &Generator::cost_c)
        .def_readwrite("in_service", &Generator::in_service);

    py::class_<GridCase>(g, "GridCase")
        .def(py::init<>())
        .def_readwrite("name", &GridCase::name)
        .def_readwrite("base_mva", &GridCase::base_mva)
        .def_readwrite("buses", &GridCase::buses)
        .def_readwrite("lines", &GridCase::lines)
        .def_readwrite("generators", &GridCase::generators)
        .def("total_load_mw", &GridCase::total_load_mw)
        .def("total_attack_mw", &GridCase::total_attack_mw);

    py::class_<LoadProfile>(g, "LoadProfile")
        .def(py::init<>())
        .def_readwrite("hourly_mw", &LoadProfile::hourly_mw)
        .def("average_mw", &LoadProfile::average_mw);

    py::class_<LineFlow>(g, "LineFlow")
        .def_readonly("from_bus", &LineFlow::from)
        .def_readonly("to_bus", &LineFlow::to)
        .def_readonly("p_from_mw", &LineFlow::p_from_mw)
        .def_readonly("q_from_mvar", &LineFlow::q_from_mvar)
        .def_readonly("p_to_mw", &LineFlow::p_to_mw)
        .def_readonly("q_to_mvar", &LineFlow::q_to_mvar)
        .def_readonly("loss_mw", &LineFlow::loss_mw)
        .def_readonly("loading_pct", &LineFlow::loading_pct);

    py::class_<PowerFlowSolution>(g, "PowerFlowSolution")
        .def_readonly("v_pu", &PowerFlowSolution::v_pu)
        .def_readonly("theta_rad", &PowerFlowSolution::theta_rad)
        .def_readonly("flows", &PowerFlowSolution::flows)
        .def_readonly("total_losses_mw", &PowerFlowSolution::total_losses_mw)
        .def_readonly("slack_p_mw", &PowerFlowSolution::slack_p_mw)
        .def_readonly("slack_q_mvar", &PowerFlowSolution::slack_q_mvar)
        .def_readonly("iterations", &PowerFlowSolution::iterations);

    py::class_<DispatchResult>(g, "DispatchResult")
        .def_readonly("p_mw", &DispatchResult::p_mw)
        .def_readonly("lambda_usd_per_mwh", &DispatchResult::lambda_usd_per_mwh)
        .def_readonly("total_cost_usd_per_h", &DispatchResult::total_cost_usd_per_h);

    py::class_<DispatchedCase>(g, "DispatchedCase")
        .def_readonly("dispatch", &DispatchedCase::dispatch)
        .def_readonly("pf", &DispatchedCase::pf)
        .def_readonly("demand_mw", &DispatchedCase::demand_mw);

    py::class_<CascadeReport>(g, "CascadeReport")
        .def_readonly("tripped_lines", &CascadeReport::tripped_lines)
        .def_readonly("islands", &CascadeReport::islands)
        .def_readonly("unserved_load_mw", &CascadeReport::unserved_load_mw)
        .def_readonly("unserved_fraction", &CascadeReport::unserved_fraction)
        .def_readonly("iterations", &CascadeReport::iterations)
        .def_readonly("diverged", &CascadeReport::diverged);

    py::class_<ImpactReport>(g, "ImpactReport")
        .def_readonly("hour", &ImpactReport::hour)
        .def_readonly("served_load_mw", &ImpactReport::served_load_mw)
        .def_readonly("attack_mw", &ImpactReport::attack_mw)
        .def_readonly("losses_before_mw", &ImpactReport::losses_before_mw)
        .def_readonly("losses_after_mw", &ImpactReport::losses_after_mw)
        .def_readonly("loss_increase_pct", &ImpactReport::loss_increase_pct)
        .def_readonly("cost_before_usd_h", &ImpactReport::cost_before_usd_h)
        .def_readonly("cost_after_usd_h", &ImpactReport::cost_after_usd_h)
        .def_readonly("cost_delta_usd_h", &ImpactReport::cost_delta_usd_h)
        .def_readonly("annualized_delta_usd", &ImpactReport::annualized_delta_usd)
        .def_readonly("lambda_before", &ImpactReport::lambda_before)
        .def_readonly("lambda_after", &ImpactReport::lambda_after);

    py::enum_<AttackDistribution>(g, "AttackDistribution")
        .value("Proportional", AttackDistribution::Proportional)
        .value("Equal", AttackDistribution::Equal)
        .value("Random", AttackDistribution::Random);

    g.def("load_case", &load_case, py::arg("path"));
    g.def("parse_case", &parse_case, py::arg("text"), py::arg("origin") = "<string>");
    g.def("validate_case", &validate_case);
    g.def("load_profile", &load_profile, py::arg("path"));
    g.def("parse_profile", &parse_profile, py::arg("text"), py::arg("origin") = "<string>");
    g.def("scale_loads", &scale_loads, py::arg("grid_case"), py::arg("profile"), py::arg("hour"));
    g.def("with_attack", &with_attack, py::arg("grid_case"), py::arg("attack_bus_mw"));
    g.def("distribute_attack", &distribute_attack, py::arg("grid_case"), py::arg("total_mw"),
          py::arg("distribution"), py::arg("seed"));
    g.def(
        "solve_ac_power_flow",
        [](const GridCase& c, const std::vector<double>& gen_p) {
            return solve_ac_power_flow(c, gen_p);
        },
        py::arg("grid_case"), py::arg("gen_p_mw"));
    g.def("economic_dispatch", &economic_dispatch, py::arg("generators"), py::arg("demand_mw"));
    g.def(
        "dispatch_and_solve", [](const GridCase& c) { return dispatch_and_solve(c); },
        py::arg("grid_case"));
    g.def(
        "cascade", [](const GridCase& c) { return cascade(c); }, py::arg("grid_case"));
    g.def("annualize_delta", &annualize_delta, py::arg("cost_delta_usd_h"),
          py::arg("hours_per_day") = 1.0, py::arg("days") = 365.0);
    g.def("attack_impact_report", &attack_impact_report, py::arg("grid_case"),
          py::arg("attack_bus_mw"), py::arg("hour"), py::arg("profile"));
}

void bind_dynamics(py::module_& m) {
    using namespace dynamics;
    auto d = m.def_submodule("dynamics", "transient frequency simulation and protection scheme");

    py::class_<MachineParams>(d, "MachineParams")
        .def(py::init<>())
        .def_readwrite("bus", &MachineParams::bus)
        .def_readwrite("inertia_h_s", &MachineParams::inertia_h_s)
        .def_readwrite("damping_d_pu", &MachineParams::damping_d_pu)
        .def_readwrite("droop_r_pu", &MachineParams::droop_r_pu)
        .def_readwrite("governor_tc_s", &MachineParams::governor_tc_s)
        .def_readwrite("p_rated_mw", &MachineParams::p_rated_mw)
        .def_readwrite("agc_gain", &MachineParams::agc_gain);

    py::class_<ProtectionConfig>(d, "ProtectionConfig")
        .def(py::init<>())
        .def_readwrite("enabled", &ProtectionConfig::enabled)
        .def_readwrite("ufls_threshold_hz", &ProtectionConfig::ufls_threshold_hz)
        .def_readwrite("ufls_shed_fraction", &ProtectionConfig::ufls_shed_fraction)
        .def_readwrite("ufls_lockout_s", &ProtectionConfig::ufls_lockout_s)
        .def_readwrite("of_trip_threshold_hz", &ProtectionConfig::of_trip_threshold_hz);

    py::class_<ProtectionState>(d, "ProtectionState")
        .def(py::init<>())
        .def_readwrite("ufls_lockout_until_s", &ProtectionState::ufls_lockout_until_s)
        .def_readwrite("of_armed", &ProtectionState::of_armed);

    py::enum_<ProtectionAction::Kind>(d, "ProtectionActionKind")
        .value("Shed", ProtectionAction::Kind::Shed)
        .value("GenTrip", ProtectionAction::Kind::GenTrip);

    py::class_<ProtectionAction>(d, "ProtectionAction")
        .def_readonly("kind", &ProtectionAction::kind)
        .def_readonly("magnitude_mw", &ProtectionAction::magnitude_mw)
        .def_readonly("machine", &ProtectionAction::machine);

    py::class_<LoadEvent>(d, "LoadEvent")
        .def(py::init<>())
        .def(py::init([](double t, int bus, double delta) {
                 return LoadEvent{t, bus, delta};
             }),
             py::arg("time_s"), py::arg("bus"), py::arg("delta_mw"))
        .def_readwrite("time_s", &LoadEvent::time_s)
        .def_readwrite("bus", &LoadEvent::bus)
        .def_readwrite("delta_mw", &LoadEvent::delta_mw);

    py::class_<TraceSample>(d, "TraceSample")
        .def_readonly("t_s", &TraceSample::t_s)
        .def_readonly("freq_hz", &TraceSample::freq_hz)
        .def_readonly("total_load_mw", &TraceSample::total_load_mw)
        .def_readonly("total_gen_mw", &TraceSample::total_gen_mw);

    py::enum_<TraceEventKind>(d, "TraceEventKind")
        .value("AttackOn", TraceEventKind::AttackOn)
        .value("AttackOff", TraceEventKind::AttackOff)
        .value("Shed", TraceEventKind::Shed)
        .value("GenTrip", TraceEventKind::GenTrip);

    py::class_<TraceEvent>(d, "TraceEvent")
        .def_readonly("t_s", &TraceEvent::t_s)
        .def_readonly("kind", &TraceEvent::kind)
        .def_readonly("magnitude_mw", &TraceEvent::magnitude_mw)
        .def_readonly("detail", &TraceEvent::detail);

    py::enum_<TraceOutcome>(d, "TraceOutcome")
        .value("Completed", TraceOutcome::Completed)
        .value("NearBlackout", TraceOutcome::NearBlackout);

    py::class_<FrequencyTrace>(d, "FrequencyTrace")
        .def_readonly("dt_s", &FrequencyTrace::dt_s)
        .def_readonly("samples", &FrequencyTrace::samples)
        .def_readonly("events", &FrequencyTrace::events)
        .def_readonly("outcome", &FrequencyTrace::outcome)
        .def("min_freq_hz", &FrequencyTrace::min_freq_hz)
        .def("max_freq_hz", &FrequencyTrace::max_freq_hz)
        .def("dips_below", &FrequencyTrace::dips_below, py::arg("freq_hz"))
        .def("rises_above", &FrequencyTrace::rises_above, py::arg("freq_hz"));

    d.attr("DEFAULT_AGC_GAIN") = kDefaultAgcGain;
    d.def("default_machines", &default_machines, py::arg("grid_case"));
    d.def("protection_step", &protection_step, py::arg("freq_hz"), py::arg("t_s"), py::arg("config"),
          py::arg("state"), py::arg("total_load_mw"), py::arg("machines"), py::arg("in_service"));
    d.def("run_transient", &run_transient, py::arg("grid_case"), py::arg("machines"),
          py::arg("protection"), py::arg("load_events"), py::arg("duration_s"),
          py::arg("dt_s") = 0.01);
    d.def("trace_csv", &trace_csv, py::arg("trace"));
    d.def("events_csv", &events_csv, py::arg("trace"));
    d.def("trace_event_kind_name", &trace_event_kind_name, py::arg("kind"));
}

void bind_ecosim(py::module_& m) {
    using namespace ecosim;
    auto e = m.def_submodule("eco", "charging ecosystem: CMS, stations, apps, audit");

    py::enum_<Phase>(e, "Phase")
        .value("S1", Phase::S1)
        .value("S2", Phase::S2)
        .value("S3", Phase::S3)
        .value("S4", Phase::S4);

    py::enum_<Classification>(e, "Classification")
        .value("Legal", Classification::Legal)
        .value("HijackSuspect", Classification::HijackSuspect)
        .value("OtherIllegal", Classification::OtherIllegal);

    py::class_<EcosystemTuple>(e, "EcosystemTuple")
        .def(py::init<>())
        .def(py::init([](Phase c, Phase v, Phase a) {
                 return EcosystemTuple{c, v, a};
             }),
             py::arg("cms"), py::arg("evcs"), py::arg("app"))
        .def_readwrite("cms", &EcosystemTuple::cms)
        .def_readwrite("evcs", &EcosystemTuple::evcs)
        .def_readwrite("app", &EcosystemTuple::app)
        .def("__eq__", [](const EcosystemTuple& a, const EcosystemTuple& b) { return a == b; });

    py::class_<PolicyConfig>(e, "PolicyConfig")
        .def(py::init<>())
        .def_readwrite("verify_ownership", &PolicyConfig::verify_ownership)
        .def_readwrite("authorize_critical", &PolicyConfig::authorize_critical)
        .def_readwrite("require_station_code", &PolicyConfig::require_station_code)
        .def_readwrite("proximity_check", &PolicyConfig::proximity_check)
        .def_readwrite("rate_limit_count", &PolicyConfig::rate_limit_count)
        .def_readwrite("rate_limit_window_s", &PolicyConfig::rate_limit_window_s)
        .def_readwrite("grace_period_s", &PolicyConfig::grace_period_s);

    py::class_<UserAccount>(e, "UserAccount")
        .def(py::init<>())
        .def_readwrite("id", &UserAccount::id)
        .def_readwrite("owned_vins", &UserAccount::owned_vins)
        .def_readwrite("adversarial", &UserAccount::adversarial);

    py::class_<StationRecord>(e, "StationRecord")
        .def(py::init<>())
        .def_readwrite("id", &StationRecord::id)
        .def_readwrite("bus", &StationRecord::bus)
        .def_readwrite("connector_kw", &StationRecord::connector_kw)
        .def_readwrite("pairing_code", &StationRecord::pairing_code)
        .def_readonly("cms_state", &StationRecord::cms_state)
        .def_readonly("evcs_state", &StationRecord::evcs_state)
        .def_readonly("connected_vin", &StationRecord::connected_vin)
        .def_readonly("session_user", &StationRecord::session_user);

    py::class_<SessionRecord>(e, "SessionRecord")
        .def(py::init<>())
        .def_readwrite("id", &SessionRecord::id)
        .def_readwrite("user_id", &SessionRecord::user_id)
        .def_readwrite("station_id", &SessionRecord::station_id)
        .def_readwrite("vin", &SessionRecord::vin)
        .def_readwrite("started_s", &SessionRecord::started_s)
        .def_readwrite("stopped_s", &SessionRecord::stopped_s);

    py::enum_<CommandKind>(e, "CommandKind")
        .value("StartCharge", CommandKind::StartCharge)
        .value("StopCharge", CommandKind::StopCharge);

    py::class_<Command>(e, "Command")
        .def(py::init<>())
        .def_readwrite("kind", &Command::kind)
        .def_readwrite("user_id", &Command::user_id)
        .def_readwrite("station_id", &Command::station_id)
        .def_readwrite("vin", &Command::vin)
        .def_readwrite("station_code", &Command::station_code)
        .def_readwrite("at_station", &Command::at_station)
        .def_readwrite("time_s", &Command::time_s);

    py::enum_<CmsDecision::Outcome>(e, "CmsOutcome")
        .value("Forwarded", CmsDecision::Outcome::Forwarded)
        .value("Denied", CmsDecision::Outcome::Denied)
        .value("RateLimited", CmsDecision::Outcome::RateLimited);

    py::enum_<DenyReason>(e, "DenyReason")
        .value("NoReason", DenyReason::None)
        .value("UnknownUser", DenyReason::UnknownUser)
        .value("UnknownStation", DenyReason::UnknownStation)
        .value("StationCodeMismatch", DenyReason::StationCodeMismatch)
        .value("ProximityFailed", DenyReason::ProximityFailed)
        .value("OwnershipMismatch", DenyReason::OwnershipMismatch)
        .value("NotInitiator", DenyReason::NotInitiator);

    py::class_<CmsDecision>(e, "CmsDecision")
        .def_readonly("outcome", &CmsDecision::outcome)
        .def_readonly("reason", &CmsDecision::reason);

    py::enum_<EvcsOutcome::Kind>(e, "EvcsKind")
        .value("ChargingStarted", EvcsOutcome::Kind::ChargingStarted)
        .value("GraceEntered", EvcsOutcome::Kind::GraceEntered)
        .value("GraceCancelled", EvcsOutcome::Kind::GraceCancelled)
        .value("ChargingStopped", EvcsOutcome::Kind::ChargingStopped)
        .value("Rejected", EvcsOutcome::Kind::Rejected);

    py::class_<EvcsOutcome>(e, "EvcsOutcome")
        .def_readonly("kind", &EvcsOutcome::kind)
        .def_readonly("reject", &EvcsOutcome::reject);

    py::class_<AuditRow>(e, "AuditRow")
        .def_readonly("time_s", &AuditRow::time_s)
        .def_readonly("entity", &AuditRow::entity)
        .def_readonly("event", &AuditRow::event)
        .def_readonly("tuple", &AuditRow::tuple)
        .def_readonly("classification", &AuditRow::classification);

    py::class_<ClassificationCounts>(e, "ClassificationCounts")
        .def_readonly("legal", &ClassificationCounts::legal)
        .def_readonly("hijack_suspect", &ClassificationCounts::hijack_suspect)
        .def_readonly("other_illegal", &ClassificationCounts::other_illegal);

    py::class_<World::CommandResult>(e, "CommandResult")
        .def_readonly("decision", &World::CommandResult::decision)
        .def_readonly("evcs", &World::CommandResult::evcs);

    py::class_<World>(e, "World")
        .def(py::init<PolicyConfig>(), py::arg("policy"))
        .def("add_user", &World::add_user, py::arg("user"))
        .def("add_station", &World::add_station, py::arg("station"))
        .def("advance_to", &World::advance_to, py::arg("time_s"))
        .def("now", &World::now)
        .def("login", &World::login, py::arg("user_id"))
        .def("logout", &World::logout, py::arg("user_id"))
        .def("submit_command", &World::submit_command, py::arg("command"))
        .def("plug_vehicle", &World::plug_vehicle, py::arg("station_id"), py::arg("vin"))
        .def("unplug_vehicle", &World::unplug_vehicle, py::arg("station_id"))
        .def("station_tuple", &World::station_tuple, py::arg("station_id"))
        .def("sessions", [](const World& w) { return w.registry().sessions; })
        .def("station", [](const World& w, const std::string& id) {
            return w.registry().stations.at(id);
        })
        .def("audit", &World::audit)
        .def("classification_counts", &World::classification_counts);

    py::class_<ReachabilityReport>(e, "ReachabilityReport")
        .def_readonly("tuples", &ReachabilityReport::tuples)
        .def_readonly("states_explored", &ReachabilityReport::states_explored)
        .def_readonly("max_depth_reached", &ReachabilityReport::max_depth_reached)
        .def("contains", &ReachabilityReport::contains, py::arg("tuple"))
        .def("illegal_count", &ReachabilityReport::illegal_count);

    e.def("classify_tuple", &classify_tuple, py::arg("tuple"));
    e.def("classification_name", &classification_name, py::arg("classification"));
    e.def("phase_name", &phase_name, py::arg("phase"));
    e.def("audit_csv", &audit_csv, py::arg("rows"));
    e.def("enumerate_reachable", &enumerate_reachable, py::arg("policy"), py::arg("n_users"),
          py::arg("n_stations"), py::arg("max_depth"), py::arg("state_budget") = 2000000);
}

void bind_botnet(py::module_& m) {
    using namespace botnet;
    auto b = m.def_submodule("botnet", "reconnaissance, attack planning and execution");

    py::class_<ArrivalModel>(b, "ArrivalModel")
        .def(py::init<>())
        .def_readwrite("weekday", &ArrivalModel::weekday)
        .def_readwrite("weekend", &ArrivalModel::weekend);

    py::class_<AttackWindow>(b, "AttackWindow")
        .def_readonly("start_hour", &AttackWindow::start_hour)
        .def_readonly("end_hour", &AttackWindow::end_hour)
        .def_readonly("expected_connected", &AttackWindow::expected_connected);

    py::enum_<OccupancyEvent::Kind>(b, "OccupancyKind")
        .value("Plug", OccupancyEvent::Kind::Plug)
        .value("Unplug", OccupancyEvent::Kind::Unplug)
        .value("Start", OccupancyEvent::Kind::Start)
        .value("Stop", OccupancyEvent::Kind::Stop);

    py::class_<OccupancyEvent>(b, "OccupancyEvent")
        .def(py::init<>())
        .def(py::init([](double t, OccupancyEvent::Kind k, std::string station, std::string vin) {
                 return OccupancyEvent{t, k, std::move(station), std::move(vin)};
             }),
             py::arg("time_s"), py::arg("kind"), py::arg("station_id"), py::arg("vin") = "")
        .def_readwrite("time_s", &OccupancyEvent::time_s)
        .def_readwrite("kind", &OccupancyEvent::kind)
        .def_readwrite("station_id", &OccupancyEvent::station_id)
        .def_readwrite("vin", &OccupancyEvent::vin);

    py::class_<HijackPlan>(b, "HijackPlan")
        .def(py::init<>())
        .def_readwrite("target_station", &HijackPlan::target_station)
        .def_readwrite("probe_min_s", &HijackPlan::probe_min_s)
        .def_readwrite("probe_max_s", &HijackPlan::probe_max_s);

    py::class_<MassChargePlan>(b, "MassChargePlan")
        .def(py::init<>())
        .def_readwrite("bus_mw", &MassChargePlan::bus_mw)
        .def_readwrite("start_s", &MassChargePlan::start_s);

    py::class_<OscillatoryPlan>(b, "OscillatoryPlan")
        .def(py::init<>())
        .def_readwrite("buses", &OscillatoryPlan::buses)
        .def_readwrite("start_s", &OscillatoryPlan::start_s)
        .def_readwrite("on_duration_s", &OscillatoryPlan::on_duration_s)
        .def_readwrite("cycle_period_s", &OscillatoryPlan::cycle_period_s)
        .def_readwrite("initial_mw_per_bus", &OscillatoryPlan::initial_mw_per_bus)
        .def_readwrite("increment_mw_per_bus", &OscillatoryPlan::increment_mw_per_bus)
        .def_readwrite("cycles", &OscillatoryPlan::cycles);

    py::class_<TargetedTripPlan>(b, "TargetedTripPlan")
        .def(py::init<>())
        .def_readwrite("bus_mw", &TargetedTripPlan::bus_mw);

    py::class_<V2GAmplifiedPlan>(b, "V2GAmplifiedPlan")
        .def(py::init<>())
        .def_readwrite("oscillation", &V2GAmplifiedPlan::oscillation)
        .def_readwrite("discharge_mw_per_bus", &V2GAmplifiedPlan::discharge_mw_per_bus);

    py::class_<LoadEvent>(b, "LoadEvent")
        .def_readonly("time_s", &LoadEvent::time_s)
        .def_readonly("bus", &LoadEvent::bus)
        .def_readonly("delta_mw", &LoadEvent::delta_mw);

    py::class_<HijackReport>(b, "HijackReport")
        .def_readonly("attempts", &HijackReport::attempts)
        .def_readonly("success", &HijackReport::success)
        .def_readonly("success_time_s", &HijackReport::success_time_s)
        .def_readonly("denied", &HijackReport::denied)
        .def_readonly("rate_limited", &HijackReport::rate_limited)
        .def_readonly("rejected", &HijackReport::rejected);

    b.def("default_arrival_model", &default_arrival_model);
    b.def(
        "estimate_attack_windows",
        [](const std::array<double, 24>& hourly, int dwell) {
            return estimate_attack_windows(hourly, dwell);
        },
        py::arg("hourly_arrivals"), py::arg("dwell_hours") = 2);
    b.def("oscillatory_schedule", &oscillatory_schedule, py::arg("plan"));
    b.def("v2g_schedule", &v2g_schedule, py::arg("plan"));
    b.def("attack_schedule", &attack_schedule, py::arg("plan"));
    b.def("execute_hijack", &execute_hijack, py::arg("world"), py::arg("plan"),
          py::arg("attacker_id"), py::arg("horizon_s"), py::arg("seed"),
          py::arg("timeline") = std::vector<OccupancyEvent>{});
}

void bind_scenario(py::module_& m) {
    using namespace scenario;
    auto s = m.def_submodule("scenario", "scenario files, coupled runs and reporting");

    py::class_<PopulationConfig>(s, "PopulationConfig")
        .def(py::init<>())
        .def_readwrite("n_victims", &PopulationConfig::n_victims)
        .def_readwrite("n_bots", &PopulationConfig::n_bots)
        .def_readwrite("stations_per_bus", &PopulationConfig::stations_per_bus)
        .def_readwrite("connector_kw", &PopulationConfig::connector_kw);

    py::class_<ArrivalConfig>(s, "ArrivalConfig")
        .def(py::init<>())
        .def_readwrite("weekend", &ArrivalConfig::weekend)
        .def_readwrite("start_hour", &ArrivalConfig::start_hour)
        .def_readwrite("model", &ArrivalConfig::model)
        .def_readwrite("start_delay_min_s", &ArrivalConfig::start_delay_min_s)
        .def_readwrite("start_delay_max_s", &ArrivalConfig::start_delay_max_s)
        .def_readwrite("charge_min_s", &ArrivalConfig::charge_min_s)
        .def_readwrite("charge_max_s", &ArrivalConfig::charge_max_s)
        .def_readwrite("dwell_mu_log", &ArrivalConfig::dwell_mu_log)
        .def_readwrite("dwell_sigma_log", &ArrivalConfig::dwell_sigma_log);

    py::class_<SimConfig>(s, "SimConfig")
        .def(py::init<>())
        .def_readwrite("horizon_s", &SimConfig::horizon_s)
        .def_readwrite("macro_step_s", &SimConfig::macro_step_s)
        .def_readwrite("dt_s", &SimConfig::dt_s)
        .def_readwrite("seed", &SimConfig::seed)
        .def_readwrite("hour", &SimConfig::hour);

    py::class_<ScenarioSpec>(s, "ScenarioSpec")
        .def(py::init<>())
        .def_readwrite("name", &ScenarioSpec::name)
        .def_readwrite("grid_case_path", &ScenarioSpec::grid_case_path)
        .def_readwrite("profile_path", &ScenarioSpec::profile_path)
        .def_readwrite("base_dir", &ScenarioSpec::base_dir)
        .def_readwrite("policy", &ScenarioSpec::policy)
        .def_readwrite("population", &ScenarioSpec::population)
        .def_readwrite("arrival", &ScenarioSpec::arrival)
        .def_readwrite("attack", &ScenarioSpec::attack)
        .def_readwrite("sim", &ScenarioSpec::sim)
        .def_readwrite("outputs_dir", &ScenarioSpec::outputs_dir);

    py::class_<LoadedScenario>(s, "LoadedScenario")
        .def_readonly("spec", &LoadedScenario::spec)
        .def_readonly("grid", &LoadedScenario::grid)
        .def_readonly("profile", &LoadedScenario::profile)
        .def_readonly("config_hash", &LoadedScenario::config_hash);

    py::class_<RunSummary>(s, "RunSummary")
        .def_readonly("name", &RunSummary::name)
        .def_readonly("config_hash", &RunSummary::config_hash)
        .def_readonly("sessions_started", &RunSummary::sessions_started)
        .def_readonly("tuples", &RunSummary::tuples)
        .def_readonly("hijack_ran", &RunSummary::hijack_ran)
        .def_readonly("hijack", &RunSummary::hijack)
        .def_readonly("peak_session_mw", &RunSummary::peak_session_mw)
        .def_readonly("peak_attack_mw", &RunSummary::peak_attack_mw)
        .def_readonly("min_freq_hz", &RunSummary::min_freq_hz)
        .def_readonly("max_freq_hz", &RunSummary::max_freq_hz)
        .def_readonly("sheds", &RunSummary::sheds)
        .def_readonly("gen_trips", &RunSummary::gen_trips)
        .def_readonly("near_blackout", &RunSummary::near_blackout)
        .def_readonly("cascade", &RunSummary::cascade)
        .def_readonly("impacts", &RunSummary::impacts)
        .def_readonly("outputs", &RunSummary::outputs);

    using Overrides = std::vector<std::pair<std::string, std::string>>;
    s.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("origin") = "<string>",
          py::arg("overrides") = Overrides{});
    s.def("load_scenario", &load_scenario, py::arg("path"), py::arg("overrides") = Overrides{});
    s.def("resolve_path", &resolve_path, py::arg("spec"), py::arg("path"));
    s.def("canonical_spec", &canonical_spec, py::arg("spec"));
    s.def("validate_scenario", &validate_scenario, py::arg("spec"));
    s.def("couple_sessions_to_loads", &couple_sessions_to_loads, py::arg("active_sessions"),
          py::arg("stations"));
    s.def("run_scenario", &run_scenario, py::arg("spec"));
    s.def("summarize_outputs", &summarize_outputs, py::arg("dir"));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "EV charging ecosystem and grid co-simulation core";
    bind_gridcore(m);
    bind_dynamics(m);
    bind_ecosim(m);
    bind_botnet(m);
    bind_scenario(m);
}
