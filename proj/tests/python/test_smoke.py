import os
import pathlib

import pytest

import evcosim

DATA = pathlib.Path(
    os.environ.get("EVCOSIM_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data")
)


def test_grid_case_and_profile_scaling():
    case = evcosim.grid.load_case(str(DATA / "cases" / "glover7.case"))
    assert case.total_load_mw() == pytest.approx(800.0)
    profile = evcosim.grid.load_profile(str(DATA / "profiles" / "nsw_daily.profile"))
    for hour, expected in ((3, 677.0), (19, 943.0), (22, 800.0)):
        scaled = evcosim.grid.scale_loads(case, profile, hour)
        assert scaled.total_load_mw() == pytest.approx(expected, abs=1e-9)

    solved = evcosim.grid.dispatch_and_solve(case)
    assert solved.pf.total_losses_mw > 0.0
    assert solved.dispatch.total_cost_usd_per_h > 0.0


def test_session_coupling_is_exact():
    stations = {}
    sessions = []
    for i in range(7636):
        st = evcosim.eco.StationRecord()
        st.id = f"s{i}"
        st.bus = 2
        st.connector_kw = 11.0
        stations[st.id] = st
        sr = evcosim.eco.SessionRecord()
        sr.station_id = st.id
        sessions.append(sr)
    mw = evcosim.scenario.couple_sessions_to_loads(sessions, stations)
    assert mw == {2: 83.996}


def test_grace_window_capture_from_python():
    policy = evcosim.eco.PolicyConfig()  # everything off: permissive backend
    world = evcosim.eco.World(policy)

    owner = evcosim.eco.UserAccount()
    owner.id = "owner"
    owner.owned_vins = ["car"]
    world.add_user(owner)
    bot = evcosim.eco.UserAccount()
    bot.id = "bot"
    bot.owned_vins = ["botcar"]
    bot.adversarial = True
    world.add_user(bot)

    st = evcosim.eco.StationRecord()
    st.id = "st1"
    st.bus = 2
    st.connector_kw = 11.0
    st.pairing_code = "pc1"
    world.add_station(st)

    world.login("owner")
    world.login("bot")

    cmd = evcosim.eco.Command()
    cmd.kind = evcosim.eco.CommandKind.StartCharge
    cmd.user_id = "bot"
    cmd.vin = "botcar"
    cmd.station_id = "st1"
    cmd.time_s = 10.0
    res = world.submit_command(cmd)
    assert res.decision.outcome == evcosim.eco.CmsOutcome.Forwarded
    assert res.evcs.kind == evcosim.eco.EvcsKind.GraceEntered

    world.advance_to(60.0)
    world.plug_vehicle("st1", "car")  # lands inside the bot's grace window

    record = world.station("st1")
    assert record.session_user == "bot"
    tup = world.station_tuple("st1")
    assert evcosim.eco.classify_tuple(tup) == evcosim.eco.Classification.HijackSuspect


def test_attack_windows_and_schedules():
    model = evcosim.botnet.default_arrival_model()
    windows = evcosim.botnet.estimate_attack_windows(model.weekday)
    assert windows[0].start_hour == 10

    plan = evcosim.botnet.OscillatoryPlan()
    plan.buses = [4, 5]
    plan.cycles = 3
    events = evcosim.botnet.oscillatory_schedule(plan)
    assert sum(e.delta_mw for e in events) == pytest.approx(0.0, abs=1e-12)


def test_scenario_run_and_report_roundtrip(tmp_path):
    out = tmp_path / "mass"
    spec = evcosim.scenario.load_scenario(
        str(DATA / "scenarios" / "mass_charge.scn"),
        [("outputs.dir", str(out))],
    )
    summary = evcosim.scenario.run_scenario(spec)
    assert summary.peak_attack_mw == pytest.approx(84.0)
    assert len(summary.impacts) == 24
    hours = {r.hour: r for r in summary.impacts}
    assert hours[3].served_load_mw == pytest.approx(677.0)
    assert hours[19].served_load_mw == pytest.approx(943.0)
    assert all(r.attack_mw == pytest.approx(84.0) for r in summary.impacts)

    written = (out / "summary.txt").read_bytes()
    assert evcosim.scenario.summarize_outputs(str(out)).encode() == written
