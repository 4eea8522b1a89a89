import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gyrostat import dynamics as D
from gyrostat import spectral as S
from gyrostat.errors import FormatError, OrderViolation, ParseError, UnknownPreset, ValidationError
from gyrostat.shell import artifacts as io
from gyrostat.shell.cli import main
from gyrostat.shell.experiments import PRESETS, preset, run_preset, simulate
from gyrostat.shell.scenario import Scenario, parse_scenario, serialize_scenario

MINIMAL = """\
[cavity]
dims = 1.4, 1.4, 1.4
grid = 8, 8, 8

[inertia]
A = 1
B = 2
C = 3

[sim]
nu = 0.02
omega0 = 0, 0, 1
"""


def small_scenario(**kw):
    base = dict(
        dims=(1.4, 1.4, 1.4), grid=(8, 8, 8), A=1.0, B=2.0, C=3.0, nu=0.02, omega0=(0.0, 0.0, 1.0),
        t_end=1.0, seed=4, v_h1=0.2, omega="permanent+delta", delta=0.05, sample_every=5,
    )
    base.update(kw)
    return Scenario(**base)


# -- scenario files -------------------------------------------------------------------


def test_minimal_scenario_defaults():
    sc = parse_scenario(MINIMAL)
    assert sc.grid == (8, 8, 8) and sc.omega0 == (0.0, 0.0, 1.0)
    assert sc.mode == "nonlinear" and sc.t_end == 10.0 and sc.dt is None
    assert sc.omega == "permanent" and sc.formats == ("csv", "plot", "summary")


def test_scenario_order_violation():
    with pytest.raises(OrderViolation):
        parse_scenario(MINIMAL.replace("A = 1", "A = 3").replace("C = 3", "C = 1"))


@pytest.mark.parametrize(
    "text, line",
    [
        (MINIMAL + "bogus = 1\n", 13),
        (MINIMAL + "[nope]\n", 13),
        (MINIMAL.replace("A = 1", "A = one"), 6),
        (MINIMAL.replace("A = 1", "A = 1\nA = 2"), 7),
        ("nu = 1\n" + MINIMAL, 1),
        (MINIMAL.replace("[inertia]", "[inertia"), 5),
    ],
)
def test_parse_errors_carry_position(text, line):
    with pytest.raises(ParseError) as err:
        parse_scenario(text)
    assert err.value.line == line
    assert err.value.column is not None and err.value.column >= 1


def test_missing_required_key():
    with pytest.raises(ParseError):
        parse_scenario(MINIMAL.replace("nu = 0.02\n", ""))


def test_scenario_validation():
    with pytest.raises(ValidationError):
        small_scenario(t_end=0.0)
    with pytest.raises(ValidationError):
        small_scenario(sample_every=0)
    with pytest.raises(ValidationError):
        small_scenario(formats=("csv", "pdf"))


floats = st.floats(0.01, 100, allow_nan=False)


@given(
    st.tuples(floats, st.floats(1.0, 2.0)),
    st.sampled_from([(1.0, 2.0, 3.0), (1.0, 1.0, 3.0), (2.0, 2.0, 2.0)]),
    st.sampled_from(["nonlinear", "linearized"]),
    st.one_of(st.none(), st.floats(1e-4, 1e-2)),
    st.one_of(st.sampled_from(["permanent", "permanent+delta"]), st.tuples(floats, floats, floats)),
    st.integers(0, 2**31),
    st.one_of(st.none(), st.integers(0, 5)),
)
def test_scenario_round_trip(t_end, moments, mode, dt, omega, seed, sweeps):
    sc = small_scenario(
        t_end=t_end[0], A=moments[0] * t_end[1], B=moments[1] * t_end[1], C=moments[2] * t_end[1],
        mode=mode, dt=dt, omega=omega, seed=seed, coupling_sweeps=sweeps, name="r t", formats=("csv",),
    )
    text = serialize_scenario(sc)
    again = parse_scenario(text)
    assert again == sc
    assert serialize_scenario(again) == text


# -- time series and eigenreports -----------------------------------------------------


def test_csv_schema_and_zero_step_run(tmp_path):
    sc = small_scenario()
    setup = sc.setup()
    state = sc.initial_state(setup)
    rows = [D.diagnostics(state, setup)]
    path = io.write_timeseries(rows, tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(io.CSV_COLUMNS)
    assert len(lines) == 2
    cols = io.read_timeseries(path)
    assert list(cols) == list(io.CSV_COLUMNS)
    assert cols["l2v"][0] == rows[0].l2v


def test_same_scenario_gives_identical_csv(tmp_path):
    sc = small_scenario(formats=("csv",))
    a = simulate(sc, tmp_path / "a").files[0].read_bytes()
    b = simulate(sc, tmp_path / "b").files[0].read_bytes()
    assert a == b


def test_eigreport_document(tmp_path):
    setup = small_scenario().setup()
    rep = S.analyze(setup, N=16)
    path = io.write_eigreport(rep, tmp_path / "e.json")
    doc = json.loads(path.read_text())
    assert doc["verdict"] == "AllPositive" and doc["zero_multiplicity"] == 1
    assert len(doc["eigenvalues"]) == 19


def test_plot_files(tmp_path):
    res = simulate(small_scenario(formats=("plot",)), tmp_path)
    names = {p.name for p in res.files}
    assert "l2v.dat" in names and len(names) == len(io.CSV_COLUMNS) - 1
    data = np.loadtxt(tmp_path / "run_plot" / "l2v.dat")
    assert data.shape == (len(res.series.rows), 2)


# -- checkpoints ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def evolved():
    sc = small_scenario()
    setup = sc.setup()
    series = D.run(sc.initial_state(setup), setup, sc.run_config())
    return series.final_state, setup


def test_checkpoint_layout(evolved):
    state, setup = evolved
    blob = io.checkpoint_bytes(state, setup)
    assert blob[:4] == b"LGY1"
    assert int.from_bytes(blob[4:8], "little") == 1
    faces = 9 * 8 * 8 * 3
    assert len(blob) == 4 + 4 + 12 + 8 * 11 + 8 + 8 * (faces + 9)


def test_checkpoint_round_trip_is_byte_exact(evolved, tmp_path):
    state, setup = evolved
    p1 = io.write_checkpoint(state, setup, tmp_path / "a.ckpt")
    ck = io.read_checkpoint(p1)
    p2 = io.write_checkpoint(ck.state, ck.setup, tmp_path / "b.ckpt")
    assert p1.read_bytes() == p2.read_bytes()
    assert ck.fingerprint == setup.fingerprint()
    assert ck.state.step == state.step and ck.state.t == state.t


def test_checkpoint_format_errors(evolved):
    blob = io.checkpoint_bytes(*evolved)
    with pytest.raises(FormatError):
        io.parse_checkpoint(b"XXXX" + blob[4:])
    with pytest.raises(FormatError):
        io.parse_checkpoint(blob[:4] + (7).to_bytes(4, "little") + blob[8:])
    with pytest.raises(FormatError):
        io.parse_checkpoint(blob[:-8])
    with pytest.raises(FormatError):
        io.parse_checkpoint(blob[:20])


def test_restart_equivalence():
    sc = small_scenario()
    setup = sc.setup()
    integ = D.integrator_for(setup)
    s = sc.initial_state(setup)
    dt = integ.dt_max(s)
    straight = s
    for _ in range(1000):
        straight = integ.step(straight, dt)
    half = s
    for _ in range(500):
        half = integ.step(half, dt)
    resumed = io.parse_checkpoint(io.checkpoint_bytes(half, setup)).state
    for _ in range(500):
        resumed = integ.step(resumed, dt)
    assert all(np.array_equal(p, q) for p, q in zip(straight.v.components, resumed.v.components))
    for name in ("omega", "omega_prev", "M"):
        assert np.array_equal(getattr(straight, name), getattr(resumed, name))
    assert straight.t == resumed.t and straight.step == resumed.step


def test_periodic_checkpoints(tmp_path):
    sc = small_scenario(checkpoint_every=10, formats=("checkpoint",))
    res = simulate(sc, tmp_path)
    names = sorted(p.name for p in res.files)
    assert "run_00000010.ckpt" in names and "run_final.ckpt" in names


# -- presets --------------------------------------------------------------------------


def test_unknown_preset():
    with pytest.raises(UnknownPreset) as err:
        preset("nope")
    for name in PRESETS:
        assert name in str(err.value)


def test_short_stable_preset(tmp_path):
    res = run_preset("kelvin-stable", tmp_path, grid=(8, 8, 8), t_end=2.0)
    doc = json.loads((tmp_path / "kelvin-stable_summary.json").read_text())
    assert doc["verdict"] == "Stable" and doc["case"] == "ii"
    assert doc["attainability"] == "GuaranteedMaxAxis"
    assert res.summary["M_norm_rel_drift"] < 1e-12


# -- command line ---------------------------------------------------------------------


def test_cli_classify(capsys):
    assert main(["classify", "--abc", "1,2,3", "--axis", "0,0,1"]) == 0
    assert capsys.readouterr().out.strip() == "case ii: Stable"
    assert main(["classify", "--abc", "1,2,3", "--axis", "1,1,0"]) == 1
    assert "not a permanent rotation axis" in capsys.readouterr().err


def test_cli_attain(capsys):
    assert main(["attain", "--abc", "1,2,3", "--omega0", "0,0,2", "--E0", "0"]) == 0
    assert capsys.readouterr().out.strip() == "GuaranteedMaxAxis"


def test_cli_usage_errors():
    with pytest.raises(SystemExit) as err:
        main(["classify", "--abc", "1,2", "--axis", "0,0,1"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 1


def test_cli_fit_decay(tmp_path, capsys):
    t = np.linspace(0, 40, 401)
    path = tmp_path / "s.csv"
    path.write_text("t,y\n" + "".join(f"{float(a)!r},{float(2 * np.exp(-0.5 * a))!r}\n" for a in t))
    assert main(["fit-decay", str(path), "--column", "y"]) == 0
    assert "decay rate 0.5," in capsys.readouterr().out
    assert main(["fit-decay", str(path), "--column", "zz"]) == 1
    const = tmp_path / "c.csv"
    const.write_text("t,y\n0,1\n1,1\n2,1\n")
    assert main(["fit-decay", str(const), "--column", "y"]) == 2
    assert main(["fit-decay", str(tmp_path / "missing.csv"), "--column", "y"]) == 3
    junk = tmp_path / "j.csv"
    junk.write_text("t,y\n0,abc\n")
    assert main(["fit-decay", str(junk), "--column", "y"]) == 3


def test_cli_simulate_and_checkpoint_info(tmp_path, capsys):
    text = MINIMAL + "t_end = 0.5\ncheckpoint_every = 2\n\n[ic]\nv_h1 = 0.1\n\n[output]\nformats = csv, checkpoint\nname = cli\n"
    scen = tmp_path / "s.ini"
    scen.write_text(text)
    assert main(["simulate", str(scen), "--out", str(tmp_path / "o")]) == 0
    assert "status: completed" in capsys.readouterr().out
    assert main(["checkpoint-info", str(tmp_path / "o" / "cli_final.ckpt")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["grid"] == [8, 8, 8] and info["version"] == 1
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"nonsense")
    assert main(["checkpoint-info", str(bad)]) == 3
    assert main(["simulate", str(tmp_path / "missing.ini")]) == 3


def test_cli_spectrum(tmp_path, capsys):
    scen = tmp_path / "s.ini"
    scen.write_text(MINIMAL)
    out = tmp_path / "rep.json"
    assert main(["spectrum", str(scen), "--modes", "16", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["verdict"] == "AllPositive" and doc["classify"] == "Stable"


def test_cli_preset_unknown(capsys):
    assert main(["preset", "nope"]) == 1
    assert "kelvin-stable" in capsys.readouterr().err


def test_module_entry_point_help():
    out = subprocess.run([sys.executable, "-m", "gyrostat", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "checkpoint-info" in out.stdout
    for sub in ("simulate", "spectrum", "classify", "attain", "fit-decay", "preset", "checkpoint-info"):
        r = subprocess.run([sys.executable, "-m", "gyrostat", sub, "--help"], capture_output=True, text=True)
        assert r.returncode == 0, sub
