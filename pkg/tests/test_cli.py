import csv
import dataclasses
import io
import math
import subprocess
import sys

import pytest

from isacfbl import cli
from isacfbl.bounds import CodeParams, SystemParams, d_m, evaluate_bounds

FIG = SystemParams.from_sigma(10.0, 1.0, 1.0, 1.5)


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


# -- grids and config files


def test_parse_grid_forms():
    assert cli.parse_grid("1,2, 5") == [1.0, 2.0, 5.0]
    assert cli.parse_grid("lin:0:1:3") == [0.0, 0.5, 1.0]
    assert cli.parse_grid("log:10:1000:3") == pytest.approx([10.0, 100.0, 1000.0])
    assert cli.parse_grid("log:10:12:20", integer=True) == [10, 11, 12]
    for bad in ("", "3,2", "1,1", "log:0:10:3", "lin:0:1", "lin:0:1:0"):
        with pytest.raises(ValueError):
            cli.parse_grid(bad)


def test_default_n_grid():
    grid = cli.parse_grid(cli.DEFAULT_N_GRID, integer=True)
    assert grid[0] == 10 and grid[-1] == 1000 and len(grid) == 30


def test_config_round_trip():
    text = """
    # figure settings
    rho = 10
    sigma = 1.0
    h_low = 1
    h-high = 1.5   # upper gain
    epsilon = 1e-3
    n-grid = 20,30,40
    d-grid = lin:0:0.05:11
    converse = as-printed
    seed = 7
    """
    values = cli.parse_config(text)
    again = cli.parse_config(cli.format_config(values))
    assert again == values
    assert values["h-low"] == 1.0 and values["n-grid"] == [20, 30, 40]
    assert len(values["d-grid"]) == 11


@pytest.mark.parametrize(
    "text, lineno, needle",
    [
        ("rho = 10\nsigma = -1\n", 2, "sigma"),
        ("rho = 10\n\n# x\nbogus = 3\n", 4, "bogus"),
        ("rho 10\n", 1, "key = value"),
        ("epsilon = 0.7\n", 1, "epsilon"),
        ("n-grid = 30,20\n", 1, "n-grid"),
    ],
)
def test_config_errors_name_line_and_field(text, lineno, needle):
    with pytest.raises(cli.ConfigError) as info:
        cli.parse_config(text, "sweep.cfg")
    msg = str(info.value)
    assert msg.startswith(f"sweep.cfg:{lineno}:")
    assert needle in msg


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("n-grid = 20\nd-grid = 0.02\nrho = 5\n")
    code, out, _ = run(["bounds", "--config", str(cfg), "--rho", "10"], capsys)
    assert code == 0
    header, rows = table(out)
    ref = evaluate_bounds(FIG, CodeParams(20, 1e-3), 0.02)
    assert float(rows[0][header.index("R_L")]) == ref.R_L


def test_config_error_exits_one(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("rho = 10\nrho = zero\n")
    code, _, err = run(["bounds", "--config", str(cfg)], capsys)
    assert code == 1
    assert "bad.cfg:2" in err and "rho" in err


def test_missing_config_exits_one(tmp_path, capsys):
    code, _, err = run(["bounds", "--config", str(tmp_path / "nope.cfg")], capsys)
    assert code == 1


def test_config_key_for_other_subcommand_rejected(tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("trials = 5\n")
    assert run(["bounds", "--config", str(cfg)], capsys)[0] == 1


# -- bounds


def test_bounds_columns_and_values(capsys):
    code, out, _ = run(["bounds", "--n-grid", "20,100", "--d-grid", "0,0.02,0.04"], capsys)
    assert code == 0
    header, rows = table(out)
    assert tuple(header) == (
        "N", "D", "epsilon", "D_m", "regime", "delta_WL", "phi_L", "gamma_L", "R_L",
        "r1", "r2", "r_eps", "gamma_U", "R_U_low", "R_U_high",
    )
    assert len(rows) == 6
    first = dict(zip(header, rows[0]))
    assert first["regime"] == "zero-rate" and float(first["R_L"]) == 0.0
    rec = dict(zip(header, rows[1]))
    ref = evaluate_bounds(FIG, CodeParams(20, 1e-3), 0.02)
    # shortest round-trip formatting is lossless
    for col in ("D_m", "delta_WL", "gamma_L", "R_L", "r_eps", "R_U_low", "R_U_high"):
        assert float(rec[col]) == getattr(ref, col)


def test_bounds_default_grids(capsys):
    code, out, _ = run(["bounds"], capsys)
    assert code == 0
    _, rows = table(out)
    assert len(rows) == 30 * 200
    assert out.endswith("\n") and "\r" not in out


def test_bounds_output_file_and_jobs(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bounds", "--n-grid", "log:10:1000:12", "--d-grid", "0.02,0.04"]
    assert run(args + ["--out", str(a)], capsys)[0] == 0
    assert run(args + ["--out", str(b), "--jobs", "3"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_bounds_curves_coincide_past_crossover(capsys):
    _, out, _ = run(["bounds", "--n-grid", "lin:10:200:191", "--d-grid", "0.02,0.04"], capsys)
    header, rows = table(out)
    rl = {}
    for r in rows:
        rl[(int(r[0]), float(r[1]))] = float(r[header.index("R_L")])
    for N in range(47, 201):
        assert rl[(N, 0.02)] == rl[(N, 0.04)]
    assert rl[(46, 0.02)] < rl[(46, 0.04)]


def test_bounds_invariant_violation_exits_two(monkeypatch, capsys):
    def broken(*args, **kwargs):
        rep = evaluate_bounds(*args, **kwargs)
        return dataclasses.replace(rep, R_U_low=rep.R_U_high + 1.0)

    monkeypatch.setattr(cli, "evaluate_bounds", broken)
    code, _, err = run(["bounds", "--n-grid", "20", "--d-grid", "0.02"], capsys)
    assert code == 2 and "invariant" in err


def test_usage_errors_exit_one(capsys):
    assert run(["bounds", "--rho", "-1"], capsys)[0] == 1
    assert run(["bounds", "--baseline", "shannon"], capsys)[0] == 1
    assert run(["bounds", "--sigma", "0"], capsys)[0] == 1
    assert run(["nosuch"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    assert run(["--version"], capsys)[0] == 0


# -- region


def test_region_structure(capsys):
    code, out, _ = run(
        ["region", "--n-grid", "20,30,40", "--d-grid", "lin:0:0.045:301"], capsys
    )
    assert code == 0
    header, rows = table(out)
    assert tuple(header) == cli.REGION_COLUMNS
    by_n = {}
    for r in rows:
        by_n.setdefault(int(r[0]), []).append((float(r[1]), r[3], float(r[4]), float(r[5])))
    for N, pts in by_n.items():
        dm = d_m(FIG, CodeParams(N, 1e-3))
        jumps = [p for p in pts if p[3] != 0.0]
        assert len(jumps) == 1 and jumps[0][0] == dm
        assert jumps[0][3] == pytest.approx(1.0 / N, abs=1e-12)
        for D, reg, R, _ in pts:
            if D <= 1.0 / (10 * N):
                assert R == 0.0 and reg == "zero-rate"
        rates = [p[2] for p in pts]
        assert all(b >= a for a, b in zip(rates, rates[1:]))
        assert len({p[2] for p in pts if p[0] >= dm}) == 1
    # pointwise ordering on the common grid
    common = lambda N: {D: R for D, _, R, _ in by_n[N]}
    r20, r30, r40 = common(20), common(30), common(40)
    for D in set(r20) & set(r30) & set(r40):
        assert r40[D] >= r30[D] >= r20[D]


# -- simulate


SMALL = ["simulate", "--trials", "3000", "--n", "10", "--m", "8"]


def test_simulate_pass_and_columns(capsys):
    code, out, err = run(SMALL, capsys)
    assert code == 0
    header, rows = table(out)
    assert tuple(header) == cli.SIMULATE_COLUMNS and len(rows) == 1
    assert err.startswith("PASS")


def test_simulate_is_byte_stable(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(SMALL + ["--out", str(a)], capsys)
    run(SMALL + ["--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()
    run(SMALL + ["--out", str(b), "--seed", "43"], capsys)
    assert a.read_bytes() != b.read_bytes()


def test_simulate_noiseless(capsys):
    code, out, _ = run(SMALL + ["--sigma", "0"], capsys)
    header, rows = table(out)
    rec = dict(zip(header, rows[0]))
    assert code == 0
    assert float(rec["eps_hat"]) == 0.0 and float(rec["mse_hat"]) < 1e-28


@pytest.mark.parametrize("flag", [["--trials", "0"], ["--m", "0"], ["--decoder", "x"],
                                  ["--delta-budget", "3"], ["--h-true-mag", "2"], ["--d", "0.001"]])
def test_simulate_usage_errors(flag, capsys):
    assert run(SMALL + flag, capsys)[0] == 1


def test_simulate_infeasible_exits_three(capsys):
    code, _, err = run(
        ["simulate", "--n", "40", "--m", "64", "--delta-budget", "0.05", "--max-attempts", "500",
         "--trials", "10"],
        capsys,
    )
    assert code == 3
    assert "M=64" in err and "delta=0.05" in err and "N=40" in err


def test_simulate_derives_budget_from_requirement(capsys):
    _, out, _ = run(SMALL[:1] + ["--trials", "100"], capsys)
    header, rows = table(out)
    assert float(dict(zip(header, rows[0]))["delta_budget"]) == pytest.approx(1.4907, abs=1e-4)


# -- capcheck


def test_capcheck_pass(capsys):
    code, out, _ = run(["capcheck", "--n", "2", "--samples", "200000"], capsys)
    assert code == 0 and out.strip().endswith("PASS")


def test_capcheck_hemisphere(capsys):
    rep = cli.capcheck_report(3, math.pi, 100_000, 1)
    assert rep["analytic"] == 0.5 and abs(rep["empirical"] - 0.5) < 0.005


def test_capcheck_small_cap():
    rep = cli.capcheck_report(10, math.pi / 6, 100_000, 2)
    assert rep["analytic"] < 1e-8 and rep["pass"]


@pytest.mark.parametrize("flag", [["--samples", "100"], ["--phi", "0"], ["--phi", "4"], ["--n", "0"]])
def test_capcheck_domain(flag, capsys):
    assert run(["capcheck"] + flag, capsys)[0] == 1


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "isacfbl", "bounds", "--n-grid", "20", "--d-grid", "0"],
        capture_output=True, text=True,
    )
    assert out.returncode == 0 and out.stdout.startswith("N,D,epsilon")
