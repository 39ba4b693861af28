import csv

import pytest

from varpflow.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_holefill_power(tmp_path):
    cfg = write(tmp_path, "[holefill]\nkind = power\ns = 1.0\n")
    out = tmp_path / "out"
    assert main(["holefill", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "holefill.csv")
    assert {r["check"] for r in rows} == {"hypothesis", "conclusion", "replay"}
    assert all(r["passed"] == "true" for r in rows)


def test_holefill_failure_exit(tmp_path, capsys):
    cfg = write(tmp_path, "[holefill]\nR0 = 0.125\nalpha = 1\nbeta = 1e-6\nnu = 1\n"
                          "radii = 0.125, 0.0625, 0.03125\nG = 1, 1, 1\n")
    assert main(["holefill", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_FAILED
    assert "hypothesis fails at R=" in capsys.readouterr().err


def test_solve_zero_sources(tmp_path):
    cfg = write(tmp_path, "[data]\nsource = zero\n[solver]\nn_modes = 16\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
    summary = dict((r["key"], r["value"]) for r in read_csv(out / "energy_summary.csv"))
    assert float(summary["v_W1p_minus"]) == 0.0 and float(summary["grad_c_L2"]) == 0.0
    assert (out / "velocity.txt").exists() and (out / "concentration.txt").exists()


def test_solve_file_sources(tmp_path):
    cfg = write(tmp_path, "[data]\nsource = zero\n[solver]\nn_modes = 16\n")
    out = tmp_path / "a"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
    # the written velocity is a valid vector field file, reuse it as a source
    cfg2 = write(tmp_path, f"[data]\nsource = file\nf_path = {out / 'velocity.txt'}\n"
                           f"g_path = {out / 'velocity.txt'}\n[solver]\nn_modes = 16\n", "file.ini")
    assert main(["solve", "--config", cfg2, "--out", str(tmp_path / "b")]) == EXIT_OK


def test_mms_monotone(tmp_path):
    cfg = write(tmp_path, "[mms]\nlevels = 16 32\n")
    out = tmp_path / "out"
    assert main(["mms", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "mms.csv")
    assert [int(r["n_modes"]) for r in rows] == [16, 32]
    for key in ("velocity_l2", "velocity_h1", "concentration_l2"):
        assert float(rows[1][key]) < float(rows[0][key])


def test_audit_pass_and_fail(tmp_path):
    out = tmp_path / "out"
    ok = write(tmp_path, "[audit]\nn_samples = 500\n", "ok.ini")
    assert main(["audit", "--config", ok, "--out", str(out)]) == EXIT_OK
    bad = write(tmp_path, "[model]\nexponent = quadratic\n[audit]\nn_samples = 500\n", "bad.ini")
    assert main(["audit", "--config", bad, "--out", str(out)]) == EXIT_FAILED


@pytest.mark.parametrize("text", ["[data]\nsource = nowhere\n", "[solver]\nn_modes = lots\n",
                                  "[model]\nexponent = cubic\n",
                                  "[data]\nsource = file\nf_path = missing.txt\ng_path = missing.txt\n"])
def test_bad_config(tmp_path, text):
    cfg = write(tmp_path, text)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert main(["explode", "--config", "x.ini"]) == EXIT_USAGE
    assert main(["solve", "--config", str(tmp_path / "missing.ini")]) == EXIT_USAGE
    assert main(["holefill", "--config", write(tmp_path, "[run]\n")]) == EXIT_USAGE


def test_byte_reproducible(tmp_path):
    cfg = write(tmp_path, "[holefill]\nkind = random_monotone\nseed = 11\n")
    for d in ("a", "b"):
        assert main(["holefill", "--config", cfg, "--out", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a" / "holefill.csv").read_bytes() == (tmp_path / "b" / "holefill.csv").read_bytes()


def test_probe_small(tmp_path):
    cfg = write(tmp_path, "[solver]\nn_modes = 32\n[probes]\nper_side = 2\nlevels = 4\nfine_modes = 128\n")
    out = tmp_path / "out"
    assert main(["probe", "--config", cfg, "--out", str(out)]) == EXIT_OK
    for name in ("energy", "weighted_h2", "caccioppoli", "hole_start", "key_estimate"):
        assert (out / f"{name}.csv").exists() and (out / f"{name}_summary.csv").exists()
