import json
import re

import pytest

from dtype_osc import cli
from dtype_osc.cache import SampleCache

MODEL3 = {"kind": "model", "n": 3, "sign": 1}

# (text, line the message must point at)
MALFORMED = [
    ('{"kind": "model", "n": 3, "sign": 1', 1),                                   # truncated JSON
    ('[1, 2, 3]', 1),                                                             # not an object
    ('{\n  "kind": "cubic",\n  "n": 3\n}', 2),                                    # unknown kind
    ('{\n  "kind": "model",\n  "sign": 1\n}', 2),                                 # missing n
    ('{\n  "kind": "model",\n  "n": 2,\n  "sign": 1\n}', 3),                      # n too small
    ('{\n  "kind": "model",\n  "n": 3.5,\n  "sign": 1\n}', 3),                    # n not integer
    ('{\n  "kind": "model",\n  "n": "inf",\n  "sign": 1\n}', 3),                  # infinite model
    ('{\n  "kind": "model",\n  "n": 3,\n  "sign": 0\n}', 4),                      # bad sign
    ('{\n  "kind": "model",\n  "n": 3,\n  "sign": true\n}', 4),                   # bool sign
    ('{\n  "kind": "model",\n  "n": 3,\n  "sign": 1,\n  "colour": 2\n}', 5),      # unknown field
    ('{\n  "kind": "normal_form",\n  "n": 7,\n  "m": 2,\n  "omega0": "1",\n  "beta0": "1",\n'
     '  "b1_0": "0",\n  "b2_0": "0"\n}', 7),                                      # b1_0 = 0
    ('{\n  "kind": "normal_form",\n  "n": 7,\n  "m": 2,\n  "omega0": "1",\n  "beta0": "0",\n'
     '  "b1_0": "1",\n  "b2_0": "0"\n}', 6),                                      # beta0 = 0, n finite
    ('{\n  "kind": "normal_form",\n  "n": "inf",\n  "m": "inf",\n  "omega0": "1",\n  "beta0": "1",\n'
     '  "b1_0": "1",\n  "b2_0": "0"\n}', 4),                                      # both infinite
    ('{\n  "kind": "normal_form",\n  "n": 7,\n  "m": 2,\n  "omega0": "1/0",\n  "beta0": "1",\n'
     '  "b1_0": "1",\n  "b2_0": "0"\n}', 5),                                      # bad rational
    ('{\n  "kind": "normal_form",\n  "n": 7,\n  "m": 2\n}', 2),                   # missing invariants
    ('{\n  "kind": "polynomial",\n  "terms": []\n}', 3),                          # empty terms
    ('{\n  "kind": "polynomial",\n  "terms": [[1, 2]]\n}', 3),                    # short term
    ('{\n  "kind": "polynomial",\n  "terms": [[-1, 2, "1"]]\n}', 3),              # negative exponent
    ('{\n  "kind": "polynomial",\n  "terms": [[1, 2, "1"], [1, 2, "-1"]]\n}', 3), # cancels to zero
    ('{\n  "kind": "model",\n  "n": 3,\n  "sign": 1,\n  "amplitude": {\n    "kind": "PRODUCT_BUMP",\n'
     '    "radius": -1\n  }\n}', 7),                                              # negative radius
]


def write(tmp_path, doc, name="phase.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc, indent=2))
    return str(p)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_malformed_count():
    assert len(MALFORMED) == 20


@pytest.mark.parametrize("text,line", MALFORMED)
def test_schema_rejection(tmp_path, capsys, text, line):
    path = write(tmp_path, text)
    code, _, err = run(capsys, "analyze", "--phase", path)
    assert code == 1
    m = re.search(re.escape(path) + r":(\d+): ", err)
    assert m, err
    assert int(m.group(1)) == line


def test_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "analyze", "--phase", str(tmp_path / "nope.json"))
    assert code == 1 and "cannot read" in err


def test_analyze_model(tmp_path, capsys):
    code, out, _ = run(capsys, "analyze", "--phase", write(tmp_path, MODEL3))
    rep = json.loads(out)
    assert code == 0
    assert rep["regime"] == "LA" and rep["d"] == "3/2" and rep["n"] == "3" and rep["m"] == "inf"


def test_analyze_nla_polynomial(tmp_path, capsys):
    # x1 (x2 - x1^2)^2 + x1^7 = x1 x2^2 - 2 x1^3 x2 + x1^5 + x1^7
    doc = {"kind": "polynomial", "terms": [[1, 2, "1"], [3, 1, "-2"], [5, 0, "1"], [7, 0, "1"]]}
    code, out, _ = run(capsys, "analyze", "--phase", write(tmp_path, doc))
    rep = json.loads(out)
    assert code == 0
    assert (rep["m"], rep["n"], rep["regime"]) == ("2", "7", "NLA")


def test_analyze_not_dtype(tmp_path, capsys):
    code, _, err = run(capsys, "analyze", "--phase", write(tmp_path, {"kind": "polynomial", "terms": [[0, 3, "1"]]}))
    assert code == 2 and "error" in err


def test_shear_amplitude_parsed(tmp_path):
    doc = dict(MODEL3, amplitude={"kind": "PRODUCT_BUMP", "radius": [0.5, 0.4], "shear": [1, 2]})
    spec = cli.load_phase(write(tmp_path, doc))
    assert spec.amplitude.shear == (1.0, 2)
    bad = dict(MODEL3, amplitude={"shear": [1, 0]})
    with pytest.raises(cli.SchemaError):
        cli.load_phase(write(tmp_path, bad, "bad.json"))


def test_integrate_small_lambda_is_mass(tmp_path, capsys):
    cache = str(tmp_path / "c.jsonl")
    code, out, _ = run(capsys, "integrate", "--phase", write(tmp_path, MODEL3), "--lambda", "1e-6", "--cache", cache)
    rep = json.loads(out)["direct"]
    from dtype_osc.oscint import Amplitude
    assert code == 0
    assert float(rep["re"]) == pytest.approx(Amplitude(0.5).mass(), rel=1e-5)


def test_integrate_repeat_byte_identical(tmp_path, capsys):
    cache = str(tmp_path / "c.jsonl")
    argv = ["integrate", "--phase", write(tmp_path, MODEL3), "--lambda", "300", "--s1", "0.01", "--cache", cache]
    _, first, _ = run(capsys, *argv)
    n_records = len(SampleCache(cache))
    _, second, _ = run(capsys, *argv)
    assert first == second
    assert len(SampleCache(cache)) == n_records == 1


def test_integrate_both_engines(tmp_path, capsys):
    code, out, _ = run(capsys, "integrate", "--phase", write(tmp_path, MODEL3), "--lambda", "200",
                       "--s1", "0.05", "--s2", "-0.02", "--engine", "both", "--cache", str(tmp_path / "c.jsonl"))
    rep = json.loads(out)
    d, r = (complex(float(rep[k]["re"]), float(rep[k]["im"])) for k in ("direct", "reduced"))
    assert code == 0
    assert float(rep["difference"]) == pytest.approx(abs(d - r), rel=1e-12, abs=1e-300)
    assert abs(d - r) <= 1e-6 * abs(d)


def test_integrate_reduced_needs_model(tmp_path, capsys):
    doc = {"kind": "normal_form", "n": 7, "m": 2, "omega0": "1", "beta0": "1", "b1_0": "1", "b2_0": "0"}
    code, _, _ = run(capsys, "integrate", "--phase", write(tmp_path, doc), "--lambda", "10", "--engine", "reduced",
                     "--cache", str(tmp_path / "c.jsonl"))
    assert code == 1


def test_integrate_nonpositive_lambda(tmp_path, capsys):
    code, _, _ = run(capsys, "integrate", "--phase", write(tmp_path, MODEL3), "--lambda", "0",
                     "--cache", str(tmp_path / "c.jsonl"))
    assert code == 1


def test_empty_lambda_grid(tmp_path, capsys):
    code, _, err = run(capsys, "randol", "--phase", write(tmp_path, MODEL3), "--levels", "0",
                       "--cache", str(tmp_path / "c.jsonl"), "--out", str(tmp_path / "r"))
    assert code == 1 and "empty" in err


def test_bad_flag_is_config_error(tmp_path, capsys):
    assert run(capsys, "integrate", "--phase", write(tmp_path, MODEL3))[0] == 1


def test_decay_outputs(tmp_path, capsys):
    out_base = tmp_path / "dec"
    code, out, _ = run(capsys, "decay", "--phase", write(tmp_path, MODEL3), "--lambda0", "64", "--levels", "7",
                       "--cache", str(tmp_path / "c.jsonl"), "--out", str(out_base))
    assert code == 0
    assert float(json.loads(out)["slope"]) == pytest.approx(-2 / 3, abs=0.05)
    lines = (tmp_path / "dec.csv").read_text().splitlines()
    assert lines[0] == "# manifest: dec.manifest.json" and lines[1] == "lambda,abs_I,fit"
    assert len(lines) == 2 + 7
    man = json.loads((tmp_path / "dec.manifest.json").read_text())
    assert man["csv"] == "dec.csv" and len(man["grids"]["lambda"]) == 7


def _probe_args(tmp_path, phase, cache, out):
    return ["lp-probe", "--phase", phase, "--cache", cache, "--out", out, "--jmin", "2", "--jmax", "7",
            "--cells-per-annulus", "4", "--levels", "8", "--substeps", "2"]


def test_lp_probe_report_and_cache_roundtrip(tmp_path, capsys):
    phase = write(tmp_path, {"kind": "model", "n": 3, "sign": -1})
    cache = str(tmp_path / "c.jsonl")
    code, out, _ = run(capsys, *_probe_args(tmp_path, phase, cache, str(tmp_path / "probe")))
    assert code in (0, 4)
    rep = json.loads(out)
    assert rep["p_star"] == "4"
    man = tmp_path / "probe.manifest.json"
    assert json.loads(man.read_text())["report"] == "probe.report.json"
    csv_before = (tmp_path / "probe.csv").read_text()
    report_before = (tmp_path / "probe.report.json").read_text()

    # rebuild from cache only
    code2, _, _ = run(capsys, "report", "--manifest", str(man), "--out", str(tmp_path / "again"))
    assert code2 == code
    assert (tmp_path / "again.csv").read_text().splitlines()[1:] == csv_before.splitlines()[1:]
    assert (tmp_path / "again.report.json").read_text() == report_before


def test_report_missing_cache(tmp_path, capsys):
    phase = write(tmp_path, {"kind": "model", "n": 3, "sign": -1})
    cache = tmp_path / "c.jsonl"
    run(capsys, *_probe_args(tmp_path, phase, str(cache), str(tmp_path / "probe")))
    lines = cache.read_text().splitlines()
    cache.write_text("\n".join(lines[: len(lines) // 2]) + "\n")
    code, _, err = run(capsys, "report", "--manifest", str(tmp_path / "probe.manifest.json"),
                       "--out", str(tmp_path / "again"))
    assert code == 1 and "missing" in err


def test_nla_p_star(tmp_path, capsys):
    doc = {"kind": "normal_form", "n": 7, "m": 2, "omega0": "1", "beta0": "1", "b1_0": "1", "b2_0": "0"}
    args = _probe_args(tmp_path, write(tmp_path, doc), str(tmp_path / "c.jsonl"), str(tmp_path / "nla"))
    args[args.index("--levels") + 1] = "6"
    code, out, _ = run(capsys, *args)
    assert json.loads(out)["p_star"] == "7/2"
