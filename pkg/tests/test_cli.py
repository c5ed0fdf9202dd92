import json
import math
from pathlib import Path

import pytest

from winnerscurse.cli import main
from winnerscurse.simulation import ESTIMATORS

DATA = Path(__file__).resolve().parent.parent / "data"


def read_tsv(path_or_text):
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else path_or_text
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    header = lines[0].split("\t")
    return [dict(zip(header, line.split("\t"))) for line in lines[1:]]


def by_snp(rows):
    return {r["snp_id"]: r for r in rows}


def test_t1d_report(tmp_path):
    out = tmp_path / "t1d.tsv"
    assert main(["correct", str(DATA / "t1d.tsv"), "-o", str(out)]) == 0
    row = by_snp(read_tsv(out))["rs17696736"]
    assert float(row["or_mle"]) == pytest.approx(1.37, abs=0.03)
    for col in ("or_bl", "or_bh", "or_bma"):
        assert float(row[col]) == pytest.approx(1.36, abs=0.03), col


def test_rows_follow_input_order(tmp_path):
    out = tmp_path / "ps.tsv"
    assert main(["correct", str(DATA / "psoriasis.tsv"), "-o", str(out), "--iterations", "4000",
                 "--burnin", "1000", "--workers", "4"]) == 0
    snps = [r["snp_id"] for r in read_tsv(out)]
    src = [r["snp_id"] for r in read_tsv(DATA / "psoriasis.tsv")]
    assert snps == src


def test_quantitative_trait_narrow_slab(tmp_path):
    out = tmp_path / "q.tsv"
    assert main(["correct", str(DATA / "hba1c.tsv"), "-o", str(out), "--u-max", "0.2"]) == 0
    row = read_tsv(out)[0]
    assert row["or_mle"] == ""
    assert float(row["bl"]) == pytest.approx(0.00187, abs=0.005)
    assert float(row["bh"]) == pytest.approx(0.027, abs=0.005)
    assert float(row["bma"]) == pytest.approx(0.0252, abs=0.005)


def test_empty_input(tmp_path):
    src = tmp_path / "empty.tsv"
    src.write_text("snp_id\tp_value\tbeta_hat\tse\talpha\tp_convention\teffect_scale\n")
    out = tmp_path / "out.tsv"
    assert main(["correct", str(src), "-o", str(out)]) == 0
    assert read_tsv(out) == []


def test_skipped_and_malformed_rows(tmp_path, capsys):
    src = tmp_path / "mixed.tsv"
    src.write_text(
        "snp_id\tp_value\tbeta_hat\tse\talpha\tp_convention\teffect_scale\n"
        "rsNULL\t0.5\t0.1\t\t0.05\tone_sided\tlog_or\n"
        "rsOK\t1e-8\t0.3\t\t1e-6\tone_sided\tlog_or\n"
        "rsBAD\tx\t0.3\t\t1e-6\tone_sided\tlog_or\n"
    )
    out = tmp_path / "out.tsv"
    code = main(["correct", str(src), "-o", str(out), "--iterations", "3000", "--burnin", "500"])
    assert code == 2
    assert [r["snp_id"] for r in read_tsv(out)] == ["rsOK"]
    err = capsys.readouterr().err
    assert ":2: skipped" in err and "rsNULL" in err and ":4: malformed" in err


def test_overrides_and_priors(tmp_path):
    out = tmp_path / "o.json"
    args = ["correct", str(DATA / "lymphoma.tsv"), "-o", str(out), "--format", "json", "--iterations", "3000",
            "--burnin", "500", "--prior", "4,1", "--prior", "1,4", "--alpha", "0.001", "--seed", "5"]
    assert main(args) == 0
    payload = json.loads(out.read_text())
    assert payload["run"]["m1_prior"] == [4.0, 1.0] and payload["run"]["m2_prior"] == [1.0, 4.0]
    assert payload["run"]["seed"] == 5
    assert all(row["alpha"] == 0.001 for row in payload["rows"])


def test_both_formats_agree(tmp_path):
    stem = tmp_path / "rep"
    assert main(["correct", str(DATA / "lymphoma.tsv"), "-o", str(stem), "--format", "both",
                 "--iterations", "3000", "--burnin", "500"]) == 0
    tsv = read_tsv(stem.with_suffix(".tsv"))
    js = json.loads(stem.with_suffix(".json").read_text())["rows"]
    assert [list(r) for r in tsv] == [list(r) for r in js]
    for t, j in zip(tsv, js):
        assert float(t["bma"]) == j["bma"]


def test_correct_is_reproducible(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.tsv"
        main(["correct", str(DATA / "t1d.tsv"), "-o", str(out), "--iterations", "4000", "--burnin", "1000",
              "--seed", "11"])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_bad_prior_flag():
    with pytest.raises(SystemExit):
        main(["correct", str(DATA / "t1d.tsv"), "--prior", "1"])


def write_config(tmp_path, **cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.mark.parametrize("sigma", [1.685, 1.6855])
def test_simulate_sample_sizes(tmp_path, sigma):
    expected = {(0.05, 0.1): 41, (0.05, 0.2): 202, (0.05, 0.5): 846, (0.05, 0.9): 2678, (0.05, 0.99): 4932,
              (1e-4, 0.1): 1857, (1e-4, 0.2): 2588, (1e-4, 0.5): 4323, (1e-4, 0.9): 7816, (1e-4, 0.99): 11423,
              (1e-6, 0.1): 3767, (1e-6, 0.2): 4783, (1e-6, 0.5): 7062, (1e-6, 0.9): 11383, (1e-6, 0.99): 15666}
    cfg = write_config(tmp_path, mode="sample_size", sigma=sigma)
    out = tmp_path / "t1.tsv"
    assert main(["simulate", str(cfg), "-o", str(out)]) == 0
    rows = read_tsv(out)
    assert len(rows) == 15
    for r in rows:
        assert int(r["n"]) == pytest.approx(expected[(float(r["alpha"]), float(r["power"]))], rel=0.0015)


def test_simulate_smoke_and_determinism(tmp_path):
    cfg = write_config(tmp_path, alphas=[1e-4], powers=[0.5], replicates=1, iterations=3000, burn_in=500,
                       per_replicate=True)
    outs = []
    for i in range(2):
        out = tmp_path / f"sim{i}.tsv"
        assert main(["simulate", str(cfg), "-o", str(out), "--seed", "123"]) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    text = outs[0].read_text()
    assert text.startswith("# seed=123\n")
    rows = read_tsv(outs[0])
    assert [r["method"] for r in rows] == list(ESTIMATORS)
    reps = read_tsv(tmp_path / "sim0_replicates.tsv")
    assert len(reps) == 1 and set(ESTIMATORS) <= set(reps[0])
    assert (tmp_path / "sim0_replicates.tsv").read_bytes() == (tmp_path / "sim1_replicates.tsv").read_bytes()


def test_simulate_rejects_bad_config_before_running(tmp_path, capsys):
    out = tmp_path / "never.tsv"
    for cfg in ({"alphas": [0.9]}, {"replicates": 0}, {"unknown": 1}, [1, 2]):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(cfg))
        assert main(["simulate", str(path), "-o", str(out)]) == 64
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_weights(capsys):
    assert main(["weights", "--c", "1.645"]) == 0
    out = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert float(out["prior_m1"]) == pytest.approx(0.4393, abs=1e-4)
    assert main(["weights", "--alpha", "1e-6", "--r", "1.0"]) == 0
    out = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert float(out["posterior_m1"]) == pytest.approx(math.exp(-4.753424 / 2), abs=1e-6)
