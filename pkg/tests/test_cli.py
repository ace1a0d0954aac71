import json

import pytest

from badstar.cli import main


@pytest.fixture
def cfg(tmp_path):
    def write(**kw):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(kw))
        return str(path)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_bohr(cfg, capsys):
    code, out = run(capsys, "bohr", "--config", cfg(delta="3/10"), "--beta", "0", "--p", "0", "--q", "10")
    assert code == 0 and json.loads(out.out)["members"] == [2, 3, 5, 6, 8, 10]
    code, out = run(capsys, "bohr", "--beta", "0", "--p", "4", "--q", "4")
    assert code == 0 and json.loads(out.out)["members"] == []
    code, _ = run(capsys, "bohr", "--beta", "0", "--p", "5", "--q", "3")
    assert code == 2


def test_naive_mode_matches(cfg, capsys):
    args = ("bohr", "--beta", "1/2", "--p", "0", "--q", "5000")
    _, fast = run(capsys, *args, "--mode", "fast")
    _, naive = run(capsys, *args, "--mode", "naive")
    assert json.loads(fast.out)["members"] == json.loads(naive.out)["members"]


def test_usage_errors(cfg, capsys):
    assert run(capsys, "bohr", "--config", cfg(delta=0.25), "--beta", "0", "--p", "0", "--q", "3")[0] == 2
    assert run(capsys, "bohr", "--config", cfg(delta="1/2"), "--beta", "0", "--p", "0", "--q", "3")[0] == 2
    assert run(capsys, "bohr", "--config", cfg(bogus=1), "--beta", "0", "--p", "0", "--q", "3")[0] == 2
    assert run(capsys, "nonsense")[0] == 2


def test_lemma2_sweep(cfg, capsys):
    code, out = run(capsys, "lemma", "lemma2", "--config", cfg(delta="1/32"), "--beta", "0,1/2,1")
    lines = out.out.strip().splitlines()
    assert code == 0 and lines[0].startswith("lemma,p,q") and len(lines) == 1 + 3 * 14


def test_cor3_precondition(cfg, capsys):
    code, out = run(capsys, "lemma", "cor3", "--config", cfg(delta="1/12"), "--p", "2,3")
    assert code == 1 and out.out.count("precondition") == 2


def test_lemma4_sweep(capsys):
    code, out = run(capsys, "lemma", "lemma4", "--samples", "3", "--nu-max", "2")
    assert code == 0 and "False" not in out.out


def test_construct_and_certify(tmp_path, capsys):
    out = tmp_path / "run"
    code, _ = run(capsys, "construct", "--out", str(out), "--nu-max", "3", "--horizon", "2000")
    assert code == 0
    rows = (out / "trace.csv").read_text().splitlines()
    assert rows[0] == "nu,q,measure_num,measure_den,k1_count,k2_count,conservative_count"
    assert [r.split(",")[1] for r in rows[1:]] == ["0", "1", "6", "716"]
    witness = json.loads((out / "witness.json").read_text())
    assert set(witness) == {"numerator", "level", "lo", "hi", "verified_up_to"}
    assert witness["verified_up_to"] == 2000
    code, res = run(capsys, "certify", "--witness", str(out / "witness.json"), "--P", "2000")
    assert code == 0 and json.loads(res.out)["failures"] == []


def test_construct_is_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(capsys, "construct", "--out", str(tmp_path / name), "--horizon", "500")[0] == 0
    for f in ("trace.csv", "witness.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_construct_single_row(tmp_path, capsys):
    code, _ = run(capsys, "construct", "--out", str(tmp_path), "--nu-max", "0", "--horizon", "0")
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert code == 0 and rows[1:] == ["0,0,1,1,0,0,0"]


def test_construct_infeasible(capsys):
    code, out = run(capsys, "construct", "--delta", "1/1048576", "--nu-max", "3")
    assert code == 3 and "infeasible" in out.err and out.out == ""


def test_certify_failures_and_usage(tmp_path, capsys):
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"numerator": 512, "level": 10, "lo": "1/2", "hi": "513/1024", "verified_up_to": 0}))
    code, out = run(capsys, "certify", "--witness", str(w), "--P", "10")
    assert code == 1 and json.loads(out.out)["failures"] == [8]
    assert run(capsys, "certify", "--witness", str(w), "--P", "0")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "certify", "--witness", str(bad), "--P", "5")[0] == 2
    bad.write_text(json.dumps({"numerator": 9, "level": 2}))
    assert run(capsys, "certify", "--witness", str(bad), "--P", "5")[0] == 2


def test_schedule(capsys):
    code, out = run(capsys, "schedule", "--nu-max", "3")
    assert code == 0 and out.out.splitlines() == ["nu,q", "0,0", "1,1", "2,6", "3,716"]


def test_custom_xi(cfg, capsys):
    path = cfg(xi={"a": "0", "b": "1", "d": 2}, delta="1/8")
    code, out = run(capsys, "bohr", "--config", path, "--beta", "0", "--p", "0", "--q", "20")
    assert code == 0 and json.loads(out.out)["members"]


def test_schedule_config_spellings(cfg, tmp_path, capsys):
    for name in ("standard", "paper"):
        code, _ = run(capsys, "construct", "--config", cfg(schedule=name), "--out", str(tmp_path / name),
                      "--nu-max", "2", "--horizon", "0")
        assert code == 0
    code, _ = run(capsys, "construct", "--config", cfg(schedule=[0, 3, 40]), "--out", str(tmp_path / "c"),
                  "--horizon", "0")
    rows = (tmp_path / "c" / "trace.csv").read_text().splitlines()[1:]
    assert code == 0 and [r.split(",")[1] for r in rows] == ["0", "3", "40"]
    assert run(capsys, "construct", "--config", cfg(schedule="weekly"), "--out", str(tmp_path))[0] == 2
