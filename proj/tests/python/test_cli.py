import json
import subprocess


def run(cli, *args):
    return subprocess.run([cli, *args], capture_output=True, text=True)


def test_echo_prints_canonical_config(cli, tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("kind: simulate\nsimulation:\n  particles: 64\n")
    out = run(cli, "simulate", str(cfg), "--echo", "--set", "simulation.horizon=0.25")
    assert out.returncode == 0, out.stderr
    assert "particles: 64" in out.stdout
    assert "horizon: 0.25" in out.stdout


def test_invalid_config_exits_with_usage_error(cli, tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("kind: simulate\nsimulation:\n  n: 0\n")
    out = run(cli, "simulate", str(cfg))
    assert out.returncode == 2
    assert "simulation.n" in out.stderr
    assert "line 3" in out.stderr


def test_unknown_key_is_rejected(cli, tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("kind: simulate\nsimulation:\n  stepsize: 1\n")
    out = run(cli, "simulate", str(cfg))
    assert out.returncode == 2
    assert "stepsize" in out.stderr


def test_simulate_writes_summary(cli, tmp_path):
    out_dir = tmp_path / "out"
    out = run(cli, "simulate", "--set", "simulation.particles=128", "--set", "simulation.horizon=0.1",
              "-o", str(out_dir))
    assert out.returncode == 0, out.stderr
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["pass"] is True
    assert summary["verdicts"]["mass_constant"] is True
    assert (out_dir / "config.yaml").exists()
