import json
import math

import pytest

from primerace.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSkewesCommand:
    def test_crossing(self, capsys):
        code, out, _ = run_cli(
            capsys, "skewes", "--q", "4", "--a", "1", "--b", "3", "--ceiling", "30000"
        )
        assert code == 0
        assert "x = 26861" in out

    def test_lower_bound(self, capsys):
        code, out, _ = run_cli(
            capsys, "skewes", "--q", "4", "--a", "1", "--b", "3", "--ceiling", "10000"
        )
        assert code == 0
        assert "x > " in out


class TestDensityCommand:
    def test_reports_estimate(self, capsys):
        code, out, _ = run_cli(
            capsys, "density", "--q", "4", "--a", "3", "--b", "1",
            "--sieve-limit", "100000",
        )
        assert code == 0
        value = float(out.splitlines()[0].split("=")[1])
        assert 0.9 < value < 1.0

    def test_qr_nr_flag(self, capsys):
        code, out, _ = run_cli(
            capsys, "density", "--q", "8", "--qr-nr", "--sieve-limit", "50000"
        )
        assert code == 0
        assert "estimate=" in out


class TestWassCommand:
    def test_table(self, capsys):
        code, out, _ = run_cli(
            capsys, "wass", "--gammas", "1.0", "--X", "10", "--H", "1,2"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "H, leading, tail, total"
        total = float(lines[1].split(",")[3])
        assert total == pytest.approx(4 * math.sqrt(3) + 0.2 * math.sqrt(2))


class TestConstructAndVerify:
    def test_roundtrip(self, capsys, tmp_path):
        cert_path = tmp_path / "q1.cert"
        code, out, _ = run_cli(
            capsys, "construct", "--n", "1", "--prime-variant",
            "--output", str(cert_path),
        )
        assert code == 0
        assert "q_1 = 73" in out and "q'_1 = 365" in out
        code, out, _ = run_cli(capsys, "verify", "--certificate", str(cert_path))
        assert code == 0 and "OK" in out
        prime_path = cert_path.with_suffix(".prime.cert")
        code, out, _ = run_cli(capsys, "verify", "--certificate", str(prime_path))
        assert code == 0 and "365" in out

    def test_tampered_certificate_exit_code(self, capsys, tmp_path):
        cert_path = tmp_path / "q1.cert"
        run_cli(capsys, "construct", "--n", "1", "--output", str(cert_path))
        text = cert_path.read_text(encoding="utf-8").replace("prime: 73", "prime: 97")
        cert_path.write_text(text, encoding="utf-8")
        code, out, _ = run_cli(capsys, "verify", "--certificate", str(cert_path))
        assert code == 1
        assert "FAIL" in out


class TestZerosCommand:
    def test_writes_zero_file(self, capsys, tmp_path):
        out_file = tmp_path / "zeros.txt"
        code, out, _ = run_cli(
            capsys, "zeros", "--q", "4", "--T", "30", "--output", str(out_file)
        )
        assert code == 0
        lines = [
            ln for ln in out_file.read_text(encoding="utf-8").splitlines()
            if not ln.startswith("#")
        ]
        assert lines[0].startswith("4,3,6.0209489")

    def test_cache_dir(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys, "zeros", "--q", "3", "--T", "20", "--cache-dir", str(tmp_path / "c")
        )
        assert code == 0
        assert list((tmp_path / "c").glob("*.zeros"))

    def test_cache_env_var(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("PRIMERACE_CACHE", str(tmp_path / "envcache"))
        code, _, _ = run_cli(capsys, "zeros", "--q", "3", "--T", "20")
        assert code == 0
        assert list((tmp_path / "envcache").glob("*.zeros"))


class TestRaceCommand:
    def test_full_run_exit_zero(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys, "race", "--q", "4", "--a", "3", "--b", "1",
            "--sieve-limit", "100000", "--zero-T", "100",
            "--mc-samples", "200000", "--output-dir", str(tmp_path / "out"),
        )
        assert code == 0
        assert "delta=" in out
        assert (tmp_path / "out" / "summary.txt").exists()

    def test_qr_nr_pipeline(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys, "race", "--race", "qr_nr", "--q", "8",
            "--sieve-limit", "100000", "--zero-T", "150",
            "--mc-samples", "300000", "--output-dir", str(tmp_path / "out"),
        )
        assert code == 0
        delta = float(
            next(ln for ln in out.splitlines() if ln.startswith("delta=")).split("=")[1]
        )
        assert 0.0 < delta < 0.01  # heavily biased toward nonresidues

    def test_missing_zero_file_is_usage_error(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "race", "--zero-source", "ingest",
            "--zero-path", str(tmp_path / "none.txt"),
            "--output-dir", str(tmp_path / "out"),
        )
        assert code == 2
        assert "error" in err.lower()

    def test_ingest_roundtrip_pipeline(self, capsys, tmp_path):
        zero_file = tmp_path / "zeros.txt"
        code, _, _ = run_cli(
            capsys, "zeros", "--q", "4", "--T", "210", "--output", str(zero_file)
        )
        assert code == 0
        code, out, _ = run_cli(
            capsys, "race", "--zero-source", "ingest",
            "--zero-path", str(zero_file), "--zero-T", "200",
            "--sieve-limit", "100000", "--mc-samples", "200000",
            "--output-dir", str(tmp_path / "out"),
        )
        assert code == 0
        delta = float(
            next(ln for ln in out.splitlines() if ln.startswith("delta=")).split("=")[1]
        )
        assert 0.99 < delta < 1.0

    def test_config_file_overrides_flags(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "sieve_limit": 50000,
                    "zero_T": 120.0,
                    "mc_samples": 100000,
                    "w1_truncations": [30.0, 60.0, 120.0],
                    "output_dir": str(tmp_path / "from-config"),
                }
            ),
            encoding="utf-8",
        )
        code, out, _ = run_cli(
            capsys, "race", "--config", str(cfg),
            "--output-dir", str(tmp_path / "from-flag"),
        )
        assert code == 0
        assert (tmp_path / "from-config").exists()
        assert not (tmp_path / "from-flag").exists()


def test_bad_subcommand_usage_exit(capsys):
    assert main(["definitely-not-a-command"]) == 2
