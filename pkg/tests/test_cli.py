import json

import pytest

from svprec.cli import main
from svprec.harness import read_results


class TestCli:
    def test_logo_run_writes_outputs(self, tmp_path):
        out = tmp_path / "logo.csv"
        code = main(["logo", "--trials", "1", "--out", str(out)])
        assert code == 0
        rows = read_results(out)
        assert rows
        manifest = json.loads((tmp_path / "logo.csv.manifest.json").read_text())
        assert manifest["schema"] == 1
        assert manifest["failures"] == []
        assert manifest["timestamp"] is not None

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "logo-recon", "bogus_key": 1}))
        code = main(["logo", "--config", str(cfg)])
        assert code == 2
        assert "unknown config keys" in capsys.readouterr().err

    def test_kind_mismatch_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "ratings"}))
        code = main(["logo", "--config", str(cfg)])
        assert code == 2
        assert "does not match" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, tmp_path):
        code = main(["logo", "--config", str(tmp_path / "nope.json")])
        assert code == 2

    def test_seed_override_applies(self, tmp_path):
        out = tmp_path / "a.csv"
        code = main(["logo", "--trials", "1", "--seed", "123", "--out", str(out)])
        assert code == 0
        manifest = json.loads((tmp_path / "a.csv.manifest.json").read_text())
        assert manifest["config"]["seed"] == 123

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            main([])
