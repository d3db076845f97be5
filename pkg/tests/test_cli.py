import io

import pytest

from dpevalues.cli import EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION, main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


class TestCli:
    def test_rate_with_dual(self):
        code, text = run("rate", "--epsilon", "1", "--dual-check")
        assert code == EXIT_OK
        rows = dict(line.split("\t") for line in text.strip().splitlines())
        assert abs(float(rows["primal_minus_dual"])) < 1e-6
        assert float(rows["rate"]) == pytest.approx(0.2842647781563714, abs=1e-9)

    def test_batch_csv(self):
        code, text = run("batch", "--epsilon", "1", "--n", "50", "--trials", "5")
        lines = text.strip().splitlines()
        assert code == EXIT_OK and lines[0] == "trial,log_e,reject_at_alpha" and len(lines) == 6

    def test_sequential_ecdf(self):
        code, text = run("sequential", "--epsilon", "2", "--trials", "4", "--alt", "bernoulli p=0.9")
        assert code == EXIT_OK
        assert "trial,decision,N,censored" in text and "\nN,F\n" in text

    def test_plan(self):
        code, text = run("plan", "--epsilon", "1")
        assert code == EXIT_OK and "lower bound" in text

    def test_compare(self, tmp_path):
        code, text = run("compare", "--epsilons", "2", "--qs", "0.9", "--trials", "2",
                         "--output-dir", str(tmp_path / "out"))
        assert code == EXIT_OK and (tmp_path / "out" / "trials.csv").exists()

    def test_validate_fault_exit_code(self):
        code, text = run("validate", "--inject-fault", "omit_compensator")
        assert code == EXIT_VALIDATION and "FAIL" in text

    @pytest.mark.parametrize("argv", [
        ("rate", "--epsilon", "1", "--null", "bernoulli p=1.5"),
        ("compare", "--rho", "0.5"),
        ("plan", "--epsilon", "-1"),
    ("plan", "--epsilon", "1", "--null", "gaussian mean=0"),
        ("rate", "--epsilon", "1", "--dual-check", "--null", "gaussian mu=0 sigma=1",
         "--alt", "gaussian mu=1 sigma=1"),
    ])
    def test_config_errors(self, argv, capsys):
        code, _ = run(*argv)
        assert code == EXIT_CONFIG
        assert capsys.readouterr().err

    def test_missing_required_argument(self):
        with pytest.raises(SystemExit) as exc:
            main(["rate"], out=io.StringIO())
        assert exc.value.code == EXIT_CONFIG
