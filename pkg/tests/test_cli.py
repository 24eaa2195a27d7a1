"""Command-line interface: subcommands, exit codes, file outputs."""

from imexctrl import serialize_tableau
from imexctrl.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


class TestTopLevel:
    def test_version(self, capsys):
        rc, out, _ = run(capsys, "--version")
        assert rc == 0
        assert out.strip() == "imexctrl 0.1.0"

    def test_missing_command_is_usage_error(self, capsys):
        rc, _, err = run(capsys)
        assert rc == 64
        assert "usage" in err

    def test_unknown_command(self, capsys):
        rc, _, _ = run(capsys, "frobnicate")
        assert rc == 64

    def test_unknown_flag(self, capsys):
        rc, _, _ = run(capsys, "solve", "--scheme", "imex-ssp2", "--frob")
        assert rc == 64

    def test_unknown_scheme(self, capsys):
        rc, _, err = run(capsys, "tableau", "show", "imex-nope")
        assert rc == 64
        assert "imex-nope" in err

    def test_missing_tableau_file(self, capsys):
        rc, _, err = run(capsys, "tableau", "show", "./does-not-exist.txt")
        assert rc == 64
        assert "no such tableau file" in err


class TestTableauShow:
    def test_builtin_with_classification_comments(self, capsys):
        rc, out, _ = run(capsys, "tableau", "show", "imex-ssp2")
        assert rc == 0
        assert out.startswith("name: imex-ssp2\n")
        assert "# weights_equal: true\n" in out
        assert "# adjoint_transform: AllWeightsNonzero\n" in out

    def test_output_round_trips_through_file(self, capsys, tmp_path):
        rc, out, _ = run(capsys, "tableau", "show", "imex-hag")
        assert rc == 0
        path = tmp_path / "hag.txt"
        path.write_text(out)
        rc2, out2, _ = run(capsys, "tableau", "show", str(path))
        assert rc2 == 0
        assert out2 == out

    def test_full_listing(self, capsys):
        rc, out, _ = run(capsys, "tableau", "show", "imex-sa3", "--full")
        assert rc == 0
        assert "derived coefficients" in out
        assert "adjoint transform (AllWeightsNonzero)" in out
        assert "alpha_ex" in out

    def test_malformed_file_reports_line(self, capsys, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("name: broken\ns: two\n")
        rc, _, err = run(capsys, "tableau", "show", str(path))
        assert rc == 64
        assert "line 2" in err


class TestOrderCheck:
    def test_third_order_scheme_passes(self, capsys):
        rc, out, _ = run(capsys, "order-check", "imex-sa3")
        assert rc == 0
        assert "result: pass (conditions up to order 3)" in out

    def test_second_order_scheme_fails_at_three(self, capsys):
        rc, out, _ = run(capsys, "order-check", "imex-gsa")
        assert rc == 1
        assert "result: fail" in out

    def test_second_order_scheme_passes_at_two(self, capsys):
        rc, out, _ = run(capsys, "order-check", "imex-gsa", "--order", "2")
        assert rc == 0
        assert "adjoint scheme conditions skipped" in out

    def test_csv_export(self, capsys, tmp_path):
        path = tmp_path / "cond.csv"
        rc, out, _ = run(capsys, "order-check", "imex-ssp2", "--order", "2",
                         "--csv", str(path))
        assert rc == 0
        assert f"wrote {path}" in out
        lines = path.read_text().split("\n")
        assert lines[0] == "label,lhs,rhs,residual,satisfied"
        assert all(line.endswith(",true") for line in lines[1:-1])


class TestSolve:
    def test_unrelaxed_solve_summary(self, capsys):
        rc, out, _ = run(capsys, "solve", "--scheme", "imex-ssp2",
                         "--eps", "0", "--n", "40")
        assert rc == 0
        assert "scheme=imex-ssp2 problem=hager-unrelaxed eps=0 N=40" in out
        assert "converged=true" in out
        fields = dict(
            part.split("=") for line in out.splitlines() for part in line.split()
            if "=" in part
        )
        assert float(fields["norm_sq_F"]) <= 1e-8
        assert 0.0 < float(fields["objective"]) < 1.0

    def test_output_directory_byte_stable(self, capsys, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out_dir in (out_a, out_b):
            rc, _, _ = run(capsys, "solve", "--scheme", "imex-ssp2",
                           "--eps", "0", "--n", "20", "--out", str(out_dir))
            assert rc == 0
        for fname in ("state.csv", "adjoint.csv", "control.csv", "solve_log.csv"):
            assert (out_a / fname).read_bytes() == (out_b / fname).read_bytes()
        assert (out_a / "state.csv").read_text().startswith("t,y1,y2\n")
        assert (out_a / "control.csv").read_text().startswith("t,u1\n")
        assert (out_a / "solve_log.csv").read_text().startswith(
            "iter,norm_sq_F,objective,step_length\n"
        )

    def test_iteration_cap_exit_code(self, capsys):
        rc, _, err = run(capsys, "solve", "--scheme", "imex-ssp2",
                         "--eps", "0", "--n", "40", "--max-iter", "1")
        assert rc == 2
        assert "not converged" in err

    def test_negative_eps_rejected(self, capsys):
        rc, _, err = run(capsys, "solve", "--scheme", "imex-ssp2", "--eps", "-1")
        assert rc == 64
        assert "--eps" in err


class TestConvergence:
    def test_stdout_csv(self, capsys):
        rc, out, _ = run(capsys, "convergence", "--scheme", "imex-ssp2",
                         "--eps-list", "1.0", "--n-list", "10,20",
                         "--reference-n", "40")
        assert rc == 0
        lines = out.split("\n")
        assert lines[0].startswith("eps,N,status,F_inf,")
        assert lines[1].startswith("1,10,ok,")

    def test_file_output(self, capsys, tmp_path):
        path = tmp_path / "study.csv"
        rc, out, _ = run(capsys, "convergence", "--scheme", "imex-ssp2",
                         "--eps-list", "0", "--n-list", "10",
                         "--reference-n", "20", "--control", "optimized",
                         "--out", str(path))
        assert rc == 0
        assert f"wrote {path}" in out
        assert path.read_text().startswith("eps,N,status,norm_sq_F,")

    def test_bad_n_list_is_usage_error(self, capsys):
        rc, _, err = run(capsys, "convergence", "--scheme", "imex-ssp2",
                         "--eps-list", "1.0", "--n-list", "10,x")
        assert rc == 64
        assert "--n-list" in err

    def test_non_divisor_grid_is_usage_error(self, capsys):
        rc, _, err = run(capsys, "convergence", "--scheme", "imex-ssp2",
                         "--eps-list", "1.0", "--n-list", "12",
                         "--reference-n", "40")
        assert rc == 64
        assert "reference" in err


class TestSymplecticCheck:
    def test_linear_split_defaults(self, capsys):
        rc, out, _ = run(capsys, "symplectic-check", "--scheme", "imex-ssp2",
                         "--h-list", "0.2,0.1")
        assert rc == 0
        lines = out.split("\n")
        assert lines[0] == "h,residual,qualified"
        assert lines[1].endswith(",true")
        assert float(lines[1].split(",")[1]) <= 1e-8

    def test_hamiltonian_problem(self, capsys):
        rc, out, _ = run(capsys, "symplectic-check", "--scheme", "imex-ssp2",
                         "--problem", "hager", "--eps", "1.0",
                         "--h-list", "0.1")
        assert rc == 0
        assert out.startswith("h,residual,qualified\n")

    def test_no_transform_notes_and_exits_zero(self, capsys):
        rc, out, _ = run(capsys, "symplectic-check", "--scheme", "imex-gsa",
                         "--h-list", "0.1")
        assert rc == 0
        assert "no full adjoint transform" in out
        assert "h,residual" not in out

    def test_unqualified_scheme_noted(self, capsys, tmp_path, uneq_tab):
        path = tmp_path / "uneq.txt"
        path.write_text(serialize_tableau(uneq_tab))
        rc, out, _ = run(capsys, "symplectic-check", "--scheme", str(path),
                         "--h-list", "0.1")
        assert rc == 0
        assert "not symplecticity-qualified" in out
        assert ",false" in out

    def test_bound_enforcement(self, capsys):
        rc, out, _ = run(capsys, "symplectic-check", "--scheme", "imex-ssp2",
                         "--h-list", "0.1", "--bound", "1e-15")
        assert rc == 1
        assert "result: fail" in out
        rc2, _, _ = run(capsys, "symplectic-check", "--scheme", "imex-ssp2",
                        "--h-list", "0.1", "--bound", "1e-6")
        assert rc2 == 0

    def test_p0_length_validated(self, capsys):
        rc, _, err = run(capsys, "symplectic-check", "--scheme", "imex-ssp2",
                         "--problem", "hager", "--p0", "1.0,2.0")
        assert rc == 64
        assert "--p0" in err


class TestGradientCheck:
    def test_defaults_pass(self, capsys):
        rc, out, _ = run(capsys, "gradient-check", "--scheme", "imex-ssp2",
                         "--n", "10")
        assert rc == 0
        assert "control=ones" in out and "control=random" in out
        assert "result: pass" in out

    def test_single_variant(self, capsys):
        rc, out, _ = run(capsys, "gradient-check", "--scheme", "imex-sa3",
                         "--n", "10", "--control", "ones")
        assert rc == 0
        assert "control=random" not in out

    def test_impossible_tolerance_fails(self, capsys):
        rc, out, _ = run(capsys, "gradient-check", "--scheme", "imex-ssp2",
                         "--n", "10", "--atol", "1e-15", "--rtol", "1e-15")
        assert rc == 1
        assert "result: fail" in out
