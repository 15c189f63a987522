"""
Tests for the command line interface.
"""

import json

import pytest

from collapsible_pushdown.__main__ import create_parser, main
from collapsible_pushdown.constants import ExitCode
from collapsible_pushdown.tests.fixtures import SYS1_DOC


@pytest.fixture
def system_file(tmp_path):
    """The three-state system written to disk."""
    path = tmp_path / "sys1.json"
    path.write_text(json.dumps(SYS1_DOC, ensure_ascii=False), encoding='utf-8')
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out.splitlines()


class TestParser:
    """Test cases for argument parsing."""

    def test_command_required(self):
        """Test that a subcommand must be given."""
        with pytest.raises(SystemExit):
            create_parser().parse_args([])

    def test_version(self, capsys):
        """Test the version flag."""
        with pytest.raises(SystemExit) as info:
            create_parser().parse_args(["--version"])
        assert info.value.code == 0
        assert "1.0.0" in capsys.readouterr().out

    def test_global_and_command_config_flags(self):
        """Test that the global settings file and the configuration text do not clash."""
        args = create_parser().parse_args(
            ["--config", "settings.json", "encode", "sys.json", "--config", "0|⊥"])
        assert args.config_path == "settings.json"
        assert args.configuration == "0|⊥"


class TestCommands:
    """Test cases for each command's output and exit code."""

    def test_explore_text(self, capsys, system_file):
        """Test the plain exploration listing."""
        code, lines = run(capsys, "explore", system_file, "--radius", "3")
        assert code == ExitCode.OK.value
        assert "vertex 0|⊥^1@0" in lines
        assert any(line.startswith("edge 0|⊥^1@0 --cl--> ") for line in lines)

    def test_explore_dot(self, capsys, system_file):
        """Test DOT output."""
        code, lines = run(capsys, "explore", system_file, "--format", "dot", "--radius", "2")
        assert code == ExitCode.OK.value
        assert lines[0] == "digraph cpg {"
        assert lines[-1] == "}"

    def test_encode(self, capsys, system_file):
        """Test printing a configuration tree."""
        code, lines = run(capsys, "encode", system_file, "--config", "2|⊥:⊥ a^2@1")
        assert code == ExitCode.OK.value
        assert lines == [". 2", "0 ⊥^1", "01 ~", "010 a^2"]

    def test_decode(self, capsys, tmp_path):
        """Test decoding tree text."""
        tree = tmp_path / "t.txt"
        tree.write_text(". 2\n0 ⊥^1\n01 ~\n010 a^2\n", encoding='utf-8')
        code, lines = run(capsys, "decode", str(tree))
        assert code == ExitCode.OK.value
        assert lines == ["2|⊥^1@0 : ⊥^1@0 a^2@1"]

    def test_check_tree(self, capsys, tmp_path, system_file):
        """Test violation reports and the exit code for broken trees."""
        good = tmp_path / "good.txt"
        good.write_text(". 0\n0 ⊥^1\n", encoding='utf-8')
        bad = tmp_path / "bad.txt"
        bad.write_text(". 0\n0 ⊥^1\n1 ~\n", encoding='utf-8')
        assert run(capsys, "check-tree", str(good), "--system", system_file) == (0, ["valid"])
        code, lines = run(capsys, "check-tree", str(bad))
        assert code == ExitCode.FALSE.value
        assert lines[0].startswith("condition 4 at 1:")

    def test_milestones(self, capsys, system_file):
        """Test the milestone listing."""
        code, lines = run(capsys, "milestones", system_file, "--stack", "⊥ : ⊥")
        assert code == ExitCode.OK.value
        assert lines == [".\t⊥^1@0", "1\t⊥^1@0 : ⊥^1@0"]

    def test_loops(self, capsys, system_file):
        """Test the loop summary of ⊥ and its cross-check."""
        code, lines = run(capsys, "loops", system_file, "--word", "⊥")
        assert (code, lines) == (0, ["{(0,0), (1,1), (1,2), (2,2)}"])
        code, lines = run(capsys, "loops", system_file, "--word", "⊥ a^2", "--check", "--radius", "8")
        assert code == ExitCode.OK.value
        assert lines[-1] == "agree"

    def test_reachable(self, capsys, system_file):
        """Test membership answers and certificates."""
        assert run(capsys, "reachable", system_file, "--config", "1|⊥") == (1, ["false"])
        code, lines = run(capsys, "reachable", system_file, "--config", "2|⊥:⊥", "--certificate")
        assert code == ExitCode.OK.value
        assert lines == ["true", "0 0", "01 2"]

    def test_reach(self, capsys, system_file):
        """Test pair reachability in both directions."""
        assert run(capsys, "reach", system_file, "--from", "0|⊥", "--to", "2|⊥:⊥") == (0, ["true"])
        assert run(capsys, "reach", system_file, "--from", "2|⊥:⊥", "--to", "0|⊥") == (1, ["false"])

    def test_reachr(self, capsys, tmp_path, system_file):
        """Test constrained reachability from a constraint file."""
        constraint = tmp_path / "cycle.json"
        constraint.write_text(json.dumps({
            "states": ["0", "1", "2", "3"], "initial": "0", "finals": ["3"],
            "edges": [{"from": "0", "transition": "cl", "to": "1"},
                      {"from": "1", "transition": "a′", "to": "2"},
                      {"from": "2", "transition": "co", "to": "3"}],
        }, ensure_ascii=False), encoding='utf-8')
        code, lines = run(capsys, "reachr", system_file, "--from", "0|⊥", "--to", "0|⊥",
                          "--constraint", str(constraint))
        assert (code, lines) == (0, ["true"])

    def test_fo_exact_and_bounded(self, capsys, system_file):
        """Test both first-order backends."""
        formula = "(exists x (edge co x init))"
        assert run(capsys, "fo", system_file, formula) == (0, ["true (exact-automata)"])
        assert run(capsys, "fo", system_file, formula, "--bounded", "--bound", "10") == \
            (0, ["true (bounded, B=10)"])

    def test_fo_solutions(self, capsys, system_file):
        """Test listing assignments."""
        code, lines = run(capsys, "fo", system_file, "(edge p x y)", "--solutions", "--bound", "6")
        assert code == ExitCode.OK.value
        assert "x=2|⊥^1@0 : ⊥^1@0 a^2@1 y=2|⊥^1@0 : ⊥^1@0" in lines

    def test_automata_edge(self, capsys, system_file):
        """Test dumping one relation automaton."""
        code, lines = run(capsys, "automata", system_file, "--kind", "edge", "--label", "cl")
        assert code == ExitCode.OK.value
        assert lines[0] == "tracks 2"


class TestExitCodes:
    """Test cases for error handling and exit codes."""

    def test_missing_system(self, capsys, tmp_path):
        """Test that a missing system file is an input error."""
        code, _ = run(capsys, "explore", str(tmp_path / "absent.json"))
        assert code == ExitCode.INPUT_ERROR.value

    def test_bad_configuration_text(self, capsys, system_file):
        """Test that unparsable stack text is an input error."""
        code, lines = run(capsys, "encode", system_file, "--config", "0|a b")
        assert code == ExitCode.INPUT_ERROR.value
        assert lines == []

    def test_invalid_budget(self, capsys, system_file):
        """Test that budgets must be positive."""
        code, _ = run(capsys, "explore", system_file, "--radius", "0")
        assert code == ExitCode.INPUT_ERROR.value

    def test_bad_environment(self, capsys, monkeypatch, system_file):
        """Test that a malformed CPK_BUDGET is an input error."""
        monkeypatch.setenv("CPK_BUDGET", "max_radius=lots")
        code, _ = run(capsys, "explore", system_file)
        assert code == ExitCode.INPUT_ERROR.value

    def test_unsupported_formula(self, capsys, system_file):
        """Test that the exact backend reports open formulas as input errors."""
        code = main(["fo", system_file, "(exists x (reach x y))"])
        assert code == ExitCode.INPUT_ERROR.value
        assert "--solutions" in capsys.readouterr().err

    @pytest.mark.slow
    def test_reach_between_variables(self, capsys, system_file):
        """Test a sentence whose reachability atom starts at a variable."""
        code, lines = run(capsys, "fo", system_file, "(exists x (and (reach x init) (not (= x init))))")
        assert code == ExitCode.OK.value
        assert "true (exact-automata)" in lines

    def test_budget_exceeded(self, capsys, system_file):
        """Test that an exhausted automaton budget has its own exit code."""
        code, _ = run(capsys, "automata", system_file, "--kind", "domain", "--state-budget", "1")
        assert code == ExitCode.BUDGET.value
