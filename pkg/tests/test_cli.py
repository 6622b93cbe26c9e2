import io
import json
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from dirichlet_lab import __version__
from dirichlet_lab.cli import dumps, main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, err = run(*argv)
    return code, json.loads(out) if out else None, err


class TestCommands:
    def test_classify(self):
        code, rep, _ = report("classify", "--weight", "t^0.5", "--p", "2")
        assert code == 0
        assert rep["result"]["regime"] == "ZeroOnly"
        assert rep["result"]["d0"] == "KernelOfTraceZero"
        assert rep["schema"] == "dirichlet-lab/1"
        assert rep["version"] == __version__
        assert rep["config"]["weight"] == "t^0.5"

    def test_classify_neither(self):
        code, rep, _ = report("classify", "--weight", "t", "--p", "2")
        assert code == 0
        assert rep["result"]["regime"] == "Neither"
        assert rep["result"]["d0"] == "WholeSpace"

    def test_minimize(self):
        code, rep, _ = report("minimize", "--weight", "1", "--p", "2", "--k", "1", "--K", "3",
                              "--a", "1")
        assert code == 0
        assert rep["result"]["energy"] == pytest.approx(0.5, rel=1e-12)
        assert rep["result"]["oracle_energy"] == pytest.approx(0.5, rel=1e-6)

    def test_omega_csv(self):
        code, out, _ = run("omega", "--weight", "t^2", "--grid", "1,4", "--output", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "t,omega0,omega_inf"
        assert lines[2] == "4.0,,0.5"

    def test_trace(self):
        code, rep, _ = report("trace", "--derivative", "1", "--anchor-value", "4")
        assert code == 0
        res = rep["result"]
        assert abs(res["value"] - 3.0) <= 2 * res["certified_error"]

    def test_trace_from_file(self, tmp_function_file):
        path = tmp_function_file('{"anchor": 1, "anchor_value": 4, "derivative": "1", "label": "u"}')
        code, rep, _ = report("trace", "--function", path)
        assert code == 0
        assert rep["result"]["value"] == pytest.approx(3.0, abs=1e-7)

    def test_approx_csv(self):
        code, out, _ = run("approx", "--weight", "t^2", "--output", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "n,s_n,t_n,gap,predicted_gap,verdict"
        assert lines[1].startswith("2,")
        assert lines[-1].endswith("Stalling")

    def test_hardy_with_estimate(self):
        code, rep, _ = report("hardy", "--weight", "1", "--h", "t^-2", "--estimate", "--trials", "4")
        assert code == 0
        assert rep["result"]["bounded"] == "Yes"
        assert 1.8 <= rep["result"]["constant_estimate"] <= 2.0
        assert "sigma_head" in rep["provenance"]

    def test_hardy_conjugate_no(self):
        code, rep, _ = report("hardy", "--weight", "1", "--h", "(1+t)^-3", "--operator", "conjugate")
        assert code == 0
        assert rep["result"]["bounded"] == "No"

    def test_morrey(self):
        code, rep, _ = report("morrey", "--derivative", "1/(1+t)^2", "--grid", "0.5,1,2,4")
        assert code == 0
        assert rep["result"]["bound_holds"] is True

    def test_interp(self):
        code, rep, _ = report("interp", "--weight", "1", "--p", "2", "--weight1", "t^2", "--p1",
                              "4", "--theta", "0.5")
        assert code == 0
        assert rep["result"]["p"] == pytest.approx(8 / 3)


class TestExitCodes:
    @pytest.mark.parametrize("argv,code", [
        (["classify", "--weight", "t^"], "E_SYNTAX"),
        (["classify", "--weight", "t-1"], "E_DOMAIN"),
        (["frobnicate"], "E_USAGE"),
        (["classify", "--p", "1"], "E_PRECONDITION"),
        (["classify", "--tol", "-1"], "E_USAGE"),
        (["omega", "--weight", "t"], None),
        (["trace", "--weight", "t"], "E_USAGE"),
        (["trace", "--weight", "t", "--derivative", "1"], "E_TRACE_UNDEFINED"),
        (["minimize", "--k", "3", "--K", "1"], "E_PRECONDITION"),
        (["hardy", "--h", "t^-3", "--estimate"], None),
    ])
    def test_errors(self, argv, code):
        status, out, err = run(*argv)
        if code is None:
            assert status == 0
            return
        assert status == 1
        assert out == ""
        lines = err.strip().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["error"]["code"] == code

    def test_unknown_is_two(self):
        # sigma ~ 1/(t log^2 t) at infinity: convergent, but too slowly for a verdict
        status, out, _ = run("classify", "--weight", "t*log(t+2)^2", "--p", "2")
        rep = json.loads(out)
        assert rep["result"]["regime"] == "Unknown"
        assert rep["result"]["d0"] == "Undetermined"
        assert status == 2


class TestSerialization:
    def test_floats_round_trip(self):
        assert dumps(0.1) == "0.10000000000000001"
        assert float(json.loads(dumps([0.1]))[0]) == 0.1
        assert dumps(float("inf")) == '"inf"'
        assert dumps(2.0) == "2.0"

    def test_sorted_keys(self):
        assert dumps({"b": 1, "a": 2}) == '{"a": 2, "b": 1}'

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_any_float_round_trips(self, x):
        assert json.loads(dumps(x)) == x

    @pytest.mark.parametrize("argv", [
        ["classify", "--weight", "t^0.5*(1+t)"],
        ["minimize", "--weight", "t", "--p", "3", "--k", "1", "--K", "4", "--n", "64"],
        ["hardy", "--weight", "1", "--h", "(1+t)^-3", "--estimate", "--trials", "4"],
    ])
    def test_byte_identical(self, argv):
        assert run(*argv)[1] == run(*argv)[1]

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "dirichlet_lab", "classify", "--weight", "t^2"],
                             capture_output=True, text=True, check=False)
        assert out.returncode == 0
        assert json.loads(out.stdout)["result"]["regime"] == "InfinityOnly"
