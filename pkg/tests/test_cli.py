import io
import json
import random
import subprocess
import sys

import pytest

from n2super.cli import run
from n2super.grassmann import GrassmannElement
from n2super.moduli import ModuliData, e_map
from n2super.projective import ProjectiveParams
from n2super.superseries import SuperPoint, SuperSeries

from conftest import random_moduli, random_params

N = 4
zeta = lambda j: GrassmannElement.generator(j, N)


def call(*argv, data=None):
    if data is not None:
        argv = (*argv, "--json", json.dumps(data))
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, json.loads(out.getvalue())


class TestExitCodes:
    def test_success(self):
        a = (zeta(1) + 2).to_json()
        code, res = call("gr-inv", data={"a": a})
        assert code == 0
        assert GrassmannElement.from_json(res["result"], N) == (zeta(1) + 2).inverse()

    def test_domain_error(self):
        code, res = call("gr-inv", data={"a": zeta(1).to_json()})
        assert code == 2 and res["error"] == "NonInvertible"

    @pytest.mark.parametrize("argv", [
        ("no-such-command",),
        ("gr-inv",),
        ("gr-inv", "--json", "{not json"),
        ("gr-inv", "--json", "{}"),
        ("gr-mul", "--gens", "99", "--json", "{}"),
        ("verify-ns", "--window", "-1"),
        ("pp-map", "--mode", "sideways", "--json", "{}"),
    ])
    def test_malformed(self, argv):
        code, res = call(*argv)
        assert code == 1 and res["error"] == "MalformedInput"

    def test_sc_failure_is_a_result(self):
        x, pp, pm = SuperSeries.x(N), SuperSeries.phi(1, N), SuperSeries.phi(-1, N)
        code, res = call("sc-check", data=SuperPoint(x, pp, pm * 2).to_json())
        assert code == 0 and res["passed"] is False


class TestCommands:
    def test_gr_mul(self):
        code, res = call("gr-mul", data={"a": zeta(1).to_json(), "b": zeta(2).to_json()})
        assert code == 0 and res["result"] == (zeta(1) * zeta(2)).to_json()

    def test_verify_ns(self):
        code, res = call("verify-ns")
        assert code == 0 and res == {"pass": True, "pairs_checked": 1296}

    def test_verify_ns_nonhomo(self):
        code, res = call("verify-ns-nonhomo", "--window", "1")
        assert code == 0 and res["pass"] is True and res["pairs_checked"] == 144

    def test_three_factor_product(self):
        code, res = call("pp-example71")
        assert code == 0 and res["equal"] is True

    def test_e_map_round_trip(self):
        d = random_moduli(random.Random(3), N, 4)
        code, seqs = call("e-map", "--weight", "4", data=d.to_json())
        assert code == 0
        code, back = call("e-inv", data=seqs)
        assert code == 0 and ModuliData.from_json(back, N) == d

    def test_e_map_matches_library(self):
        d = random_moduli(random.Random(5), N, 3)
        _, seqs = call("e-map", "--weight", "3", data=d.to_json())
        assert seqs == e_map(d, 3).to_json()

    def test_pp_compose_identity(self):
        p = random_params(random.Random(1))
        ident = ProjectiveParams.identity(N).to_json()
        code, res = call("pp-compose", data={"first": p.to_json(), "second": ident})
        assert code == 0 and ProjectiveParams.from_json(res, N).canonical() == p.canonical()

    def test_to_nonhomo_round_trip(self):
        ident = SuperPoint.identity(N).to_json()
        _, nh = call("to-nonhomo", data=ident)
        assert nh["frame"] == "nonhomogeneous"
        code, back = call("to-nonhomo", "--mode", "reverse", data=nh)
        assert code == 0 and SuperPoint.from_json(back, N).agrees(SuperPoint.identity(N))
        code, res = call("nh-check", data=nh)
        assert code == 0 and res["passed"] is True

    def test_frame_mismatch_rejected(self):
        _, nh = call("to-nonhomo", data=SuperPoint.identity(N).to_json())
        code, res = call("sc-check", data=nh)
        assert code == 1

    def test_osp_generator(self):
        code, res = call("osp-check", data={"generator": {"family": "L", "j": 1}})
        assert code == 0 and res["passed"] is True

    def test_out_file(self, tmp_path):
        target = tmp_path / "r.json"
        code = run(["verify-ns", "--window", "1", "--out", str(target)], stdout=io.StringIO())
        assert code == 0 and json.loads(target.read_text())["pass"] is True

    def test_in_file(self, tmp_path):
        src = tmp_path / "in.json"
        src.write_text(json.dumps({"a": zeta(1).to_json(), "b": zeta(1).to_json()}))
        code, res = call("gr-mul", "--in", str(src))
        assert code == 0 and res["result"] == []


def test_deterministic_output():
    d = random_moduli(random.Random(9), N, 3).to_json()
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        run(["e-tilde", "--order", "5", "--json", json.dumps(d)], stdout=buf)
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "n2super.cli", "verify-ns", "--window", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["pass"] is True
