import io
import json
import subprocess
import sys

import pytest

from oagdef.cli import run_cli


def run(*argv):
    buf = io.StringIO()
    code = run_cli(list(argv), buf)
    return code, buf.getvalue()


def run_json(*argv):
    code, text = run(*argv, "--json")
    return code, json.loads(text) if text else None


def test_parse_and_qe():
    code, obj = run_json("parse", "--formula", "E y (x = y + y)")
    assert code == 0 and obj["free"] == ["x"] and obj["quantifier_depth"] == 1
    code, obj = run_json("qe", "--formula", "E x (2*x = y)")
    assert code == 0 and obj["output"] == "y =_2 0"
    code, text = run("qe", "--model", "q", "--formula", "E x (x < y & z < x)")
    assert text.strip() == "z < y"


def test_normalize_and_member():
    code, obj = run_json("normalize", "--formula", "E y (0 < y & y < x)")
    assert code == 0 and obj["modulus"] == 1
    code, text = run("normalize", "--pieces", '[["0", "inf", "0", 2], ["5"]]')
    assert code == 0 and "5" in text
    assert run("member", "--formula", "x =_3 1", "--at", "4")[0] == 0
    assert run("member", "--formula", "x =_3 1", "--at", "5")[0] == 1


def test_bool_and_affine():
    code, obj = run_json("bool", "--op", "intersect", "--formula", "0 < x", "--formula2", "x =_2 0")
    assert code == 0 and obj["modulus"] == 2
    code, obj = run_json("bool", "--op", "complement", "--formula", "0 < x")
    assert code == 0
    code, obj = run_json("affine", "--op", "translate", "--arg", "3", "--formula", "0 < x")
    assert code == 0


def test_group_definable_and_classify():
    assert run("group-definable", "--formula", "x =_4 1")[0] == 0
    assert run("group-definable", "--formula", "0 < x")[0] == 1
    code, obj = run_json("classify", "--model", "z", "--formula", "0 < x")
    assert code == 0 and obj["kind"] == "order_recovered" and obj["b"] == "inf"
    code, obj = run_json("classify", "--formula", "E y (x = 3*y)")
    assert code == 0 and obj["kind"] == "group_definable"


def test_extract_order_and_order_check():
    code, obj = run_json("extract-order", "--model", "q", "--formula", "0 < x & x < 1")
    assert code == 0 and obj["b"] == "1/4" and obj["trace"]
    assert run("extract-order", "--formula", "x =_2 0")[0] == 1
    code, obj = run_json("order-check", "--formula", "x < z & x =_2 0", "--params", "z=20", "--window", "200")
    assert code == 0


def test_chi_check():
    code, obj = run_json("chi-check", "--formula", "0 <= x & x <= z", "--window", "50")
    assert code == 0 and obj["verdict"] == "agree"


def test_lattice_commands(tmp_path):
    gens = tmp_path / "gens.json"
    gens.write_text(json.dumps([["1", "0"], ["0", "1"]]))
    code, obj = run_json("quotient", "--gens", str(gens), "--m", "3")
    assert code == 0 and obj["card"] == 9
    code, obj = run_json("snf", "--matrix", "[[2, 4], [6, 8]]")
    assert code == 0 and obj["diagonal"] == [2, 4]
    code, obj = run_json("small-quotients", "--gens", '[["1"]]', "--up-to", "5")
    assert code == 0 and [r["card"] for r in obj["table"]] == [1, 2, 3, 4, 5]
    code, obj = run_json("rank", "--gens", '[["1", "2"], ["2", "4"]]')
    assert obj == {"rank": 1}
    code, obj = run_json("acl", "--gens", str(gens), "--subset", '[["1", "1"]]')
    assert code == 0 and obj["basis"] == [["1", "1"]]
    code, obj = run_json("acl", "--gens", '[["1"]]', "--subset", "[]", "--discrete")
    assert obj["basis"] == [["1"]]


def test_oracle_and_compare():
    code, obj = run_json("oracle", "--formula", "x =_3 1", "--window", "5", "--margin", "0")
    assert code == 0 and obj["members"] == ["-5", "-2", "1", "4"]
    code, obj = run_json("compare", "--formula", "x > 0", "--window", "100")
    assert code == 0 and obj["verdict"] == "agree"
    bad = '{"mode": "z", "modulus": 1, "singletons": ["0"], "components": [{"residue": 0, "lo": "0", "hi": "inf"}]}'
    code, obj = run_json("compare", "--formula", "x > 0", "--set", bad, "--window", "100")
    assert code == 1 and obj["counterexample"]["g"] == "0"


@pytest.mark.parametrize("argv", [
    ["nope"],
    ["qe"],
    ["qe", "--formula", "x <"],
    ["qe", "--model", "zp:4", "--formula", "x < 1"],
    ["quotient", "--gens", "[[1"],
    ["normalize", "--formula", "x < y"],
    ["compare", "--formula", "x > 0", "--set", '{"modulus": 1}'],
])
def test_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_json_is_byte_stable():
    argv = ["classify", "--model", "q", "--formula", "0 < x & x < 1", "--json"]
    assert run(*argv) == run(*argv)


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "oagdef.cli", "qe", "--formula", "E x (2*x = y)"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "y =_2 0"
