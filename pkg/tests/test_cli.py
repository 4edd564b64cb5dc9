import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from infogeom import cli
from infogeom.emcore import run_em, random_init
from infogeom.jsonio import dumps, read_values


def call(argv, monkeypatch=None):
    buf = io.StringIO()
    code, env = cli.run(argv, buf)
    if env is not None:
        # the printed text parses back to the returned envelope
        assert json.loads(buf.getvalue()) == json.loads(dumps(env))
    return code, env


def payload_text(env):
    return dumps(env["payload"])


@pytest.fixture
def gpa_file(tmp_path):
    path = tmp_path / "gpa.txt"
    code, env = call(["gen-gpa", "--seed", "42", "--n", "20", "--out", str(path)])
    assert code == 0
    return path


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)


# ---------------------------------------------------------------------------
# gen-gpa


def test_gen_gpa_file(gpa_file, tmp_path):
    lines = gpa_file.read_text().splitlines()
    assert len(lines) == 40
    x = np.array([float(v) for v in lines])
    assert x.min() >= 0.0 and x.max() <= 4.0
    again = tmp_path / "again.txt"
    call(["gen-gpa", "--seed", "42", "--out", str(again)])
    assert again.read_bytes() == gpa_file.read_bytes()


def test_gen_gpa_stdout(capsys):
    code, env = cli.run(["gen-gpa", "--seed", "1", "--n", "5"])
    assert code == 0 and env is None
    vals = [float(v) for v in capsys.readouterr().out.split()]
    assert len(vals) == 10


def test_gen_gpa_mean(tmp_path):
    path = tmp_path / "big.txt"
    call(["gen-gpa", "--seed", "3", "--n", "1000", "--out", str(path)])
    assert abs(read_values(str(path)).mean() - 3.25) < 0.25


def test_gen_gpa_unwritable(tmp_path):
    code, _ = call(["gen-gpa", "--seed", "1", "--out", str(tmp_path / "missing" / "x.txt")])
    assert code == cli.EXIT_IO


# ---------------------------------------------------------------------------
# em-fit


def test_em_fit_payload(gpa_file):
    code, env = call(["em-fit", "--data", str(gpa_file), "--seed", "0"])
    assert code == 0
    assert env["schema_version"] == "1.0" and env["subcommand"] == "em-fit"
    p = env["payload"]
    assert set(p["params"]) == {"weights", "mus", "sigmas"}
    assert p["iterations"] < 1000 and p["converged"]
    assert np.all(np.diff(p["loglik_trace"]) >= -1e-10)
    x = read_values(str(gpa_file))
    ref = run_em(x, random_init(x, 2, 0))
    assert_allclose(p["params"]["mus"], ref.mixture.mus, atol=0)


def test_em_fit_max_iter_zero_echoes_init(gpa_file):
    _, env = call(["em-fit", "--data", str(gpa_file), "--seed", "5", "--max-iter", "0"])
    assert env["payload"]["params"] == env["payload"]["init"]
    assert env["payload"]["iterations"] == 0


def test_em_fit_geometric_matches_classic(gpa_file):
    _, a = call(["em-fit", "--data", str(gpa_file), "--seed", "0"])
    _, b = call(["em-fit", "--data", str(gpa_file), "--seed", "0", "--algorithm", "geometric"])
    for key in ("mus", "sigmas"):
        assert_allclose(a["payload"]["params"][key], b["payload"]["params"][key], atol=1e-6)
    kl = np.array(b["payload"]["kl_trace"])
    assert np.all(np.diff(kl) <= 1e-10)


def test_em_fit_stdin(gpa_file, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO(gpa_file.read_text()))
    _, a = call(["em-fit", "--data", "-", "--seed", "0"])
    _, b = call(["em-fit", "--data", str(gpa_file), "--seed", "0"])
    assert payload_text(a) == payload_text(b)


def test_em_fit_collapse_exit_3(tmp_path):
    path = tmp_path / "ties.txt"
    # the lone 5 ends up alone in its component, whose variance collapses
    path.write_text("1\n1\n1\n5\n")
    code, env = call(["em-fit", "--data", str(path), "--seed", "0"])
    assert code == cli.EXIT_NUMERIC
    assert "error" in env["payload"] and "params" in env["payload"]


@pytest.mark.parametrize(
    "content", ["1.0\nabc\n", "", "# only a comment\n"],
)
def test_em_fit_bad_data(tmp_path, content):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    assert call(["em-fit", "--data", str(path), "--seed", "0"])[0] == cli.EXIT_ARGS


def test_em_fit_missing_file(tmp_path):
    assert call(["em-fit", "--data", str(tmp_path / "nope.txt"), "--seed", "0"])[0] == cli.EXIT_IO


def test_seed_required(gpa_file):
    assert call(["em-fit", "--data", str(gpa_file)])[0] == cli.EXIT_ARGS


def test_seed_from_environment(gpa_file, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "0")
    _, a = call(["em-fit", "--data", str(gpa_file)])
    assert a["config"]["seed"] == 0
    monkeypatch.delenv(cli.SEED_ENV)
    _, b = call(["em-fit", "--data", str(gpa_file), "--seed", "0"])
    assert payload_text(a) == payload_text(b)


def test_bad_seed_environment(gpa_file, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "abc")
    assert call(["em-fit", "--data", str(gpa_file)])[0] == cli.EXIT_ARGS


# ---------------------------------------------------------------------------
# reports


def test_fim_analytic():
    code, env = call(["fim", "--family", "gaussian", "--sigma", "1", "--method", "analytic"])
    assert code == 0
    assert env["payload"]["matrix"] == [[1.0, 0.0], [0.0, 2.0]]
    assert set(env["payload"]) >= {"family", "theta", "method", "matrix", "eigenvalues"}


def test_fim_kl_hessian():
    _, env = call(["fim", "--sigma", "2", "--method", "kl-hessian"])
    assert_allclose(env["payload"]["matrix"], [[0.25, 0], [0, 0.5]], atol=1e-3)


def test_fim_empirical_needs_seed():
    assert call(["fim", "--method", "empirical"])[0] == cli.EXIT_ARGS
    code, env = call(["fim", "--method", "empirical", "--seed", "1", "--n", "20000"])
    assert code == 0 and env["payload"]["positive_definite"]


def test_fim_bad_sigma():
    assert call(["fim", "--sigma", "-1"])[0] == cli.EXIT_ARGS


def test_curvature_top_of_torus():
    code, env = call(["curvature", "--surface", "torus", "--R", "2", "--r", "1", "--theta", "1.5707963", "--phi", "0"])
    assert code == 0
    p = env["payload"]
    assert abs(p["K_gauss"]) < 1e-7  # theta is pi/2 to 7 digits
    assert p["closed_form"] == pytest.approx(p["K_gauss"], abs=1e-9)
    _, exact = call(["curvature", "--theta", repr(math.pi / 2), "--phi", "0"])
    assert abs(exact["payload"]["K_gauss"]) < 1e-9


def test_curvature_numeric_and_sphere():
    _, env = call(["curvature", "--surface", "sphere", "--radius", "2", "--theta", "0.3", "--phi", "1.0", "--numeric"])
    p = env["payload"]
    assert p["K_gauss"] == pytest.approx(0.25, abs=1e-5)
    assert p["K_intrinsic"] == pytest.approx(0.25, abs=1e-4)


def test_curvature_bad_torus():
    assert call(["curvature", "--R", "1", "--r", "2", "--theta", "0", "--phi", "0"])[0] == cli.EXIT_ARGS


def write_problem(tmp_path, obj):
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def test_maxent_uniform(tmp_path):
    _, env = call(["maxent", "--problem", write_problem(tmp_path, {"support": [1, 2, 3, 4, 5]})])
    assert_allclose(env["payload"]["probs"], [0.2] * 5, atol=0)
    assert env["payload"]["entropy"] == math.log(5)


@pytest.mark.parametrize("constraint", [1, "x^1", {"power": 1}])
def test_maxent_two_point(tmp_path, constraint):
    path = write_problem(tmp_path, {"support": [0, 1], "constraints": [constraint], "targets": [0.25]})
    _, env = call(["maxent", "--problem", path])
    assert_allclose(env["payload"]["probs"], [0.75, 0.25], atol=1e-10)
    assert env["payload"]["lambdas"][0] == pytest.approx(math.log(3), abs=1e-8)


@pytest.mark.parametrize(
    "problem, code",
    [
        ("{not json", 2),
        ({"support": [0, 1], "constraints": ["exp"], "targets": [0.5]}, 2),
        ({"support": [0, 1], "constraints": ["x^1"], "targets": []}, 2),
        ({"support": [0, 1, 2], "constraints": ["x^1"], "targets": [5.0]}, 3),
    ],
)
def test_maxent_errors(tmp_path, problem, code):
    assert call(["maxent", "--problem", write_problem(tmp_path, problem)])[0] == code


@pytest.mark.parametrize("structure", ["quadratic", "simplex", "gaussian"])
def test_pythagoras(structure):
    _, env = call(["pythagoras", "--structure", structure, "--seed", "4"])
    p = env["payload"]
    assert set(p) == {"structure", "P", "Q", "R", "D_PQ", "D_QR", "D_PR", "gap", "inner"}
    assert abs(p["gap"] - p["inner"]) < 1e-9
    _, env = call(["pythagoras", "--structure", structure, "--seed", "4", "--orthogonal"])
    p = env["payload"]
    assert abs(p["D_PR"] - p["D_PQ"] - p["D_QR"]) < 1e-8


def test_crlb():
    _, env = call(["crlb", "--seed", "0"])
    assert 0.95 <= env["payload"]["ratio"] <= 1.05


def test_natgrad_train_csv(tmp_path):
    csv = tmp_path / "trace.csv"
    code, env = call(["natgrad-train", "--seed", "3", "--epochs", "2", "--n-per-class", "30", "--csv", str(csv)])
    assert code == 0
    rows = csv.read_text().splitlines()
    assert rows[0] == "step,loss"
    assert len(rows) - 1 == len(env["payload"]["losses"])
    assert float(rows[-1].split(",")[1]) == env["payload"]["final_loss"]


def test_natgrad_train_bad_optimizer():
    assert call(["natgrad-train", "--seed", "1", "--optimizer", "adam"])[0] == cli.EXIT_ARGS


def test_unknown_flag_rejected():
    assert call(["fim", "--bogus", "1"])[0] == cli.EXIT_ARGS


# ---------------------------------------------------------------------------
# reproducibility


REPLAY = [
    ["pythagoras", "--structure", "gaussian", "--seed", "11", "--orthogonal"],
    ["fim", "--method", "empirical", "--seed", "2", "--n", "5000", "--mu", "0.3", "--sigma", "0.7"],
    ["crlb", "--seed", "5", "--trials", "2000", "--n", "20"],
    ["natgrad-train", "--seed", "2", "--epochs", "1", "--n-per-class", "20", "--optimizer", "ngd"],
    ["curvature", "--theta", "0.7", "--phi", "0.1"],
]


@pytest.mark.parametrize("argv", REPLAY, ids=lambda a: a[0])
def test_identical_runs_identical_payloads(argv):
    _, a = call(argv)
    _, b = call(argv)
    assert payload_text(a) == payload_text(b)


@pytest.mark.parametrize("argv", REPLAY, ids=lambda a: a[0])
def test_config_echo_replays(argv):
    _, a = call(argv)
    _, b = call(cli.config_to_argv(a["config"]))
    assert payload_text(a) == payload_text(b)


def test_em_fit_replay(gpa_file):
    _, a = call(["em-fit", "--data", str(gpa_file), "--seed", "7", "--update-weights", "--tol", "1e-6"])
    _, b = call(cli.config_to_argv(a["config"]))
    assert payload_text(a) == payload_text(b)


def test_floats_keep_full_precision():
    _, env = call(["pythagoras", "--seed", "1"])
    assert json.loads(payload_text(env))["gap"] == env["payload"]["gap"]


# ---------------------------------------------------------------------------
# console entry point


def run_console(args, stdin=None):
    return subprocess.run(
        [sys.executable, "-c", "import sys; from infogeom.cli import main; sys.exit(main())", *args],
        input=stdin,
        capture_output=True,
        text=True,
    )


def test_console_pipe():
    gen = run_console(["gen-gpa", "--seed", "42"])
    assert gen.returncode == 0
    fit = run_console(["em-fit", "--data", "-", "--seed", "0"], stdin=gen.stdout)
    assert fit.returncode == 0
    assert json.loads(fit.stdout)["payload"]["iterations"] > 0


@pytest.mark.parametrize(
    "args, code",
    [([], 2), (["nope"], 2), (["fim", "--method", "empirical"], 2), (["em-fit", "--data", "/nonexistent/x", "--seed", "1"], 4)],
)
def test_console_exit_codes(args, code):
    assert run_console(args).returncode == code
