"""Command-line front end.

Every subcommand prints one JSON envelope::

    {"schema_version", "subcommand", "config", "payload", "wall_time_ms"}

``config`` echoes the resolved arguments (including the seed) and
``config_to_argv`` turns it back into an argument list that reproduces the
payload. ``gen-gpa --out -`` is the exception: it writes the dataset itself
to stdout so it can be piped into ``em-fit --data -``.

Exit codes: 0 success, 2 bad arguments or input, 3 numerical failure
(collapse, non-convergence, singular systems), 4 file IO errors.
The environment variable INFOGEOM_SEED supplies a default ``--seed``.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import infogeo, natgrad, surfaces
from .datasets import gpa_dataset
from .emcore import (
    MaxEntProblem,
    loglik,
    maxent_solve,
    power_moment,
    random_init,
    run_em,
    run_em_geometric,
)
from .errors import ArgumentError, ComponentCollapse, NumericalError
from .models import GaussianMixture
from .jsonio import dumps, format_values, read_text, read_values
from .rng import make_rng

SCHEMA_VERSION = "1.0"
SEED_ENV = "INFOGEOM_SEED"
EXIT_OK, EXIT_ARGS, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="infogeom", description="Information geometry toolkit.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-gpa", help="write the two-course GPA mixture dataset")
    g.add_argument("--seed", type=int)
    g.add_argument("--n", type=int, default=20, help="values per class")
    g.add_argument("--out", default="-", help="output path, '-' for stdout")

    e = sub.add_parser("em-fit", help="fit a Gaussian mixture by EM")
    e.add_argument("--data", required=True, help="one value per line, '-' for stdin")
    e.add_argument("--k", type=int, default=2)
    e.add_argument("--seed", type=int)
    e.add_argument("--tol", type=float, default=1e-4)
    e.add_argument("--max-iter", type=int, default=1000)
    e.add_argument("--update-weights", action="store_true")
    e.add_argument("--algorithm", choices=["classic", "geometric"], default="classic")
    e.add_argument("--variance-center", choices=["updated", "previous"], default="updated")

    f = sub.add_parser("fim", help="Fisher information of the Gaussian family")
    f.add_argument("--family", choices=["gaussian"], default="gaussian")
    f.add_argument("--mu", type=float, default=0.0)
    f.add_argument("--sigma", type=float, default=1.0)
    f.add_argument("--method", choices=["analytic", "empirical", "kl-hessian"], default="analytic")
    f.add_argument("--n", type=int, default=100000, help="samples for --method empirical")
    f.add_argument("--seed", type=int)

    c = sub.add_parser("curvature", help="curvatures of a standard surface at one point")
    c.add_argument("--surface", choices=["torus", "sphere", "cylinder", "plane"], default="torus")
    c.add_argument("--R", type=float, default=2.0)
    c.add_argument("--r", type=float, default=1.0)
    c.add_argument("--radius", type=float, default=1.0)
    c.add_argument("--theta", type=float, required=True, help="second coordinate v")
    c.add_argument("--phi", type=float, required=True, help="first coordinate u")
    c.add_argument("--numeric", action="store_true", help="finite-difference partials only")

    m = sub.add_parser("maxent", help="maximum-entropy distribution from a JSON problem")
    m.add_argument("--problem", required=True, help="JSON file, '-' for stdin")
    m.add_argument("--tol", type=float, default=1e-10)
    m.add_argument("--max-iter", type=int, default=500)

    y = sub.add_parser("pythagoras", help="generalized Pythagorean identity on a random triple")
    y.add_argument("--structure", choices=sorted(infogeo.STRUCTURES), default="simplex")
    y.add_argument("--dim", type=int, default=3, help="simplex size or quadratic dimension")
    y.add_argument("--seed", type=int)
    y.add_argument("--orthogonal", action="store_true", help="construct R so the inner term vanishes")

    r = sub.add_parser("crlb", help="Monte-Carlo variance of the Gaussian mean against the CRLB")
    r.add_argument("--sigma", type=float, default=1.0)
    r.add_argument("--n", type=int, default=100)
    r.add_argument("--trials", type=int, default=10000)
    r.add_argument("--seed", type=int)

    t = sub.add_parser("natgrad-train", help="train a small network on two-class blobs")
    t.add_argument("--optimizer", choices=["sgd", "ngd", "cw-ngd"], default="cw-ngd")
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--gamma", type=float, default=0.1)
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--seed", type=int)
    t.add_argument("--clip", type=float, default=0.5)
    t.add_argument("--n-per-class", type=int, default=100)
    t.add_argument("--hidden", type=int, default=8)
    t.add_argument("--csv", default=None, help="also write the (step, loss) trace here")
    return p


def _needs_seed(args):
    if args.subcommand in ("gen-gpa", "em-fit", "pythagoras", "crlb", "natgrad-train"):
        return True
    return args.subcommand == "fim" and args.method == "empirical"


def _resolve_seed(args):
    if not hasattr(args, "seed"):
        return
    if args.seed is None and os.environ.get(SEED_ENV, "") != "":
        try:
            args.seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ArgumentError(f"{SEED_ENV} must be an integer") from None
    if args.seed is None and _needs_seed(args):
        raise ArgumentError(f"--seed is required for {args.subcommand} (or set {SEED_ENV})")


def config_to_argv(config):
    """Argument list that reproduces a run from its echoed config."""
    argv = [config["subcommand"]]
    for key, val in config.items():
        if key == "subcommand" or val is None or val is False:
            continue
        flag = "--" + key.replace("_", "-")
        if val is True:
            argv.append(flag)
        else:
            argv.extend([flag, "%.17g" % val if isinstance(val, float) else str(val)])
    return argv


# ---------------------------------------------------------------------------
# subcommands


def _mixture_record(mix):
    return {"weights": list(mix.weights), "mus": mix.mus.tolist(), "sigmas": mix.sigmas.tolist()}


def cmd_gen_gpa(args):
    x = gpa_dataset(args.n, args.seed)
    text = format_values(x)
    if args.out == "-":
        sys.stdout.write(text)
        return None
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    return {"path": args.out, "n_values": int(x.size), "mean": float(x.mean()), "min": float(x.min()), "max": float(x.max())}


def cmd_em_fit(args):
    if args.k < 1:
        raise ArgumentError("--k must be >= 1")
    if args.max_iter < 0 or not args.tol > 0:
        raise ArgumentError("--max-iter must be >= 0 and --tol positive")
    x = read_values(args.data)
    init = random_init(x, args.k, args.seed)
    payload = {"algorithm": args.algorithm, "init": _mixture_record(init)}
    try:
        if args.algorithm == "classic":
            st = run_em(x, init, args.tol, args.max_iter, args.update_weights, args.variance_center)
            payload.update(params=_mixture_record(st.mixture), iterations=st.iteration, converged=st.converged, loglik_trace=list(st.loglik_trace))
        else:
            if args.variance_center != "updated":
                raise ArgumentError("--variance-center applies to the classic algorithm only")
            res = run_em_geometric(x, init, args.tol, args.max_iter, args.update_weights)
            lls = [loglik(x, _mixture_from_params(s.theta, args.k)) for s in res.trajectory]
            payload.update(
                params=_mixture_record(res.mixture),
                iterations=res.iterations,
                converged=res.converged,
                loglik_trace=lls,
                kl_trace=res.kl_trace.tolist(),
            )
    except ComponentCollapse as exc:
        state = exc.state
        payload.update(error=str(exc), component=exc.component, params=_mixture_record(state.mixture), iterations=getattr(state, "iteration", getattr(state, "iterations", None)))
        raise _PartialFailure(payload, EXIT_NUMERIC) from exc
    return payload


def _mixture_from_params(theta, k):
    return GaussianMixture.from_params(theta[:k], theta[k : 2 * k], theta[2 * k :])


def cmd_fim(args):
    theta = np.array([args.mu, args.sigma])
    if not args.sigma > 0:
        raise ArgumentError("--sigma must be positive")
    fam = infogeo.GaussianFamily()
    if args.method == "analytic":
        F = infogeo.fim_analytic_gaussian(args.sigma)
    elif args.method == "empirical":
        F = infogeo.fim_empirical(fam, theta, fam.sample(theta, args.n, args.seed))
    else:
        F = infogeo.fim_from_kl_hessian(fam, theta)
    return {
        "family": args.family,
        "theta": theta.tolist(),
        "method": args.method,
        "matrix": F.entries.tolist(),
        "eigenvalues": F.eigenvalues.tolist(),
        "positive_definite": F.positive_definite,
    }


def cmd_curvature(args):
    if args.surface == "torus":
        s = surfaces.torus(args.R, args.r)
    elif args.surface == "sphere":
        s = surfaces.sphere(args.radius)
    elif args.surface == "cylinder":
        s = surfaces.cylinder(args.radius)
    else:
        s = surfaces.plane()
    if args.numeric:
        s = surfaces.numeric(s)
    u, v = args.phi, args.theta
    I = surfaces.first_fundamental_form(s, u, v)
    out = {
        "surface": args.surface,
        "params": dict(s.params),
        "u": u,
        "v": v,
        "E": I.e,
        "F": I.f,
        "G": I.g,
        "K_gauss": surfaces.gaussian_curvature(s, u, v),
        "K_sect": surfaces.sectional_curvature(s, u, v),
        "K_intrinsic": surfaces.intrinsic_curvature(s, u, v),
        "mean": surfaces.mean_curvature(s, u, v),
        "principal": np.sort(surfaces.principal_curvatures(s, u, v)).tolist(),
    }
    if args.surface == "torus":
        out["closed_form"] = float(surfaces.torus_gaussian_curvature(args.R, args.r, v))
    return out


def _constraint(spec):
    """Power-moment constraint from 2, "x^2" or {"power": 2}."""
    if isinstance(spec, dict) and set(spec) == {"power"}:
        spec = spec["power"]
    if isinstance(spec, str) and spec.startswith("x^"):
        spec = spec[2:]
    try:
        k = int(spec)
    except (TypeError, ValueError):
        raise ArgumentError(f"unsupported constraint {spec!r}; use power moments like 'x^2'") from None
    if k < 1:
        raise ArgumentError("power moments need k >= 1")
    return power_moment(k)


def cmd_maxent(args):
    try:
        spec = json.loads(read_text(args.problem))
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"problem is not valid JSON: {exc}") from None
    if not isinstance(spec, dict) or "support" not in spec:
        raise ArgumentError("problem needs a 'support' list")
    try:
        support = [float(x) for x in spec["support"]]
    except (TypeError, ValueError):
        raise ArgumentError("support must be a list of numbers") from None
    fns = [_constraint(c) for c in spec.get("constraints", [])]
    targets = spec.get("targets", [])
    problem = MaxEntProblem(support, fns, targets)
    sol = maxent_solve(problem, args.tol, args.max_iter)
    return {
        "support": support,
        "probs": sol.distribution.probs.tolist(),
        "lambdas": sol.lambdas.tolist(),
        "log_partition": sol.log_partition,
        "entropy": sol.entropy,
        "iterations": sol.iterations,
    }


def cmd_pythagoras(args):
    if args.dim < 2:
        raise ArgumentError("--dim must be >= 2")
    if args.structure == "simplex":
        S = infogeo.simplex_structure(args.dim)
    elif args.structure == "quadratic":
        S = infogeo.quadratic_structure(dim=args.dim)
    else:
        S = infogeo.gaussian_structure()
    rng = make_rng(args.seed)
    P, Q = S.sampler(rng), S.sampler(rng)
    R = infogeo.orthogonal_point(S, P, Q, rng) if args.orthogonal else S.sampler(rng)
    res = infogeo.pythagoras_residual(S, P, Q, R)
    return {
        "structure": S.name,
        "P": np.asarray(P).tolist(),
        "Q": np.asarray(Q).tolist(),
        "R": np.asarray(R).tolist(),
        "D_PQ": res.D_PQ,
        "D_QR": res.D_QR,
        "D_PR": res.D_PR,
        "gap": res.gap,
        "inner": res.inner,
    }


def cmd_crlb(args):
    rep = natgrad.crlb_check(args.sigma, args.n, args.trials, args.seed)
    return {
        "sigma": rep.sigma,
        "n": rep.n,
        "trials": rep.trials,
        "variance": rep.variance,
        "bound": rep.bound,
        "ratio": rep.ratio,
        "mc_error": rep.mc_error,
    }


def cmd_natgrad_train(args):
    if args.n_per_class < 1 or args.hidden < 1:
        raise ArgumentError("--n-per-class and --hidden must be >= 1")
    net, X, y = natgrad.blob_task(args.n_per_class, args.seed, args.hidden)
    cfg = natgrad.TrainConfig(args.optimizer, args.lr, args.gamma, args.epochs, args.batch, args.clip, args.seed)
    res = natgrad.train(net, X, y, cfg)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("step,loss\n")
            fh.writelines("%d,%.17g\n" % (i, v) for i, v in enumerate(res.losses))
    return {
        "optimizer": args.optimizer,
        "losses": res.losses.tolist(),
        "final_loss": float(res.losses[-1]),
        "parameters": [{"weight": l.weight.tolist(), "bias": l.bias.tolist(), "activation": l.activation} for l in res.network.layers],
    }


COMMANDS = {
    "gen-gpa": cmd_gen_gpa,
    "em-fit": cmd_em_fit,
    "fim": cmd_fim,
    "curvature": cmd_curvature,
    "maxent": cmd_maxent,
    "pythagoras": cmd_pythagoras,
    "crlb": cmd_crlb,
    "natgrad-train": cmd_natgrad_train,
}


class _PartialFailure(Exception):
    def __init__(self, payload, code):
        super().__init__("partial failure")
        self.payload = payload
        self.code = code


def _envelope(config, payload, t0):
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": config["subcommand"],
        "config": config,
        "payload": payload,
        "wall_time_ms": int(round((time.perf_counter() - t0) * 1000)),
    }


def run(argv=None, stdout=None):
    """Run one subcommand; returns (exit_code, envelope or None)."""
    out = stdout or sys.stdout
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage or help
        return (exc.code if isinstance(exc.code, int) else EXIT_ARGS), None
    config = None
    try:
        _resolve_seed(args)
        config = dict(vars(args))
        payload = COMMANDS[args.subcommand](args)
    except _PartialFailure as exc:
        env = _envelope(config, exc.payload, t0)
        out.write(dumps(env) + "\n")
        return exc.code, env
    except ArgumentError as exc:
        print(f"infogeom: error: {exc}", file=sys.stderr)
        return EXIT_ARGS, None
    except NumericalError as exc:
        print(f"infogeom: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, None
    except OSError as exc:
        print(f"infogeom: io error: {exc}", file=sys.stderr)
        return EXIT_IO, None
    if payload is None:
        return EXIT_OK, None
    env = _envelope(config, payload, t0)
    out.write(dumps(env) + "\n")
    return EXIT_OK, env


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
