"""Command-line interface.

Every invocation is turned into a job dictionary: fields from ``--config``
come first, then ``QPFAFF_*`` environment variables, then command-line
flags.  The job is validated against :data:`JOB_SCHEMA` before anything is
computed.  Exit status is 0 on success, 1 when ``verify`` finds a failing
check, 2 for invalid input and 3 for numerical degeneracy.
"""

from __future__ import annotations

import argparse
import contextlib
import itertools
import json
import os
import sys
import warnings

import jsonschema
import numpy as np

from . import __version__
from .errors import NumericalError, QpfaffError
from .fredholm import fredholm_signed
from .kernels import GridKernel, GroundSet, correlation, grid_discretize, kernel_from_json
from .qmatrix import QMatrix, qdet, qdet_recursive
from .sampler import atom_oracle, sequential_sample
from .transforms import conditional_kernel, kg_transform, palm_many

SPEC_VERSION = "1.0"
ENV_PREFIX = "QPFAFF_"
COMMANDS = ("qdet", "correlations", "palm", "kg", "condition", "fredholm", "oracle", "sample", "verify")

_NUMBERS = {"type": "array", "items": {"type": "number"}}
_INDICES = {"type": "array", "items": {"type": "integer", "minimum": 0}}

JOB_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "matrix": {"type": ["object", "array", "string"]},
        "kernel": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["cse", "sine4", "scalar", "grid"]}},
        },
        "ground_set": {
            "type": "object",
            "oneOf": [
                {"required": ["points", "weights"]},
                {"required": ["uniform"]},
            ],
        },
        "k": {"type": "integer", "minimum": 1},
        "points": _NUMBERS,
        "tuples": {"type": "array", "items": _NUMBERS},
        "palm_points": _NUMBERS,
        "g": _NUMBERS,
        "window": _INDICES,
        "occupied": _INDICES,
        "count": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "out": {"type": "string"},
        "threads": {"type": "integer", "minimum": 1},
        "quick": {"type": "boolean"},
        "checks": {"type": "array", "items": {"type": "string"}},
    },
}

# per-command required fields, checked after the schema
_NEEDS = {
    "qdet": ("matrix",),
    "correlations": ("kernel",),
    "palm": ("kernel", "palm_points"),
    "kg": ("kernel", "g"),
    "condition": ("kernel", "window"),
    "fredholm": ("kernel",),
    "oracle": ("kernel",),
    "sample": ("kernel",),
    "verify": (),
}


class JobError(ValueError):
    """Invalid job specification (exit status 2)."""


# ---------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    return f"{float(x):.15g}"


def fmt_complex(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return fmt(z.real)
    return f"{fmt(z.real)}, {fmt(z.imag)}"


def _round15(obj):
    """Round every float in a JSON-ready structure to 15 significant digits."""
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round15(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round15(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_round15(obj), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# input parsing


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise JobError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise JobError(f"{path} is not valid JSON: {exc}") from exc


def parse_kernel(text: str) -> dict:
    """Kernel from a shorthand (``sine4``, ``sine4:limit``, ``cse:6``,
    ``cse:6:closed``, ``scalar:sine``), inline JSON or a JSON file."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise JobError(f"bad inline kernel JSON: {exc}") from exc
    head, *rest = text.split(":")
    if head == "sine4" and len(rest) <= 1:
        return {"type": "sine4", "form": rest[0] if rest else "quarter"}
    if head == "cse" and 1 <= len(rest) <= 2:
        try:
            N = int(rest[0])
        except ValueError as exc:
            raise JobError(f"bad CSE size in {text!r}") from exc
        return {"type": "cse", "N": N, "form": rest[1] if len(rest) == 2 else "sum"}
    if head == "scalar" and len(rest) == 1:
        return {"type": "scalar", "name": rest[0]}
    if os.path.exists(text):
        return _load_json(text)
    raise JobError(f"unknown kernel {text!r}")


def parse_grid(text: str) -> dict:
    """Ground set from ``a:b:n`` (uniform midpoints) or a JSON file."""
    parts = text.split(":")
    if len(parts) == 3:
        try:
            return {"uniform": {"a": float(parts[0]), "b": float(parts[1]), "n": int(parts[2])}}
        except ValueError as exc:
            raise JobError(f"bad grid {text!r}") from exc
    return _load_json(text)


def _matrix(spec) -> QMatrix:
    if isinstance(spec, str):
        spec = _load_json(spec)
    if isinstance(spec, dict):
        return QMatrix.from_json(spec)
    arr = np.asarray(spec, dtype=complex)
    if arr.ndim == 2:
        return QMatrix(arr)
    if arr.ndim == 3 and arr.shape[-1] == 4:
        return QMatrix(arr)
    raise JobError("matrix must be a QMatrix object, an n x n array or an n x n x 4 array")


def _build_kernel(job):
    try:
        K = kernel_from_json(job["kernel"])
    except (KeyError, TypeError) as exc:
        raise JobError(f"incomplete kernel specification: {exc}") from exc
    return K


def _grid_kernel(job) -> GridKernel:
    K = _build_kernel(job)
    if isinstance(K, GridKernel):
        return K
    if "ground_set" not in job:
        raise JobError(f"command {job['command']!r} needs a grid kernel or a ground_set")
    return grid_discretize(K, GroundSet.from_json(job["ground_set"]))


# ---------------------------------------------------------------------------
# commands


def run_qdet(job) -> tuple[str, int]:
    M = _matrix(job["matrix"])
    if M.is_self_adjoint:
        return fmt_complex(qdet(M)) + "\n", 0
    val = qdet_recursive(M)
    if isinstance(val, complex):
        return fmt_complex(val) + "\n", 0
    return ", ".join(fmt_complex(c) for c in val.components) + "\n", 0


def run_correlations(job) -> tuple[str, int]:
    K = _build_kernel(job)
    if "ground_set" in job and not isinstance(K, GridKernel):
        K = grid_discretize(K, GroundSet.from_json(job["ground_set"]))
    if "tuples" in job:
        tuples = [tuple(t) for t in job["tuples"]]
    else:
        pts = job.get("points")
        if pts is None:
            if not isinstance(K, GridKernel):
                raise JobError("correlations needs points, tuples or a grid kernel")
            pts = K.ground.points.tolist()
        tuples = list(itertools.combinations(pts, job.get("k", 1)))
    lines = []
    for t in tuples:
        rho = correlation(K, t)
        lines.append(", ".join(fmt(x) for x in t) + f", {fmt(rho)}")
    return "\n".join(lines) + ("\n" if lines else ""), 0


def run_palm(job) -> tuple[str, int]:
    K = _build_kernel(job)
    pts = job["palm_points"]
    if isinstance(K, GridKernel):
        out = palm_many(K, pts)
    else:
        if "ground_set" not in job:
            raise JobError("palm on an analytic kernel needs a ground_set to tabulate the result")
        out = grid_discretize(palm_many(K, pts), GroundSet.from_json(job["ground_set"]))
    return dump_json(out.to_json()), 0


def run_kg(job) -> tuple[str, int]:
    return dump_json(kg_transform(_grid_kernel(job), job["g"]).to_json()), 0


def run_condition(job) -> tuple[str, int]:
    T = _grid_kernel(job)
    out = conditional_kernel(T, job["window"], job.get("occupied", []))
    return dump_json(out.to_json()), 0


def run_fredholm(job) -> tuple[str, int]:
    T = _grid_kernel(job)
    table = T.table
    if "g" in job:
        g = np.asarray(job["g"], dtype=complex)
        if g.size != T.n:
            raise JobError("g must have one value per cell")
        r = np.sqrt(g - 1)
        table = QMatrix(r[:, None, None] * T.entries * r[None, :, None], symmetrize=True)
    res = fredholm_signed(table)
    return dump_json(res.to_json()), 0


def run_oracle(job) -> tuple[str, int]:
    return atom_oracle(_grid_kernel(job)).to_csv(), 0


def run_sample(job) -> tuple[str, int]:
    T = _grid_kernel(job)
    batch = sequential_sample(T, job.get("seed", 0), job.get("count", 1000))
    return batch.to_csv(), 0


def run_verify(job) -> tuple[str, int]:
    from .verify import CHECKS, run_suite

    only = job.get("checks")
    if only is not None:
        unknown = sorted(set(only) - set(CHECKS))
        if unknown:
            raise JobError(f"unknown checks {unknown}; available: {sorted(CHECKS)}")
    results = run_suite(seed=job.get("seed", 0), quick=job.get("quick", False), only=only)
    for r in results:
        print(r.line(), file=sys.stderr)
    passed = all(r.passed for r in results)
    summary = {"passed": passed, "checks": [r.to_json() for r in results]}
    return dump_json(summary), 0 if passed else 1


RUNNERS = {
    "qdet": run_qdet,
    "correlations": run_correlations,
    "palm": run_palm,
    "kg": run_kg,
    "condition": run_condition,
    "fredholm": run_fredholm,
    "oracle": run_oracle,
    "sample": run_sample,
    "verify": run_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    # suppressed defaults, so a flag given before the subcommand survives
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON job file; flags override its fields")
    common.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--threads", type=int, help="BLAS thread count")

    kern = argparse.ArgumentParser(add_help=False)
    kern.add_argument("--kernel", help="sine4[:limit], cse:N[:closed], scalar:sine, inline JSON or a JSON file")
    kern.add_argument("--grid", help="ground set as a:b:n (uniform midpoints) or a JSON file")

    parser = argparse.ArgumentParser(
        prog="qpfaff",
        description="Pfaffian point processes over complexified quaternions.",
        parents=[common],
    )
    parser.add_argument("--version", action="version",
                        version=f"qpfaff {__version__} (spec {SPEC_VERSION})")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("qdet", parents=[common], help="quaternion determinant of a matrix file")
    p.add_argument("matrix", nargs="?", help="JSON matrix file")

    p = sub.add_parser("correlations", parents=[common, kern], help="correlation functions as CSV")
    p.add_argument("-k", type=int, help="correlation order")
    p.add_argument("--x", type=float, nargs="+", dest="points", help="points; all k-subsets are evaluated")

    p = sub.add_parser("palm", parents=[common, kern], help="Palm kernel table")
    p.add_argument("--at", type=float, nargs="+", dest="palm_points", help="Palm points")

    p = sub.add_parser("kg", parents=[common, kern], help="kernel of the g-reweighted process")
    p.add_argument("--g", type=float, nargs="+", help="one nonnegative value per cell")

    p = sub.add_parser("condition", parents=[common, kern], help="conditional kernel on the complement of a window")
    p.add_argument("--window", type=int, nargs="+", help="window cell indices")
    p.add_argument("--occupied", type=int, nargs="*", help="occupied cells of the window")

    p = sub.add_parser("fredholm", parents=[common, kern], help="Fredholm quaternion determinant")
    p.add_argument("--g", type=float, nargs="+", help="multiplicative weights; omitted means Qdet(1 + T)")

    sub.add_parser("oracle", parents=[common, kern], help="all configuration probabilities as CSV")

    p = sub.add_parser("sample", parents=[common, kern], help="exact samples as CSV")
    p.add_argument("--count", type=int, help="number of samples (default 1000)")

    p = sub.add_parser("verify", parents=[common], help="run the identity suite")
    p.add_argument("--quick", action="store_true", default=None, help="reduced instance counts")
    p.add_argument("--check", action="append", dest="checks", help="run only this check (repeatable)")
    return parser


_ENV_FIELDS = {"CONFIG": str, "SEED": int, "OUT": str, "THREADS": int}


def _env_overrides(environ) -> dict:
    out = {}
    for name, conv in _ENV_FIELDS.items():
        raw = environ.get(ENV_PREFIX + name)
        if raw is None or raw == "":
            continue
        try:
            out[name.lower()] = conv(raw)
        except ValueError as exc:
            raise JobError(f"{ENV_PREFIX}{name}={raw!r} is not a valid {conv.__name__}") from exc
    return out


def assemble_job(args: argparse.Namespace, environ=None) -> dict:
    """Merge config file, environment and flags into a validated job."""
    environ = os.environ if environ is None else environ
    env = _env_overrides(environ)
    config_path = getattr(args, "config", None) or env.get("config")
    env.pop("config", None)
    job = {}
    if config_path:
        job = _load_json(config_path)
        if not isinstance(job, dict):
            raise JobError("config must be a JSON object")
    job.update(env)
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    if "kernel" in flags:
        flags["kernel"] = parse_kernel(flags["kernel"])
    if "grid" in flags:
        flags["ground_set"] = parse_grid(flags.pop("grid"))
    job.update(flags)
    try:
        jsonschema.validate(job, JOB_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "job"
        raise JobError(f"{where}: {exc.message}") from exc
    missing = [f for f in _NEEDS[job["command"]] if f not in job]
    if missing:
        raise JobError(f"command {job['command']!r} needs {', '.join(missing)}")
    return job


@contextlib.contextmanager
def _thread_limit(n):
    if n is None:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        warnings.warn("threadpoolctl is not installed; --threads has no effect", RuntimeWarning)
        yield
        return
    with threadpool_limits(limits=n):
        yield


def run(job) -> int:
    """Execute a validated job; returns the exit status."""
    with _thread_limit(job.get("threads")):
        text, status = RUNNERS[job["command"]](job)
    if "out" in job:
        with open(job["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        job = assemble_job(args)
        return run(job)
    except NumericalError as exc:
        print(f"qpfaff: numerical error: {exc}", file=sys.stderr)
        return 3
    except (JobError, QpfaffError, ValueError, IndexError, OSError) as exc:
        print(f"qpfaff: invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
