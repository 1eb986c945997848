"""File formats: run configs, linear systems, QUBOs, traces, heatmaps.

Formats
-------
Linear system (coordinate text)::

    N nnz
    row col value        # nnz lines, 0-based indices
    b_0                  # N lines
    ...

QUBO text::

    vars <n> offset <value>
    lin <idx> <value>
    quad <i> <j> <value>     # i < j

Floats are written with 17 significant digits, so every text format
round-trips exactly. Solve traces are CSV (``iteration,relative_error``) with
a ``# converged=... omega=... backend_calls=...`` footer; heatmaps are binary
PGM (P5) rasters with a ``i,j,x,y,u`` CSV companion.
"""

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from .errors import ConfigError, FormatError, InvalidArgumentError
from .grid import BoundaryConditions, LinearSystem, Numbering, build_grid
from .qubo import QuboProblem

__all__ = [
    "EdgeSpec",
    "RunConfig",
    "load_config",
    "save_config",
    "plate_config",
    "read_system",
    "write_system",
    "qubo_to_text",
    "qubo_from_text",
    "read_qubo",
    "write_qubo",
    "write_trace",
    "read_trace",
    "write_solution_csv",
    "heatmap_pixels",
    "write_heatmap",
    "read_pgm",
]

CONFIG_VERSION = 1


def _fmt(value):
    return format(float(value), ".17g")


# ---------------------------------------------------------------- run config


@dataclass(frozen=True)
class EdgeSpec:
    """Edge temperature: ``constant`` (``start``) or linear ``ramp``
    from ``start`` at coordinate 0 to ``end`` at coordinate ``L``."""

    kind: str = "constant"
    start: float = 0.0
    end: float = 0.0

    def __post_init__(self):
        if self.kind == "constant":
            object.__setattr__(self, "end", self.start)

    def function(self, side_length):
        if self.kind == "constant":
            value = float(self.start)
            return lambda s: value
        a, b, L = float(self.start), float(self.end), float(side_length)
        return lambda s: a + (b - a) * s / L

    def to_json(self):
        if self.kind == "constant":
            return {"type": "constant", "value": self.start}
        return {"type": "ramp", "start": self.start, "end": self.end}


_PLATE_EDGES = {
    "bottom": EdgeSpec("constant", 0.0),
    "left": EdgeSpec("constant", 0.0),
    "right": EdgeSpec("ramp", 0.0, 100.0),
    "top": EdgeSpec("ramp", 0.0, 100.0),
}


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a heat/system solve, as stored in a version-1 JSON file."""

    n: int = 9
    m: int = 9
    side_length: float = 1.0
    numbering: str = "row-major"
    bottom: EdgeSpec = _PLATE_EDGES["bottom"]
    top: EdgeSpec = _PLATE_EDGES["top"]
    left: EdgeSpec = _PLATE_EDGES["left"]
    right: EdgeSpec = _PLATE_EDGES["right"]
    blocks: int = 9
    omega: Union[str, float] = "optimal"
    bits: int = 7
    backend: str = "anneal"
    endpoint: Optional[str] = None
    timeout: float = 30.0
    tolerance: float = 0.08
    max_iterations: int = 50
    stopping_mode: str = "reference"
    seed: int = 0
    sweeps: int = 500
    reads: int = 25
    beta_initial: float = 0.1
    beta_final: float = 10.0
    compare_bits: Tuple[int, ...] = (3, 5, 7)
    output_dir: str = "out"
    system: Optional[str] = None

    def __post_init__(self):
        _validate(self)

    # builders used by the CLI and demos

    def boundary_conditions(self):
        L = self.side_length
        return BoundaryConditions(bottom=self.bottom.function(L), top=self.top.function(L),
                                  left=self.left.function(L), right=self.right.function(L))

    def grid(self):
        return build_grid(self.n, self.m, self.side_length, self.boundary_conditions(),
                          Numbering(self.numbering))

    def anneal_config(self, bits=None, seed=None):
        from .annealer import AnnealConfig

        return AnnealConfig(sweeps=self.sweeps, reads=self.reads,
                            beta_initial=self.beta_initial, beta_final=self.beta_final,
                            seed=self.seed if seed is None else seed,
                            bits=self.bits if bits is None else bits)

    def make_backend(self, bits=None, seed=None, backend=None):
        from .annealer import AnnealBackend, DirectBackend, RemoteBackend

        kind = backend or self.backend
        if kind == "direct":
            return DirectBackend()
        cfg = self.anneal_config(bits, seed)
        if kind == "anneal":
            return AnnealBackend(cfg)
        return RemoteBackend(self.endpoint, cfg, timeout=self.timeout)

    def sor_config(self, omega, stop_early=True):
        from .blocksolve import SorConfig

        return SorConfig(omega=omega, max_iterations=self.max_iterations,
                         tolerance=self.tolerance, stopping_mode=self.stopping_mode,
                         stop_early=stop_early)

    def to_json(self):
        doc = {"version": CONFIG_VERSION}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, EdgeSpec):
                value = value.to_json()
            elif isinstance(value, tuple):
                value = list(value)
            doc[f.name] = value
        return doc


def plate_config(**overrides):
    """The square-plate experiment: 9x9 interior, 9 line blocks, R = 7,
    optimal omega, stop at relative error 0.08.

    Uses 100 annealing reads per block (the sampler default is 25): 63-bit
    blocks need the extra restarts to land on their ground state reliably.
    """
    overrides.setdefault("reads", 100)
    return RunConfig(**overrides)


def _fail(field_name, message):
    raise ConfigError(f"{field_name}: {message}", field=field_name)


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _is_real(v):
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) \
        and math.isfinite(v)


def _validate(c):
    for name in ("n", "m", "blocks", "bits", "max_iterations", "reads"):
        v = getattr(c, name)
        if not _is_int(v) or v < 1:
            _fail(name, f"must be an integer >= 1, got {v!r}")
    if not _is_int(c.sweeps) or c.sweeps < 0:
        _fail("sweeps", f"must be an integer >= 0, got {c.sweeps!r}")
    if not _is_int(c.seed) or not (-(1 << 63) <= c.seed < (1 << 64)):
        _fail("seed", f"must be a 64-bit integer, got {c.seed!r}")
    for name in ("side_length", "tolerance", "timeout"):
        v = getattr(c, name)
        if not _is_real(v) or v <= 0:
            _fail(name, f"must be a positive number, got {v!r}")
    if not (_is_real(c.beta_initial) and c.beta_initial > 0):
        _fail("beta_initial", f"must be > 0, got {c.beta_initial!r}")
    if not (_is_real(c.beta_final) and c.beta_final > c.beta_initial):
        _fail("beta_final", f"must exceed beta_initial, got {c.beta_final!r}")
    if c.omega != "optimal" and not (_is_real(c.omega) and 0 < c.omega < 2):
        _fail("omega", f"must be 'optimal' or a number in (0, 2), got {c.omega!r}")
    if c.numbering not in {n.value for n in Numbering}:
        _fail("numbering", f"must be 'row-major' or 'boustrophedon', got {c.numbering!r}")
    if c.backend not in ("direct", "anneal", "remote"):
        _fail("backend", f"must be direct, anneal or remote, got {c.backend!r}")
    if c.backend == "remote" and not c.endpoint:
        _fail("endpoint", "required when backend is 'remote'")
    if c.stopping_mode not in ("reference", "residual"):
        _fail("stopping_mode", f"must be 'reference' or 'residual', got {c.stopping_mode!r}")
    if not isinstance(c.compare_bits, tuple) or not c.compare_bits or \
            not all(_is_int(r) and r >= 1 for r in c.compare_bits):
        _fail("compare_bits", f"must be a non-empty list of integers >= 1, got {c.compare_bits!r}")
    for edge in ("bottom", "top", "left", "right"):
        spec = getattr(c, edge)
        if not isinstance(spec, EdgeSpec) or spec.kind not in ("constant", "ramp") \
                or not (_is_real(spec.start) and _is_real(spec.end)):
            _fail(edge, f"invalid edge specification {spec!r}")
    if c.system is None and (c.n * c.m) % c.blocks:
        _fail("blocks", f"{c.blocks} does not divide the {c.n * c.m} interior points")


def _edge_from_json(name, doc):
    if _is_real(doc):
        return EdgeSpec("constant", float(doc))
    if not isinstance(doc, dict):
        _fail(name, "must be a number or an object with a 'type'")
    kind = doc.get("type")
    try:
        if kind == "constant":
            _check_keys(doc, {"type", "value"}, name)
            return EdgeSpec("constant", doc["value"])
        if kind == "ramp":
            _check_keys(doc, {"type", "start", "end"}, name)
            return EdgeSpec("ramp", doc["start"], doc["end"])
    except KeyError as exc:
        _fail(f"{name}.{exc.args[0]}", "missing")
    _fail(f"{name}.type", f"must be 'constant' or 'ramp', got {kind!r}")


def _check_keys(doc, allowed, prefix=None):
    for key in doc:
        if key not in allowed:
            _fail(f"{prefix}.{key}" if prefix else key, "unknown field")


def config_from_json(doc):
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    if doc.get("version") != CONFIG_VERSION:
        _fail("version", f"must be {CONFIG_VERSION}, got {doc.get('version')!r}")
    names = {f.name for f in fields(RunConfig)}
    _check_keys(doc, names | {"version"})
    kwargs = {}
    for key, value in doc.items():
        if key == "version":
            continue
        if key in ("bottom", "top", "left", "right"):
            value = _edge_from_json(key, value)
        elif key == "compare_bits":
            if not isinstance(value, list):
                _fail(key, "must be a list")
            value = tuple(value)
        kwargs[key] = value
    return RunConfig(**kwargs)


def load_config(path):
    """Read and validate a JSON run configuration.

    Raises
    ------
    ConfigError
        Missing file, JSON syntax error (with line and column) or a schema
        violation; ``err.field`` names the offending key.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from exc
    return config_from_json(doc)


def save_config(config, path):
    Path(path).write_text(json.dumps(config.to_json(), indent=2) + "\n")


# ------------------------------------------------------------ linear systems


def write_system(system, path):
    A = system.A
    rows, cols = np.nonzero(A)
    N = system.dimension
    lines = [f"{N} {rows.size}"]
    lines += [f"{r} {c} {_fmt(A[r, c])}" for r, c in zip(rows, cols)]
    lines += [_fmt(v) for v in system.b]
    Path(path).write_text("\n".join(lines) + "\n")


def read_system(path):
    """Parse the coordinate format; duplicates and bad indices are rejected."""
    tokens = [ln.split() for ln in Path(path).read_text().splitlines()]
    tokens = [t for t in tokens if t]
    if not tokens or len(tokens[0]) != 2:
        raise FormatError(f"{path}: malformed header, expected 'N nnz'")
    try:
        N, nnz = int(tokens[0][0]), int(tokens[0][1])
    except ValueError as exc:
        raise FormatError(f"{path}: malformed header, expected 'N nnz'") from exc
    if N < 1 or nnz < 0:
        raise FormatError(f"{path}: malformed header, N must be >= 1 and nnz >= 0")
    if len(tokens) != 1 + nnz + N:
        raise FormatError(f"{path}: expected {1 + nnz + N} non-empty lines, got {len(tokens)}")
    A = np.zeros((N, N))
    seen = set()
    for lineno, t in enumerate(tokens[1:1 + nnz], start=2):
        if len(t) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'row col value'")
        try:
            r, c, v = int(t[0]), int(t[1]), float(t[2])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: cannot parse entry") from exc
        if not (0 <= r < N and 0 <= c < N):
            raise FormatError(f"{path}:{lineno}: index ({r}, {c}) out of bounds for N = {N}")
        if (r, c) in seen:
            raise FormatError(f"{path}:{lineno}: duplicate entry ({r}, {c})")
        seen.add((r, c))
        A[r, c] = v
    try:
        b = np.array([float(t[0]) for t in tokens[1 + nnz:]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: cannot parse right-hand side") from exc
    if any(len(t) != 1 for t in tokens[1 + nnz:]):
        raise FormatError(f"{path}: right-hand side lines must hold one value")
    return LinearSystem(A, b)


# ------------------------------------------------------------------- QUBOs


def qubo_to_text(problem):
    n = problem.variable_count
    lines = [f"vars {n} offset {_fmt(problem.offset)}"]
    lines += [f"lin {k} {_fmt(v)}" for k, v in enumerate(problem.linear)]
    rows, cols = np.nonzero(problem.quadratic)
    lines += [f"quad {i} {j} {_fmt(problem.quadratic[i, j])}" for i, j in zip(rows, cols)]
    return "\n".join(lines) + "\n"


def qubo_from_text(text):
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 4 or lines[0][0] != "vars" or lines[0][2] != "offset":
        raise FormatError("malformed QUBO header, expected 'vars <n> offset <value>'")
    try:
        n, offset = int(lines[0][1]), float(lines[0][3])
    except ValueError as exc:
        raise FormatError("malformed QUBO header") from exc
    if n < 0:
        raise FormatError("variable count must be >= 0")
    lin = np.zeros(n)
    quad = np.zeros((n, n))
    seen = set()
    for lineno, t in enumerate(lines[1:], start=2):
        try:
            if t[0] == "lin" and len(t) == 3:
                key = ("lin", int(t[1]))
                k = key[1]
                if not 0 <= k < n:
                    raise FormatError(f"line {lineno}: index {k} out of range")
                lin[k] = float(t[2])
            elif t[0] == "quad" and len(t) == 4:
                i, j = int(t[1]), int(t[2])
                key = ("quad", i, j)
                if not (0 <= i < j < n):
                    raise FormatError(f"line {lineno}: need 0 <= i < j < {n}, got ({i}, {j})")
                quad[i, j] = float(t[3])
            else:
                raise FormatError(f"line {lineno}: unrecognised record {' '.join(t)!r}")
        except ValueError as exc:
            raise FormatError(f"line {lineno}: cannot parse number") from exc
        if key in seen:
            raise FormatError(f"line {lineno}: duplicate record")
        seen.add(key)
    return QuboProblem(lin, quad, offset)


def write_qubo(problem, path):
    Path(path).write_text(qubo_to_text(problem))


def read_qubo(path):
    return qubo_from_text(Path(path).read_text())


# ------------------------------------------------------------------ traces


def write_trace(report, path):
    lines = ["iteration,relative_error"]
    lines += [f"{k},{_fmt(e)}" for k, e in enumerate(report.error_trace, start=1)]
    lines.append(f"# converged={'true' if report.converged else 'false'} "
                 f"omega={_fmt(report.omega_used)} backend_calls={report.backend_calls}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path):
    """Returns ``(errors, footer)``; ``footer`` maps footer keys to strings."""
    errors, footer = [], {}
    for line in Path(path).read_text().splitlines()[1:]:
        if line.startswith("#"):
            footer.update(item.split("=", 1) for item in line[1:].split())
        elif line:
            errors.append(float(line.split(",")[1]))
    return errors, footer


# ------------------------------------------------------- solutions/heatmaps


def _check_solution(grid, solution):
    solution = np.asarray(solution, dtype=float).reshape(-1)
    if solution.size != grid.size:
        raise InvalidArgumentError(
            f"solution has {solution.size} entries, grid has {grid.size} interior points")
    return solution


def write_solution_csv(grid, solution, path):
    """One ``i,j,x,y,u`` row per interior point, geometric row-major order."""
    solution = _check_solution(grid, solution)
    from .grid import index_of

    h = grid.h
    lines = ["i,j,x,y,u"]
    for j in range(1, grid.m_interior + 1):
        for i in range(1, grid.n_interior + 1):
            u = solution[index_of(grid, i, j)]
            lines.append(f"{i},{j},{_fmt(i * h)},{_fmt(j * h)},{_fmt(u)}")
    Path(path).write_text("\n".join(lines) + "\n")


def heatmap_pixels(grid, solution):
    """``(m, n)`` uint8 raster; top row is the largest ``y``.

    Linear min-max scaling to 0..255; a constant field maps to all zeros.
    """
    solution = _check_solution(grid, solution)
    u = grid.to_array(solution)[1:-1, 1:-1]      # [i, j]
    raster = u.T[::-1]                           # rows: y descending
    lo, hi = raster.min(), raster.max()
    if hi <= lo:
        return np.zeros(raster.shape, dtype=np.uint8)
    return np.rint((raster - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_heatmap(grid, solution, path, csv_path=None):
    """Write a P5 PGM of the interior solution plus its CSV companion
    (``path`` with a ``.csv`` suffix unless ``csv_path`` is given)."""
    pixels = heatmap_pixels(grid, solution)
    height, width = pixels.shape
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    write_solution_csv(grid, solution, csv_path or path.with_suffix(".csv"))
    return pixels


def read_pgm(path):
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise FormatError(f"{path}: not an 8-bit P5 PGM")
    width, height = map(int, parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8)
    if pixels.size != width * height:
        raise FormatError(f"{path}: raster size mismatch")
    return pixels.reshape(height, width)
