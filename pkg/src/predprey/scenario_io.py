"""Scenario file parsing and run-artifact export.

Scenario files are INI-style with fixed sections; the first line should be
the version header ``# predprey scenario v1``.  Unknown sections or keys are
rejected.  See README for the full key reference.

Artifacts written by a run:

* ``norms.csv``      one row per output time: t, L1/sup/TV of both components
* ``snapshots/``     one CSV per saved time: cell coordinates + u + w
* ``bounds.json``    the BoundsReport (schema_version inside)
* ``picard.log``     per window: successive iterate differences

All numeric output is printed with %.17g from fixed-order reductions, so a
repeated run produces byte-identical files.
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass

from . import expressions as ex
from .coupling import BoundsReport, CoupledTrace, Scenario
from .grid import DomainSpec

SCENARIO_HEADER = "# predprey scenario v1"
NORMS_HEADER = "# predprey norms v1"
SNAPSHOT_HEADER = "# predprey snapshot v1"


class ScenarioError(Exception):
    pass


class ParseError(ScenarioError):
    def __init__(self, message: str, source: str = "<string>", line: int | None = None):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class ValidationError(ScenarioError):
    def __init__(self, key: str, message: str):
        super().__init__(f"[{key}] {message}")
        self.key = key


_SECTIONS: dict[str, tuple[set[str], set[str]]] = {
    # section: (required keys, optional keys)
    "domain": ({"dim", "bounds", "n_cells"}, set()),
    "model": ({"mu", "ell", "kappa", "attract", "K_alpha", "K_beta"}, set()),
    "coefficients": ({"alpha", "beta", "a", "b"}, set()),
    "initial": ({"u0", "w0"}, set()),
    "time": ({"T", "dt", "snapshot_every"}, set()),
    "schemes": ({"parabolic"}, {"hyperbolic", "picard_tol", "picard_max_iter"}),
    "output": ({"directory"}, {"formats", "seed"}),
}

_SLOTS = {
    "alpha": ex.Slot.ALPHA,
    "beta": ex.Slot.BETA,
    "a": ex.Slot.SOURCE_A,
    "b": ex.Slot.SOURCE_B,
    "u0": ex.Slot.INIT,
    "w0": ex.Slot.INIT,
}


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"{section}.{key}", f"not a number: {raw!r}") from None


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{section}.{key}", f"not an integer: {raw!r}") from None


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(str(exc), source, line) from None
    present = set(parser.sections())
    for section, (required, optional) in _SECTIONS.items():
        if section not in present:
            raise ValidationError(section, "missing section")
        keys = set(parser[section])
        missing = required - keys
        if missing:
            raise ValidationError(section, f"missing keys: {sorted(missing)}")
        unknown = keys - required - optional
        if unknown:
            raise ValidationError(section, f"unknown keys: {sorted(unknown)}")
    unknown_sections = present - set(_SECTIONS)
    if unknown_sections:
        raise ValidationError(sorted(unknown_sections)[0], "unknown section")

    dom = parser["domain"]
    dim = _parse_int("domain", "dim", dom["dim"])
    if dim not in (1, 2):
        raise ValidationError("domain.dim", f"dim must be 1 or 2, got {dim}")
    axis_specs = [chunk for chunk in dom["bounds"].split(";") if chunk.strip()]
    if len(axis_specs) != dim:
        raise ValidationError("domain.bounds", f"expected {dim} axis range(s)")
    bounds = []
    for chunk in axis_specs:
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ValidationError("domain.bounds", f"bad axis range {chunk!r}")
        bounds.append((
            _parse_float("domain", "bounds", parts[0]),
            _parse_float("domain", "bounds", parts[1]),
        ))
    counts = [c for c in dom["n_cells"].split(",") if c.strip()]
    if len(counts) not in (1, dim):
        raise ValidationError("domain.n_cells", f"expected 1 or {dim} counts")
    n_cells = tuple(_parse_int("domain", "n_cells", c) for c in counts)
    if len(n_cells) == 1 and dim == 2:
        n_cells = (n_cells[0], n_cells[0])

    model = parser["model"]
    attract = _parse_int("model", "attract", model["attract"])
    if attract not in (1, -1):
        raise ValidationError("model.attract", "attract must be 1 or -1")

    exprs = {}
    for key in ("alpha", "beta", "a", "b"):
        exprs[key] = _parse_expr("coefficients", key, parser["coefficients"][key], dim)
    for key in ("u0", "w0"):
        exprs[key] = _parse_expr("initial", key, parser["initial"][key], dim)

    timing = parser["time"]
    schemes = parser["schemes"]
    scheme_kind = schemes["parabolic"].strip()
    if scheme_kind not in ("implicit_euler", "crank_nicolson"):
        raise ValidationError("schemes.parabolic", f"unknown scheme {scheme_kind!r}")
    hyperbolic_kind = schemes.get("hyperbolic", "upwind").strip()
    if hyperbolic_kind != "upwind":
        raise ValidationError("schemes.hyperbolic", f"unknown scheme {hyperbolic_kind!r}")
    output = parser["output"]
    formats = tuple(
        f.strip() for f in output.get("formats", "csv,json").split(",") if f.strip()
    )
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ValidationError("output.formats", f"unknown format {fmt!r}")
    try:
        return Scenario(
            domain=DomainSpec(tuple(bounds)),
            n_cells=n_cells,
            mu=_parse_float("model", "mu", model["mu"]),
            ell=_parse_float("model", "ell", model["ell"]),
            kappa=_parse_float("model", "kappa", model["kappa"]),
            attract=attract,
            alpha=exprs["alpha"], beta=exprs["beta"],
            a=exprs["a"], b=exprs["b"],
            u0=exprs["u0"], w0=exprs["w0"],
            horizon=_parse_float("time", "T", timing["T"]),
            dt=_parse_float("time", "dt", timing["dt"]),
            snapshot_every=_parse_int("time", "snapshot_every", timing["snapshot_every"]),
            parabolic_scheme=scheme_kind,
            picard_tol=_parse_float("schemes", "picard_tol", schemes.get("picard_tol", "1e-8")),
            picard_max_iter=_parse_int("schemes", "picard_max_iter",
                                       schemes.get("picard_max_iter", "12")),
            k_alpha=_parse_float("model", "K_alpha", model["K_alpha"]),
            k_beta=_parse_float("model", "K_beta", model["K_beta"]),
            out_dir=output["directory"].strip(),
            formats=formats,
            seed=_parse_int("output", "seed", output.get("seed", "0")),
        )
    except ValueError as exc:
        raise ValidationError("scenario", str(exc)) from None


def _parse_expr(section: str, key: str, raw: str, dim: int) -> ex.Expr:
    try:
        tree = ex.parse(raw, _SLOTS[key])
    except ex.ForbiddenVariable as exc:
        raise ValidationError(f"{section}.{key}", str(exc)) from None
    except ex.ExprSyntaxError as exc:
        raise ValidationError(f"{section}.{key}", str(exc)) from None
    if dim == 1 and "y" in ex.variables(tree):
        raise ValidationError(f"{section}.{key}", "variable 'y' used in a 1D scenario")
    return tree


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="ascii") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(str(exc), path) from None
    return parse_scenario_text(text, source=path)


def scenario_to_text(s: Scenario) -> str:
    """Render a Scenario back to the file format; round-trips to an equal value."""
    bounds = ";".join(f"{repr(lo)},{repr(hi)}" for lo, hi in s.domain.bounds)
    lines = [
        SCENARIO_HEADER,
        "[domain]",
        f"dim = {s.domain.dim}",
        f"bounds = {bounds}",
        f"n_cells = {','.join(str(n) for n in s.n_cells)}",
        "",
        "[model]",
        f"mu = {repr(s.mu)}",
        f"ell = {repr(s.ell)}",
        f"kappa = {repr(s.kappa)}",
        f"attract = {s.attract}",
        f"K_alpha = {repr(s.k_alpha)}",
        f"K_beta = {repr(s.k_beta)}",
        "",
        "[coefficients]",
        f"alpha = {ex.to_source(s.alpha)}",
        f"beta = {ex.to_source(s.beta)}",
        f"a = {ex.to_source(s.a)}",
        f"b = {ex.to_source(s.b)}",
        "",
        "[initial]",
        f"u0 = {ex.to_source(s.u0)}",
        f"w0 = {ex.to_source(s.w0)}",
        "",
        "[time]",
        f"T = {repr(s.horizon)}",
        f"dt = {repr(s.dt)}",
        f"snapshot_every = {s.snapshot_every}",
        "",
        "[schemes]",
        f"parabolic = {s.parabolic_scheme}",
        f"picard_tol = {repr(s.picard_tol)}",
        f"picard_max_iter = {s.picard_max_iter}",
        "",
        "[output]",
        f"directory = {s.out_dir}",
        f"formats = {','.join(s.formats)}",
        f"seed = {s.seed}",
        "",
    ]
    return "\n".join(lines)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_norms_csv(trace: CoupledTrace, path: str, every: int = 1) -> None:
    rows = ["t,u_l1,u_linf,u_tv,w_l1,w_linf,w_tv"]
    indices = list(range(0, len(trace.times), every))
    if indices[-1] != len(trace.times) - 1:
        indices.append(len(trace.times) - 1)
    for i in indices:
        rows.append(",".join(_fmt(v) for v in (
            trace.times[i], trace.u_l1[i], trace.u_linf[i], trace.u_tv[i],
            trace.w_l1[i], trace.w_linf[i], trace.w_tv[i],
        )))
    with open(path, "w", encoding="ascii") as handle:
        handle.write(NORMS_HEADER + "\n" + "\n".join(rows) + "\n")


def write_snapshots(trace: CoupledTrace, directory: str, every: int = 1) -> None:
    os.makedirs(directory, exist_ok=True)
    grid = trace.grid
    coords = grid.center_points()
    coord_names = ["x", "y"][: grid.dim]
    indices = list(range(0, len(trace.times), every))
    if indices[-1] != len(trace.times) - 1:
        indices.append(len(trace.times) - 1)
    for snap_no, i in enumerate(indices):
        rows = [",".join(coord_names + ["u", "w"])]
        u = trace.u_fields[i].values.ravel()
        w = trace.w_fields[i].values.ravel()
        for c_row, uv, wv in zip(coords, u, w):
            rows.append(",".join([_fmt(c) for c in c_row] + [_fmt(uv), _fmt(wv)]))
        name = os.path.join(directory, f"snapshot_{snap_no:04d}.csv")
        with open(name, "w", encoding="ascii") as handle:
            handle.write(f"{SNAPSHOT_HEADER} t={_fmt(trace.times[i])}\n")
            handle.write("\n".join(rows) + "\n")


def write_bounds_json(report: BoundsReport, path: str) -> None:
    with open(path, "w", encoding="ascii") as handle:
        json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_picard_log(trace: CoupledTrace, path: str) -> None:
    lines = []
    for k, wl in enumerate(trace.window_logs):
        for i, d in enumerate(wl.diffs, start=1):
            lines.append(
                f"window {k} [{_fmt(wl.t0)}, {_fmt(wl.t1)}] iteration {i} diff {_fmt(d)}"
            )
        lines.append(
            f"window {k} converged={wl.converged} iterations={wl.iterations}"
        )
    with open(path, "w", encoding="ascii") as handle:
        handle.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class RunArtifacts:
    norms_csv: str
    snapshot_dir: str
    bounds_json: str
    picard_log: str


def write_run_artifacts(trace: CoupledTrace, report: BoundsReport,
                        scenario: Scenario, out_dir: str) -> RunArtifacts:
    os.makedirs(out_dir, exist_ok=True)
    paths = RunArtifacts(
        norms_csv=os.path.join(out_dir, "norms.csv"),
        snapshot_dir=os.path.join(out_dir, "snapshots"),
        bounds_json=os.path.join(out_dir, "bounds.json"),
        picard_log=os.path.join(out_dir, "picard.log"),
    )
    every = scenario.snapshot_every
    if "csv" in scenario.formats:
        write_norms_csv(trace, paths.norms_csv, every)
        write_snapshots(trace, paths.snapshot_dir, every)
    if "json" in scenario.formats:
        write_bounds_json(report, paths.bounds_json)
    write_picard_log(trace, paths.picard_log)
    return paths
