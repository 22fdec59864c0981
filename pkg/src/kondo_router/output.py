"""Serialization of experiment results to CSV, JSON and SVG."""

from __future__ import annotations

import dataclasses
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (AsymmetricRow, OptimizationResult, QuenchTrace, RegimeRow,
                          ScalingReport)
from .svgplot import line_plot

FORMATS = ("csv", "json", "svg")


def fmt_number(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.12g}"


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {("-".join(k) if isinstance(k, tuple) else str(k)): _jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _router_items(result: dict):
    return sorted(result.items(), key=lambda kv: kv[0])


def to_document(result, config: dict | None = None) -> dict:
    doc: dict = {"library_version": __version__}
    if config is not None:
        doc["config"] = config
        doc["seed"] = config.get("seed")
    if isinstance(result, QuenchTrace):
        doc.update(type="quench_trace", spec=_jsonable(result.spec),
                   solver=_jsonable(result.config), initial_s2=_jsonable(result.initial_s2),
                   metadata=_jsonable(result.metadata),
                   t=_jsonable(result.times), concurrence=_jsonable(result.concurrence),
                   energy=_jsonable(result.energy), norm=_jsonable(result.norm))
    elif isinstance(result, OptimizationResult):
        doc.update(type="optimization", **_jsonable(result))
    elif isinstance(result, ScalingReport):
        slope, intercept, r2 = result.t_star_fit
        doc.update(type="scaling",
                   points=[{"N": n, "j_prime": jp, **_jsonable(r)}
                           for (n, r), jp in zip(result.results, result.j_primes)],
                   phi_fit=_jsonable(result.fit),
                   t_star_fit={"slope": slope, "intercept": intercept, "r_squared": r2})
    elif isinstance(result, list) and result and isinstance(result[0], AsymmetricRow):
        doc.update(type="asymmetric", rows=_jsonable(result))
    elif isinstance(result, list) and result and isinstance(result[0], RegimeRow):
        doc.update(type="regimes", rows=_jsonable(result))
    elif isinstance(result, dict):
        doc.update(type="router", pairs={f"{a}-{b}": _jsonable(r)
                                         for (a, b), r in _router_items(result)})
    else:
        raise TypeError(f"cannot serialize {type(result).__name__}")
    return doc


def to_table(result) -> tuple[list[str], list[list]]:
    if isinstance(result, QuenchTrace):
        return (["t", "concurrence", "energy", "norm"],
                [list(r) for r in zip(result.times, result.concurrence, result.energy,
                                      result.norm)])
    if isinstance(result, OptimizationResult):
        rows = [[jm, *(p if p is not None else (math.nan, math.nan))]
                for jm, p in zip(result.grid, result.points)]
        return ["j_m", "t_star", "E_m"], rows
    if isinstance(result, ScalingReport):
        rows = [[n, jp, r.j_m_opt, phi, r.t_star, r.e_max]
                for (n, r), jp, (_, phi) in zip(result.results, result.j_primes,
                                                result.fit.points)]
        return ["N", "J_prime", "J_m_opt", "Phi", "t_star", "E_m"], rows
    if isinstance(result, list) and result and isinstance(result[0], AsymmetricRow):
        return (["N_L_over_N", "N_L", "t_star", "E_m", "J_m_opt"],
                [[r.ratio, r.n_left, r.t_star, r.e_max, r.j_m_opt] for r in result])
    if isinstance(result, list) and result and isinstance(result[0], RegimeRow):
        return (["N", "E_m_K", "E_m_D", "t_star_K", "t_star_D"],
                [[r.n_sites, r.e_max_k, r.e_max_d, r.t_star_k, r.t_star_d] for r in result])
    if isinstance(result, dict):
        return (["pair", "J_m_opt", "t_star", "E_m"],
                [[f"{a}-{b}", r.j_m_opt, r.t_star, r.e_max] for (a, b), r in _router_items(result)])
    raise TypeError(f"cannot tabulate {type(result).__name__}")


def to_csv(result) -> str:
    header, rows = to_table(result)
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt_number(v) for v in row) + "\n")
    return buf.getvalue()


def to_svg(result) -> str:
    if isinstance(result, QuenchTrace):
        return line_plot([(result.times, result.concurrence, "")], "t (1/J1)",
                         "boundary concurrence",
                         f"N={result.spec.n_sites}, J_m={result.spec.j_m:g}")
    if isinstance(result, OptimizationResult):
        pts = [(jm, p[1]) for jm, p in zip(result.grid, result.points) if p is not None]
        return line_plot([([x for x, _ in pts], [y for _, y in pts], "")], "J_m (J1)",
                         "first-peak concurrence E_m", "junction-coupling sweep", markers=True)
    if isinstance(result, ScalingReport):
        xs = [math.log(n / 2) ** 2 for n, _ in result.fit.points]
        ys = [phi for _, phi in result.fit.points]
        fit = [result.fit.slope * x + result.fit.intercept for x in xs]
        return line_plot([(xs, ys, "Phi(N)"), (xs, fit, "linear fit")], "log^2(N/2)", "Phi(N)",
                         f"r^2 = {result.fit.r_squared:.4f}", markers=True)
    if isinstance(result, list) and result and isinstance(result[0], AsymmetricRow):
        xs = [r.ratio for r in result]
        return line_plot([(xs, [r.e_max for r in result], "E_m"),
                          (xs, [r.t_star / max(r2.t_star for r2 in result) for r in result],
                           "t*/max t*")], "N_L/N", "value", "asymmetric splits", markers=True)
    if isinstance(result, list) and result and isinstance(result[0], RegimeRow):
        xs = [r.n_sites for r in result]
        return line_plot([(xs, [r.e_max_k for r in result], "Kondo"),
                          (xs, [r.e_max_d for r in result], "dimer")], "N", "E_m",
                         "Kondo vs dimer", markers=True)
    if isinstance(result, dict):
        series = [(r.grid, [p[1] if p else math.nan for p in r.points], f"{a}-{b}")
                  for (a, b), r in _router_items(result)]
        return line_plot(series, "J_m (J1)", "E_m", "router pairs", markers=True)
    raise TypeError(f"cannot plot {type(result).__name__}")


def render(result, fmt: str, config: dict | None = None) -> str:
    if fmt == "csv":
        return to_csv(result)
    if fmt == "json":
        return json.dumps(to_document(result, config), indent=2, sort_keys=True) + "\n"
    if fmt == "svg":
        return to_svg(result)
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def emit(result, fmt: str, path: str | Path | None = None, config: dict | None = None) -> str:
    """Render ``result`` and write it to ``path`` (if given); returns the text."""
    text = render(result, fmt, config)
    if path is not None:
        Path(path).write_text(text)
    return text
