"""Dataset files and the table-producing runners behind the CLI.

Two dataset formats are supported:

JSONL (canonical)
    one object per line, keys exactly ``bag_id`` (string), ``y`` (number) and
    ``x`` (nonempty list of numbers).

CSV (long form)
    header ``bag_id,y,x`` and one x-observation per row. Rows of a bag must be
    contiguous and repeat the same ``y``.

In both formats blank lines and lines starting with ``#`` are skipped; the
generator writes its provenance there.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .christoffel import christoffel, kernel
from .dist_reg import Bag, Dataset, TwoStepModel, bag_evaluator, conditional_rule, overfit_ratios, OVERFIT_RATIO
from .errors import ChristoffelError, DatasetError, InsufficientRank, OverfitWarning
from .poly_basis import direct_gram, eval_basis
from .quadrature import eigvec_weights, normalize

__all__ = [
    "FORMATS",
    "EVAL_HEADER",
    "QUAD_HEADER",
    "UNCOND_HEADER",
    "read_bags",
    "load_dataset",
    "write_bags",
    "run_eval_grid",
    "run_quad",
    "run_uncond_grid",
    "y_grid",
    "CheckReport",
    "run_check",
    "write_table",
]

FORMATS = ("jsonl", "csv")
EVAL_HEADER = ("x", "y", "lambda_cond", "lambda_uncond", "ratio")
QUAD_HEADER = ("x", "node", "weight", "probability")
UNCOND_HEADER = ("y", "lambda")


def _infer_format(path, fmt):
    if fmt is not None:
        if fmt not in FORMATS:
            raise DatasetError(f"unknown dataset format {fmt!r}")
        return fmt
    return "csv" if str(path).lower().endswith(".csv") else "jsonl"


def _finite(value, lineno, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DatasetError(f"line {lineno}: {what} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise DatasetError(f"line {lineno}: {what} is not finite")
    return float(value)


def _parse_jsonl(lines: Iterable[str]) -> list[Bag]:
    bags = []
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or set(rec) != {"bag_id", "y", "x"}:
            raise DatasetError(f"line {lineno}: expected an object with keys bag_id, y, x")
        if not isinstance(rec["bag_id"], str):
            raise DatasetError(f"line {lineno}: bag_id must be a string")
        y = _finite(rec["y"], lineno, "y")
        xs = rec["x"]
        if not isinstance(xs, list) or not xs:
            raise DatasetError(f"line {lineno}: x must be a nonempty list")
        bags.append(Bag(rec["bag_id"], [_finite(v, lineno, "x value") for v in xs], y))
    return bags


def _parse_csv(lines: Iterable[str]) -> list[Bag]:
    numbered = [(i, ln) for i, ln in enumerate(lines, 1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not numbered:
        return []
    rows = csv.reader(ln for _, ln in numbered)
    header = [h.strip() for h in next(rows)]
    if header != ["bag_id", "y", "x"]:
        raise DatasetError(f"line {numbered[0][0]}: CSV header must be bag_id,y,x, got {','.join(header)}")

    bags: list[Bag] = []
    seen = set()
    cur_id, cur_y, cur_xs = None, None, []
    for (lineno, _), row in zip(numbered[1:], rows):
        if len(row) != 3:
            raise DatasetError(f"line {lineno}: expected 3 fields, got {len(row)}")
        bag_id = row[0].strip()
        try:
            y, x = float(row[1]), float(row[2])
        except ValueError:
            raise DatasetError(f"line {lineno}: y and x must be numbers") from None
        if not (math.isfinite(y) and math.isfinite(x)):
            raise DatasetError(f"line {lineno}: non-finite value")
        if bag_id != cur_id:
            if bag_id in seen:
                raise DatasetError(f"line {lineno}: rows of bag {bag_id!r} are not contiguous")
            if cur_id is not None:
                bags.append(Bag(cur_id, cur_xs, cur_y))
            seen.add(bag_id)
            cur_id, cur_y, cur_xs = bag_id, y, []
        elif y != cur_y:
            raise DatasetError(f"line {lineno}: bag {bag_id!r} has conflicting y values")
        cur_xs.append(x)
    if cur_id is not None:
        bags.append(Bag(cur_id, cur_xs, cur_y))
    return bags


def read_bags(source: Union[str, Path, io.TextIOBase], fmt: Optional[str] = None) -> list[Bag]:
    """Parse bags from a path or an open text stream, in file order."""
    if hasattr(source, "read"):
        text = source.read()
        fmt = fmt or "jsonl"
    else:
        fmt = _infer_format(source, fmt)
        text = Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    bags = _parse_csv(lines) if _infer_format("", fmt) == "csv" else _parse_jsonl(lines)
    if not bags:
        raise DatasetError("dataset file contains no bags")
    return bags


def load_dataset(path, fmt: Optional[str] = None, dx: int = 10, dy: int = 10, basis="chebyshev") -> Dataset:
    return Dataset.build(read_bags(path, fmt), dx, dy, basis)


def write_bags(bags: Union[Dataset, Sequence[Bag]], dest, fmt: Optional[str] = None, header: Optional[str] = None):
    """Write bags so that :func:`read_bags` reproduces them bit-exactly."""
    if isinstance(bags, Dataset):
        bags = bags.bags
    own = not hasattr(dest, "write")
    fmt = _infer_format(dest if own else "", fmt)
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        if fmt == "jsonl":
            for b in bags:
                rec = {"bag_id": str(b.id), "y": b.y, "x": b.xs.tolist()}
                fh.write(json.dumps(rec) + "\n")
        else:
            fh.write("bag_id,y,x\n")
            w = csv.writer(fh, lineterminator="\n")
            for b in bags:
                y = repr(b.y)
                w.writerows((str(b.id), y, repr(float(x))) for x in b.xs)
    finally:
        if own:
            fh.close()


def y_grid(ds: Dataset, n: int = 201) -> np.ndarray:
    ys = ds.ys
    return np.linspace(ys.min(), ys.max(), n)


def _fitted(ds, ridge):
    return ds if isinstance(ds, TwoStepModel) else TwoStepModel(ds, ridge)


def run_eval_grid(ds, x: float, grid, ridge: Optional[float] = None) -> np.ndarray:
    """Rows ``(x, y, lambda(y|x), lambda(y), ratio)`` for every grid point."""
    model = _fitted(ds, ridge)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    cond = np.atleast_1d(christoffel(model.conditional(x).state, grid))
    uncond = np.atleast_1d(christoffel(model.unconditional().state, grid))
    return np.column_stack([np.full_like(grid, x), grid, cond, uncond, cond / uncond])


def run_quad(ds, x: float, ridge: Optional[float] = None) -> np.ndarray:
    """Rows ``(x, node, weight, probability)`` of the conditional Gauss rule."""
    model = _fitted(ds, ridge)
    rule = conditional_rule(model.conditional(x))
    dist = normalize(rule)
    return np.column_stack([np.full_like(rule.nodes, x), rule.nodes, rule.weights, dist.probabilities])


def run_uncond_grid(ds, grid, ridge: Optional[float] = None) -> np.ndarray:
    model = _fitted(ds, ridge)
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    return np.column_stack([grid, np.atleast_1d(christoffel(model.unconditional().state, grid))])


def write_table(rows: np.ndarray, header: Sequence[str], dest, fmt: str = "csv"):
    if fmt == "csv":
        dest.write(",".join(header) + "\n")
        for row in rows:
            dest.write(",".join(repr(float(v)) for v in row) + "\n")
    elif fmt == "jsonl":
        for row in rows:
            dest.write(json.dumps(dict(zip(header, map(float, row)))) + "\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


@dataclass
class CheckReport:
    lines: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    insufficient_rank: list = field(default_factory=list)
    overfit_warnings: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and not self.insufficient_rank

    def info(self, text):
        self.lines.append(text)

    def check(self, name, ok, detail=""):
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {name}" + (f"  ({detail})" if detail else ""))
        if not ok:
            self.failures.append(name)

    def __str__(self):
        return "\n".join(self.lines)


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny))


def run_check(ds: Dataset, probes: Sequence[float], ridge: Optional[float] = None, seed: int = 0) -> CheckReport:
    """Diagnostics and invariant checks; problems are reported, never raised."""
    rep = CheckReport()
    nmin, nmax = min(b.n for b in ds.bags), max(b.n for b in ds.bags)
    rep.info(f"bags M={ds.M}  N in [{nmin}, {nmax}]  basis={ds.x_spec.family.value}  d_x={ds.dx}  d_y={ds.dy}")

    rx, ry = overfit_ratios(ds)
    rep.info(f"overfit ratio d_x/N = {rx:.4g}  d_y/M = {ry:.4g}")
    for label, r in (("d_x/N", rx), ("d_y/M", ry)):
        if r > OVERFIT_RATIO:
            msg = f"WARN overfit: {label} = {r:.4g} > {OVERFIT_RATIO}"
            rep.info(msg)
            rep.overfit_warnings.append(label)

    conds = []
    for b in ds.bags:
        if b.n < ds.dx:
            rep.insufficient_rank.append(b.id)
            rep.info(f"FAIL InsufficientRank bag {b.id!r}: N = {b.n} < d_x = {ds.dx}")
            continue
        try:
            ev = bag_evaluator(b, ds.x_spec, ridge)
        except InsufficientRank as exc:
            rep.insufficient_rank.append(b.id)
            rep.info(f"FAIL InsufficientRank {exc}")
            continue
        conds.append((ev.state.condition_estimate, b.id))
    if conds:
        vals = np.array([c for c, _ in conds])
        worst = max(conds, key=lambda c: c[0])
        rep.info(
            f"bag Gram condition estimate: min {vals.min():.3g}  median {np.median(vals):.3g}  "
            f"max {vals.max():.3g} (bag {worst[1]!r})"
        )
    if rep.insufficient_rank or ds.M < ds.dy:
        if ds.M < ds.dy:
            rep.check("dataset size", False, f"M = {ds.M} < d_y = {ds.dy}")
        rep.info("skipping model checks: dataset does not support a model")
        return rep

    try:
        with warnings.catch_warnings():
            # already reported as WARN lines above
            warnings.simplefilter("ignore", OverfitWarning)
            model = TwoStepModel(ds, ridge)
        unc = model.unconditional()
        rule = conditional_rule(unc)
    except (ChristoffelError, DatasetError) as exc:
        rep.check("unconditional model", False, f"{type(exc).__name__}: {exc}")
        return rep

    ys = ds.ys
    rep.check("unconditional mass identity", abs(rule.total_mass - ds.M) <= 1e-8 * ds.M,
              f"sum weights {rule.total_mass:.12g} vs M {ds.M}")
    err = _rel(unc.gram.entries, direct_gram(unc.spec, ys))
    rep.check("unconditional Gram moments vs direct", err <= 1e-10, f"rel err {err:.2e}")

    rng = np.random.default_rng(seed)
    coef = rng.standard_normal(ds.dy)
    z = rng.uniform(ys.min(), ys.max(), 5)
    p_data = eval_basis(unc.spec, ys) @ coef
    reproduced = np.array([np.sum(kernel(unc.state, zi, ys) * p_data) for zi in z])
    expected = eval_basis(unc.spec, z) @ coef
    err = float(np.max(np.abs(reproduced - expected)) / np.max(np.abs(p_data)))
    rep.check("reproducing property", err <= 1e-8, f"rel err {err:.2e}")

    for x in probes:
        try:
            cm = model.conditional(x)
            rule = conditional_rule(cm)
        except ChristoffelError as exc:
            rep.check(f"conditional model x={x:g}", False, f"{type(exc).__name__}: {exc}")
            continue
        total = cm.total_weight
        err = abs(rule.total_mass - total) / total
        rep.check(f"conditional mass identity x={x:g}", err <= 1e-8, f"rel err {err:.2e}")
        err = _rel(cm.gram.entries, direct_gram(cm.spec, ys, cm.weights))
        rep.check(f"conditional Gram moments vs direct x={x:g}", err <= 1e-10, f"rel err {err:.2e}")
        err = float(np.max(np.abs(eigvec_weights(rule) / rule.weights - 1)))
        rep.check(f"quadrature weight consistency x={x:g}", err <= 1e-8, f"rel err {err:.2e}")
    return rep
