"""Density sweeps over n, anchor selection, and table/series reports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, TextIO, Union

from .bounds import (
    LOWER,
    UPPER,
    BoundCertificate,
    certify_lower,
    certify_upper,
    check_bound_B,
    delta,
    delta_exponent_bound,
)
from .cycles import Cycle, CycleSet, TypeTable, build_type_table
from .digits import HappyFunction
from .distribution import (
    AUTO,
    DEFAULT_EXACT_CEILING,
    DEFAULT_INTERVAL_PREC,
    INTERVAL,
    DensityValue,
    LabelIndex,
    RowEngine,
    Tally,
    band_from_prefix,
    resolve_mode,
)
from .errors import CertificationError, EnclosureTooWide, ValidationError
from .intervals import DEFAULT_PREC, Interval, format_fixed

WIDTH_GUARD = Fraction(1, 10 ** 6)
RANKING_PREC = 96


@dataclass
class SweepResult:
    """Prefix tallies for every m <= n_max; densities are derived on demand."""

    H: HappyFunction
    cycles: CycleSet
    n_max: int
    mode: str
    prec: int
    tallies: list[Tally]
    _bound_ok: dict = field(default_factory=dict, repr=False)
    _loss: dict = field(default_factory=dict, repr=False)

    def _labels(self, C) -> list[int]:
        return sorted(self.cycles.indices(C))

    def prefix(self, m: int, C) -> DensityValue:
        return self.tallies[m].density(self._labels(C))

    def band(self, n: int, C) -> DensityValue:
        if not 1 <= n <= self.n_max:
            raise ValidationError(f"band n={n} outside swept range [1, {self.n_max}]")
        labels = self._labels(C)
        return band_from_prefix(self.tallies[n].density(labels),
                                self.tallies[n - 1].density(labels), self.H.base)

    def bound_ok(self, n: int) -> bool:
        if n not in self._bound_ok:
            self._bound_ok[n] = check_bound_B(self.H, n).ok
        return self._bound_ok[n]

    def anchors(self) -> list[int]:
        """n eligible as certificate anchors: 4 | n and bound (B) holds."""
        return [n for n in range(4, self.n_max + 1, 4) if self.bound_ok(n)]

    def loss_factor(self, n: int) -> Fraction:
        """Lower bound on exp(delta(n)); used only to rank anchors."""
        if n not in self._loss:
            dl = delta(self.H, n, RANKING_PREC)
            self._loss[n] = Interval.exact(dl.lo, RANKING_PREC).exp().lo
        return self._loss[n]

    def best_anchor(self, C: Cycle, direction: str) -> Optional[int]:
        """The anchor giving the strongest certificate: it maximizes
        band density * exp(delta(n)) of C (upper) or of its complement (lower)."""
        target = C if direction == UPPER else self.cycles.complement(C)
        best, best_val = None, None
        for n in self.anchors():
            v = self.band(n, target).lo * self.loss_factor(n)
            if best_val is None or v > best_val:
                best, best_val = n, v
        return best

    def extreme(self, C: Cycle, kind: str = "max", n_values: Iterable[int] | None = None) -> int:
        """argmax / argmin of the band density of C (by lower / upper endpoint)."""
        ns = list(range(4, self.n_max + 1, 4) if n_values is None else n_values)
        if kind == "max":
            return max(ns, key=lambda n: self.band(n, C).lo)
        return min(ns, key=lambda n: self.band(n, C).hi)

    def observed_constant(self, C: Cycle) -> Optional[Fraction]:
        """A small-denominator rational contained in every band enclosure, if any."""
        guess = self.band(self.n_max, C).lo.limit_denominator(1000)
        if self.mode != INTERVAL and self.band(self.n_max, C).lo != guess:
            return None
        if all(self.band(n, C).contains(guess) for n in range(1, self.n_max + 1)):
            return guess
        return None


def density_sweep(H: HappyFunction, cycles: CycleSet, n_max: int, mode: str = AUTO,
                  prec: int = DEFAULT_INTERVAL_PREC, table: TypeTable | None = None,
                  exact_ceiling: int = DEFAULT_EXACT_CEILING,
                  progress: Callable[[int], None] | None = None) -> SweepResult:
    """One incremental pass of the recurrence, tallying every cycle at each m."""
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    mode = resolve_mode(mode, n_max, exact_ceiling)
    if table is None or table.bound < n_max * H.alpha:
        table = build_type_table(H, cycles, n_max * H.alpha)
    index = LabelIndex(table, len(cycles))
    eng = RowEngine(H, n_max, mode, prec)
    tallies = [eng.tally(index)]
    for m in range(1, n_max + 1):
        eng.step()
        tallies.append(eng.tally(index))
        if progress is not None:
            progress(m)
    result = SweepResult(H, cycles, n_max, mode, prec, tallies)
    if mode == INTERVAL:
        for c in cycles:
            w = result.prefix(n_max, c).width
            if w >= WIDTH_GUARD:
                raise EnclosureTooWide(
                    f"enclosure width {float(w):.3g} at n={n_max}; raise the precision")
    return result


# ------------------------------------------------------------------ tables

@dataclass
class TableRow:
    cycle: Cycle
    ud: Optional[BoundCertificate] = None
    ld: Optional[BoundCertificate] = None
    ud_n: Optional[int] = None
    ld_n: Optional[int] = None
    constant: Optional[Fraction] = None
    reasons: list[str] = field(default_factory=list)

    @property
    def ud_delta_exp(self) -> Optional[int]:
        return None if self.ud is None else delta_exponent_bound(self.ud.delta)

    @property
    def ld_delta_exp(self) -> Optional[int]:
        return None if self.ld is None else delta_exponent_bound(self.ld.delta)

    def to_json(self) -> dict:
        return {
            "cycle": list(self.cycle.order),
            "ud_bound": None if self.ud is None else self.ud.claimed_decimal,
            "ld_bound": None if self.ld is None else self.ld.claimed_decimal,
            "ud_n": self.ud_n,
            "ld_n": self.ld_n,
            "ud_delta_lt_10^": self.ud_delta_exp,
            "ld_delta_lt_10^": self.ld_delta_exp,
            "observed_constant": None if self.constant is None else str(self.constant),
            "uncertifiable": self.reasons,
        }


def _certify(sweep, C, n, direction, prec):
    if n > sweep.n_max:
        raise ValidationError(f"anchor n={n} beyond swept range n_max={sweep.n_max}")
    if direction == UPPER:
        return certify_upper(sweep.H, sweep.cycles, C, n, sweep.band(n, C), prec)
    comp = sweep.cycles.complement(C)
    return certify_lower(sweep.H, sweep.cycles, C, n, sweep.band(n, comp), prec)


def build_table(H: HappyFunction, sweep: SweepResult,
                anchors: Mapping[Cycle, tuple[Optional[int], Optional[int]]] | None = None,
                prec: int = DEFAULT_PREC) -> list[TableRow]:
    """One row per cycle. Anchors default to the sweep's best eligible n;
    pinned anchors (ud_n, ld_n) override either side."""
    if sweep.H != H:
        raise ValidationError("sweep was computed for a different function")
    anchors = dict(anchors or {})
    rows = []
    for C in sweep.cycles:
        row = TableRow(C)
        pinned = anchors.get(C, (None, None))
        row.constant = sweep.observed_constant(C)
        for direction, n in ((UPPER, pinned[0]), (LOWER, pinned[1])):
            if n is None:
                n = sweep.best_anchor(C, direction)
            if n is None:
                row.reasons.append(f"{direction}: no eligible anchor n <= {sweep.n_max}")
                continue
            try:
                cert = _certify(sweep, C, n, direction, prec)
            except CertificationError as exc:
                row.reasons.append(f"{direction} at n={n}: {exc}")
                cert = None
            if direction == UPPER:
                row.ud, row.ud_n = cert, n
            else:
                row.ld, row.ld_n = cert, n
        rows.append(row)
    return rows


def format_table(rows: Sequence[TableRow], base: int, digits: int = 7) -> str:
    header = ["Cycle", "UD", "LD", "UD n", "LD n", "UD delta(n)", "LD delta(n)"]
    body = []
    for r in rows:
        ud = "-" if r.ud is None else "> " + format_fixed(r.ud.claimed_bound, digits, "down")
        ld = "-" if r.ld is None else "< " + format_fixed(r.ld.claimed_bound, digits, "up")
        if r.constant is not None:
            ud = f"{ud} (= {r.constant} observed)"
        body.append([
            str(r.cycle), ud, ld,
            "-" if r.ud_n is None else f"{base}^{r.ud_n}",
            "-" if r.ld_n is None else f"{base}^{r.ld_n}",
            "-" if r.ud is None else f"< 1e{r.ud_delta_exp}",
            "-" if r.ld is None else f"< 1e{r.ld_delta_exp}",
        ])
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(x.ljust(w) for x, w in zip(line, widths)).rstrip()
             for line in [header] + body]
    return "\n".join(lines) + "\n"


def table_json(rows: Sequence[TableRow], H: HappyFunction) -> str:
    return json.dumps({"function": H.describe(), "rows": [r.to_json() for r in rows]},
                      indent=2)


# ------------------------------------------------------------------ series

def _open(destination):
    if isinstance(destination, (str, Path)):
        return open(destination, "w", newline=""), True
    return destination, False


def emit_series(sweep: SweepResult, destination: Union[str, Path, TextIO],
                digits: int = 30) -> None:
    """CSV ``n,cycle,prefix_lo,prefix_hi,band_lo,band_hi`` for n = 1..n_max."""
    fh, close = _open(destination)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "cycle", "prefix_lo", "prefix_hi", "band_lo", "band_hi"])
        for n in range(1, sweep.n_max + 1):
            for C in sweep.cycles:
                p = sweep.prefix(n, C).decimals(digits)
                b = sweep.band(n, C).decimals(digits)
                w.writerow([n, C.label(), *p, *b])
    finally:
        if close:
            fh.close()


def emit_density_csv(sweep: SweepResult, destination: Union[str, Path, TextIO],
                     series: str = "prefix", digits: int = 30) -> None:
    """CSV ``n,cycle,density_lo,density_hi`` for one series (prefix or band)."""
    if series not in ("prefix", "band"):
        raise ValidationError(f"unknown series {series!r}")
    get = sweep.prefix if series == "prefix" else sweep.band
    fh, close = _open(destination)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "cycle", "density_lo", "density_hi"])
        for n in range(1, sweep.n_max + 1):
            for C in sweep.cycles:
                w.writerow([n, C.label(), *get(n, C).decimals(digits)])
    finally:
        if close:
            fh.close()
