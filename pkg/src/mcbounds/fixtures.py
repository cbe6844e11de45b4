"""Reference-curve fixtures and sweep-output comparison.

The package ships a plain-text table of digitized plot coordinates
(``data/reference_curves.csv`` with columns figure, curve, coop_db, rate).
:func:`compare_csv` matches a sweep CSV against one figure's curves and
reports the per-curve maximum absolute deviation over the shared grid points,
which is the regression gate used by the command line and the test suite.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import FixtureError
from .sweep import read_csv


def reference_curves_path() -> Path:
    """Filesystem path of the reference-curve table shipped with the package."""
    return Path(resources.files("mcbounds.data") / "reference_curves.csv")


def load_reference_curves(path=None) -> dict[tuple[str, str], np.ndarray]:
    """Parse a fixture table into ``{(figure, curve): array of (coop_db, rate)}``.

    Rows are sorted by coop_db per curve; the returned arrays have shape
    (n, 2).  Malformed rows raise FixtureError.
    """
    path = Path(path) if path is not None else reference_curves_path()
    series: dict[tuple[str, str], list[tuple[float, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"figure", "curve", "coop_db", "rate"}
        if not required <= set(reader.fieldnames or []):
            raise FixtureError(f"{path}: fixture table must have columns {sorted(required)}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                key = (rec["figure"], rec["curve"])
                point = (float(rec["coop_db"]), float(rec["rate"]))
            except (TypeError, ValueError):
                raise FixtureError(f"{path}:{lineno}: malformed fixture row") from None
            series.setdefault(key, []).append(point)
    return {key: np.array(sorted(pts)) for key, pts in series.items()}


@dataclass(frozen=True)
class CurveReport:
    """Deviation summary of one reference curve against a sweep CSV."""

    figure: str
    curve: str
    column: str
    points: int
    max_abs_dev: float
    worst_coop_db: float
    passed: bool


def _column_for(curve: str) -> str:
    # fig4 curve names carry the direct-link SNR as a suffix ("3fc_m15");
    # the sweep CSV column is the plain bound name.
    base, sep, tail = curve.rpartition("_m")
    if sep and tail.isdigit():
        return base
    return curve


def compare_csv(
    csv_path, figure: str, tolerance: float, fixture_path=None, bounds=None
) -> list[CurveReport]:
    """Compare fixture curves of ``figure`` against a sweep CSV.

    ``bounds`` restricts the comparison to curves mapping onto those CSV
    columns (default: every curve of the figure).  For each curve, deviations
    are taken over the coop_db points present in both the fixture and the
    CSV; a curve passes when its maximum absolute deviation is within
    ``tolerance`` bits.  A figure unknown to the fixture, a curve whose
    column is missing from the CSV, an empty grid overlap, or a requested
    bound without a fixture curve raise FixtureError.
    """
    if not tolerance > 0.0:
        raise ValueError("tolerance must be > 0")
    curves = {
        key: pts
        for key, pts in load_reference_curves(fixture_path).items()
        if key[0] == figure
    }
    if not curves:
        raise FixtureError(f"figure {figure!r} not present in the fixture table")
    if bounds is not None:
        wanted = tuple(bounds)
        curves = {key: pts for key, pts in curves.items() if _column_for(key[1]) in wanted}
        missing = set(wanted) - {_column_for(c) for _, c in curves}
        if missing:
            raise FixtureError(
                f"figure {figure!r} has no fixture curve for: {', '.join(sorted(missing))}"
            )
    bound_cols, rows = read_csv(csv_path)
    computed = {round(r["coop_db"], 9): r for r in rows}

    reports = []
    for (fig, curve), pts in sorted(curves.items()):
        column = _column_for(curve)
        if column not in bound_cols:
            raise FixtureError(f"curve {curve!r} needs CSV column {column!r}, not found")
        devs = [
            (abs(computed[round(cdb, 9)][column] - rate), cdb)
            for cdb, rate in pts
            if round(cdb, 9) in computed
        ]
        if not devs:
            raise FixtureError(
                f"curve {curve!r}: no overlap between fixture grid and CSV grid"
            )
        worst, worst_at = max(devs)
        reports.append(
            CurveReport(
                figure=fig,
                curve=curve,
                column=column,
                points=len(devs),
                max_abs_dev=float(worst),
                worst_coop_db=float(worst_at),
                passed=bool(worst <= tolerance),
            )
        )
    return reports
