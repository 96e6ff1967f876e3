"""Report bundles: CSV tables, one JSON document, two-column plot data, PNG plots and a manifest.

Table cells are stored as tagged numbers, so the CSV text and the JSON copy
of each table come from the same values. JSON is written with sorted keys;
the manifest timestamp lives only in ``manifest.json`` and is not hashed.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import scalar as sc


def _cell(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    return sc.tagged(v)


def _cell_text(v) -> str:
    if isinstance(v, dict) and "value" in v:
        return str(v["value"])
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def jsonable(obj):
    """Recursively convert reports (``to_json``), scalars and containers to JSON values."""
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    try:
        import numpy as np

        if isinstance(obj, np.generic):
            return jsonable(obj.item())
        if isinstance(obj, np.ndarray):
            return jsonable(obj.tolist())
    except ImportError:  # pragma: no cover
        pass
    return sc.to_json_value(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


@dataclass
class Check:
    """One assertion of a suite with the claim it stands for."""

    name: str
    claim: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "claim": self.claim, "passed": self.passed, "detail": jsonable(self.detail)}


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the columns")
        self.rows.append([_cell(v) for v in values])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell_text(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"columns": self.columns, "rows": self.rows}


@dataclass
class Series:
    """Two-column plot data with axis labels."""

    x: list
    y: list
    xlabel: str = "x"
    ylabel: str = "y"
    title: str = ""

    def dat_text(self) -> str:
        lines = [f"# {self.xlabel} {self.ylabel}"]
        lines += [f"{sc.to_text(float(a))} {sc.to_text(float(b))}" for a, b in zip(self.x, self.y)]
        return "\n".join(lines) + "\n"


@dataclass
class ReportBundle:
    name: str
    config: object = None
    tables: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    plotdata: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def table(self, name: str, columns) -> Table:
        t = self.tables.setdefault(name, Table(list(columns)))
        return t

    def check(self, name: str, claim: str, passed: bool, **detail) -> Check:
        c = Check(name, claim, bool(passed), detail)
        self.checks.append(c)
        return c

    def series(self, name: str, x, y, xlabel="x", ylabel="y", title=""):
        self.plotdata[name] = Series(list(x), list(y), xlabel, ylabel, title)

    def to_json(self) -> dict:
        return {"name": self.name, "version": __version__,
                "config": self.config.to_json() if self.config is not None else None,
                "passed": self.passed, "checks": [c.to_json() for c in self.checks],
                "tables": {k: t.to_json() for k, t in self.tables.items()},
                "results": jsonable(self.results)}

    def json_text(self) -> str:
        return dumps(self.to_json())

    def summary_text(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.claim}")
        lines += self.summary
        return "\n".join(lines) + "\n"

    def manifest(self, timestamp: str | None = None) -> dict:
        import matplotlib
        import numpy
        import scipy
        import sympy

        cfg_hash = self.config.hash(__version__) if self.config is not None else None
        return {"name": self.name, "config_hash": cfg_hash,
                "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                "versions": {"normlab": __version__, "python": platform.python_version(),
                             "numpy": numpy.__version__, "scipy": scipy.__version__,
                             "sympy": sympy.__version__, "matplotlib": matplotlib.__version__},
                "files": self.file_names()}

    def file_names(self) -> list[str]:
        names = ["results.json", "summary.txt", "manifest.json"]
        names += [f"{k}.csv" for k in self.tables]
        names += [f"plotdata/{k}.dat" for k in self.plotdata]
        names += [f"plots/{k}.png" for k in self.plotdata]
        return sorted(names)

    def write(self, out_dir, plots: bool = True) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.json").write_text(self.json_text())
        (out / "summary.txt").write_text(self.summary_text())
        for k, t in self.tables.items():
            (out / f"{k}.csv").write_text(t.csv_text())
        if self.plotdata:
            (out / "plotdata").mkdir(exist_ok=True)
            for k, s in self.plotdata.items():
                (out / "plotdata" / f"{k}.dat").write_text(s.dat_text())
            if plots:
                _write_plots(self.plotdata, out / "plots")
        (out / "manifest.json").write_text(dumps(self.manifest()))
        return out


def _write_plots(plotdata: dict, out: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out.mkdir(parents=True, exist_ok=True)
    for k, s in plotdata.items():
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot([float(v) for v in s.x], [float(v) for v in s.y], marker="o")
        ax.set_xlabel(s.xlabel)
        ax.set_ylabel(s.ylabel)
        if s.title:
            ax.set_title(s.title)
        fig.tight_layout()
        fig.savefig(out / f"{k}.png", metadata={"Software": None})
        plt.close(fig)
