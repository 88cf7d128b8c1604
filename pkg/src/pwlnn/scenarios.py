"""The comparison matrix: actuator and compensator variants under both references."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .sim import (
    ReferenceSpec,
    Scenario,
    SimConfig,
    SimulationDiverged,
    TimeSeries,
    metrics,
    rms_difference,
    run,
)

log = logging.getLogger(__name__)

BASELINE = "baseline-no-pwl"

# baseline and uncompensated share one controller (unity inverse, no network,
# no robustifiers) and differ only in the actuator; pi-only adds the
# robustifying terms, nn-compensated adds the tuned network on top.
VARIANTS = {
    BASELINE: Scenario(pwl_enabled=False, nn_enabled=False, robustifiers_enabled=False),
    "pwl-uncompensated": Scenario(pwl_enabled=True, nn_enabled=False, robustifiers_enabled=False),
    "pwl-pi-only": Scenario(pwl_enabled=True, nn_enabled=False, robustifiers_enabled=True),
    "pwl-nn-compensated": Scenario(pwl_enabled=True, nn_enabled=True, robustifiers_enabled=True),
}

DEFAULT_REFERENCES = {
    "sinusoid": ReferenceSpec(kind="sinusoid", amplitude=1.0, frequency=0.5),
    "rectangular": ReferenceSpec(kind="rectangular", amplitude=1.0, frequency=0.25, edge_time=0.05),
}

SUMMARY_COLUMNS = (
    "label", "variant", "reference", "status",
    "rms_e", "max_e", "rms_T_tilde", "final_Z_norm", "rms_T_vs_baseline",
)


@dataclass
class ScenarioMatrix:
    entries: list[tuple[str, SimConfig]]

    def __post_init__(self):
        labels = [label for label, _ in self.entries]
        dupes = {x for x in labels if labels.count(x) > 1}
        if dupes:
            raise ValueError(f"duplicate scenario labels: {sorted(dupes)}")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]


def reference_for(base: SimConfig, kind: str) -> ReferenceSpec:
    """The base config's reference if it is of ``kind``, else the built-in one at the base amplitude."""
    if base.reference.kind == kind:
        return base.reference
    return replace(DEFAULT_REFERENCES[kind], amplitude=base.reference.amplitude)


def builtin_matrix(base: SimConfig | None = None) -> ScenarioMatrix:
    base = base or SimConfig()
    entries = []
    for kind in DEFAULT_REFERENCES:
        ref = reference_for(base, kind)
        for variant, scenario in VARIANTS.items():
            entries.append((f"{variant}-{kind}", replace(base, reference=ref, scenario=scenario)))
    return ScenarioMatrix(entries)


def _split_label(label: str) -> tuple[str, str]:
    for kind in DEFAULT_REFERENCES:
        if label.endswith("-" + kind):
            return label[: -len(kind) - 1], kind
    return label, ""


def _run_one(item: tuple[str, SimConfig]):
    label, config = item
    try:
        return label, run(config), None
    except SimulationDiverged as exc:
        return label, None, str(exc)


@dataclass
class MatrixResult:
    rows: list[dict]
    series: dict[str, TimeSeries]
    failures: dict[str, str]

    @property
    def exit_code(self) -> int:
        if any(msg.startswith("io:") for msg in self.failures.values()):
            return 3
        return 2 if self.failures else 0


def _fmt(value) -> str:
    return format(value, ".17g") if isinstance(value, float) else str(value)


def run_matrix(matrix: ScenarioMatrix, out_dir, jobs: int = 1, keep_series: bool = False) -> MatrixResult:
    """Run every scenario, write ``<label>.csv`` plus ``summary.csv`` into ``out_dir``.

    A scenario that diverges or cannot be written is reported in the result
    and the remaining scenarios still run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    items = list(matrix)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one, items))
    else:
        outcomes = [_run_one(item) for item in items]

    series: dict[str, TimeSeries] = {}
    failures: dict[str, str] = {}
    for label, ts, err in outcomes:
        if err is not None:
            failures[label] = err
            log.error("%s: %s", label, err)
            continue
        try:
            ts.write_csv(out_dir / f"{label}.csv")
        except OSError as exc:
            failures[label] = f"io: {exc}"
            log.error("%s: cannot write csv: %s", label, exc)
        series[label] = ts

    configs = dict(items)
    rows = []
    for label, _ in items:
        variant, kind = _split_label(label)
        row = {"label": label, "variant": variant, "reference": kind}
        ts = series.get(label)
        if ts is None:
            row.update(status="diverged", rms_e="", max_e="", rms_T_tilde="", final_Z_norm="", rms_T_vs_baseline="")
            rows.append(row)
            continue
        row["status"] = "ok" if label not in failures else "io-error"
        row.update(metrics(ts, configs[label].settle_fraction).as_dict())
        base = series.get(f"{BASELINE}-{kind}")
        row["rms_T_vs_baseline"] = (
            rms_difference(ts, base, "T", configs[label].settle_fraction)
            if base is not None and len(base) == len(ts) else ""
        )
        rows.append(row)

    try:
        with open(out_dir / "summary.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])
    except OSError as exc:
        failures["summary"] = f"io: {exc}"
        log.error("cannot write summary: %s", exc)

    return MatrixResult(rows, series if keep_series else {}, failures)
