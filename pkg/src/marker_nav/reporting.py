"""Run reports and CSV/JSON output with atomic writes."""

import csv
from dataclasses import asdict, dataclass, fields
import io
import json
import os
import tempfile

from .simulator import ScenarioResult

TRAJECTORY_COLUMNS = (
    "k", "t", "truth_x", "truth_y", "truth_psi", "est_x", "est_y", "est_psi", "selected",
    "e1_a", "e1_b", "e2_a", "e2_b", "e_a", "e_b", "delta_rd", "u", "waypoint_idx",
)

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunReport:
    result: ScenarioResult
    config_hash: str
    seed: int
    policy: str
    wall_time_s: float

    def to_dict(self):
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "policy": self.policy,
            "wall_time_s": self.wall_time_s,
            "success": self.result.success,
            "result": asdict(self.result),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {d.get('schema_version')!r}")
        names = {f.name for f in fields(ScenarioResult)}
        result = ScenarioResult(**{k: v for k, v in d["result"].items() if k in names})
        return cls(result, d["config_hash"], int(d["seed"]), d["policy"], float(d["wall_time_s"]))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def atomic_write_text(path, text):
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        return repr(float(v))
    return v


def csv_text(columns, rows):
    """RFC-4180 CSV (CRLF line endings, header always present)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def trajectory_rows(log):
    for s in log:
        est = s.estimate
        ca, cb = s.costs if s.costs is not None else (None, None)
        yield {
            "k": s.k, "t": s.t,
            "truth_x": s.truth.x, "truth_y": s.truth.y, "truth_psi": s.truth.psi,
            "est_x": est.x, "est_y": est.y, "est_psi": est.psi,
            "selected": s.selected,
            "e1_a": ca and ca.e1, "e1_b": cb and cb.e1,
            "e2_a": ca and ca.e2, "e2_b": cb and cb.e2,
            "e_a": ca and ca.e, "e_b": cb and cb.e,
            "delta_rd": s.command.delta_rd, "u": s.command.u,
            "waypoint_idx": s.waypoint_idx,
        }


def trajectory_csv(log):
    return csv_text(TRAJECTORY_COLUMNS, trajectory_rows(log))
