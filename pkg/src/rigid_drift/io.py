"""CSV output for trajectories and order studies."""
import csv
from pathlib import Path

TRAJECTORY_COLUMNS = (
    ["t", "energy", "energy_error", "orth_defect", "w1", "w2", "w3", "aa1", "aa2", "aa3"]
    + [f"q{i}{j}" for i in range(1, 4) for j in range(1, 4)]
)
ORDER_COLUMNS = ["integrator", "h", "config_error", "velocity_error"]


def _fmt(x):
    # 17 significant digits round-trip a double exactly
    return format(float(x), ".17g")


def trajectory_row(sample):
    return [_fmt(v) for v in (
        sample.t, sample.energy, sample.energy_error, sample.orth_defect,
        *sample.W, *sample.axis_angle, *sample.Q.ravel(),
    )]


def write_trajectory_csv(samples, path_or_file):
    """Write samples to a path (parents created) or to an open text stream.

    Returns the number of data rows written.
    """
    if hasattr(path_or_file, "write"):
        return _write_rows(path_or_file, TRAJECTORY_COLUMNS, map(trajectory_row, samples))
    path = Path(path_or_file)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        return _write_rows(fh, TRAJECTORY_COLUMNS, map(trajectory_row, samples))


def write_order_csv(fits, path):
    rows = (
        [fit.integrator, _fmt(h), _fmt(ec), _fmt(ev)]
        for fit in fits
        for h, ec, ev in fit.error_points
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        return _write_rows(fh, ORDER_COLUMNS, rows)


def _write_rows(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    n = 0
    for row in rows:
        writer.writerow(row)
        n += 1
    return n


def read_trajectory_csv(path):
    """Load a trajectory CSV into a dict of float lists keyed by column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name, value in row.items():
                cols[name].append(float(value))
    return cols
