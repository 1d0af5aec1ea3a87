"""CSV outputs of a run (UTF-8, header row, floats at 17 significant digits)."""

import csv
import os

import numpy as np


class OutputError(OSError):
    pass


def _fmt(v):
    return format(float(v), ".17g")


def _snapshot_rows(times, snapshots):
    """Indices of stored time levels to write: all of them unless snapshot
    instants are configured, in which case the nearest level to each."""
    if not snapshots:
        return list(range(len(times)))
    idx = sorted({int(np.argmin(np.abs(times - t))) for t in snapshots})
    return idx


def _write(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_outputs(result, config, directory=None):
    """Write temperature.csv, energy.csv, iterations.csv and, when enabled,
    residuals.csv.  Returns the list of written paths."""
    out = directory or config.directory
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc}") from exc

    times, x = result.times, result.x
    keep = _snapshot_rows(times, config.snapshot_times)
    paths = []

    p = os.path.join(out, "temperature.csv")
    _write(p, ["t", "x_center", "T"],
           ([_fmt(times[j]), _fmt(x[i]), _fmt(result.T[j, i])] for j in keep for i in range(x.size)))
    paths.append(p)

    p = os.path.join(out, "energy.csv")
    rows = [[_fmt(times[j]), _fmt(x[i]), "total", _fmt(result.E[j, i])] for j in keep for i in range(x.size)]
    if config.spectrum and result.spectrum is not None:
        for j in keep:
            for g in range(result.spectrum.shape[1]):
                rows.extend([_fmt(times[j]), _fmt(x[i]), str(g), _fmt(result.spectrum[j, g, i])] for i in range(x.size))
    _write(p, ["t", "x_center", "group", "E"], rows)
    paths.append(p)

    p = os.path.join(out, "iterations.csv")
    st = result.stats
    m_ti, m_c = np.asarray(st.transport_iterations), np.asarray(st.cycles)
    _write(p, ["step", "t", "M_ti", "M_c", "N_ti", "N_c"],
           ([j + 1, _fmt(times[j + 1]), int(m_ti[j]), int(m_c[j]), int(m_ti[: j + 1].sum()), int(m_c[: j + 1].sum())]
            for j in range(m_ti.size)))
    paths.append(p)

    if config.residuals:
        p = os.path.join(out, "residuals.csv")
        _write(p, ["step", "s", "l", "dT_rel", "dE_rel"],
               ([a, b, l, _fmt(dT), _fmt(dE)] for a, b, l, dT, dE in st.residuals))
        paths.append(p)
    return paths
