"""Columnar text serialization for pulses, trajectories, and experiment records.

All files share one layout: header lines `# key = value`, one `# columns:`
line naming the columns, then whitespace-separated data rows.  Floats are
written with 17 significant digits, so numeric round-trips are bit-exact.
"""

import numpy as np

from .grid import Grid1D
from .pulse import PulseSolution

_FMT = "%.17g"


def _format_value(v):
    if isinstance(v, float):
        return _FMT % v
    return str(v)


def _parse_value(s):
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def write_columns(path, header, names, columns):
    """Write a columnar text file: header dict, column names, equal-length 1D
    arrays."""
    columns = [np.asarray(c, dtype=float) for c in columns]
    if len(names) != len(columns):
        raise ValueError("one name per column required")
    with open(path, "w") as fh:
        for key, value in header.items():
            fh.write(f"# {key} = {_format_value(value)}\n")
        fh.write("# columns: " + " ".join(names) + "\n")
        data = np.column_stack(columns)
        for row in data:
            fh.write(" ".join(_FMT % v for v in row) + "\n")


def read_columns(path):
    """Read a columnar text file; returns (header dict, names, (nrow, ncol)
    array)."""
    header = {}
    names = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("columns:"):
                    names = body[len("columns:"):].split()
                elif "=" in body:
                    key, _, value = body.partition("=")
                    header[key.strip()] = _parse_value(value.strip())
                continue
            rows.append([float(tok) for tok in line.split()])
    if names is None:
        raise ValueError(f"{path}: missing '# columns:' line")
    data = np.asarray(rows, dtype=float)
    if data.size and data.shape[1] != len(names):
        raise ValueError(f"{path}: row width does not match column names")
    return header, names, data


def save_pulse(path, pulse):
    """Serialize a PulseSolution (profile, adjoint, derivative, diagnostics)."""
    n = pulse.profile.shape[0]
    header = {
        "length": pulse.grid.length,
        "npoints": pulse.grid.npoints,
        "ncomp": n,
        "speed": float(pulse.speed),
        "a_gap": float(pulse.a_gap),
        "residual_bvp": float(pulse.residual_bvp),
        "residual_adj": float(pulse.residual_adj),
        "zero_eigenvalue_re": float(np.real(pulse.zero_eigenvalue)),
        "zero_eigenvalue_im": float(np.imag(pulse.zero_eigenvalue)),
        "zero_mode_cosine": float(pulse.zero_mode_cosine),
    }
    names = ["x"]
    cols = [pulse.grid.x]
    for label, block in (("u", pulse.profile), ("psi", pulse.adjoint),
                         ("dxu", pulse.dprofile)):
        for i in range(n):
            names.append(f"{label}{i + 1}")
            cols.append(block[i])
    write_columns(path, header, names, cols)


def load_pulse(path):
    """Load a PulseSolution saved by save_pulse.

    The dense eigenvalue diagnostics are not stored; the eigenvalues array
    comes back empty (recompute with find_pulse if needed).
    """
    header, names, data = read_columns(path)
    grid = Grid1D(length=int(header["length"]), npoints=int(header["npoints"]))
    n = int(header["ncomp"])
    cols = {name: data[:, j] for j, name in enumerate(names)}
    stack = lambda label: np.stack([cols[f"{label}{i + 1}"] for i in range(n)])
    return PulseSolution(
        grid=grid,
        profile=stack("u"),
        speed=float(header["speed"]),
        dprofile=stack("dxu"),
        adjoint=stack("psi"),
        residual_bvp=float(header["residual_bvp"]),
        residual_adj=float(header["residual_adj"]),
        a_gap=float(header["a_gap"]),
        eigenvalues=np.empty(0, dtype=complex),
        zero_eigenvalue=complex(header["zero_eigenvalue_re"],
                                header["zero_eigenvalue_im"]),
        zero_mode_cosine=float(header["zero_mode_cosine"]),
    )


def save_trajectory(path, record, header=None):
    """Serialize a TrajectoryRecord: step, t, x1..xm (and ell1..ellm)."""
    header = dict(header or {})
    nrec, m = record.lifts.shape
    names = ["step", "t"] + [f"x{i + 1}" for i in range(m)]
    cols = [np.arange(nrec, dtype=float), record.times]
    cols.extend(record.lifts[:, i] for i in range(m))
    if record.ell is not None:
        names.extend(f"ell{i + 1}" for i in range(m))
        cols.extend(record.ell[:, i] for i in range(m))
    write_columns(path, header, names, cols)


def save_density(path, density, header=None):
    header = dict(header or {})
    header.setdefault("sigma", float(density.sigma))
    header.setdefault("residual", float(density.residual))
    write_columns(path, header, ["x", "p"], [density.x, density.p])


def save_spectrum(path, eigenvalues, header=None):
    ev = np.asarray(eigenvalues)
    order = np.argsort(-ev.real)
    ev = ev[order]
    write_columns(path, dict(header or {}),
                  ["index", "re", "im"],
                  [np.arange(ev.size, dtype=float), ev.real, ev.imag])


def save_two_pulse(path, report, header=None):
    """Checkpoint columns of a two-pulse synchronization experiment."""
    header = dict(header or {})
    header.setdefault("seed", report.run_u.seed)
    header.setdefault("sigma", report.run_u.sigma)
    header.setdefault("dt", report.run_u.dt)
    header.setdefault("censored", int(report.censored))
    write_columns(
        path, header,
        ["t", "xhat_u", "xhat_v", "tube_u", "tube_v", "discrepancy"],
        [report.times, report.run_u.phase, report.run_v.phase,
         report.run_u.tube, report.run_v.tube, report.discrepancy],
    )


def save_comparison(path, record, header=None):
    """Checkpoint columns of a full-vs-reduced phase comparison."""
    header = dict(header or {})
    header.setdefault("max_phase_error", float(record.max_phase_error))
    header.setdefault("first_tube_exit", float(record.first_tube_exit))
    header.setdefault("censored", int(record.censored))
    write_columns(
        path, header,
        ["t", "xhat", "gamma", "tube"],
        [record.times, record.phase, record.gamma, record.tube],
    )
