"""CSV emission and ingestion with stable schemas.

All floats are written with 17 significant digits so files round-trip
exactly and reruns can be compared byte for byte.  Schemas (documented in
the README and consumed verbatim by the figure renderer):

* trajectory:      step,<column>[,...]          one row per post-burn-in step
* decisions:       chain_id,decision,stopping_time,final_sum,gamma_used
                   (case-study variant prefixes test,r,delta,epsilon)
* gap summary:     chain_id,gamma_star_hat,eta_final,n_used
* gap detail:      function,autocov_ratio,implied_gap,gamma_star_hat,eta_final,n_used
* stopping times:  test,r,delta,epsilon,chain_id,decision,stopping_time
* error rates:     test,n,r,delta,epsilon,empirical_error,bound
* bounds:          r,delta,epsilon,xi,gamma,n_fixed,m,n0,stop_indiff,stop_noindiff
* eta trace:       chain_id,iteration,eta,gamma_min
"""

import numpy as np

from .errors import ValidationError


def fmt(value):
    """Render one CSV field; floats get 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, header, rows):
    """Write rows (iterables of fields) under a comma-joined header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_trajectory_csv(path, columns):
    """Write per-step series: ``columns`` maps name -> 1-D array."""
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=np.float64) for name in names]
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise ValidationError("trajectory columns must share one length")
    rows = ((step + 1, *(a[step] for a in arrays)) for step in range(n))
    write_csv(path, ["step"] + names, rows)


def read_trajectory_csv(path, columns=None):
    """Read a trajectory CSV back as ``{name: array}``.

    ``columns`` selects and orders a subset; by default every non-step
    column is returned.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        names = header.split(",")
        if not names or names[0] != "step":
            raise ValidationError(f"{path}:1: expected a 'step' first column")
        wanted = names[1:] if columns is None else list(columns)
        missing = [c for c in wanted if c not in names]
        if missing:
            raise ValidationError(
                f"{path}: missing columns {missing}; file has {names[1:]}"
            )
        index = [names.index(c) for c in wanted]
        data = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise ValidationError(
                    f"{path}:{lineno}: expected {len(names)} fields, got {len(parts)}"
                )
            try:
                data.append([float(parts[i]) for i in index])
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not data:
        raise ValidationError(f"{path}: no data rows")
    arr = np.asarray(data, dtype=np.float64)
    return {name: arr[:, j] for j, name in enumerate(wanted)}
