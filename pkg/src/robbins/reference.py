"""Bundled reference values for the five simulation tables: independently
generated empirical contradiction and non-coverage percentages (10,000
replications per cell), used as regression anchors by compare_to_reference and
the acceptance suite.  Cell keys are (row_label, displayed level)."""

from __future__ import annotations

REFERENCE_REPS = 10_000

_CONF = (90.0, 95.0, 99.0, 99.5)
_PERSIST = (50.0, 80.0, 90.0, 95.0)

# (row_label, levels, contradictions per level, non-coverages per level)
_TABLES = {
    "T1": [
        ("z", _CONF, (51.32, 27.35, 5.20, 2.29), (77.79, 54.21, 18.52, 10.86)),
    ],
    "T2": [
        ("mu0=0,tau0sq=0.1", _PERSIST, (17.62, 4.08, 1.31, 0.48), (39.06, 15.31, 7.28, 3.81)),
        ("mu0=0,tau0sq=1", _PERSIST, (10.35, 3.21, 1.37, 0.59), (22.05, 9.39, 4.68, 2.30)),
        ("mu0=0,tau0sq=10", _PERSIST, (3.03, 1.06, 0.48, 0.23), (8.42, 3.38, 1.69, 0.97)),
        ("mu0=1,tau0sq=1", _PERSIST, (6.54, 2.03, 0.96, 0.46), (14.75, 6.15, 3.02, 1.59)),
        ("mu0=2,tau0sq=1", _PERSIST, (1.89, 0.72, 0.34, 0.20), (4.75, 1.97, 1.09, 0.71)),
        ("mu0=5,tau0sq=1", _PERSIST, (0.00, 0.00, 0.00, 0.00), (0.01, 0.00, 0.00, 0.00)),
    ],
    "T3": [
        ("theta=0.5", _CONF, (28.38, 12.06, 1.42, 0.57), (64.44, 41.78, 12.58, 7.23)),
        ("theta=0.7", _CONF, (27.83, 12.07, 1.54, 0.54), (64.47, 42.94, 13.15, 7.58)),
        ("theta=0.9", _CONF, (28.24, 12.16, 1.60, 0.65), (62.79, 41.40, 12.66, 7.31)),
    ],
    "T4": [
        ("theta=0.5,Beta(0.5,0.5)", _PERSIST, (0.86, 0.17, 0.04, 0.01), (7.36, 3.25, 1.47, 0.75)),
        ("theta=0.5,Beta(1,1)", _PERSIST, (1.54, 0.36, 0.10, 0.03), (10.85, 4.73, 2.46, 1.12)),
        ("theta=0.5,Beta(5,5)", _PERSIST, (4.82, 1.07, 0.33, 0.08), (21.42, 9.29, 4.97, 2.46)),
        ("theta=0.7,Beta(0.5,0.5)", _PERSIST, (0.84, 0.26, 0.08, 0.02), (7.29, 3.27, 1.70, 0.88)),
        ("theta=0.7,Beta(1,1)", _PERSIST, (1.40, 0.40, 0.11, 0.03), (9.87, 4.28, 2.33, 1.31)),
        ("theta=0.7,Beta(5,5)", _PERSIST, (2.21, 0.54, 0.18, 0.05), (11.63, 5.26, 2.75, 1.49)),
        ("theta=0.9,Beta(0.5,0.5)", _PERSIST, (0.86, 0.22, 0.08, 0.04), (7.05, 2.94, 1.49, 0.69)),
        ("theta=0.9,Beta(1,1)", _PERSIST, (0.69, 0.14, 0.04, 0.02), (6.14, 2.60, 1.27, 0.59)),
        ("theta=0.9,Beta(5,5)", _PERSIST, (0.06, 0.02, 0.01, 0.01), (1.00, 0.35, 0.22, 0.13)),
    ],
    "T5": [
        ("mu0=0,tau0sq=2pi^2", _PERSIST, (0.80, 0.22, 0.02, 0.01), (8.34, 3.29, 1.68, 0.84)),
        ("mu0=0,tau0sq=5", _PERSIST, (2.15, 0.51, 0.16, 0.02), (15.34, 6.16, 3.04, 1.51)),
        ("mu0=0,tau0sq=1", _PERSIST, (4.81, 0.82, 0.24, 0.05), (26.06, 10.75, 5.35, 2.61)),
        ("mu0=0,tau0sq=0.1", _PERSIST, (6.60, 0.59, 0.05, 0.01), (37.29, 13.41, 6.89, 3.05)),
        ("mu0=1,tau0sq=5", _PERSIST, (1.76, 0.43, 0.15, 0.01), (13.31, 5.51, 2.72, 1.33)),
        ("mu0=-1,tau0sq=5", _PERSIST, (1.96, 0.44, 0.13, 0.02), (14.89, 5.89, 2.87, 1.54)),
    ],
}


def cells(table_id: str) -> dict:
    """Reference cells of one table as {(row_label, level): (contradictions_pct,
    noncoverages_pct)}."""
    table_id = table_id.upper()
    if table_id not in _TABLES:
        raise ValueError(f"unknown table {table_id!r}; expected one of {tuple(_TABLES)}")
    out = {}
    for label, levels, contra, noncov in _TABLES[table_id]:
        for lvl, c, n in zip(levels, contra, noncov):
            out[(label, lvl)] = (c, n)
    return out
