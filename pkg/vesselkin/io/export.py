import io
import json
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from vesselkin.fields import ModelParams, marginal_density, tip_flux

from .snapshot import Snapshot

__all__ = ['FIELD_SELECTORS', 'export_csv', 'export_series', 'read_diagnostics', 'series']

log = logging.getLogger(__name__)

FIELD_SELECTORS = ('rho', 'c', 'j', 'slice')
FLOAT_FORMAT = '%.17g'


def _to_csv(columns: Sequence[str], values: np.ndarray) -> str:
    buffer = io.StringIO()
    np.savetxt(
        buffer, values, fmt=FLOAT_FORMAT, delimiter=',', header=','.join(columns), comments=''
    )
    return buffer.getvalue()


def export_csv(
    snapshot: Snapshot,
    selector: str,
    params: Optional[ModelParams] = None,
    cell: Tuple[int, int] = (0, 0),
) -> str:
    """
    Columnar text of one field of a snapshot. Spatial fields are listed cell by cell
    in (r, θ) row-major order; ``slice`` lists p(x₀, ·) at ``cell`` over the velocity
    grid in (v_x, v_y) row-major order.

    :param params: Model constants, needed for the tip flux ``j``
    :param cell:   Index (i, j) of the spatial cell of a velocity slice

    :raises ValueError: On an unknown selector, a missing ``params`` or a bad cell
    """
    agrid, vgrid = snapshot.annulus(), snapshot.velocity()
    if selector == 'slice':
        i, j = cell
        if not (0 <= i < agrid.nr and 0 <= j < agrid.nth):
            raise ValueError(f'cell {cell} lies outside the {agrid.nr}x{agrid.nth} grid')
        values = np.column_stack(
            [vgrid.vx.ravel(), vgrid.vy.ravel(), snapshot.p[i, j].ravel()]
        )
        return _to_csv(('vx', 'vy', 'p'), values)

    if selector == 'rho':
        field = marginal_density(snapshot.p, vgrid)
    elif selector == 'c':
        field = snapshot.c
    elif selector == 'j':
        if params is None:
            raise ValueError('the tip flux export needs the model parameters')
        field = tip_flux(snapshot.p, vgrid, params)
    else:
        raise ValueError(
            f'unknown selector {selector!r}, expected one of {", ".join(FIELD_SELECTORS)}'
        )
    r, theta = np.meshgrid(agrid.r, agrid.theta, indexing='ij')
    values = np.column_stack([r.ravel(), theta.ravel(), np.asarray(field).ravel()])
    return _to_csv(('r', 'theta', selector), values)


def read_diagnostics(lines: Iterable[str]) -> Tuple[dict, List[dict]]:
    """Split a diagnostics.jsonl stream into its header and snapshot records."""
    header, records = {}, []
    for line in lines:
        if not line.strip():
            continue
        entry = json.loads(line)
        if entry.get('kind') == 'header':
            header = entry
        else:
            records.append(entry)
    return header, records


def series(records: Sequence[dict], name: str) -> np.ndarray:
    """
    Time series of a diagnostic, one row (t, value) per snapshot. ``name`` is a dotted
    path into the record, e.g. ``mass``, ``norms.inf`` or ``bounds.linf.margin``.

    :raises ValueError: If a record has no such entry or it is not a number
    """
    rows = []
    for record in records:
        value = record
        for part in name.split('.'):
            if not isinstance(value, dict) or part not in value:
                raise ValueError(f'unknown diagnostic {name!r}')
            value = value[part]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f'diagnostic {name!r} is not a number')
        rows.append((record['t'], float(value)))
    return np.array(rows, dtype=float).reshape(-1, 2)


def export_series(records: Sequence[dict], name: str) -> str:
    return _to_csv(('t', name), series(records, name))
