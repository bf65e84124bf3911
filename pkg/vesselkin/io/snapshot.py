import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from vesselkin import Config, SnapshotException
from vesselkin.coupling import MarchState
from vesselkin.grids import AnnulusGrid, VelocityGrid, build_annulus_grid, build_velocity_grid

__all__ = [
    'MAGIC',
    'HEADER',
    'Snapshot',
    'snapshot_bytes',
    'parse_snapshot',
    'write_snapshot',
    'read_snapshot',
    'checkpoint_write',
    'checkpoint_read',
]

log = logging.getLogger(__name__)

MAGIC = b'VKIN'
HEADER = np.dtype(
    [
        ('magic', 'S4'),
        ('version', '<u4'),
        ('step', '<u8'),
        ('t', '<f8'),
        ('nr', '<u4'),
        ('nth', '<u4'),
        ('nv', '<u4'),
        ('r0', '<f8'),
        ('r1', '<f8'),
        ('vmax', '<f8'),
    ]
)
TRAILER = np.dtype('<u8')
FLOAT = np.dtype('<f8')


@dataclass
class Snapshot:
    """
    Stored state of a run. ``inner_in``/``outer_in`` are the incoming traces applied in
    the step that produced the state, which the nonlocal operators lag on when resuming.
    """

    step: int
    t: float
    p: np.ndarray
    c: np.ndarray
    b: np.ndarray
    inner_in: np.ndarray
    outer_in: np.ndarray
    r0: float
    r1: float
    vmax: float

    @property
    def nr(self) -> int:
        return self.p.shape[0]

    @property
    def nth(self) -> int:
        return self.p.shape[1]

    @property
    def nv(self) -> int:
        return self.p.shape[2]

    def annulus(self) -> AnnulusGrid:
        return build_annulus_grid(self.r0, self.r1, self.nr, self.nth)

    def velocity(self) -> VelocityGrid:
        return build_velocity_grid(self.vmax, self.nv)

    def to_state(self) -> MarchState:
        return MarchState(
            n=self.step, t=self.t, p=self.p, c=self.c, b=self.b,
            inner_in=self.inner_in, outer_in=self.outer_in,
        )

    @classmethod
    def from_state(
        cls, state: MarchState, agrid: AnnulusGrid, vgrid: VelocityGrid
    ) -> 'Snapshot':
        return cls(
            step=state.n, t=state.t, p=state.p, c=state.c, b=state.b,
            inner_in=np.broadcast_to(state.inner_in, (agrid.nth,) + vgrid.shape),
            outer_in=np.broadcast_to(state.outer_in, (agrid.nth,) + vgrid.shape),
            r0=agrid.r0, r1=agrid.r1, vmax=vgrid.vmax,
        )


def _shapes(nr: int, nth: int, nv: int):
    return (
        ('p', (nr, nth, nv, nv)),
        ('c', (nr, nth)),
        ('b', (nr, nth)),
        ('inner_in', (nth, nv, nv)),
        ('outer_in', (nth, nv, nv)),
    )


def snapshot_bytes(snapshot: Snapshot) -> bytes:
    """
    Header, the five arrays as little-endian float64 in row-major order, then the byte
    length of everything before the trailer as u64.
    """
    header = np.zeros(1, dtype=HEADER)
    header[0] = (
        MAGIC, Config.SNAPSHOT_FORMAT_VERSION, snapshot.step, snapshot.t,
        snapshot.nr, snapshot.nth, snapshot.nv, snapshot.r0, snapshot.r1, snapshot.vmax,
    )
    chunks = [header.tobytes()]
    for name, shape in _shapes(snapshot.nr, snapshot.nth, snapshot.nv):
        values = np.ascontiguousarray(getattr(snapshot, name), dtype=FLOAT)
        if values.shape != shape:
            raise ValueError(f'{name} has shape {values.shape}, expected {shape}')
        chunks.append(values.tobytes())
    body = b''.join(chunks)
    return body + np.array([len(body)], dtype=TRAILER).tobytes()


def parse_snapshot(data: bytes) -> Snapshot:
    """
    :raises SnapshotException: With reason ``magic``, ``version``, ``truncated`` or
                               ``corrupted``; nothing is returned on failure
    """
    if len(data) < HEADER.itemsize + TRAILER.itemsize:
        raise SnapshotException('snapshot is truncated', reason='truncated')
    header = np.frombuffer(data, dtype=HEADER, count=1)[0]
    if bytes(header['magic']) != MAGIC:
        raise SnapshotException('not a vesselkin snapshot (bad magic)', reason='magic')
    version = int(header['version'])
    if version != Config.SNAPSHOT_FORMAT_VERSION:
        raise SnapshotException(
            f'snapshot format version {version} is not supported '
            f'(expected {Config.SNAPSHOT_FORMAT_VERSION})',
            reason='version',
        )
    recorded = int(np.frombuffer(data, dtype=TRAILER, offset=len(data) - TRAILER.itemsize)[0])
    if recorded != len(data) - TRAILER.itemsize:
        raise SnapshotException(
            f'snapshot is truncated ({len(data)} bytes, trailer says {recorded})',
            reason='truncated',
        )
    nr, nth, nv = int(header['nr']), int(header['nth']), int(header['nv'])
    shapes = _shapes(nr, nth, nv)
    expected = HEADER.itemsize + FLOAT.itemsize * sum(int(np.prod(s)) for _, s in shapes)
    if expected != recorded:
        raise SnapshotException(
            f'snapshot dimensions {nr}x{nth}x{nv}² do not match its size', reason='corrupted'
        )
    arrays = {}
    offset = HEADER.itemsize
    for name, shape in shapes:
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(data, dtype=FLOAT, count=count, offset=offset).reshape(
            shape
        ).astype(float)
        offset += count * FLOAT.itemsize
    return Snapshot(
        step=int(header['step']),
        t=float(header['t']),
        r0=float(header['r0']),
        r1=float(header['r1']),
        vmax=float(header['vmax']),
        **arrays,
    )


def write_snapshot(path: str, snapshot: Snapshot) -> None:
    """Written to a temporary file first and moved into place, readers never see halves."""
    tmp = f'{path}.tmp'
    with open(tmp, 'wb') as f:
        f.write(snapshot_bytes(snapshot))
    os.replace(tmp, path)


def read_snapshot(path: str) -> Snapshot:
    """
    :raises SnapshotException: If the file is missing or not a valid snapshot
    """
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except OSError as e:
        raise SnapshotException(f'unable to read snapshot {path}: {e.strerror}', reason='io')
    return parse_snapshot(data)


def checkpoint_write(
    path: str, state: MarchState, agrid: AnnulusGrid, vgrid: VelocityGrid
) -> None:
    write_snapshot(path, Snapshot.from_state(state, agrid, vgrid))
    log.info('checkpoint at step %d (t=%.6g) written to %s', state.n, state.t, path)


def checkpoint_read(
    path: str,
    agrid: Optional[AnnulusGrid] = None,
    vgrid: Optional[VelocityGrid] = None,
) -> MarchState:
    """
    :param agrid: When given, the checkpoint must have been written on this grid
    :param vgrid: Likewise for the velocity grid

    :raises SnapshotException: If the file is invalid or belongs to other grids
    """
    snapshot = read_snapshot(path)
    if agrid is not None and (
        (snapshot.nr, snapshot.nth, snapshot.r0, snapshot.r1)
        != (agrid.nr, agrid.nth, agrid.r0, agrid.r1)
    ):
        raise SnapshotException('checkpoint was written on another space grid', reason='grid')
    if vgrid is not None and (snapshot.nv, snapshot.vmax) != (vgrid.nv, vgrid.vmax):
        raise SnapshotException('checkpoint was written on another velocity grid', reason='grid')
    return snapshot.to_state()
