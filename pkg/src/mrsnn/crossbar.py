"""Resistive crossbar arrays: weight mapping, ideal and IR-drop reads.

Matrices use the weight convention ``G[i, j]``: output ``i``, input ``j``,
so an ideal read is ``G @ v``. Physically, input ``j`` drives its own input
wire (a crossbar row) from one end and output ``i`` is an output wire (a
crossbar column) held at virtual ground by its sense amplifier. Device
``(i, j)`` bridges the two wires where they cross.

Wire resistance contributes one ``r_wire`` segment per cell pitch. Input
wires are driven at the ``i = 0`` end and output wires are sensed at the
``j = 0`` end, so cell ``(0, 0)`` sees the shortest parasitic path and
cell ``(N-1, M-1)`` the longest.

Units: conductance in nS, voltage in V, current in nA, resistance in ohm.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .device import DeviceArray, DeviceParams
from .errors import ConfigError, DimensionMismatch, SingularSystem, SolverNotConverged

DIFFERENTIAL = "differential-pair"
REFERENCE = "reference-device"
ONE_SIDED = "one-sided"
BALANCED = "balanced"

NS_PER_SIEMENS = 1e9
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class CrossbarGeometry:
    """Array dimensions, wire parasitics and partition layout.

    ``rows`` counts outputs and ``cols`` counts inputs, matching the matrix
    shape. Partition sizes of ``None`` mean the array is not split.
    """

    rows: int
    cols: int
    r_wire: float = 0.0
    partition_rows: Optional[int] = None
    partition_cols: Optional[int] = None
    driver_capacitance: float = 0.0
    driver_delay: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("crossbar needs at least one row and one column")
        if self.r_wire < 0:
            raise ConfigError("r_wire must be nonnegative")
        if self.partition_rows is not None and self.rows % self.partition_rows:
            raise ConfigError(f"partition_rows {self.partition_rows} does not divide {self.rows}")
        if self.partition_cols is not None and self.cols % self.partition_cols:
            raise ConfigError(f"partition_cols {self.partition_cols} does not divide {self.cols}")

    @property
    def block_shape(self):
        return (self.partition_rows or self.rows, self.partition_cols or self.cols)

    @property
    def n_blocks(self):
        n, m = self.block_shape
        return (self.rows // n) * (self.cols // m)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown CrossbarGeometry fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class CrossbarState:
    """Positive and negative device arrays realising one weight matrix."""

    pos: DeviceArray
    neg: DeviceArray
    scheme: str = DIFFERENTIAL

    def __post_init__(self):
        if self.pos.shape != self.neg.shape:
            raise DimensionMismatch("positive and negative arrays differ in shape")
        if self.scheme not in (DIFFERENTIAL, REFERENCE):
            raise ConfigError(f"unknown scheme {self.scheme!r}")

    @property
    def g_pos(self) -> np.ndarray:
        return self.pos.conductance

    @property
    def g_neg(self) -> np.ndarray:
        return self.neg.conductance

    @property
    def shape(self):
        return self.pos.shape

    @property
    def net(self) -> np.ndarray:
        return self.g_pos - self.g_neg

    def weights(self, w_max: float, delta_g: float) -> np.ndarray:
        """Invert the weight mapping: ``w = (G+ - G-) / dG * w_max``."""
        scale = delta_g if self.scheme == DIFFERENTIAL else 0.5 * delta_g
        return self.net * (w_max / scale)

    def with_arrays(self, pos=None, neg=None) -> "CrossbarState":
        return dataclasses.replace(self, pos=pos or self.pos, neg=neg or self.neg)

    def to_json(self) -> str:
        n, m = self.shape
        return json.dumps({
            "rows": n,
            "cols": m,
            "scheme": self.scheme,
            "g_pos": self.g_pos.ravel().tolist(),
            "g_neg": self.g_neg.ravel().tolist(),
        })

    @classmethod
    def from_json(cls, text: str, params: DeviceParams) -> "CrossbarState":
        data = json.loads(text)
        shape = (data["rows"], data["cols"])
        g_pos = np.asarray(data["g_pos"], dtype=float).reshape(shape)
        g_neg = np.asarray(data["g_neg"], dtype=float).reshape(shape)
        return cls(DeviceArray(g_pos, params), DeviceArray(g_neg, params), data["scheme"])


def map_weights(w, w_max: float, params: DeviceParams, scheme: str = DIFFERENTIAL,
                style: str = ONE_SIDED, neg_params: Optional[DeviceParams] = None) -> CrossbarState:
    """Realise ``w`` as conductance pairs with ``G+ - G- = w / w_max * dG``.

    ``one-sided`` keeps the smaller device of each pair at ``g_min``, the
    least read power among feasible pairs. ``balanced`` centres each pair
    on the mid-window conductance. The reference-device scheme pins ``G-``
    at the mid-window value, which halves the usable range to
    ``+/- dG / 2``.

    ``params`` may carry per-device arrays; ``neg_params`` defaults to it.
    """
    w = np.asarray(w, dtype=float)
    if w_max <= 0:
        raise ConfigError("w_max must be positive")
    if np.any(np.abs(w) > w_max * (1 + 1e-12)):
        raise ConfigError("weights exceed w_max")
    neg_params = neg_params or params
    x = np.clip(w / w_max, -1.0, 1.0)
    if scheme == REFERENCE:
        g_ref = 0.5 * (params.g_max + params.g_min)
        g_pos = g_ref + 0.5 * x * params.delta_g
        g_neg = np.broadcast_to(0.5 * (neg_params.g_max + neg_params.g_min), w.shape)
    elif style == ONE_SIDED:
        diff = x * params.delta_g
        g_pos = params.g_min + np.maximum(diff, 0.0)
        g_neg = neg_params.g_min + np.maximum(-diff, 0.0)
    elif style == BALANCED:
        diff = x * params.delta_g
        g_pos = params.g_ref + 0.5 * diff
        g_neg = neg_params.g_ref - 0.5 * diff
    else:
        raise ConfigError(f"unknown mapping style {style!r}")
    g_pos = np.clip(np.broadcast_to(g_pos, w.shape), params.g_min, params.g_max)
    g_neg = np.clip(np.broadcast_to(g_neg, w.shape), neg_params.g_min, neg_params.g_max)
    return CrossbarState(DeviceArray(g_pos, params), DeviceArray(g_neg, neg_params), scheme)


# -- reads -------------------------------------------------------------------


def _check_input(g, v):
    v = np.asarray(v, dtype=float)
    if v.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"input length {v.shape[0]} does not match {g.shape[1]} inputs")
    return v


def read_ideal(state: CrossbarState, v) -> np.ndarray:
    """Output currents (nA) of a wire-resistance-free array."""
    v = _check_input(state.net, v)
    return state.net @ v


def read_sinh(state: CrossbarState, v, a: float) -> np.ndarray:
    """Read through devices with a ``sinh(a V)`` current-voltage law."""
    if a <= 0:
        raise ValueError("nonlinearity constant must be positive")
    v = _check_input(state.net, v)
    return state.net @ np.sinh(a * v)


def read_power(state: CrossbarState, v) -> float:
    """Static read power in watts: sum of ``G * v_j**2`` over both arrays."""
    v = _check_input(state.net, v)
    total_ns = (state.g_pos + state.g_neg) @ (v * v)
    return float(np.sum(total_ns)) / NS_PER_SIEMENS


def _mesh_matrix(g: np.ndarray, r_wire: float):
    """Nodal conductance matrix (nS) of one array's resistive mesh.

    Unknowns are input-wire node voltages ``a[i, j]`` followed by
    output-wire node voltages ``b[i, j]``, both raveled row-major.
    """
    n, m = g.shape
    k = n * m
    gw = NS_PER_SIEMENS / r_wire
    idx = np.arange(k).reshape(n, m)
    a_idx, b_idx = idx, idx + k

    rows, cols, vals = [], [], []

    def link(p, q, c):
        c = np.broadcast_to(c, p.shape).ravel()
        p, q = p.ravel(), q.ravel()
        rows.extend((p, q, p, q))
        cols.extend((p, q, q, p))
        vals.extend((c, c, -c, -c))

    link(a_idx, b_idx, g)                          # devices
    link(a_idx[:-1, :], a_idx[1:, :], gw)          # input wires run along i
    link(b_idx[:, :-1], b_idx[:, 1:], gw)          # output wires run along j
    # end segments to the ideal sources (a[0, j]) and virtual grounds (b[i, 0])
    ends = np.concatenate([a_idx[0, :], b_idx[:, 0]])
    rows.append(ends)
    cols.append(ends)
    vals.append(np.full(ends.shape, gw))

    mat = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * k, 2 * k),
    )
    return mat, gw


def _factorize(mat):
    try:
        return spla.splu(mat, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from None


def _solve_checked(lu, mat, rhs):
    x = lu.solve(rhs)
    scale = np.maximum(np.abs(rhs).max(axis=0), np.finfo(float).tiny)
    for _ in range(3):
        resid = rhs - mat @ x
        rel = np.abs(resid).max(axis=0) / scale
        if not np.all(np.isfinite(x)):
            raise SingularSystem("nodal solve produced non-finite voltages")
        if np.all(rel <= RESIDUAL_TOL):
            return x
        x = x + lu.solve(resid)
    raise SolverNotConverged(f"relative residual {rel.max():.3g} above {RESIDUAL_TOL}")


def solve_mesh(g, v, r_wire: float) -> np.ndarray:
    """Output currents of a single conductance array with wire resistance.

    ``v`` may be a vector of input voltages or a matrix whose columns are
    independent input patterns; the return value has matching trailing
    shape. Output currents are the device currents summed on each output
    wire, which equals the current into its virtual ground.
    """
    g = np.asarray(g, dtype=float)
    v = _check_input(g, v)
    if r_wire == 0:
        return g @ v
    n, m = g.shape
    k = n * m
    mat, gw = _mesh_matrix(g, r_wire)
    vv = v.reshape(m, -1)
    rhs = np.zeros((2 * k, vv.shape[1]))
    rhs[np.arange(m)] = gw * vv                    # a[0, j] has flat index j
    x = _solve_checked(_factorize(mat), mat, rhs)
    a = x[:k].reshape(n, m, -1)
    b = x[k:].reshape(n, m, -1)
    out = np.einsum("ij,ijp->ip", g, a - b)
    return out.reshape((n,) + v.shape[1:])


def read_nonideal(state: CrossbarState, v, geometry: CrossbarGeometry) -> np.ndarray:
    """Output currents with IR drop along the wires of both arrays."""
    v = _check_input(state.net, v)
    return solve_mesh(state.g_pos, v, geometry.r_wire) - solve_mesh(state.g_neg, v, geometry.r_wire)


def effective_conductance(g, r_wire: float) -> np.ndarray:
    """Per-cell conductance seen by one-hot reads through the mesh.

    Cell ``(i, j)`` is measured as the current on output ``i`` when input
    ``j`` carries 1 V and every other input is held at 0 V.
    """
    g = np.asarray(g, dtype=float)
    return solve_mesh(g, np.eye(g.shape[1]), r_wire)


def _blocks(geometry: CrossbarGeometry):
    n, m = geometry.block_shape
    for bi in range(geometry.rows // n):
        for bj in range(geometry.cols // m):
            yield slice(bi * n, (bi + 1) * n), slice(bj * m, (bj + 1) * m)


def _check_geometry(shape, geometry):
    if shape != (geometry.rows, geometry.cols):
        raise DimensionMismatch(f"array shape {shape} does not match geometry "
                                f"({geometry.rows}, {geometry.cols})")


def effective_conductance_partitioned(g, geometry: CrossbarGeometry) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    _check_geometry(g.shape, geometry)
    out = np.empty_like(g)
    for rs, cs in _blocks(geometry):
        out[rs, cs] = effective_conductance(g[rs, cs], geometry.r_wire)
    return out


def effective_weights(state: CrossbarState, geometry: CrossbarGeometry,
                      partitioned: bool = False) -> np.ndarray:
    """Effective net conductance map (nS) under one-hot reads."""
    _check_geometry(state.shape, geometry)
    if partitioned:
        eff = effective_conductance_partitioned
        return eff(state.g_pos, geometry) - eff(state.g_neg, geometry)
    r = geometry.r_wire
    return effective_conductance(state.g_pos, r) - effective_conductance(state.g_neg, r)


def read_partitioned(state: CrossbarState, geometry: CrossbarGeometry, v) -> np.ndarray:
    """Read through independently driven sub-arrays joined by ideal interconnect.

    Sub-array currents are summed in a fixed block order so results do not
    depend on how the blocks are scheduled.
    """
    _check_geometry(state.shape, geometry)
    v = _check_input(state.net, v)
    out = np.zeros((state.shape[0],) + v.shape[1:])
    for rs, cs in _blocks(geometry):
        out[rs] += solve_mesh(state.g_pos[rs, cs], v[cs], geometry.r_wire)
        out[rs] -= solve_mesh(state.g_neg[rs, cs], v[cs], geometry.r_wire)
    return out


def relative_error(effective, programmed) -> np.ndarray:
    """``|effective - programmed| / |programmed|`` with 0/0 taken as 0."""
    effective = np.asarray(effective, dtype=float)
    programmed = np.asarray(programmed, dtype=float)
    diff = np.abs(effective - programmed)
    denom = np.abs(programmed)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(denom > 0, diff / np.where(denom > 0, denom, 1.0), np.where(diff > 0, np.inf, 0.0))
    return rel


def delay_estimate(geometry: CrossbarGeometry) -> float:
    """Elmore estimate of the partitioned input delay in seconds.

    ``0.67 * (N - n) * r_wire * C_d + (N / n) * tau_d`` with ``N`` rows and
    ``n`` rows per partition (``n = N`` when unpartitioned).
    """
    big_n = geometry.rows
    n = geometry.partition_rows or geometry.rows
    return (0.67 * (big_n - n) * geometry.r_wire * geometry.driver_capacitance
            + (big_n / n) * geometry.driver_delay)


def effective_csv_text(programmed, effective) -> str:
    """Cell map as CSV text: ``row,col,programmed_nS,effective_nS,rel_error``."""
    programmed = np.asarray(programmed, dtype=float)
    effective = np.asarray(effective, dtype=float)
    rel = relative_error(effective, programmed)
    lines = ["row,col,programmed_nS,effective_nS,rel_error"]
    for (i, j), p in np.ndenumerate(programmed):
        lines.append(f"{i},{j},{float(p)!r},{float(effective[i, j])!r},{float(rel[i, j])!r}")
    return "\n".join(lines) + "\n"


def write_effective_csv(path, programmed, effective) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(effective_csv_text(programmed, effective))
