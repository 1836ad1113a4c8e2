"""Balanced backward/forward sweep load flow for radial LV feeders.

Single-phase equivalent of a symmetric three-phase network.  Loads are
constant power with a common power factor; the slack bus (transformer LV
terminal) is held at 1.0 pu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DivergenceError, PowerFlowError

V_BAND = (0.9, 1.1)


@dataclass(frozen=True)
class Branch:
    parent: str
    child: str
    r_ohm: float
    x_ohm: float
    ampacity_a: float

    @property
    def id(self) -> str:
        return f"{self.parent}->{self.child}"


@dataclass
class RadialNetwork:
    slack: str
    branches: list[Branch]
    loads_kw: dict[str, float] = field(default_factory=dict)
    power_factor: float = 0.95
    u_kv: float = 0.4

    def __post_init__(self):
        self._order()

    def _order(self):
        children: dict[str, list[Branch]] = {}
        fed: set[str] = set()
        for br in self.branches:
            if br.child in fed or br.child == self.slack:
                raise PowerFlowError(f"bus {br.child} is fed twice; network is not a tree")
            if not math.hypot(br.r_ohm, br.x_ohm) > 0:
                raise PowerFlowError(f"branch {br.id} has zero impedance")
            fed.add(br.child)
            children.setdefault(br.parent, []).append(br)
        order, stack = [self.slack], [self.slack]
        upstream: list[Branch] = []
        while stack:
            bus = stack.pop()
            for br in children.get(bus, []):
                order.append(br.child)
                upstream.append(br)
                stack.append(br.child)
        if len(upstream) != len(self.branches):
            raise PowerFlowError("network has branches not connected to the slack bus")
        self.buses = order
        self._upstream = upstream  # branch feeding order[i + 1]

    @property
    def ordered_branches(self) -> list[Branch]:
        return self._upstream


@dataclass
class FlowResult:
    voltages_pu: dict[str, float]
    currents_a: dict[str, float]
    loading_pct: dict[str, float]
    losses_kw: float
    slack_kw: float
    load_kw: float
    iterations: int

    def out_of_band(self, band=V_BAND) -> list[str]:
        return [b for b, v in self.voltages_pu.items() if not band[0] <= v <= band[1]]


def solve_radial(net: RadialNetwork, tol: float = 1e-8, max_iter: int = 100, loads_kw=None) -> FlowResult:
    """Iterate backward (currents) and forward (voltages) sweeps to convergence.

    ``loads_kw`` overrides ``net.loads_kw`` (used by the quasi-dynamic loop).
    """
    loads = net.loads_kw if loads_kw is None else loads_kw
    buses = net.buses
    index = {b: i for i, b in enumerate(buses)}
    n = len(buses)
    v_base = net.u_kv * 1e3 / math.sqrt(3)
    tan_phi = math.tan(math.acos(net.power_factor))
    p = np.array([loads.get(b, 0.0) for b in buses]) * 1e3 / 3.0
    s = p + 1j * p * tan_phi  # per-phase VA
    branches = net.ordered_branches
    parent = np.array([index[br.parent] for br in branches], dtype=int)
    z = np.array([complex(br.r_ohm, br.x_ohm) for br in branches])

    v = np.full(n, complex(v_base, 0.0))
    trace = []
    for it in range(1, max_iter + 1):
        i_bus = np.conj(s / v)
        i_branch = np.zeros(len(branches), dtype=complex)
        acc = i_bus.copy()
        for k in range(len(branches) - 1, -1, -1):
            i_branch[k] = acc[k + 1]
            acc[parent[k]] += acc[k + 1]
        v_new = v.copy()
        for k in range(len(branches)):
            v_new[k + 1] = v_new[parent[k]] - z[k] * i_branch[k]
        delta = float(np.max(np.abs(v_new - v))) / v_base if n > 1 else 0.0
        v = v_new
        vmin = float(np.min(np.abs(v))) / v_base
        trace.append((it, delta, vmin))
        if vmin < 0.5:
            raise DivergenceError(f"voltage collapsed to {vmin:.3f} pu at iteration {it}", trace)
        if delta < tol:
            break
    else:
        raise ConvergenceError(f"no convergence within {max_iter} iterations", trace)

    i_bus = np.conj(s / v)
    i_branch = np.zeros(len(branches), dtype=complex)
    acc = i_bus.copy()
    for k in range(len(branches) - 1, -1, -1):
        i_branch[k] = acc[k + 1]
        acc[parent[k]] += acc[k + 1]
    losses = float(np.sum(np.abs(i_branch) ** 2 * z.real)) * 3 / 1e3
    slack = float((v[0] * np.conj(acc[0])).real) * 3 / 1e3
    mags = np.abs(i_branch)
    return FlowResult(
        voltages_pu={b: float(abs(v[i]) / v_base) for i, b in enumerate(buses)},
        currents_a={br.id: float(mags[k]) for k, br in enumerate(branches)},
        loading_pct={br.id: float(mags[k] / br.ampacity_a * 100.0) for k, br in enumerate(branches)},
        losses_kw=losses,
        slack_kw=slack,
        load_kw=float(p.sum()) * 3 / 1e3,
        iterations=it,
    )


@dataclass
class QuasiDynamicResult:
    timestamps: list
    results: list[FlowResult]
    max_loading_pct: dict[str, float]


def quasi_dynamic(net: RadialNetwork, series: dict, timestamps, tol: float = 1e-8, max_iter: int = 100
                  ) -> QuasiDynamicResult:
    """Independent load flow per timestamp; ``series`` maps bus -> kW array."""
    timestamps = list(timestamps)
    for bus, values in series.items():
        if len(values) != len(timestamps):
            raise ValueError(f"series for bus {bus} has {len(values)} samples, expected {len(timestamps)}")
    results = []
    for k, ts in enumerate(timestamps):
        try:
            results.append(solve_radial(net, tol, max_iter, {b: float(v[k]) for b, v in series.items()}))
        except PowerFlowError as exc:
            raise type(exc)(f"at {ts}: {exc}", exc.trace) from exc
    peak = {br.id: max((r.loading_pct[br.id] for r in results), default=0.0) for br in net.branches}
    return QuasiDynamicResult(timestamps, results, peak)
