"""Simulated annealing for QUBO models, digital-annealer style.

Each sweep evaluates the flip gain of every variable against a Metropolis
test at the current temperature, then flips exactly one accepting variable
chosen uniformly at random.  Sweeps with no acceptor grow an escape offset
that is subtracted from all gains until something accepts; any accepted flip
resets it.  Temperatures follow a geometric (default) or linear schedule.

Flip gains are computed from cached local fields: the objective part is
maintained over the sparse cut terms, the penalty part is reconstructed in
O(1) per variable from running chain sums.  This keeps sweeps linear in the
number of variables even though the squared penalties couple all pairs.

Two engines produce bit-identical results: a compiled kernel (numba) and a
plain numpy fallback.  Both consume the same MT19937 stream with the same
draw discipline (one uniform per variable per sweep, plus one to pick among
acceptors), so results are reproducible across engines and platforms.
Replica r of a solve seeds its stream from SHA-256 of (seed, r), making
replicas independent and the whole solve deterministic.  Solves are not
reentrant: run them one at a time per process.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

from .qubo import INDICATOR, SLACK, QuboModel, energy

BATCH_SWEEPS = 1024  # time-limit polling granularity


@dataclass
class AnnealConfig:
    """Solver parameters.

    ``temp_initial=None`` picks each replica's starting temperature as the
    maximum absolute flip gain of its initial state.  ``offset_increment``
    defaults to a tenth of the final temperature.  ``balanced_init`` starts
    replicas from a random partition with ceil(n/k) vertices per part instead
    of uniform random bits (partition models only).
    """

    sweeps: int = 2000
    replicas: int = 1
    seed: int = 0
    temp_initial: float | None = None
    temp_final: float = 0.1
    schedule: str = "geometric"
    offset_increment: float | None = None
    time_limit: float | None = None
    balanced_init: bool = False
    engine: str = "auto"  # "auto" | "numba" | "python"
    trace_every: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be at least 1, got {self.sweeps}")
        if self.replicas < 1:
            raise ValueError(f"replicas must be at least 1, got {self.replicas}")
        if self.temp_final <= 0:
            raise ValueError(f"final temperature must be positive, got {self.temp_final}")
        if self.temp_initial is not None and self.temp_initial <= 0:
            raise ValueError("initial temperature must be positive when given")
        if self.schedule not in ("geometric", "linear"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.engine not in ("auto", "numba", "python"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time limit must be positive when given")


@dataclass
class SolveResult:
    best_bits: np.ndarray
    best_energy: float
    sweeps_done: int
    wall_time: float
    seed: int
    replica_id: int = 0
    flips: int = 0
    energy_trace: np.ndarray | None = None

    def to_json(self) -> str:
        return json.dumps({
            "bits": "".join(str(int(b)) for b in self.best_bits),
            "energy": self.best_energy,
            "sweeps": self.sweeps_done,
            "wall_time": self.wall_time,
            "seed": self.seed,
        })


def _derive_seed(*parts) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:4], "big")


def _coalesce(nv: int, qi: np.ndarray, qj: np.ndarray, qc: np.ndarray):
    if not len(qi):
        return qi, qj, qc
    keys = qi * np.int64(nv) + qj
    order = np.argsort(keys, kind="stable")
    keys, qi, qj, qc = keys[order], qi[order], qj[order], qc[order]
    starts = np.concatenate(([0], np.flatnonzero(np.diff(keys)) + 1))
    return qi[starts], qj[starts], np.add.reduceat(qc, starts)


@dataclass(eq=False)
class CompiledModel:
    """Flat arrays the sweep engines run on: symmetric CSR of the objective
    terms plus per-variable chain membership lists."""

    model: QuboModel
    nv: int
    base_lin: np.ndarray
    csr_indptr: np.ndarray
    csr_rows: np.ndarray
    csr_cols: np.ndarray
    csr_data: np.ndarray
    pen: np.ndarray
    rhs: np.ndarray
    mem_indptr: np.ndarray
    mem_var: np.ndarray
    mem_chain: np.ndarray
    mem_coeff: np.ndarray

    def base_local_fields(self, bits: np.ndarray) -> np.ndarray:
        contrib = self.csr_data * bits[self.csr_cols]
        return self.base_lin + np.bincount(self.csr_rows, weights=contrib, minlength=self.nv)

    def chain_sums(self, bits: np.ndarray) -> np.ndarray:
        return np.asarray([float(ch.coeffs @ bits[ch.var_idx]) for ch in self.model.chains])

    def all_deltas(self, bits: np.ndarray, base_lf: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Flip gain of every variable at the current state."""
        dlt = 1.0 - 2.0 * bits
        if len(self.mem_var):
            g = self.mem_chain
            c = self.mem_coeff
            contrib = 2.0 * self.pen[g] * c * dlt[self.mem_var] * (s[g] - self.rhs[g]) \
                + self.pen[g] * c * c
            chain_part = np.bincount(self.mem_var, weights=contrib, minlength=self.nv)
        else:
            chain_part = np.zeros(self.nv)
        return dlt * base_lf + chain_part


def compile_model(model: QuboModel) -> CompiledModel:
    nv = model.num_vars
    qi, qj, qc = _coalesce(nv, model.base_quad_i, model.base_quad_j, model.base_quad_c)
    rows = np.concatenate([qi, qj]).astype(np.int64)
    cols = np.concatenate([qj, qi]).astype(np.int64)
    data = np.concatenate([qc, qc])
    order = np.lexsort((cols, rows))
    rows, cols, data = rows[order], cols[order], data[order]
    indptr = np.zeros(nv + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=nv), out=indptr[1:])

    ng = len(model.chains)
    pen = np.asarray([ch.penalty for ch in model.chains], dtype=np.float64)
    rhs = np.asarray([ch.rhs for ch in model.chains], dtype=np.float64)
    if ng:
        mv = np.concatenate([ch.var_idx for ch in model.chains])
        mg = np.concatenate([np.full(len(ch.var_idx), g, dtype=np.int64)
                             for g, ch in enumerate(model.chains)])
        mc = np.concatenate([ch.coeffs for ch in model.chains])
        morder = np.lexsort((mg, mv))
        mv, mg, mc = mv[morder], mg[morder], mc[morder]
    else:
        mv = np.empty(0, dtype=np.int64)
        mg = np.empty(0, dtype=np.int64)
        mc = np.empty(0, dtype=np.float64)
    mem_indptr = np.zeros(nv + 1, dtype=np.int64)
    np.cumsum(np.bincount(mv, minlength=nv), out=mem_indptr[1:])

    return CompiledModel(model=model, nv=nv, base_lin=model.base_linear.astype(np.float64),
                         csr_indptr=indptr, csr_rows=rows, csr_cols=cols.astype(np.int64),
                         csr_data=data, pen=pen, rhs=rhs, mem_indptr=mem_indptr,
                         mem_var=mv, mem_chain=mg, mem_coeff=mc)


# ---------------------------------------------------------------------------
# Spec-level single-flip primitives over the fully expanded quadratic form.
# These are the reference semantics; the solve engines below are the fast
# factored equivalent.


@dataclass(eq=False)
class ExpandedNeighbors:
    """Symmetric CSR over the expanded quadratic terms of a model."""

    nv: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray


def expanded_neighbors(model: QuboModel, max_terms: int | None = None) -> ExpandedNeighbors:
    kwargs = {} if max_terms is None else {"max_terms": max_terms}
    qi, qj, qc = model.quadratic_terms(**kwargs)
    nv = model.num_vars
    rows = np.concatenate([qi, qj])
    cols = np.concatenate([qj, qi])
    data = np.concatenate([qc, qc])
    order = np.lexsort((cols, rows))
    rows, cols, data = rows[order], cols[order], data[order]
    indptr = np.zeros(nv + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=nv), out=indptr[1:])
    return ExpandedNeighbors(nv=nv, indptr=indptr, indices=cols, data=data)


def local_fields(model: QuboModel, bits: Sequence[int] | np.ndarray,
                 nbrs: ExpandedNeighbors | None = None) -> np.ndarray:
    """local_field[j] = linear_j + sum_l quad_jl * a_l over the expanded model."""
    a = np.asarray(bits, dtype=np.float64)
    if nbrs is None:
        nbrs = expanded_neighbors(model)
    contrib = nbrs.data * a[nbrs.indices]
    return model.linear + np.bincount(
        np.repeat(np.arange(nbrs.nv), np.diff(nbrs.indptr)), weights=contrib, minlength=nbrs.nv)


def delta_energy(model: QuboModel, bits: np.ndarray, i: int,
                 local_field: np.ndarray) -> float:
    """Energy change of flipping bit i, O(1) given the local fields."""
    return (1.0 - 2.0 * bits[i]) * local_field[i]


def apply_flip(nbrs: ExpandedNeighbors, bits: np.ndarray, i: int,
               local_field: np.ndarray) -> None:
    """Flip bit i in place and update local fields along its quadratic row."""
    dlt = 1.0 - 2.0 * bits[i]
    bits[i] = 1 - bits[i]
    row = slice(nbrs.indptr[i], nbrs.indptr[i + 1])
    local_field[nbrs.indices[row]] += nbrs.data[row] * dlt


def sweep(nbrs: ExpandedNeighbors, bits: np.ndarray, local_field: np.ndarray,
          temperature: float, rng: np.random.RandomState, offset: float,
          offset_increment: float) -> tuple[int, float]:
    """One reference sweep: test every variable, flip one accepting variable.

    Variable i accepts when its gain minus the escape offset is non-positive
    or passes a Metropolis draw at the given temperature.  If any variable
    accepts, one acceptor is flipped uniformly at random (bits and
    local_field update in place) and the offset resets; otherwise the offset
    grows by ``offset_increment``.  Returns (flipped index or -1, new offset).
    """
    nv = nbrs.nv
    us = rng.random_sample(nv)
    deltas = (1.0 - 2.0 * bits) * local_field
    eff = deltas - offset
    t = max(temperature, 1e-300)
    acceptors = [i for i in range(nv)
                 if eff[i] <= 0.0 or us[i] < math.exp(-min(eff[i], 700.0 * t) / t)]
    if not acceptors:
        return -1, offset + offset_increment
    pick = acceptors[int(rng.random_sample() * len(acceptors))]
    apply_flip(nbrs, bits, pick, local_field)
    return pick, 0.0


# ---------------------------------------------------------------------------
# Factored sweep engines (python and numba), sharing one draw discipline.


def _python_sweeps(cm: CompiledModel, bits, base_lf, s, temps, offset, offset_inc,
                   cur_energy, best_energy, best_bits, rng, trace, trace_every,
                   sweeps_before):
    flips = 0
    for sw in range(len(temps)):
        t = temps[sw]
        if t < 1e-300:
            t = 1e-300
        us = rng.random_sample(cm.nv)
        deltas = cm.all_deltas(bits, base_lf, s)
        eff = deltas - offset
        acceptors = np.flatnonzero(eff <= 0.0)
        maybe = np.flatnonzero(eff > 0.0)
        if len(maybe):
            stochastic = [i for i in maybe if us[i] < math.exp(-eff[i] / t)]
            if len(stochastic):
                acceptors = np.sort(np.concatenate([acceptors, stochastic])).astype(np.int64)
        if len(acceptors):
            r = rng.random_sample()
            i = int(acceptors[int(r * len(acceptors))])
            d = deltas[i]
            dlt = 1.0 - 2.0 * bits[i]
            cur_energy = cur_energy + d
            bits[i] = 1 - bits[i]
            row = slice(cm.csr_indptr[i], cm.csr_indptr[i + 1])
            base_lf[cm.csr_cols[row]] += cm.csr_data[row] * dlt
            mrow = slice(cm.mem_indptr[i], cm.mem_indptr[i + 1])
            s[cm.mem_chain[mrow]] += cm.mem_coeff[mrow] * dlt
            offset = 0.0
            flips += 1
            if cur_energy < best_energy:
                best_energy = cur_energy
                best_bits[:] = bits
        else:
            offset = offset + offset_inc
        if trace_every > 0 and (sweeps_before + sw + 1) % trace_every == 0:
            trace.append(best_energy)
    return offset, cur_energy, best_energy, flips


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _numba_sweeps(bits, base_lf, s, pen, rhs, mem_indptr, mem_chain, mem_coeff,
                      csr_indptr, csr_cols, csr_data, temps, offset, offset_inc,
                      cur_energy, best_energy, best_bits, delta_buf, accept_buf,
                      seed, do_seed, trace, trace_every, sweeps_before):
        if do_seed:
            np.random.seed(seed)
        nv = bits.shape[0]
        flips = 0
        ti = 0
        if trace_every > 0:
            ti = sweeps_before // trace_every
        for sw in range(temps.shape[0]):
            t = temps[sw]
            if t < 1e-300:
                t = 1e-300
            us = np.random.random(nv)
            cnt = 0
            for i in range(nv):
                dlt = 1.0 - 2.0 * bits[i]
                acc = 0.0
                for p in range(mem_indptr[i], mem_indptr[i + 1]):
                    g = mem_chain[p]
                    c = mem_coeff[p]
                    acc += 2.0 * pen[g] * c * dlt * (s[g] - rhs[g]) + pen[g] * c * c
                d = dlt * base_lf[i] + acc
                delta_buf[i] = d
                eff = d - offset
                if eff <= 0.0:
                    accept_buf[cnt] = i
                    cnt += 1
                elif us[i] < math.exp(-eff / t):
                    accept_buf[cnt] = i
                    cnt += 1
            if cnt > 0:
                r = np.random.random()
                i = accept_buf[int(r * cnt)]
                d = delta_buf[i]
                dlt = 1.0 - 2.0 * bits[i]
                cur_energy = cur_energy + d
                bits[i] = 1 - bits[i]
                for p in range(csr_indptr[i], csr_indptr[i + 1]):
                    base_lf[csr_cols[p]] += csr_data[p] * dlt
                for p in range(mem_indptr[i], mem_indptr[i + 1]):
                    s[mem_chain[p]] += mem_coeff[p] * dlt
                offset = 0.0
                flips += 1
                if cur_energy < best_energy:
                    best_energy = cur_energy
                    for q in range(nv):
                        best_bits[q] = bits[q]
            else:
                offset = offset + offset_inc
            if trace_every > 0 and (sweeps_before + sw + 1) % trace_every == 0:
                trace[ti] = best_energy
                ti += 1
        return offset, cur_energy, best_energy, flips


def _greedy_fill(value: float, weights: list[tuple[int, float]], bits: np.ndarray) -> None:
    """Set slack bits (greedy, largest weight first) to sum close to value."""
    remaining = value
    for idx, w in sorted(weights, key=lambda t: -t[1]):
        if w <= remaining:
            bits[idx] = 1
            remaining -= w


def _balanced_initial_bits(model: QuboModel, rs: np.random.RandomState) -> np.ndarray:
    if model.var_map is None or model.k is None or model.n is None:
        raise ValueError("balanced initialization requires a model with variable roles")
    bits = np.zeros(model.num_vars, dtype=np.int8)
    n, k = model.n, model.k
    per_part = -(-n // k)
    perm = rs.permutation(n)
    indicators = [(idx, r.vertex, r.part) for idx, r in enumerate(model.var_map)
                  if r.kind == INDICATOR]
    if len(indicators) == n:  # one indicator per vertex: bipartition layout
        var_of = {v: idx for idx, v, _ in indicators}
        for v in perm[:per_part]:
            bits[var_of[int(v)]] = 1
    else:
        var_of = {(v, p): idx for idx, v, p in indicators}
        for pos, v in enumerate(perm):
            bits[var_of[(int(v), min(pos // per_part, k - 1))]] = 1
    for ch in model.chains:
        fixed = 0.0
        slacks: list[tuple[int, float]] = []
        sign = 1.0
        for idx, coeff in zip(ch.var_idx, ch.coeffs):
            role = model.var_map[idx]
            if role.kind == SLACK:
                slacks.append((int(idx), abs(float(coeff))))
                sign = 1.0 if coeff > 0 else -1.0
            else:
                fixed += float(coeff) * bits[idx]
        if slacks:
            need = sign * (ch.rhs - fixed)
            _greedy_fill(max(0.0, need), slacks, bits)
    return bits


def _temperature_schedule(cfg: AnnealConfig, t0: float) -> np.ndarray:
    tf = min(cfg.temp_final, t0)
    steps = np.arange(cfg.sweeps, dtype=np.float64) / cfg.sweeps
    if cfg.schedule == "geometric":
        return t0 * (tf / t0) ** steps
    return t0 + (tf - t0) * steps


def solve(model: QuboModel, cfg: AnnealConfig | None = None) -> SolveResult:
    """Anneal the model, best assignment over all replicas.

    Deterministic for a fixed config whenever the time limit does not bind.
    The reported energy is recomputed from the final bits, so it matches
    :func:`qubopart.qubo.energy` exactly.
    """
    cfg = cfg or AnnealConfig()
    start = time.perf_counter()
    if model.num_vars == 0:
        return SolveResult(best_bits=np.zeros(0, dtype=np.int8), best_energy=model.constant,
                           sweeps_done=0, wall_time=0.0, seed=cfg.seed)

    use_numba = cfg.engine == "numba" or (cfg.engine == "auto" and HAVE_NUMBA)
    if cfg.engine == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba engine requested but numba is not importable")

    cm = compile_model(model)
    nv = cm.nv
    best_bits = None
    best_energy = math.inf
    best_replica = 0
    best_flips = 0
    best_sweeps = 0
    best_trace: np.ndarray | None = None

    for replica in range(cfg.replicas):
        init_rs = np.random.RandomState(_derive_seed(cfg.seed, replica, "init"))
        if cfg.balanced_init:
            bits = _balanced_initial_bits(model, init_rs)
        else:
            bits = (init_rs.random_sample(nv) < 0.5).astype(np.int8)
        base_lf = cm.base_local_fields(bits)
        s = cm.chain_sums(bits)
        cur_energy = energy(model, bits)

        if cfg.temp_initial is not None:
            t0 = cfg.temp_initial
        else:
            t0 = float(np.max(np.abs(cm.all_deltas(bits, base_lf, s)))) if nv else 1.0
            if t0 <= 0.0:
                t0 = 1.0
        temps = _temperature_schedule(cfg, t0)
        offset_inc = cfg.offset_increment if cfg.offset_increment is not None \
            else cfg.temp_final / 10.0

        sweep_seed = _derive_seed(cfg.seed, replica, "sweeps")
        rng = np.random.RandomState(sweep_seed)
        rep_best_bits = bits.copy()
        rep_best_energy = cur_energy
        offset = 0.0
        flips = 0
        done = 0
        trace_list: list[float] = []
        trace_arr = np.zeros(cfg.sweeps // cfg.trace_every if cfg.trace_every else 0)
        delta_buf = np.zeros(nv, dtype=np.float64)
        accept_buf = np.zeros(nv, dtype=np.int64)
        timed_out = False

        while done < cfg.sweeps and not timed_out:
            batch = temps[done:done + BATCH_SWEEPS]
            if use_numba:
                offset, cur_energy, rep_best_energy, f = _numba_sweeps(
                    bits, base_lf, s, cm.pen, cm.rhs, cm.mem_indptr, cm.mem_chain,
                    cm.mem_coeff, cm.csr_indptr, cm.csr_cols, cm.csr_data, batch,
                    offset, offset_inc, cur_energy, rep_best_energy, rep_best_bits,
                    delta_buf, accept_buf, sweep_seed, done == 0, trace_arr,
                    cfg.trace_every, done)
            else:
                offset, cur_energy, rep_best_energy, f = _python_sweeps(
                    cm, bits, base_lf, s, batch, offset, offset_inc, cur_energy,
                    rep_best_energy, rep_best_bits, rng, trace_list,
                    cfg.trace_every, done)
            flips += f
            done += len(batch)
            if cfg.time_limit is not None and time.perf_counter() - start > cfg.time_limit:
                timed_out = True

        if rep_best_energy < best_energy:
            best_energy = rep_best_energy
            best_bits = rep_best_bits
            best_replica = replica
            best_flips = flips
            best_sweeps = done
            if cfg.trace_every:
                filled = done // cfg.trace_every
                best_trace = trace_arr[:filled] if use_numba else np.asarray(trace_list)
        if timed_out:
            break

    assert best_bits is not None
    exact = energy(model, best_bits)
    return SolveResult(best_bits=best_bits, best_energy=exact, sweeps_done=best_sweeps,
                       wall_time=time.perf_counter() - start, seed=cfg.seed,
                       replica_id=best_replica, flips=best_flips, energy_trace=best_trace)
