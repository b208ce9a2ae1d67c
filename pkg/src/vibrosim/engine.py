"""Shot-sampled execution of compiled Trotter programs.

Each Monte-Carlo shot is a pure-state trajectory: unitary gates are
applied deterministically, dilation measurements and stochastic hardware
noise collapse the state according to per-shot random streams.  Shots are
executed in vectorized batches (states stored column-wise), which changes
nothing statistically because every shot consumes its own named random
streams in a fixed event order -- results are reproducible for a given
seed regardless of batch size or thread count.

Readout: at every recorded step the engine samples one Bernoulli outcome
per readout qubit from the trajectory's conditional populations without
collapsing the state.  A fresh run restarted from t=0 and measured
terminally at that depth would produce the identical joint distribution of
(dilation record, terminal outcome), so the per-point population
statistics are exactly those of the terminal-measurement protocol at a
cost linear (not quadratic) in the number of time points.  Runs with no
stochastic element at all reduce to a single deterministic trajectory with
binomially sampled counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .compiler import CompiledProgram
from .hilbert import apply_local, basis_state, excited_populations, \
    level_mask, measure_qubit_batch
from .isa import GateOp, MatrixCache, decompose_swap

_STREAM_CHANNEL, _STREAM_NOISE, _STREAM_READOUT = 0, 1, 2

_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_LOWER = np.array([[0, 1], [0, 0]], dtype=np.complex128)  # |0><1|
_RAISE = _LOWER.T.copy()


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic hardware-noise model.

    ``cnot_epsilon`` attaches amplitude damping of strength eps followed by
    dephasing of strength eps/2 to the target of every CNOT (SWAPs are
    expanded into three CNOTs first so their noise emerges naturally).

    ``cd_enabled`` attaches noise to every conditional displacement from
    its gate duration ``t_g = |beta| / (alpha * chi)``: qubit damping at
    ``kappa_1q * t_g``, qubit dephasing at ``kappa_phi_q * t_g`` and a
    cavity single-photon loss with probability ``kappa_1c * t_g`` (the
    no-loss branch applies the first-order no-jump Kraus, valid for the
    p <= 1e-4 regime targeted here).
    """

    cnot_epsilon: float = 0.0
    cd_enabled: bool = False
    cd_alpha: float = 30.0
    cd_chi: float = 2.0 * math.pi * 5.0e4
    kappa_1c: float = 1.0e3       # (1 ms)^-1
    kappa_1q: float = 1.0e4       # (100 us)^-1
    kappa_phi_q: float = 5.0e3    # (200 us)^-1

    @property
    def kappa_all(self) -> float:
        return self.kappa_1c + self.kappa_1q + self.kappa_phi_q

    def cd_gate_time(self, beta: complex) -> float:
        return abs(beta) / (self.cd_alpha * self.cd_chi)

    def cd_error_rate(self, beta: complex) -> float:
        """Total per-CD error probability epsilon_CD = kappa_all * t_g."""
        return self.kappa_all * self.cd_gate_time(beta)

    @property
    def is_active(self) -> bool:
        return self.cnot_epsilon > 0.0 or self.cd_enabled


@dataclass
class PopulationTrace:
    """Shot-averaged excited-state populations on a time grid."""

    times_s: np.ndarray
    p: np.ndarray          # (n_points, n_readout)
    se: np.ndarray         # standard error sqrt(p(1-p)/shots)
    shots: int
    labels: tuple[str, ...]

    def to_csv(self, path) -> None:
        cols = []
        for lbl in self.labels:
            cols += [f"P_{lbl}", f"SE_{lbl}"]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("time_ps," + ",".join(cols) + "\n")
            for i, t in enumerate(self.times_s):
                row = [f"{t * 1e12:.9g}"]
                for j in range(len(self.labels)):
                    row += [f"{self.p[i, j]:.9g}", f"{self.se[i, j]:.9g}"]
                fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# program lowering
# ---------------------------------------------------------------------------

def inject_noise(ops: list[GateOp], noise: NoiseModel) -> list:
    """Lower a gate list into executable instructions with noise markers.

    Returns a list of tuples: ``("gate", op)``, ``("measure", qubit)``,
    ``("reset", qubit)``, ``("kraus", channel, eps, qubit)`` or
    ``("cavity_loss", p, mode)``.  With an inactive noise model the gate
    structure is unchanged (SWAPs stay native).
    """
    lowered = []
    for op in ops:
        if op.kind == "MEASURE":
            lowered.append(("measure", op.targets[0]))
            continue
        if op.kind == "RESET":
            lowered.append(("reset", op.targets[0]))
            continue
        if not noise.is_active:
            lowered.append(("gate", op))
            continue
        if op.kind == "SWAP" and noise.cnot_epsilon > 0.0:
            for cnot in decompose_swap(op):
                lowered.extend(_lower_gate(cnot, noise))
            continue
        lowered.extend(_lower_gate(op, noise))
    return lowered


def _lower_gate(op: GateOp, noise: NoiseModel) -> list:
    out = [("gate", op)]
    if op.kind == "CNOT" and noise.cnot_epsilon > 0.0:
        target = op.targets[1]
        out.append(("kraus", "amp", noise.cnot_epsilon, target))
        out.append(("kraus", "dep", 0.5 * noise.cnot_epsilon, target))
    elif op.kind == "CD" and noise.cd_enabled:
        qubit, mode = op.targets
        t_g = noise.cd_gate_time(op.params[0])
        out.append(("kraus", "amp", noise.kappa_1q * t_g, qubit))
        out.append(("kraus", "dep", noise.kappa_phi_q * t_g, qubit))
        out.append(("cavity_loss", noise.kappa_1c * t_g, mode))
    return out


def _count_events(lowered) -> tuple[int, int]:
    """(channel-measurement events, noise events) per step."""
    n_meas = sum(1 for ins in lowered if ins[0] in ("measure", "reset"))
    n_noise = sum(1 for ins in lowered if ins[0] in ("kraus", "cavity_loss"))
    return n_meas, n_noise


def _shot_generator(seed: int, shot: int, stream: int) -> np.random.Generator:
    """Counter-based per-shot named stream, independent of batching order."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(shot, stream))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

class _Executor:
    """Runs one batch of shots through the per-step instruction list."""

    def __init__(self, program: CompiledProgram, lowered, noise: NoiseModel):
        self.program = program
        self.lowered = lowered
        self.noise = noise
        self.cache = MatrixCache()
        lay = program.layout
        self.masks = {}
        for ins in lowered:
            if ins[0] in ("measure", "reset") or ins[0] == "kraus":
                q = ins[-1]
                self.masks.setdefault(q, level_mask(lay, q, 1))
        self.n_meas, self.n_noise = _count_events(lowered)
        # annihilation operator for cavity-loss events
        n_fock = max(program.n_fock, 1)
        self.a_mode = np.diag(
            np.sqrt(np.arange(1, n_fock)).astype(np.complex128), 1)
        self._nojump_cache: dict[tuple, np.ndarray] = {}

    def _apply_gate(self, states, op: GateOp):
        mat = self.cache.get(op, self.program.n_fock)
        return apply_local(states, self.program.layout, mat, op.targets)

    def _flip(self, states, qubit):
        return apply_local(states, self.program.layout, _SX, (qubit,))

    def _kraus_qubit(self, states, channel, eps, qubit, u):
        lay = self.program.layout
        if eps <= 0.0:
            return states
        mask = self.masks[qubit]
        if channel == "dep":
            # K0 = sqrt(eps) Z fires with probability eps; Z is diagonal, so
            # only the jumping columns need a sign flip (no renormalization)
            jump = np.nonzero(u < eps)[0]
            if jump.size:
                states = states.copy()
                states[np.ix_(mask, jump)] *= -1.0
            return states
        # amp / exc: jump branch fires with probability ||A_jump psi||^2
        src = mask if channel == "amp" else ~mask
        lower = _LOWER if channel == "amp" else _RAISE
        p_src = src @ (np.abs(states) ** 2)
        jump = np.nonzero(u < eps * p_src)[0]
        # no-jump Kraus is diagonal: scale the source level by sqrt(1-eps)
        out = states.copy()
        out[src] *= math.sqrt(1.0 - eps)
        if jump.size:
            jumped = apply_local(states[:, jump], lay, lower, (qubit,))
            out[:, jump] = jumped
        norms = np.sqrt(np.sum(np.abs(out) ** 2, axis=0))
        norms = np.where(norms == 0.0, 1.0, norms)
        return out / norms[None, :]

    def _nojump_weights(self, p, mode):
        """Flattened diagonal of the first-order no-jump Kraus 1 - (p/2) n."""
        key = (p, mode)
        w = self._nojump_cache.get(key)
        if w is None:
            lay = self.program.layout
            shape = [1] * lay.n_subsystems
            shape[mode] = lay.dims[mode]
            levels = np.arange(lay.dims[mode]).reshape(shape)
            w = np.broadcast_to(1.0 - 0.5 * p * levels, lay.dims).reshape(-1, 1)
            self._nojump_cache[key] = w
        return w

    def _cavity_loss(self, states, p, mode, u):
        lay = self.program.layout
        jump = np.nonzero(u < p)[0]
        out = states * self._nojump_weights(p, mode)
        if jump.size:
            jumped = apply_local(states[:, jump], lay, self.a_mode, (mode,))
            jn = np.sqrt(np.sum(np.abs(jumped) ** 2, axis=0))
            # a vacuum-dominated column cannot lose a photon; keep it
            dead = jn < 1e-12
            jn = np.where(dead, 1.0, jn)
            keep = np.nonzero(~dead)[0]
            out[:, jump[keep]] = jumped[:, keep] / jn[None, keep]
        sn = np.sqrt(np.sum(np.abs(out) ** 2, axis=0))
        return out / sn[None, :]

    def run_step(self, states, chan_u, noise_u):
        """Advance a batch by one Trotter step.

        ``chan_u``/``noise_u`` have shape (n_batch, n_events) and hold the
        per-shot uniforms for this step in event order.
        """
        ic = 0
        inoise = 0
        for ins in self.lowered:
            kind = ins[0]
            if kind == "gate":
                states = self._apply_gate(states, ins[1])
            elif kind == "measure":
                _, states = measure_qubit_batch(
                    states, self.masks[ins[1]], chan_u[:, ic])
                ic += 1
            elif kind == "reset":
                outcomes, states = measure_qubit_batch(
                    states, self.masks[ins[1]], chan_u[:, ic])
                ic += 1
                if np.any(outcomes):
                    flipped = self._flip(states, ins[1])
                    states = np.where(outcomes[None, :] == 1, flipped, states)
            elif kind == "kraus":
                _, channel, eps, qubit = ins
                states = self._kraus_qubit(states, channel, eps, qubit,
                                           noise_u[:, inoise])
                inoise += 1
            else:  # cavity_loss
                _, p, mode = ins
                states = self._cavity_loss(states, p, mode, noise_u[:, inoise])
                inoise += 1
        return states


def _initial_state(program: CompiledProgram) -> np.ndarray:
    lay = program.layout
    psi = basis_state(lay, (0,) * lay.n_subsystems)
    cache = MatrixCache()
    for op in program.prep_ops:
        psi = apply_local(psi, lay, cache.get(op, program.n_fock), op.targets)
    return psi


def run_experiment(program: CompiledProgram, n_steps: int, shots: int,
                   seed: int, noise: NoiseModel | None = None,
                   record_every: int = 1, threads: int = 1,
                   include_t0: bool = True) -> PopulationTrace:
    """Run a compiled program for ``n_steps`` Trotter steps.

    Populations of the readout qubits are sampled at every
    ``record_every``-th step (plus t=0 when ``include_t0``); standard
    errors use the binomial formula sqrt(p(1-p)/shots).
    """
    if shots < 1 or n_steps < 0:
        raise ValueError("shots must be >= 1 and n_steps >= 0")
    noise = noise or NoiseModel()
    lowered = inject_noise(program.step_ops, noise)
    executor = _Executor(program, lowered, noise)
    record_steps = [s for s in range(1, n_steps + 1) if s % record_every == 0]
    if include_t0:
        record_steps = [0] + record_steps
    n_points = len(record_steps)
    n_read = len(program.readout)
    stochastic = executor.n_meas > 0 or executor.n_noise > 0

    counts = np.zeros((n_points, n_read), dtype=np.int64)
    if not stochastic:
        counts = _run_deterministic(program, executor, record_steps, shots, seed)
    else:
        batch_cap = max(1, (1 << 22) // program.layout.total_dim)
        chunks = []
        start = 0
        while start < shots:
            stop = min(shots, start + batch_cap)
            chunks.append((start, stop))
            start = stop
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for part in pool.map(
                        lambda c: _run_chunk(program, executor, record_steps,
                                             c[0], c[1], seed, n_steps),
                        chunks):
                    counts += part
        else:
            for lo, hi in chunks:
                counts += _run_chunk(program, executor, record_steps,
                                     lo, hi, seed, n_steps)

    p_hat = counts / shots
    se = np.sqrt(p_hat * (1.0 - p_hat) / shots)
    times = program.tau * np.asarray(record_steps, dtype=float)
    labels = tuple(program.metadata.get("readout_labels",
                                        ("A", "B", "C")[:n_read]))
    return PopulationTrace(times_s=times, p=p_hat, se=se, shots=shots,
                           labels=labels)


def _run_deterministic(program, executor, record_steps, shots, seed):
    """Noiseless, measurement-free programs: one trajectory, binomial counts."""
    lay = program.layout
    psi = _initial_state(program)[:, None]
    rng = _shot_generator(seed, 0, _STREAM_READOUT)
    n_read = len(program.readout)
    counts = np.zeros((len(record_steps), n_read), dtype=np.int64)
    step = 0
    empty = np.empty((1, 0))
    for i, s in enumerate(record_steps):
        while step < s:
            psi = executor.run_step(psi, empty, empty)
            step += 1
        pops = excited_populations(psi, lay, program.readout)[:, 0]
        counts[i] = rng.binomial(shots, np.clip(pops, 0.0, 1.0))
    return counts


def _run_chunk(program, executor, record_steps, lo, hi, seed, n_steps):
    """Run shots [lo, hi) and return their readout counts."""
    lay = program.layout
    nb = hi - lo
    states = np.repeat(_initial_state(program)[:, None], nb, axis=1)
    chan_gens = [_shot_generator(seed, s, _STREAM_CHANNEL) for s in range(lo, hi)]
    noise_gens = [_shot_generator(seed, s, _STREAM_NOISE) for s in range(lo, hi)]
    read_gens = [_shot_generator(seed, s, _STREAM_READOUT) for s in range(lo, hi)]
    n_read = len(program.readout)
    counts = np.zeros((len(record_steps), n_read), dtype=np.int64)
    rec = {s: i for i, s in enumerate(record_steps)}

    def record(step, states):
        i = rec.get(step)
        if i is None:
            return
        pops = excited_populations(states, lay, program.readout)  # (n_read, nb)
        u = np.stack([g.random(n_read) for g in read_gens])       # (nb, n_read)
        counts[i] += (u.T < pops).sum(axis=1)

    record(0, states)
    for step in range(1, n_steps + 1):
        if executor.n_meas:
            chan_u = np.stack([g.random(executor.n_meas) for g in chan_gens])
        else:
            chan_u = np.empty((nb, 0))
        if executor.n_noise:
            noise_u = np.stack([g.random(executor.n_noise) for g in noise_gens])
        else:
            noise_u = np.empty((nb, 0))
        states = executor.run_step(states, chan_u, noise_u)
        record(step, states)
    return counts


def run_shot(program: CompiledProgram, n_steps: int, seed: int,
             shot_index: int = 0, noise: NoiseModel | None = None) -> dict:
    """Run a single trajectory and return its per-step record.

    The record holds the sampled readout outcomes and conditional
    populations after every step; useful for debugging and for tests that
    need trajectory-level access.
    """
    noise = noise or NoiseModel()
    lowered = inject_noise(program.step_ops, noise)
    executor = _Executor(program, lowered, noise)
    lay = program.layout
    states = _initial_state(program)[:, None]
    chan_gen = _shot_generator(seed, shot_index, _STREAM_CHANNEL)
    noise_gen = _shot_generator(seed, shot_index, _STREAM_NOISE)
    read_gen = _shot_generator(seed, shot_index, _STREAM_READOUT)
    n_read = len(program.readout)
    record = {"populations": [], "outcomes": []}
    for _ in range(n_steps):
        chan_u = chan_gen.random(executor.n_meas)[None, :] \
            if executor.n_meas else np.empty((1, 0))
        noise_u = noise_gen.random(executor.n_noise)[None, :] \
            if executor.n_noise else np.empty((1, 0))
        states = executor.run_step(states, chan_u, noise_u)
        pops = excited_populations(states, lay, program.readout)[:, 0]
        u = read_gen.random(n_read)
        record["populations"].append(pops)
        record["outcomes"].append((u < pops).astype(int))
    record["populations"] = np.array(record["populations"])
    record["outcomes"] = np.array(record["outcomes"])
    record["final_state"] = states[:, 0]
    return record
