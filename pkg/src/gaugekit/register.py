"""Dense state vector over heterogeneous group-algebra sites.

Sites are ordered; amplitudes live in a C-ordered complex128 array with one
axis per live site (site-major, last site fastest). Measurement retires the
site and reshapes the state down, so peak dimension is bounded by the largest
single protocol round. Operators are structured (permutation, diagonal, or
dense) so large-arity permutation gates never materialize dense matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .groups import FiniteGroup, character_table

__all__ = [
    "SiteSpec",
    "LocalOperator",
    "DiagonalOperator",
    "StabilizerOperator",
    "QuditRegister",
    "init_plus",
    "init_identity",
    "init_product",
]

GATE_TOL = 1e-12
STATE_TOL = 1e-10


@dataclass(frozen=True)
class SiteSpec:
    """One group-algebra qudit: a site id, its role, and its local group."""

    sid: Hashable
    role: str  # vertex | edge | plaquette
    group: FiniteGroup

    @property
    def dim(self) -> int:
        return self.group.order


class LocalOperator:
    """Operator on 1 to 3 sites, stored as permutation, diagonal, or dense.

    perm: image array over the joint target basis, |x> -> phase[x] |image[x]>.
    diag: complex phases over the joint target basis.
    dense: full matrix over the joint target basis.
    """

    def __init__(
        self,
        targets: Sequence[Hashable],
        kind: str,
        payload,
        phase: Optional[np.ndarray] = None,
        unitary: bool = True,
        name: str = "op",
    ):
        if not 1 <= len(targets) <= 3:
            raise ValueError(f"LocalOperator supports 1-3 targets, got {len(targets)}")
        if len(set(targets)) != len(targets):
            raise ValueError("duplicate target sites")
        self.targets = tuple(targets)
        self.kind = kind
        self.unitary = unitary
        self.name = name
        if kind == "perm":
            self.image = np.asarray(payload, dtype=np.int64)
            dim = len(self.image)
            if sorted(self.image.tolist()) != list(range(dim)):
                raise ValueError(f"{name}: image is not a permutation")
            self.phase = None if phase is None else np.asarray(phase, dtype=np.complex128)
            if self.phase is not None and np.abs(np.abs(self.phase) - 1).max() > GATE_TOL:
                raise ValueError(f"{name}: permutation phases must be unimodular")
        elif kind == "diag":
            self.diag = np.asarray(payload, dtype=np.complex128)
            if unitary and np.abs(np.abs(self.diag) - 1).max() > GATE_TOL:
                raise ValueError(f"{name}: unitary diagonal must be unimodular")
        elif kind == "dense":
            self.dense = np.asarray(payload, dtype=np.complex128)
            if self.dense.ndim != 2 or self.dense.shape[0] != self.dense.shape[1]:
                raise ValueError(f"{name}: dense payload must be square")
            dim = self.dense.shape[0]
            if unitary and dim <= 4096:
                dev = np.abs(self.dense @ self.dense.conj().T - np.eye(dim)).max()
                if dev > GATE_TOL:
                    raise ValueError(f"{name}: flagged unitary but U U+ deviates by {dev:.2e}")
        else:
            raise ValueError(f"unknown operator kind {kind!r}")

    @property
    def joint_dim(self) -> int:
        if self.kind == "perm":
            return len(self.image)
        if self.kind == "diag":
            return len(self.diag)
        return self.dense.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Dense materialization over the joint target basis."""
        d = self.joint_dim
        if self.kind == "dense":
            return self.dense.copy()
        if self.kind == "diag":
            return np.diag(self.diag)
        m = np.zeros((d, d), dtype=np.complex128)
        amp = np.ones(d) if self.phase is None else self.phase
        m[self.image, np.arange(d)] = amp
        return m

    def transform(self, block: np.ndarray) -> np.ndarray:
        """Apply to an array of shape (joint_dim, rest)."""
        if self.kind == "diag":
            return block * self.diag[:, None]
        if self.kind == "perm":
            out = np.empty_like(block)
            src = block if self.phase is None else block * self.phase[:, None]
            out[self.image] = src
            return out
        return self.dense @ block

    def dagger(self) -> "LocalOperator":
        if self.kind == "diag":
            return LocalOperator(self.targets, "diag", np.conj(self.diag), unitary=self.unitary, name=self.name + "+")
        if self.kind == "perm":
            inv = np.argsort(self.image)
            phase = None if self.phase is None else np.conj(self.phase[inv])
            return LocalOperator(self.targets, "perm", inv, phase=phase, unitary=True, name=self.name + "+")
        return LocalOperator(
            self.targets, "dense", self.dense.conj().T, unitary=self.unitary, name=self.name + "+"
        )


class DiagonalOperator:
    """Diagonal operator on any number of sites (stabilizer and loop checks)."""

    def __init__(self, targets: Sequence[Hashable], diag: np.ndarray, name: str = "diag"):
        self.targets = tuple(targets)
        self.diag = np.asarray(diag, dtype=np.complex128)
        self.name = name

    def transform(self, block: np.ndarray) -> np.ndarray:
        return block * self.diag[:, None]


class StabilizerOperator:
    """Weighted sum of products of single-site factors, applied site by site.

    terms: list of (weight, {sid: LocalOperator on that single site}).
    Covers A_v (group-averaged permutation products) at any arity without
    materializing a joint matrix.
    """

    def __init__(self, terms: Sequence[Tuple[complex, Dict[Hashable, LocalOperator]]], name: str = "stab"):
        self.terms = [(complex(w), dict(fs)) for w, fs in terms]
        self.name = name

    @property
    def targets(self) -> Tuple[Hashable, ...]:
        out: List[Hashable] = []
        for _, factors in self.terms:
            for sid in factors:
                if sid not in out:
                    out.append(sid)
        return tuple(out)


@dataclass
class _Retired:
    outcome: int
    probability: float


class QuditRegister:
    """Dense complex state over an ordered list of live sites."""

    def __init__(self, sites: Sequence[SiteSpec], amplitudes: np.ndarray):
        self.sites: List[SiteSpec] = list(sites)
        dims = tuple(s.dim for s in self.sites)
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.shape != dims:
            amps = amps.reshape(dims)
        self.amps = amps
        self.retired: Dict[Hashable, _Retired] = {}
        self._index: Dict[Hashable, int] = {s.sid: k for k, s in enumerate(self.sites)}
        if len(self._index) != len(self.sites):
            raise ValueError("duplicate site ids")

    # --- layout ------------------------------------------------------------

    def pos(self, sid: Hashable) -> int:
        if sid in self.retired:
            raise ValueError(f"site {sid!r} was measured and retired")
        if sid not in self._index:
            raise KeyError(f"no live site {sid!r}")
        return self._index[sid]

    def spec(self, sid: Hashable) -> SiteSpec:
        return self.sites[self.pos(sid)]

    def _reindex(self) -> None:
        self._index = {s.sid: k for k, s in enumerate(self.sites)}

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(s.dim for s in self.sites)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def copy(self) -> "QuditRegister":
        out = QuditRegister(list(self.sites), self.amps.copy())
        out.retired = dict(self.retired)
        return out

    def add_sites(self, specs: Sequence[SiteSpec], state_fn: Callable[[SiteSpec], np.ndarray]) -> None:
        """Append fresh product-state sites (ancilla allocation)."""
        for spec_ in specs:
            if spec_.sid in self._index or spec_.sid in self.retired:
                raise ValueError(f"site id {spec_.sid!r} already used")
            local = np.asarray(state_fn(spec_), dtype=np.complex128)
            if local.shape != (spec_.dim,):
                raise ValueError(f"ancilla state for {spec_.sid!r} has wrong dimension")
            self.amps = np.multiply.outer(self.amps, local)
            self.sites.append(spec_)
        self._reindex()

    # --- gates ---------------------------------------------------------------

    def _gather(self, targets: Sequence[Hashable]) -> Tuple[np.ndarray, Tuple[int, ...], Tuple[int, ...]]:
        axes = tuple(self.pos(t) for t in targets)
        moved = np.moveaxis(self.amps, axes, range(len(axes)))
        shape = moved.shape
        block = moved.reshape(int(np.prod(shape[: len(axes)], dtype=np.int64)), -1)
        return block, axes, shape

    def _scatter(self, block: np.ndarray, axes: Tuple[int, ...], shape: Tuple[int, ...]) -> None:
        self.amps = np.moveaxis(block.reshape(shape), range(len(axes)), axes)

    def apply(self, op) -> "QuditRegister":
        if isinstance(op, StabilizerOperator):
            acc = np.zeros_like(self.amps)
            for weight, factors in op.terms:
                work = self.copy()
                for sid, factor in factors.items():
                    work.apply(factor)
                acc += weight * work.amps
            self.amps = acc
            return self
        block, axes, shape = self._gather(op.targets)
        expected = int(np.prod([self.sites[a].dim for a in axes], dtype=np.int64))
        joint = op.diag.shape[0] if isinstance(op, DiagonalOperator) else op.joint_dim
        if joint != expected:
            raise ValueError(f"{op.name}: operator dimension {joint} mismatches targets {expected}")
        self._scatter(op.transform(block), axes, shape)
        return self

    def expectation(self, op) -> complex:
        work = self.copy()
        work.apply(op)
        return complex(np.vdot(self.amps, work.amps))

    # --- measurement -----------------------------------------------------------

    def branch_probabilities(self, sid: Hashable) -> np.ndarray:
        """Fourier-basis outcome distribution for an abelian site, no collapse."""
        spec_ = self.spec(sid)
        work = self.copy()
        work.apply(_fourier_op(spec_))
        block, _, _ = work._gather([sid])
        return np.einsum("ij,ij->i", block, np.conj(block)).real

    def measure_fourier(self, sid: Hashable, rng: Optional[np.random.Generator] = None, forced: Optional[int] = None) -> int:
        """Rotate one abelian site by F_ab = chi^a(b)/sqrt|A|, measure, retire it.

        Exactly one of rng and forced selects the branch. The collapsed state
        is renormalized and the site's axis is removed.
        """
        spec_ = self.spec(sid)
        self.apply(_fourier_op(spec_))
        block, axes, shape = self._gather([sid])
        probs = np.einsum("ij,ij->i", block, np.conj(block)).real
        total = probs.sum()
        if abs(total - 1.0) > 1e-6:
            probs = probs / total
        if forced is not None:
            outcome = int(forced)
            if not 0 <= outcome < spec_.dim:
                raise ValueError(f"forced outcome {outcome} out of range for {sid!r}")
            if probs[outcome] < 1e-14:
                raise ValueError(
                    f"forced outcome {outcome} on {sid!r} has zero Born probability "
                    f"(distribution {np.round(probs, 6).tolist()})"
                )
        else:
            if rng is None:
                raise ValueError("measurement needs an rng or a forced outcome")
            outcome = int(rng.choice(spec_.dim, p=probs / probs.sum()))
        branch = block[outcome] / np.sqrt(probs[outcome])
        pos = axes[0]
        # gather moved the measured axis to the front and kept the rest in
        # original relative order, so dropping the front axis is the collapse
        self.amps = branch.reshape(shape[1:])
        self.sites.pop(pos)
        self.retired[sid] = _Retired(outcome=outcome, probability=float(probs[outcome]))
        self._reindex()
        return outcome

    def project_plus(self, sid: Hashable) -> float:
        """Contract one site with <+|, retire it, renormalize.

        Returns the branch probability. Works for any site group; for an
        abelian site it equals measure_fourier with forced outcome 0.
        """
        spec_ = self.spec(sid)
        block, axes, shape = self._gather([sid])
        branch = block.sum(axis=0) / np.sqrt(spec_.dim)
        prob = float(np.vdot(branch, branch).real)
        if prob < 1e-14:
            raise ValueError(f"plus-projection on {sid!r} has zero weight")
        self.amps = (branch / np.sqrt(prob)).reshape(shape[1:])
        self.sites.pop(axes[0])
        self.retired[sid] = _Retired(outcome=0, probability=prob)
        self._reindex()
        return prob

    # --- overlaps ------------------------------------------------------------

    def _check_layout(self, other: "QuditRegister") -> None:
        mine = [(s.sid, s.dim) for s in self.sites]
        theirs = [(s.sid, s.dim) for s in other.sites]
        if mine != theirs:
            raise ValueError(f"live-site layouts differ: {mine} vs {theirs}")

    def inner_product(self, other: "QuditRegister") -> complex:
        self._check_layout(other)
        return complex(np.vdot(self.amps, other.amps))

    def fidelity(self, other: "QuditRegister") -> float:
        return abs(self.inner_product(other)) ** 2

    # --- relabelings -----------------------------------------------------------

    def relabel_site(self, sid: Hashable, image: np.ndarray, new_spec: Optional[SiteSpec] = None) -> None:
        """Permute one site's basis labels: |x> -> |image[x]>."""
        pos = self.pos(sid)
        inv = np.argsort(np.asarray(image, dtype=np.int64))
        self.amps = np.take(self.amps, inv, axis=pos)
        if new_spec is not None:
            self.sites[pos] = new_spec
            self._reindex()

    def merge_sites(self, sid_a: Hashable, sid_b: Hashable, new_spec: SiteSpec) -> None:
        """Fuse two sites into one with C-order pairing (a-label major)."""
        pa, pb = self.pos(sid_a), self.pos(sid_b)
        if pa == pb:
            raise ValueError("merge needs two distinct sites")
        spec_a, spec_b = self.sites[pa], self.sites[pb]
        if new_spec.dim != spec_a.dim * spec_b.dim:
            raise ValueError("merged spec dimension mismatch")
        dst = pa + 1 if pb > pa else pa
        self.amps = np.moveaxis(self.amps, pb, dst)
        new_pa = pa if pb > pa else pa - 1
        self.sites.pop(pb)
        self.sites.insert(new_pa + 1, spec_b)
        shape = list(self.amps.shape)
        self.amps = self.amps.reshape(shape[:new_pa] + [new_spec.dim] + shape[new_pa + 2 :])
        self.sites[new_pa : new_pa + 2] = [new_spec]
        self._reindex()

    def split_site(self, sid: Hashable, spec_a: SiteSpec, spec_b: SiteSpec) -> None:
        """Inverse of merge_sites: C-order split of one site into two."""
        pos = self.pos(sid)
        d = self.sites[pos].dim
        if spec_a.dim * spec_b.dim != d:
            raise ValueError("split dimensions do not factor the site")
        shape = list(self.amps.shape)
        self.amps = self.amps.reshape(shape[:pos] + [spec_a.dim, spec_b.dim] + shape[pos + 1 :])
        self.sites[pos : pos + 1] = [spec_a, spec_b]
        self._reindex()

    # --- serialization -----------------------------------------------------------

    def dump_json(self, threshold: float = 1e-14) -> str:
        """JSON list of (basis label tuple, re, im) for amplitudes above threshold."""
        entries = []
        flat = self.amps.reshape(-1)
        dims = self.dims
        for idx in np.flatnonzero(np.abs(flat) > threshold):
            label = list(np.unravel_index(int(idx), dims))
            a = flat[int(idx)]
            entries.append([[int(x) for x in label], float(a.real), float(a.imag)])
        return json.dumps(entries, separators=(",", ":"))


def _fourier_op(spec_: SiteSpec) -> LocalOperator:
    if not spec_.group.is_abelian:
        raise ValueError(f"Fourier measurement needs an abelian site, {spec_.sid!r} carries {spec_.group.name}")
    chi = character_table(spec_.group)
    mat = chi / np.sqrt(spec_.group.order)
    return LocalOperator([spec_.sid], "dense", mat, unitary=True, name=f"F[{spec_.group.name}]")


# ---------------------------------------------------------------------------
# initialization


def _plus_state(spec_: SiteSpec) -> np.ndarray:
    return np.full(spec_.dim, 1.0 / np.sqrt(spec_.dim), dtype=np.complex128)


def _identity_state(spec_: SiteSpec) -> np.ndarray:
    v = np.zeros(spec_.dim, dtype=np.complex128)
    v[0] = 1.0
    return v


def init_product(specs: Sequence[SiteSpec], state_fn: Callable[[SiteSpec], np.ndarray]) -> QuditRegister:
    if not specs:
        raise ValueError("register needs at least one site")
    amps = np.asarray(state_fn(specs[0]), dtype=np.complex128)
    reg = QuditRegister([specs[0]], amps)
    if len(specs) > 1:
        reg.add_sites(specs[1:], state_fn)
    return reg


def init_plus(specs: Sequence[SiteSpec]) -> QuditRegister:
    """Product of uniform-superposition sites, norm 1."""
    return init_product(specs, _plus_state)


def init_identity(specs: Sequence[SiteSpec]) -> QuditRegister:
    """Product of identity-element basis states."""
    return init_product(specs, _identity_state)
