"""Two-group undirected networks and a block-model generator.

Networks are generated from a two-block Bernoulli model whose expected
prevalence, mean degree, homophily and differential activity hit the
requested targets exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import ValidationError, check_positive_int, check_random_state


class InfeasibleTargetsError(ValueError):
    """The requested network targets imply a tie probability outside [0, 1]."""


@dataclass(frozen=True)
class NetworkTargets:
    """Population-level targets for a simulated network."""

    n_nodes: int
    prevalence: float
    mean_degree: float
    homophily: float = 1.0
    differential_activity: float = 1.0

    def __post_init__(self):
        check_positive_int(self.n_nodes, "n_nodes", minimum=2)
        if not 0.0 <= self.prevalence <= 1.0:
            raise ValueError(f"prevalence must lie in [0, 1], got {self.prevalence}")
        for name in ("mean_degree", "homophily", "differential_activity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        scaled = self.prevalence * self.n_nodes
        if abs(scaled - round(scaled)) > 0.5 + 1e-9:
            raise ValueError("prevalence * n_nodes must be within 0.5 of an integer")

    @property
    def n_infected(self) -> int:
        return int(math.floor(self.prevalence * self.n_nodes + 0.5))

    @property
    def n_uninfected(self) -> int:
        return self.n_nodes - self.n_infected


@dataclass(frozen=True)
class BlockProbabilities:
    """Tie probabilities within infected, across groups, within uninfected."""

    p11: float
    p10: float
    p00: float

    def __post_init__(self):
        for name in ("p11", "p10", "p00"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InfeasibleTargetsError(f"{name}={value:.6g} lies outside [0, 1]")

    def expected_group_degrees(self, targets: NetworkTargets) -> tuple[float, float]:
        n1, n0 = targets.n_infected, targets.n_uninfected
        d1 = (n1 - 1) * self.p11 + n0 * self.p10
        d0 = n1 * self.p10 + (n0 - 1) * self.p00
        return d1, d0

    def expected_mean_degree(self, targets: NetworkTargets) -> float:
        n1, n0 = targets.n_infected, targets.n_uninfected
        d1, d0 = self.expected_group_degrees(targets)
        return (n1 * d1 + n0 * d0) / targets.n_nodes


@dataclass(eq=False)
class Network:
    """Undirected simple graph with a binary trait on each node.

    ``edges`` is an ``(E, 2)`` int array of unordered pairs stored with
    ``i < j``, sorted lexicographically.
    """

    n_nodes: int
    traits: np.ndarray
    edges: np.ndarray
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        check_positive_int(self.n_nodes, "n_nodes")
        self.traits = np.asarray(self.traits, dtype=np.int8)
        if self.traits.shape != (self.n_nodes,):
            raise ValidationError("traits must have one entry per node")
        if not np.all((self.traits == 0) | (self.traits == 1)):
            raise ValidationError("traits must be 0/1")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if np.any(edges < 0) or np.any(edges >= self.n_nodes):
                raise ValidationError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValidationError("self-loops are not allowed")
            edges = np.sort(edges, axis=1)
            edges = np.unique(edges, axis=0)
        self.edges = edges
        self.degrees = np.bincount(edges.ravel(), minlength=self.n_nodes).astype(np.int64)
        self._csr = None

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def _adjacency(self):
        if self._csr is None:
            src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
            order = np.lexsort((dst, src))
            indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
            np.cumsum(np.bincount(src, minlength=self.n_nodes), out=indptr[1:])
            self._csr = (indptr, dst[order])
        return self._csr

    def neighbors(self, node: int) -> np.ndarray:
        indptr, indices = self._adjacency()
        return indices[indptr[node]:indptr[node + 1]]

    def write_edgelist(self, path) -> None:
        """Write the ``N``/``z``/pairs text format."""
        lines = [f"N {self.n_nodes}", "z " + " ".join(str(int(v)) for v in self.traits)]
        lines.extend(f"{i} {j}" for i, j in self.edges)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def read_edgelist(cls, path) -> "Network":
        lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
        lines = [ln for ln in lines if ln]
        if len(lines) < 2 or not lines[0].startswith("N ") or not lines[1].startswith("z"):
            raise ValidationError("edge list must start with 'N <int>' and 'z ...' lines")
        n = int(lines[0].split()[1])
        traits = [int(tok) for tok in lines[1].split()[1:]]
        pairs = [tuple(int(tok) for tok in ln.split()) for ln in lines[2:]]
        for lineno, pair in enumerate(pairs, start=3):
            if len(pair) != 2 or pair[0] >= pair[1]:
                raise ValidationError(f"line {lineno}: expected 'i j' with i < j")
        return cls(n, np.array(traits), np.array(pairs, dtype=np.int64).reshape(-1, 2))


def solve_block_probabilities(targets: NetworkTargets) -> BlockProbabilities:
    """Block tie probabilities meeting the targets' H, DA and mean degree.

    With N1 infected and N0 uninfected nodes the three conditions are

    * ``p11 = H * p10``
    * ``(N1-1) p11 + N0 p10 = DA * (N1 p10 + (N0-1) p00)``
    * ``(N1 (N1-1) p11 + 2 N1 N0 p10 + N0 (N0-1) p00) / N = mean_degree``

    which are linear in ``p10`` once ``p11`` and ``p00`` are written as
    multiples of it.
    """
    n, n1, n0 = targets.n_nodes, targets.n_infected, targets.n_uninfected
    h, da = targets.homophily, targets.differential_activity
    if n1 == 0 or n0 == 0:
        # one group is empty: homophily and activity ratios are vacuous
        p = targets.mean_degree / (n - 1)
        return BlockProbabilities(p, p, p)
    r11 = h
    if n0 > 1:
        r00 = ((n1 - 1) * h + n0 - da * n1) / (da * (n0 - 1))
    else:
        r00 = 0.0
    if r00 < 0:
        raise InfeasibleTargetsError(
            "p00 would be negative: differential activity too large for this homophily"
        )
    ties_per_p10 = n1 * (n1 - 1) * r11 + 2 * n1 * n0 + n0 * (n0 - 1) * r00
    p10 = targets.mean_degree * n / ties_per_p10
    for name, value in (("p11", r11 * p10), ("p10", p10), ("p00", r00 * p10)):
        if value > 1.0:
            raise InfeasibleTargetsError(f"{name}={value:.6g} exceeds 1")
    return BlockProbabilities(r11 * p10, p10, r00 * p10)


def generate_network(probs: BlockProbabilities, targets: NetworkTargets, random_state=None) -> Network:
    """Draw a network: first ``n_infected`` nodes carry the trait, every
    unordered pair is present independently with its block probability."""
    rng = check_random_state(random_state)
    n, n1 = targets.n_nodes, targets.n_infected
    traits = np.zeros(n, dtype=np.int8)
    traits[:n1] = 1
    iu, ju = np.triu_indices(n, k=1)
    zi, zj = traits[iu], traits[ju]
    p = np.where(zi & zj, probs.p11, np.where(zi | zj, probs.p10, probs.p00))
    keep = rng.random(iu.size) < p
    edges = np.column_stack([iu[keep], ju[keep]])
    return Network(n, traits, edges)


@dataclass(frozen=True)
class NetworkStats:
    prevalence: float
    mean_degree: float
    mean_degree_infected: float | None
    mean_degree_uninfected: float | None
    homophily: float | None
    differential_activity: float | None


def network_stats(net: Network) -> NetworkStats:
    """Realized counterparts of the generator targets.

    Quantities that need both groups, or a nonzero denominator, come back
    as ``None``.
    """
    n = net.n_nodes
    z = net.traits.astype(bool)
    n1 = int(z.sum())
    n0 = n - n1
    prevalence = n1 / n
    mean_degree = float(net.degrees.sum()) / n
    if n1 == 0 or n0 == 0:
        return NetworkStats(prevalence, mean_degree, None, None, None, None)
    d1 = float(net.degrees[z].mean())
    d0 = float(net.degrees[~z].mean())
    ends = z[net.edges]
    within1 = int(np.sum(ends[:, 0] & ends[:, 1]))
    cross = int(np.sum(ends[:, 0] ^ ends[:, 1]))
    homophily = None
    if n1 > 1 and cross > 0:
        homophily = (within1 / (n1 * (n1 - 1) / 2)) / (cross / (n1 * n0))
    da = d1 / d0 if d0 > 0 else None
    return NetworkStats(prevalence, mean_degree, d1, d0, homophily, da)
