"""
Exhaustive checks of fixed-anchor binding on discrete joints.

Both checks enumerate every deterministic encoder f: X_i -> Z over a small
codomain and maximize I(f_1(X_1); f(X_i)):

- sufficient anchor: the maximum equals I(X_1; X_i)
- insufficient anchor with I(f_1(X_1); X_1) < ε: the maximum stays below ε
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from centrolab.config import MAX_ENUMERATED_MAPS, PROPOSITION_TOLERANCE
from centrolab.errors import DataError, UnsupportedError
from centrolab.models.schemas import TheoryRow
from centrolab.theory.mutual_info import (
    DiscreteJoint,
    entropy,
    exact_mi,
    pushforward,
    random_joint,
    self_information,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropositionReport:
    """
    Outcome of one exhaustive search.

    Attributes:
        check: 'prop1' or 'prop2'
        best: max over enumerated f of I(f_1(X_1); f(X_i))
        target: I(X_1; X_i) for prop1, ε for prop2
        best_map: A maximizing f as a lookup table
        n_maps: Number of maps enumerated
        dpi_violations: Maps for which I(f_1(X_1); f(X_i)) exceeded I(f_1(X_1); X_i)
        passed: Verdict
    """
    check: str
    best: float
    target: float
    best_map: Tuple[int, ...]
    n_maps: int
    dpi_violations: int
    passed: bool

    def to_row(self, instance: int, params: dict) -> TheoryRow:
        return TheoryRow(
            check=self.check,
            instance=instance,
            params=params,
            lhs=self.best,
            rhs=self.target,
            slack=self.target - self.best,
            passed=self.passed,
        )


def enumerate_maps(alphabet: int, codomain: int):
    """Every lookup table {0..alphabet-1} -> {0..codomain-1}."""
    count = codomain ** alphabet
    if count > MAX_ENUMERATED_MAPS:
        raise UnsupportedError(
            f"{codomain}^{alphabet} = {count} maps exceeds the enumeration limit {MAX_ENUMERATED_MAPS}"
        )
    return itertools.product(range(codomain), repeat=alphabet)


def anchor_information(joint: DiscreteJoint, anchor_map: Sequence[int]) -> float:
    """I(f_1(X_1); X_1) for a deterministic f_1."""
    return exact_mi(pushforward(self_information(joint.marginal_x), map_x=anchor_map))


def _search(
    joint: DiscreteJoint,
    anchor_map: Sequence[int],
    codomain: int,
    tolerance: float,
) -> Tuple[float, Tuple[int, ...], int, int]:
    anchor_map = np.asarray(anchor_map)
    ceiling = exact_mi(pushforward(joint, map_x=anchor_map))
    best, best_map, n_maps, violations = -1.0, (), 0, 0
    for f in enumerate_maps(joint.shape[1], codomain):
        mi = exact_mi(pushforward(joint, map_x=anchor_map, map_y=f, codomain_y=codomain))
        n_maps += 1
        if mi > ceiling + tolerance:
            violations += 1
        if mi > best:
            best, best_map = mi, tuple(int(v) for v in f)
    return best, best_map, n_maps, violations


def verify_prop1(
    joint: DiscreteJoint,
    anchor_map: Optional[Sequence[int]] = None,
    codomain: Optional[int] = None,
    tolerance: float = PROPOSITION_TOLERANCE,
) -> PropositionReport:
    """
    Sufficient anchor: max_f I(f_1(X_1); f(X_i)) = I(X_1; X_i).

    Args:
        joint: Joint of (X_1, X_i)
        anchor_map: f_1 as a lookup table; identity when omitted
        codomain: Size of the encoder alphabet; |X_i| when omitted
        tolerance: Allowed gap for the equality

    Raises:
        DataError: If f_1 is not sufficient or the codomain cannot hold X_i
        UnsupportedError: If there are too many maps to enumerate
    """
    anchor_map = np.arange(joint.shape[0]) if anchor_map is None else np.asarray(anchor_map)
    codomain = codomain or joint.shape[1]
    if codomain < joint.shape[1]:
        raise DataError(f"codomain {codomain} is smaller than the X_i alphabet {joint.shape[1]}")

    h_x = entropy(joint.marginal_x)
    if abs(anchor_information(joint, anchor_map) - h_x) > tolerance:
        raise DataError(f"anchor map {anchor_map.tolist()} is not sufficient: I(f_1(X_1); X_1) < H(X_1)")

    target = exact_mi(joint)
    best, best_map, n_maps, violations = _search(joint, anchor_map, codomain, tolerance)
    passed = abs(best - target) <= tolerance and violations == 0
    logger.debug(f"prop1 {joint.shape}: max {best:.12g} vs I(X_1; X_i) {target:.12g}")
    return PropositionReport("prop1", best, target, best_map, n_maps, violations, passed)


def verify_prop2(
    joint: DiscreteJoint,
    anchor_map: Sequence[int],
    epsilon: float,
    codomain: Optional[int] = None,
    tolerance: float = PROPOSITION_TOLERANCE,
) -> PropositionReport:
    """
    Insufficient anchor: max_f I(f_1(X_1); f(X_i)) < ε whenever I(f_1(X_1); X_1) < ε.

    Raises:
        DataError: If I(f_1(X_1); X_1) >= ε
        UnsupportedError: If there are too many maps to enumerate
    """
    anchor_map = np.asarray(anchor_map)
    codomain = codomain or joint.shape[1]
    retained = anchor_information(joint, anchor_map)
    if not retained < epsilon:
        raise DataError(f"I(f_1(X_1); X_1) = {retained:.6g} is not below epsilon {epsilon:.6g}")

    best, best_map, n_maps, violations = _search(joint, anchor_map, codomain, tolerance)
    passed = best < epsilon and violations == 0
    logger.debug(f"prop2 {joint.shape}: max {best:.12g} vs epsilon {epsilon:.12g}")
    return PropositionReport("prop2", best, float(epsilon), best_map, n_maps, violations, passed)


def merging_map(alphabet: int, rng: np.random.Generator) -> np.ndarray:
    """A non-injective map that sends two random symbols to the same value."""
    if alphabet < 2:
        return np.zeros(1, dtype=np.int64)
    a, b = rng.choice(alphabet, size=2, replace=False)
    images = np.arange(alphabet)
    images[b] = images[a]
    _, relabelled = np.unique(images, return_inverse=True)
    return relabelled


def proposition_sweep(
    rng: np.random.Generator,
    max_alphabet: int = 4,
    joints_per_shape: int = 3,
) -> List[TheoryRow]:
    """
    Both checks on random joints for every alphabet pair 2..max_alphabet.

    Every third joint has zeroed cells so sufficiency-on-support is exercised.
    """
    rows = []
    instance = 0
    for nx in range(2, max_alphabet + 1):
        for ny in range(2, max_alphabet + 1):
            for r in range(joints_per_shape):
                joint = random_joint(rng, nx, ny, zero_fraction=0.3 if r % 3 == 2 else 0.0)
                params = {"nx": nx, "ny": ny}
                rows.append(verify_prop1(joint).to_row(instance, params))
                instance += 1

                anchor_map = merging_map(nx, rng)
                epsilon = anchor_information(joint, anchor_map) + 1e-6
                rows.append(verify_prop2(joint, anchor_map, epsilon).to_row(instance, dict(params, epsilon=epsilon)))
                instance += 1

    failed = sum(not r.passed for r in rows)
    logger.info(f"Anchor sufficiency checks: {len(rows) - failed}/{len(rows)} passed")
    return rows
