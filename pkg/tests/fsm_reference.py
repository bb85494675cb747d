"""Brute-force transition-table simulator used as the FSM oracle.

Independent of the production step function: behavior is written out as an
explicit table over the finite state space (phase, candidate, count,
refractory), built by literal translation of the gating rules. Equality of
the production step against this table on every reachable (state, symbol)
pair implies equality on every probability script, by induction over script
length.
"""

from __future__ import annotations

import numpy as np

from microgext.synth import CLASS_NAMES, GestureClass

NULL = GestureClass.NULL


def make_probs(peak_class: GestureClass, peak: float) -> np.ndarray:
    """Probability vector with one peaked class, the rest spread evenly."""
    idx = CLASS_NAMES.index(peak_class.value)
    rest = (1.0 - peak) / (len(CLASS_NAMES) - 1)
    p = np.full(len(CLASS_NAMES), rest)
    p[idx] = peak
    return p


class TableFsm:
    """Reference simulator: states are plain tuples
    (phase, candidate_name_or_None, count, refractory)."""

    def __init__(self, delta: float, n_consecutive: int, refractory: int):
        self.delta = delta
        self.n = n_consecutive
        self.refractory = refractory

    @staticmethod
    def initial():
        return ("S1", None, 0, 0)

    def step(self, state, peak_class: GestureClass, peak: float):
        phase, candidate, count, refr = state

        if refr > 0:
            return ("S1", None, 0, refr - 1), None

        detected = peak >= self.delta and peak_class is not NULL

        if phase == "S1":
            if detected:
                if self.n == 1:
                    return ("S1", None, 0, self.refractory), peak_class
                return ("S2", peak_class.value, 1, 0), None
            return ("S1", None, 0, 0), None

        # S2: with a spread remainder, the candidate's own probability is
        # the peak when it matches, otherwise the (tiny) remainder share
        if candidate == peak_class.value and peak >= self.delta:
            if count + 1 >= self.n:
                return ("S1", None, 0, self.refractory), GestureClass(candidate)
            return ("S2", candidate, count + 1, 0), None
        if detected:
            if self.n == 1:
                return ("S1", None, 0, self.refractory), peak_class
            return ("S2", peak_class.value, 1, 0), None
        return ("S1", None, 0, 0), None

    def run(self, script):
        """Run a script of (peak_class, peak) pairs; returns fired classes."""
        state = self.initial()
        fired = []
        for peak_class, peak in script:
            state, hit = self.step(state, peak_class, peak)
            fired.append(hit)
        return fired
