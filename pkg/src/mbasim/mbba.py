"""Iterated three-step multidimensional binary Byzantine agreement.

Each loop runs a Coin-Fixed-To-0 step, a Coin-Fixed-To-1 step, and a
Coin-Genuinely-Flipped step.  A component is finalized (its flag set) when
the step's favored bit gathers more than 2n/3 distinct senders; once every
flag is set the node broadcasts its bit vector with the finality marker,
outputs it and halts.  The genuinely-flipped step fills undecided components
from a shared coin derived from the minimal hashed unique signature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

from .core import MessageEnvelope, Phase, StepId, Tally, two_thirds_majority
from .crypto import KeyPair, derive_coin, signing_message


class MbbaPhase(Enum):
    STEP1 = 1
    STEP2 = 2
    STEP3 = 3
    HALTED = 0


class Branch(IntEnum):
    """Which sub-step a node executed for one component in one step."""

    SKIPPED = 0         # flag already set, component untouched
    THRESHOLD_ZERO = 1  # >2n/3 support for 0
    THRESHOLD_ONE = 2   # >2n/3 support for 1
    DEFAULT = 3         # step's default bit (steps 1 and 2)
    COIN = 4            # shared coin bit (step 3)


@dataclass
class MbbaState:
    """Per-node binary-agreement run.

    Flags are monotone: once ``flags[c]`` is 1, ``bits[c]`` never changes
    again.  ``iteration`` counts completed three-step loops.
    """

    node: int
    n: int
    m: int
    key: KeyPair
    common: bytes
    bits: list[int]
    flags: list[int] = field(default_factory=list)
    iteration: int = 0
    phase: MbbaPhase = MbbaPhase.STEP1
    output: Optional[tuple] = None
    final_envelope: Optional[MessageEnvelope] = None
    finalized_at: list = field(default_factory=list)
    _final_sent: bool = False

    def __post_init__(self) -> None:
        if len(self.bits) != self.m:
            raise ValueError("bit vector length mismatch")
        if not self.flags:
            self.flags = [0] * self.m
        if not self.finalized_at:
            self.finalized_at = [None] * self.m

    # -- wire side ----------------------------------------------------------

    def step_id(self) -> StepId:
        return StepId(Phase.MBBA, self.iteration, self.phase.value)

    def outgoing(self) -> Optional[MessageEnvelope]:
        """This step's broadcast; None once halted (the simulator replays the
        final message instead)."""
        if self.phase == MbbaPhase.HALTED:
            return None
        payload = tuple(self.bits)
        if self.phase == MbbaPhase.STEP3:
            sig = self.key.sign(signing_message(self.common, self.iteration))
            return MessageEnvelope(self.node, self.step_id(), payload, signature=sig)
        return MessageEnvelope(self.node, self.step_id(), payload)

    # -- state transitions ---------------------------------------------------

    def apply_step1(self, tally: Tally) -> list[Branch]:
        """Coin-Fixed-To-0: finalize zeros on a supermajority, default to 0."""
        if self.phase != MbbaPhase.STEP1:
            raise RuntimeError(f"apply_step1 in phase {self.phase}")
        threshold = two_thirds_majority(self.n)
        branches = []
        for c in range(self.m):
            if self.flags[c]:
                branches.append(Branch.SKIPPED)
            elif tally.count(0, c) >= threshold:
                self.bits[c] = 0
                self.flags[c] = 1
                self.finalized_at[c] = self.iteration
                branches.append(Branch.THRESHOLD_ZERO)
            elif tally.count(1, c) >= threshold:
                self.bits[c] = 1
                branches.append(Branch.THRESHOLD_ONE)
            else:
                self.bits[c] = 0
                branches.append(Branch.DEFAULT)
        if self.exit_check() is None:
            self.phase = MbbaPhase.STEP2
        return branches

    def apply_step2(self, tally: Tally) -> list[Branch]:
        """Coin-Fixed-To-1: mirror image of step 1 with the bit roles swapped."""
        if self.phase != MbbaPhase.STEP2:
            raise RuntimeError(f"apply_step2 in phase {self.phase}")
        threshold = two_thirds_majority(self.n)
        branches = []
        for c in range(self.m):
            if self.flags[c]:
                branches.append(Branch.SKIPPED)
            elif tally.count(1, c) >= threshold:
                self.bits[c] = 1
                self.flags[c] = 1
                self.finalized_at[c] = self.iteration
                branches.append(Branch.THRESHOLD_ONE)
            elif tally.count(0, c) >= threshold:
                self.bits[c] = 0
                branches.append(Branch.THRESHOLD_ZERO)
            else:
                self.bits[c] = 1
                branches.append(Branch.DEFAULT)
        if self.exit_check() is None:
            self.phase = MbbaPhase.STEP3
        return branches

    def apply_step3(self, tally: Tally, valid_sigs) -> list[Branch]:
        """Coin-Genuinely-Flipped: no finalization; undecided components take
        the shared coin bit."""
        if self.phase != MbbaPhase.STEP3:
            raise RuntimeError(f"apply_step3 in phase {self.phase}")
        threshold = two_thirds_majority(self.n)
        coin = None
        branches = []
        for c in range(self.m):
            if self.flags[c]:
                branches.append(Branch.SKIPPED)
            elif tally.count(0, c) >= threshold:
                self.bits[c] = 0
                branches.append(Branch.THRESHOLD_ZERO)
            elif tally.count(1, c) >= threshold:
                self.bits[c] = 1
                branches.append(Branch.THRESHOLD_ONE)
            else:
                if coin is None:
                    if not valid_sigs:
                        raise RuntimeError("no valid signatures: own message missing")
                    coin = derive_coin(valid_sigs, self.m)
                self.bits[c] = coin[c]
                branches.append(Branch.COIN)
        self.iteration += 1
        self.phase = MbbaPhase.STEP1
        return branches

    def exit_check(self) -> Optional[tuple]:
        """Halt once every flag is set: fix the output and queue the final
        broadcast exactly once.  Returns the output when halted."""
        if self.phase == MbbaPhase.HALTED:
            return self.output
        if not all(self.flags):
            return None
        halted_at = self.step_id()
        self.output = tuple(self.bits)
        self.phase = MbbaPhase.HALTED
        if not self._final_sent:
            self._final_sent = True
            self.final_envelope = MessageEnvelope(
                self.node, halted_at, self.output, final=True
            )
        return self.output
