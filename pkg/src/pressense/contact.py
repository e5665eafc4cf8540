"""Six-element contact labels: five fingertip flags plus a ternary force level."""

from __future__ import annotations

from dataclasses import dataclass

FINGER_NAMES = ("thumb", "index", "middle", "ring", "pinky")

FORCE_UNSPECIFIED = -1
FORCE_LOW = 0
FORCE_HIGH = 1


@dataclass(frozen=True)
class ContactLabel:
    """Per-finger contact flags and the prompted force level.

    ``fingers`` holds one 0/1 flag per fingertip in ``FINGER_NAMES`` order.
    ``force`` is -1 (unspecified / not applicable), 0 (low) or 1 (high).
    """

    fingers: tuple[int, int, int, int, int]
    force: int = FORCE_UNSPECIFIED

    def __post_init__(self):
        if len(self.fingers) != 5 or any(f not in (0, 1) for f in self.fingers):
            raise ValueError("fingers must be five 0/1 flags")
        if self.force not in (FORCE_UNSPECIFIED, FORCE_LOW, FORCE_HIGH):
            raise ValueError("force must be -1, 0 or 1")
        # no contact <=> all flags zero, so a force level cannot apply
        if not any(self.fingers) and self.force != FORCE_UNSPECIFIED:
            raise ValueError("no-contact labels must carry force -1")

    @property
    def any_contact(self) -> bool:
        return any(f == 1 for f in self.fingers)

    @classmethod
    def no_contact(cls) -> "ContactLabel":
        return cls((0, 0, 0, 0, 0), FORCE_UNSPECIFIED)

    def as_vector(self) -> tuple[int, int, int, int, int, int]:
        """Label as a flat (f0..f4, force) tuple."""
        return (*self.fingers, self.force)
