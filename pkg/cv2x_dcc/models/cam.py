from dataclasses import dataclass, field


@dataclass(frozen=True, slots=True)
class Cam:
    source: int
    seq: int
    generated_at: int
    size: int = 190


@dataclass(slots=True)
class TxBuffer:
    """Single-slot MAC buffer; a newer CAM displaces the one waiting."""

    pending: Cam | None = None


@dataclass(slots=True)
class CamSource:
    """Periodic CAM application of one vehicle plus its delivery counters."""

    vehicle: int
    phase: int
    period: int = 100
    size: int = 190
    seq: int = 0
    buffer: TxBuffer = field(default_factory=TxBuffer)
    generated: int = 0
    transmitted: int = 0
    displaced: int = 0
    gated_drops: int = 0

    @property
    def app_drops(self) -> int:
        return self.displaced + self.gated_drops
