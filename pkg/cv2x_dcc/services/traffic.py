import numpy as np

from cv2x_dcc.models.cam import Cam, CamSource, TxBuffer


def draw_phases(rng: np.random.Generator, n_vehicles: int, period: int = 100):
    """Integer generation offsets in [0, period), one per vehicle."""
    return rng.integers(0, period, size=n_vehicles)


def make_sources(
    phases: np.ndarray, period: int = 100, size: int = 190
) -> list[CamSource]:
    return [
        CamSource(vehicle=i, phase=int(phase), period=period, size=size)
        for i, phase in enumerate(phases)
    ]


def generate_cam(source: CamSource, now: int) -> Cam:
    source.seq += 1
    source.generated += 1
    return Cam(
        source=source.vehicle, seq=source.seq, generated_at=now, size=source.size
    )


def enqueue(buffer: TxBuffer, cam: Cam) -> bool:
    """Place `cam` in the buffer; True if it displaced a waiting CAM."""
    displaced = buffer.pending is not None
    buffer.pending = cam
    return displaced
