"""Two-microphone anechoic mixing: scene sampling and exact fractional delays."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSceneError, InvalidInputError


@dataclass(frozen=True)
class Geometry:
    mic_distance: float = 0.01        # m
    speed_of_sound: float = 343.0     # m/s
    sample_rate: int = 16000
    min_angle_separation: float = 10.0  # degrees
    room_half_extent: float = 3.0     # m, largest source radius
    min_radius: float = 0.5           # m

    def __post_init__(self):
        if self.mic_distance <= 0 or self.speed_of_sound <= 0 or self.sample_rate <= 0:
            raise InvalidInputError("geometry quantities must be positive")
        if self.max_delay * self.sample_rate > 1.0:
            raise InvalidInputError(
                "inter-microphone delay may exceed one sample "
                f"({self.max_delay * self.sample_rate:.3f} samples)")
        if self.min_angle_separation <= 0:
            raise InvalidInputError("min_angle_separation must be positive")
        if not 0 < self.min_radius <= self.room_half_extent:
            raise InvalidInputError("need 0 < min_radius <= room_half_extent")

    @property
    def max_delay(self) -> float:
        """Largest possible |delay| between the microphones, in seconds."""
        return self.mic_distance / self.speed_of_sound

    def delay_for_angle(self, angle_deg):
        return self.max_delay * np.cos(np.deg2rad(angle_deg))


@dataclass
class Scene:
    positions: np.ndarray  # (N, 2) metres, array centred at the origin
    angles: np.ndarray     # degrees from the microphone axis
    delays: np.ndarray     # seconds; mic 2 hears s_i(t + delay_i)
    weights: np.ndarray    # sum to one

    @property
    def n_sources(self) -> int:
        return len(self.angles)

    def validate(self, geom: Geometry) -> None:
        if not angles_separated(self.angles, geom.min_angle_separation):
            raise InvalidInputError("sources closer than the minimum angular separation")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise InvalidInputError("weights must be positive and sum to one")
        if np.any(np.abs(self.delays) > geom.max_delay * (1 + 1e-12)):
            raise InvalidInputError("delay exceeds the microphone spacing")


def angles_separated(angles, min_sep: float) -> bool:
    a = np.asarray(angles, dtype=float)
    if len(a) < 2:
        return True
    diff = np.abs(a[:, None] - a[None, :])
    np.fill_diagonal(diff, np.inf)
    return bool(diff.min() > min_sep)


def sample_scene(rng: np.random.Generator, n_sources: int, geom: Geometry,
                 max_tries: int = 1000) -> Scene:
    """Draw source positions in front of the array.

    Angles are uniform on (0, 180) degrees and redrawn until every pair is
    more than ``min_angle_separation`` apart. Amplitude weights fall off as
    1/distance and are normalised to sum to one.
    """
    if n_sources < 1:
        raise InvalidInputError("need at least one source")
    angles: list[float] = []
    for _ in range(n_sources):
        for _ in range(max_tries):
            cand = float(rng.uniform(0.0, 180.0))
            if angles_separated(angles + [cand], geom.min_angle_separation):
                angles.append(cand)
                break
        else:
            raise InfeasibleSceneError(
                f"could not place {n_sources} sources {geom.min_angle_separation} deg apart")
    ang = np.array(angles)
    radius = rng.uniform(geom.min_radius, geom.room_half_extent, size=n_sources)
    rad = np.deg2rad(ang)
    positions = np.stack([radius * np.cos(rad), radius * np.sin(rad)], axis=1)
    weights = 1.0 / radius
    weights /= weights.sum()
    return Scene(positions, ang, geom.delay_for_angle(ang), weights)


def fractional_advance(x, delay: float, sample_rate: int) -> np.ndarray:
    """Return ``x(t + delay)`` via a linear phase ramp on the zero-padded DFT."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    spec = np.fft.rfft(x, nfft)
    omega = 2.0 * np.pi * np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    return np.fft.irfft(spec * np.exp(1j * omega * delay), nfft)[:n]


@dataclass
class StereoMixture:
    mic1: np.ndarray
    mic2: np.ndarray
    scene: Scene
    references: list = field(default_factory=list)  # a_i * s_i as heard at mic 1
    source_ids: list = field(default_factory=list)
    sample_rate: int = 16000

    def stereo(self) -> np.ndarray:
        return np.stack([self.mic1, self.mic2], axis=1)


def render_stereo_mixture(sources, scene: Scene, sample_rate: int,
                          source_ids=None) -> StereoMixture:
    sources = [np.asarray(s, dtype=np.float64) for s in sources]
    if len(sources) != scene.n_sources:
        raise InvalidInputError(f"{len(sources)} sources for a {scene.n_sources}-source scene")
    if len({len(s) for s in sources}) != 1 or any(s.ndim != 1 for s in sources):
        raise InvalidInputError("sources must be mono and of equal length")
    refs = [a * s for a, s in zip(scene.weights, sources)]
    mic1 = np.sum(refs, axis=0)
    mic2 = np.sum([fractional_advance(r, d, sample_rate)
                   for r, d in zip(refs, scene.delays)], axis=0)
    return StereoMixture(mic1, mic2, scene, refs, list(source_ids or []), sample_rate)
