"""Source providers: a self-contained synthetic voice generator and a WAV-directory adapter."""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .wavio import read_wav

GENDERS = ("f", "m")


@dataclass(frozen=True)
class Speaker:
    id: str
    gender: str


def _stable_seed(*parts) -> int:
    return zlib.crc32("/".join(map(str, parts)).encode())


class SyntheticCorpus:
    """Harmonic "voices" with speaker-specific pitch and formants.

    Each speaker gets a base pitch (female 165-255 Hz, male 90-150 Hz), a
    formant scale and a spectral tilt. Utterances are strings of voiced
    syllables with pitch glides and vibrato, some preceded by band-limited
    noise bursts, with gaps short enough that every half second carries
    energy.
    """

    def __init__(self, n_speakers_per_gender: int = 24, seed: int = 0):
        self.seed = seed
        self.speakers = [Speaker(f"{g}{i:03d}", g)
                         for g in GENDERS for i in range(n_speakers_per_gender)]
        self._voices = {s.id: self._voice(s) for s in self.speakers}

    def _voice(self, spk: Speaker) -> dict:
        rng = np.random.default_rng(_stable_seed("voice", self.seed, spk.id))
        if spk.gender == "f":
            f0 = rng.uniform(165.0, 255.0)
            formant_scale = rng.uniform(1.1, 1.3)
            tilt = rng.uniform(3.0, 6.0)
        else:
            f0 = rng.uniform(90.0, 150.0)
            formant_scale = rng.uniform(0.85, 1.0)
            tilt = rng.uniform(8.0, 12.0)
        return {
            "f0": f0,
            "formant_scale": formant_scale,
            "tilt": tilt,  # dB per octave above 500 Hz
            "vibrato_rate": rng.uniform(4.0, 7.0),
            "vibrato_depth": rng.uniform(0.01, 0.03),
        }

    def utterance(self, speaker: Speaker, rng: np.random.Generator, n_samples: int,
                  sample_rate: int) -> np.ndarray:
        voice = self._voices[speaker.id]
        out = np.zeros(n_samples)
        t0 = int(rng.uniform(0.0, 0.05) * sample_rate)
        while t0 < n_samples:
            dur = int(rng.uniform(0.12, 0.30) * sample_rate)
            seg = _syllable(voice, rng, dur, sample_rate)
            if rng.random() < 0.4:
                burst = _noise_burst(voice, rng, int(rng.uniform(0.02, 0.06) * sample_rate),
                                     sample_rate)
                seg = np.concatenate([burst, seg])
            stop = min(n_samples, t0 + len(seg))
            out[t0:stop] += seg[:stop - t0]
            t0 = stop + int(rng.uniform(0.01, 0.08) * sample_rate)
        rms = np.sqrt(np.mean(out ** 2))
        return out / rms if rms > 0 else out


# vowel formant triples (Hz) for an adult male; scaled per speaker
_VOWELS = np.array([
    [730, 1090, 2440], [270, 2290, 3010], [300, 870, 2240], [530, 1840, 2480],
    [660, 1720, 2410], [570, 840, 2410], [440, 1020, 2240], [490, 1350, 1690],
])
_BANDWIDTHS = np.array([90.0, 110.0, 170.0])


def _envelope(freqs, formants, tilt):
    """Magnitude response of a three-formant filter with spectral tilt."""
    gain = np.zeros_like(freqs)
    for fc, bw in zip(formants, _BANDWIDTHS):
        gain += 1.0 / (1.0 + ((freqs - fc) / bw) ** 2)
    octaves = np.log2(np.maximum(freqs, 500.0) / 500.0)
    return (0.05 + gain) * 10.0 ** (-tilt * octaves / 20.0)


def _fade(n, sample_rate, ramp=0.01):
    k = min(n // 2, int(ramp * sample_rate))
    env = np.ones(n)
    if k > 0:
        r = 0.5 - 0.5 * np.cos(np.pi * np.arange(k) / k)
        env[:k] = r
        env[n - k:] = r[::-1]
    return env


def _syllable(voice, rng, n, sample_rate):
    t = np.arange(n) / sample_rate
    glide = rng.uniform(-0.15, 0.15)
    f0 = voice["f0"] * rng.uniform(0.9, 1.1) * (1.0 + glide * t / max(t[-1], 1e-9))
    f0 = f0 * (1.0 + voice["vibrato_depth"] * np.sin(
        2 * np.pi * voice["vibrato_rate"] * t + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate + rng.uniform(0, 2 * np.pi)
    formants = _VOWELS[rng.integers(len(_VOWELS))] * voice["formant_scale"]
    n_harm = int(0.5 * sample_rate / f0.max())
    h = np.arange(1, n_harm + 1)[:, None]
    freqs = h * f0[None, :]
    amp = _envelope(freqs, formants, voice["tilt"]) * (freqs < 0.48 * sample_rate)
    sig = np.sum(amp * np.sin(h * phase[None, :]), axis=0)
    # syllabic amplitude contour
    contour = np.sin(np.pi * (np.arange(n) + 0.5) / n) ** 0.5
    return sig * contour * _fade(n, sample_rate)


def _noise_burst(voice, rng, n, sample_rate):
    noise = rng.standard_normal(n)
    spec = np.fft.rfft(noise)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    centre = rng.uniform(2500.0, 5000.0) * voice["formant_scale"]
    spec *= np.exp(-0.5 * ((freqs - centre) / 1000.0) ** 2)
    burst = np.fft.irfft(spec, n)
    burst /= np.sqrt(np.mean(burst ** 2)) + 1e-12
    return 0.3 * burst * _fade(n, sample_rate, 0.005)


class WavDirectoryCorpus:
    """``root/<speaker_id>/*.wav``; gender is the speaker id's first letter (f/m)."""

    def __init__(self, root, sample_rate: int = 16000):
        self.root = Path(root)
        if not self.root.is_dir():
            raise ConfigError(f"corpus directory not found: {self.root}")
        self.sample_rate = sample_rate
        self.speakers = []
        self._files = {}
        for d in sorted(p for p in self.root.iterdir() if p.is_dir()):
            gender = d.name[:1].lower()
            files = sorted(d.glob("*.wav"))
            if gender in GENDERS and files:
                spk = Speaker(d.name, gender)
                self.speakers.append(spk)
                self._files[spk.id] = files
        if not self.speakers:
            raise ConfigError(f"no speaker directories with WAV files under {self.root}")

    def utterance(self, speaker: Speaker, rng: np.random.Generator, n_samples: int,
                  sample_rate: int) -> np.ndarray:
        files = list(self._files[speaker.id])
        rng.shuffle(files)
        for path in files:
            x, _ = read_wav(path, expected_rate=sample_rate)
            if x.ndim == 2:
                x = x[:, 0]
            if len(x) < n_samples:
                continue
            start = int(rng.integers(0, len(x) - n_samples + 1))
            seg = x[start:start + n_samples]
            rms = np.sqrt(np.mean(seg ** 2))
            if rms > 0:
                return seg / rms
        raise ConfigError(f"speaker {speaker.id} has no non-silent file of {n_samples} samples")


def make_corpus(source, sample_rate: int = 16000, seed: int = 0):
    if source in (None, "synthetic"):
        return SyntheticCorpus(seed=seed)
    return WavDirectoryCorpus(source, sample_rate)
