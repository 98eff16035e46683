"""Environment models for a single cavity mode coupled to bosonic modes.

A model fixes the frequency ``omega0`` of the main mode and a list of
environment modes ``(omega_k, g_k)``.  Two families are provided, plus a
plain-text loader for arbitrary mode lists:

* :func:`build_two_mode` -- one environment mode degenerate with the main
  mode (two coupled identical cavities);
* :func:`build_flat_band` -- ``K`` equally spaced, uniformly coupled modes
  centred on ``omega0`` (discretised Wigner-Weisskopf continuum).

Units are ``hbar = 1``; times are in inverse frequency units.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import InvalidParameterError, ModelParseError

Mode = tuple[float, float]


@dataclass(frozen=True)
class SpectralModel:
    """Main-mode frequency plus the sorted environment mode list.

    ``spacing`` is set for flat-band models only and is the uniform level
    spacing of the environment grid.  ``label`` and ``spacing`` are metadata
    and do not take part in equality.
    """

    omega0: float
    modes: tuple[Mode, ...]
    label: str = field(default="custom", compare=False)
    spacing: float | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not math.isfinite(self.omega0):
            raise InvalidParameterError(f"omega0 must be finite, got {self.omega0!r}")
        modes = tuple((float(w), float(g)) for w, g in self.modes)
        if not modes:
            raise InvalidParameterError("a model needs at least one environment mode")
        for w, g in modes:
            if not (math.isfinite(w) and math.isfinite(g)):
                raise InvalidParameterError(f"non-finite mode entry ({w!r}, {g!r})")
            if g < 0.0:
                raise InvalidParameterError(f"coupling must be non-negative, got g={g!r} at omega={w!r}")
        if not any(g > 0.0 for _, g in modes):
            raise InvalidParameterError("at least one coupling must be positive")
        # stable sort keeps input order among equal frequencies
        modes = tuple(sorted(modes, key=lambda m: m[0]))
        object.__setattr__(self, "omega0", float(self.omega0))
        object.__setattr__(self, "modes", modes)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def frequencies(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.modes)

    @property
    def couplings(self) -> tuple[float, ...]:
        return tuple(g for _, g in self.modes)

    @property
    def coupling_variance(self) -> float:
        """Energy variance of the initial one-photon state, ``sum_k g_k**2``."""
        return math.fsum(g * g for _, g in self.modes)

    def predicted_gamma(self) -> float:
        """Golden-rule decay rate ``2 pi g**2 dn/dOmega`` with ``dn/dOmega = 1/spacing``.

        Only defined for flat-band models.
        """
        if self.spacing is None:
            raise InvalidParameterError("predicted_gamma needs a flat-band model")
        g = self.modes[0][1]
        return 2.0 * math.pi * g * g / self.spacing

    def recurrence_time(self) -> float:
        """``2 pi / spacing``; a flat band stops mimicking a continuum beyond it."""
        if self.spacing is None:
            raise InvalidParameterError("recurrence_time needs a flat-band model")
        return 2.0 * math.pi / self.spacing


def _check_coupling(g: float) -> float:
    g = float(g)
    if not math.isfinite(g) or g <= 0.0:
        raise InvalidParameterError(f"coupling g must be finite and > 0, got {g!r}")
    return g


def build_two_mode(omega0: float, g: float) -> SpectralModel:
    """One environment mode at ``omega0`` coupled with strength ``g``."""
    g = _check_coupling(g)
    if not math.isfinite(omega0):
        raise InvalidParameterError(f"omega0 must be finite, got {omega0!r}")
    return SpectralModel(float(omega0), ((float(omega0), g),), label="two_mode")


def build_flat_band(omega0: float, g: float, K: int, W: float) -> SpectralModel:
    """``K`` modes uniformly spread over ``[omega0 - W/2, omega0 + W/2]``.

    ``K`` must be odd so that one mode sits exactly on ``omega0``.  The
    spacing ``W / (K - 1)`` is kept on the model for decay-rate predictions.
    """
    g = _check_coupling(g)
    if isinstance(K, bool) or int(K) != K:
        raise InvalidParameterError(f"K must be an integer, got {K!r}")
    K = int(K)
    if K < 3 or K % 2 == 0:
        raise InvalidParameterError(f"K must be odd and >= 3, got {K}")
    W = float(W)
    if not math.isfinite(W) or W <= 0.0:
        raise InvalidParameterError(f"bandwidth W must be finite and > 0, got {W!r}")
    if not math.isfinite(omega0):
        raise InvalidParameterError(f"omega0 must be finite, got {omega0!r}")
    d = W / (K - 1)
    half = (K - 1) // 2
    # integer offsets from the centre keep the grid exactly symmetric
    modes = tuple((omega0 + (j - half) * d, g) for j in range(K))
    return SpectralModel(float(omega0), modes, label="flat_band", spacing=d)


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_MODE_RE = re.compile(rf"^\s*({_NUMBER})\s*,\s*({_NUMBER})\s*$")


def _parse_number(text: str, lineno: int) -> float:
    text = text.strip()
    if not re.fullmatch(_NUMBER, text):
        raise ModelParseError(f"line {lineno}: expected a number, got {text!r}")
    return float(text)


def load_custom(source: Union[str, Path]) -> SpectralModel:
    """Parse the line-oriented custom model format.

    ::

        # comment
        omega0 = 0
        mode = -1.0, 0.1
        mode = 1.0, 0.1

    ``source`` is the text itself, or a :class:`~pathlib.Path` to read.
    """
    if isinstance(source, Path):
        text = source.read_text()
        label = source.stem
    else:
        text = source
        label = "custom"

    omega0: float | None = None
    modes: list[Mode] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelParseError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "omega0":
            if omega0 is not None:
                raise ModelParseError(f"line {lineno}: omega0 given twice")
            omega0 = _parse_number(value, lineno)
        elif key == "mode":
            m = _MODE_RE.match(value)
            if m is None:
                raise ModelParseError(f"line {lineno}: expected 'mode = <omega>,<g>', got {value!r}")
            modes.append((float(m.group(1)), float(m.group(2))))
        else:
            raise ModelParseError(f"line {lineno}: unknown key {key!r}")

    if omega0 is None:
        raise ModelParseError("missing omega0")
    if not modes:
        raise ModelParseError("empty mode list")
    _reject_degenerate_uncoupled(modes)
    return SpectralModel(omega0, tuple(modes), label=label)


def _reject_degenerate_uncoupled(modes: Sequence[Mode]) -> None:
    seen: dict[float, list[float]] = {}
    for w, g in modes:
        seen.setdefault(w, []).append(g)
    for w, gs in seen.items():
        if len(gs) > 1 and any(g == 0.0 for g in gs):
            raise ModelParseError(f"duplicate frequency {w!r} with a zero coupling")


def dump_custom(model: SpectralModel) -> str:
    """Serialise ``model`` in the custom text format, lossless under :func:`load_custom`."""
    lines = [f"# {model.label}", f"omega0 = {model.omega0!r}"]
    lines += [f"mode = {w!r}, {g!r}" for w, g in model.modes]
    return "\n".join(lines) + "\n"


def from_modes(omega0: float, modes: Iterable[Mode], label: str = "custom") -> SpectralModel:
    """Convenience constructor from any iterable of ``(omega_k, g_k)`` pairs."""
    return SpectralModel(float(omega0), tuple(modes), label=label)
