"""Block-fading MIMO channel, AWGN transmit chain and QPSK modem.

Conventions used throughout the package:

* Coded bits are binary {0, 1}; their bipolar values are s = 1 - 2c, so
  binary 0 maps to +1.  A QPSK symbol carries two bipolar bits as
  (s1 + 1j*s2)/sqrt(2), giving unit symbol energy.
* All LLRs are log(P(s=+1)/P(s=-1)), i.e. positive values favour the
  bipolar +1 (binary 0) hypothesis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIGMA_X2 = 1.0  # unit average symbol energy


@dataclass(frozen=True)
class ChannelRealization:
    """One block-fading draw: gains H (M x K) and complex noise power."""

    h: np.ndarray
    sigma_n2: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.h)):
            raise ValueError("channel matrix contains non-finite entries")
        if self.sigma_n2 <= 0.0:
            raise ValueError("noise variance must be positive")


@dataclass(frozen=True)
class ModulationScheme:
    """Memoryless complex constellation with a bipolar bit labelling.

    points[i] is the symbol whose bipolar bit pattern is labels[i]
    (shape (2**bits_per_symbol, bits_per_symbol), entries +-1).
    """

    name: str
    points: np.ndarray
    labels: np.ndarray
    bits_per_symbol: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "bits_per_symbol", self.labels.shape[1])
        if len(self.points) != 2 ** self.bits_per_symbol:
            raise ValueError("constellation size must be 2**bits_per_symbol")


def make_qpsk() -> ModulationScheme:
    """Gray-mapped unit-energy QPSK: (s1 + 1j*s2)/sqrt(2)."""
    labels = np.array(
        [[+1, +1], [+1, -1], [-1, +1], [-1, -1]], dtype=np.int8
    )
    points = (labels[:, 0] + 1j * labels[:, 1]) / np.sqrt(2.0)
    return ModulationScheme("qpsk", points, labels)


QPSK = make_qpsk()


def generate_channel(m: int, k: int, rng: np.random.Generator,
                     sigma_n2: float = 1.0) -> ChannelRealization:
    """Draw an M x K IID CN(0, 1) flat-fading channel matrix."""
    if k < 1 or m < k:
        raise ValueError(f"need M >= K >= 1, got M={m}, K={k}")
    h = (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k)))
    return ChannelRealization(h / np.sqrt(2.0), sigma_n2)


def transmit(h: np.ndarray, x: np.ndarray, sigma_n2: float,
             rng: np.random.Generator) -> np.ndarray:
    """Propagate symbols through H and add CN(0, sigma_n2 I) noise.

    x may be a K-vector (one channel use) or a K x T block.
    """
    h = np.asarray(h)
    x = np.asarray(x)
    if x.shape[0] != h.shape[1]:
        raise ValueError(
            f"symbol dimension {x.shape[0]} does not match K={h.shape[1]}"
        )
    y = h @ x
    if sigma_n2 > 0.0:
        n = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        y = y + np.sqrt(sigma_n2 / 2.0) * n
    return y


def map_bits(bits: np.ndarray, scheme: ModulationScheme = QPSK) -> np.ndarray:
    """Map bipolar bits (+-1) to constellation symbols.

    The bit count must be a multiple of bits_per_symbol; consecutive
    groups form one symbol each.
    """
    bits = np.asarray(bits)
    mc = scheme.bits_per_symbol
    if bits.shape[-1] % mc:
        raise ValueError(f"bit count must be a multiple of {mc}")
    groups = bits.reshape(bits.shape[:-1] + (-1, mc))
    # Bipolar {+1,-1} -> label index, treating +1 as binary 0.
    idx = np.zeros(groups.shape[:-1], dtype=np.int64)
    for l in range(mc):
        idx = 2 * idx + (groups[..., l] < 0)
    return scheme.points[_label_order(scheme)][idx]


def hard_demap(symbols: np.ndarray,
               scheme: ModulationScheme = QPSK) -> np.ndarray:
    """Nearest-point hard decision back to bipolar bits."""
    symbols = np.asarray(symbols)
    d = np.abs(symbols[..., None] - scheme.points) ** 2
    idx = np.argmin(d, axis=-1)
    bits = scheme.labels[idx]
    return bits.reshape(symbols.shape[:-1] + (-1,))


def _label_order(scheme: ModulationScheme) -> np.ndarray:
    """Permutation such that points[order][index(label)] is consistent."""
    mc = scheme.bits_per_symbol
    order = np.empty(2 ** mc, dtype=np.int64)
    for i, lab in enumerate(scheme.labels):
        code = 0
        for l in range(mc):
            code = 2 * code + (lab[l] < 0)
        order[code] = i
    return order


def soft_symbols(le: np.ndarray, scheme: ModulationScheme = QPSK,
                 closed_form: bool = True) -> np.ndarray:
    """Posterior-mean symbols from per-bit extrinsic LLRs.

    le has shape (..., bits_per_symbol).  The general form sums the
    constellation weighted by independent per-bit probabilities; for
    QPSK this collapses to (tanh(L1/2) + 1j*tanh(L2/2))/sqrt(2) and the
    closed form is taken unless disabled.
    """
    le = np.asarray(le, dtype=np.float64)
    if le.shape[-1] != scheme.bits_per_symbol:
        raise ValueError("trailing axis must hold per-bit LLRs")
    if closed_form and scheme.name == "qpsk":
        t = np.tanh(0.5 * le)
        return (t[..., 0] + 1j * t[..., 1]) / np.sqrt(2.0)
    # P(bit = label) = sigmoid(label * L), evaluated stably in logs.
    logp = -np.logaddexp(
        0.0, -scheme.labels.T[None] * le[..., None]
    ).sum(axis=-2)
    return (np.exp(logp) * scheme.points).sum(axis=-1)


def bits_to_bipolar(c: np.ndarray) -> np.ndarray:
    """Binary {0,1} to bipolar {+1,-1}: 0 -> +1."""
    return (1 - 2 * np.asarray(c, dtype=np.int8)).astype(np.int8)


def bipolar_to_bits(s: np.ndarray) -> np.ndarray:
    """Bipolar {+1,-1} to binary {0,1}: +1 -> 0."""
    return (np.asarray(s) < 0).astype(np.int8)
