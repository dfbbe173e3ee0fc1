"""Monte Carlo BER evaluation over AWGN and i.i.d. Rayleigh fading.

SNR convention: the x-axis is Eb/N0 with unit average vector energy
(Es = 1) and Eb = 1/log2(M), so the per-complex-dimension noise variance
is n0 = 1 / (log2(M) * 10^(EbN0_dB/10)). Fading is unit-variance circular
complex Gaussian, drawn independently per dimension and per transmitted
vector (fast fading / ideal interleaving), and known at the receiver.

Each SNR point runs on its own RNG substream seeded from (seed, point
index), so points are independent and the sweep is reproducible.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constellation import Constellation, average_power
from .scma import SCMACodebookSet, mpa_detect_batch

#: Vectors simulated per RNG draw; fixed so seeds determine draw order.
CHUNK = 20_000


def bits_per_symbol(M: int) -> int:
    b = int(round(math.log2(M)))
    if 2**b != M:
        raise ValueError(f"M={M} is not a power of 2; natural labeling needs one")
    return b


def map_bits(bits) -> int:
    """Natural labeling: big-endian bits -> 0-based column index."""
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError("bits must be 0/1")
        idx = (idx << 1) | b
    return idx


def demap(index: int, nbits: int) -> tuple:
    if not (0 <= index < 2**nbits):
        raise ValueError(f"index {index} out of range for {nbits} bits")
    return tuple((index >> (nbits - 1 - i)) & 1 for i in range(nbits))


def _popcount_table(nbits: int) -> np.ndarray:
    return np.array([bin(v).count("1") for v in range(2**nbits)], dtype=np.int64)


@dataclass(frozen=True)
class SNRSpec:
    ebn0_db_list: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "ebn0_db_list", tuple(float(v) for v in self.ebn0_db_list)
        )

    def noise_variance(self, M: int, ebn0_db: float) -> float:
        """n0 per complex dimension for unit vector energy."""
        return 1.0 / (bits_per_symbol(M) * 10.0 ** (ebn0_db / 10.0))


@dataclass
class BERCurve:
    points: list  # dicts: ebn0_db, errors, bits, ber, vectors, seed
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["ebn0_db,errors,bits,ber,vectors,seed"]
        for p in self.points:
            lines.append(
                f"{p['ebn0_db']:g},{p['errors']},{p['bits']},"
                f"{p['ber']:.10e},{p['vectors']},{p['seed']}"
            )
        return "\n".join(lines) + "\n"

    def save_csv(self, path: str) -> None:
        d = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(self.to_csv())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def bers(self) -> np.ndarray:
        return np.array([p["ber"] for p in self.points])


def ml_detect(y: np.ndarray, h: np.ndarray, C: Constellation) -> int:
    """argmin_m sum_k |y_k - h_k x_{m,k}|^2; ties go to the lowest index."""
    return int(kernels.ml_detect_batch(y[None, :], h[None, :], C.points)[0])


def _point_rng(seed: int, point_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, point_index]))


def simulate_p2p(
    C: Constellation,
    channel: str,
    snr: SNRSpec,
    seed: int,
    min_bit_errors: int = 200,
    max_vectors: int = 10_000_000,
    noise_free: bool = False,
) -> BERCurve:
    """Point-to-point transmission with per-vector ML detection."""
    if channel not in ("awgn", "rayleigh_iid"):
        raise ValueError(f"unknown channel {channel!r}")
    K, M = C.K, C.M
    nbits = bits_per_symbol(M)
    if abs(average_power(C) - 1.0) > 1e-9:
        import warnings

        warnings.warn(
            f"constellation average power is {average_power(C):.6f}, not 1; "
            "Eb/N0 calibration assumes unit power"
        )
    pop = _popcount_table(nbits)
    pts = []
    for pi, ebn0 in enumerate(snr.ebn0_db_list):
        n0 = snr.noise_variance(M, ebn0)
        rng = _point_rng(seed, pi)
        errors = 0
        bits = 0
        vectors = 0
        while vectors < max_vectors and errors < min_bit_errors:
            B = min(CHUNK, max_vectors - vectors)
            tx = rng.integers(0, M, size=B)
            if channel == "rayleigh_iid":
                h = (rng.standard_normal((B, K)) + 1j * rng.standard_normal((B, K))) / math.sqrt(2)
            else:
                h = np.ones((B, K), dtype=np.complex128)
            y = h * C.points[:, tx].T
            if not noise_free:
                y = y + math.sqrt(n0 / 2) * (
                    rng.standard_normal((B, K)) + 1j * rng.standard_normal((B, K))
                )
            rx = kernels.ml_detect_batch(y, h, C.points)
            errors += int(np.sum(pop[np.bitwise_xor(tx, rx)]))
            bits += B * nbits
            vectors += B
        pts.append(
            {
                "ebn0_db": ebn0,
                "errors": errors,
                "bits": bits,
                "ber": errors / bits,
                "vectors": vectors,
                "seed": seed,
            }
        )
    return BERCurve(
        points=pts,
        meta={
            "kind": "p2p",
            "channel": channel,
            "detector": "ml",
            "K": K,
            "M": M,
            "min_bit_errors": min_bit_errors,
            "max_vectors": max_vectors,
            "noise_free": noise_free,
        },
    )


def simulate_scma_uplink(
    cbs: SCMACodebookSet,
    snr: SNRSpec,
    seed: int,
    min_bit_errors: int = 200,
    max_vectors: int = 1_000_000,
    mpa_iters: int = 10,
    noise_free: bool = False,
) -> BERCurve:
    """Uplink SCMA over i.i.d. Rayleigh fading with MPA detection.

    Every user-resource link fades independently per transmitted vector;
    bit errors are counted across all users. Per-user error counts are
    kept in each point record.
    """
    J, N, M = cbs.J, cbs.N, cbs.M
    nbits = bits_per_symbol(M)
    pop = _popcount_table(nbits)
    pts = []
    for pi, ebn0 in enumerate(snr.ebn0_db_list):
        n0 = snr.noise_variance(M, ebn0)
        n0_detect = max(n0 if not noise_free else 0.0, 1e-9)
        rng = _point_rng(seed, pi)
        errors = 0
        bits = 0
        vectors = 0
        per_user = np.zeros(J, dtype=np.int64)
        while vectors < max_vectors and errors < min_bit_errors:
            B = min(2_000, max_vectors - vectors)
            tx = rng.integers(0, M, size=(B, J))
            H = (
                rng.standard_normal((B, N, J)) + 1j * rng.standard_normal((B, N, J))
            ) / math.sqrt(2)
            y = np.einsum("bnj,bjn->bn", H, cbs.codebooks[np.arange(J), :, tx])
            if not noise_free:
                y = y + math.sqrt(n0 / 2) * (
                    rng.standard_normal((B, N)) + 1j * rng.standard_normal((B, N))
                )
            _, hard = mpa_detect_batch(y, H, cbs, n0_detect, mpa_iters)
            errbits = pop[np.bitwise_xor(tx, hard)]
            errors += int(errbits.sum())
            per_user += errbits.sum(axis=0)
            bits += B * J * nbits
            vectors += B
        pts.append(
            {
                "ebn0_db": ebn0,
                "errors": errors,
                "bits": bits,
                "ber": errors / bits,
                "vectors": vectors,
                "seed": seed,
                "per_user_errors": per_user.tolist(),
            }
        )
    return BERCurve(
        points=pts,
        meta={
            "kind": "scma_uplink",
            "channel": "rayleigh_iid",
            "detector": f"mpa({mpa_iters})",
            "J": J,
            "N": N,
            "M": M,
            "min_bit_errors": min_bit_errors,
            "max_vectors": max_vectors,
            "noise_free": noise_free,
        },
    )
