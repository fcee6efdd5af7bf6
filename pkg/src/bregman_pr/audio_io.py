"""Time-domain signals, WAV file I/O and the measurement CSV format.

No math lives here: everything is parsing, validation and serialization.
WAV support covers RIFF PCM (8/16/24/32-bit integer) and IEEE-float
(32/64-bit) files; writing is limited to 16-bit PCM and 32-bit float.
"""

import struct
import warnings
from dataclasses import dataclass

import numpy as np


class WavFormatError(ValueError):
    """Malformed or unsupported WAV content, naming the offending chunk."""


@dataclass
class TimeSignal:
    """Real-valued sample sequence with its sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite (no NaN/Inf)")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)

    def __len__(self):
        return self.samples.size


@dataclass
class Measurements:
    """Nonnegative time-frequency measurement grid r with its power exponent.

    ``values[m, n]`` is the measurement for frequency bin m of frame n;
    ``power`` records whether the grid holds magnitudes (d=1) or powers
    (d=2).  STFT geometry (hop, window length, sample rate) travels with
    the grid so files are self-describing; the bin count doubles as the
    FFT size.
    """

    values: np.ndarray
    power: int
    sample_rate: int
    hop: int
    win_len: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D (bins x frames) array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("measurement values must be finite")
        if np.any(self.values < 0):
            m, n = np.argwhere(self.values < 0)[0]
            raise ValueError(f"negative measurement at bin {m}, frame {n}")
        if self.power not in (1, 2):
            raise ValueError(f"power must be 1 or 2, got {self.power}")

    @property
    def bins(self):
        return self.values.shape[0]

    @property
    def frames(self):
        return self.values.shape[1]

    def target_magnitudes(self):
        """The magnitude-domain targets r**(1/d)."""
        if self.power == 1:
            return self.values
        return np.sqrt(self.values)


# --------------------------------------------------------------------------
# WAV

_PCM = 1
_IEEE_FLOAT = 3


def _read_chunk_header(buf, offset, context):
    if offset + 8 > len(buf):
        raise WavFormatError(f"truncated {context} chunk header")
    cid = buf[offset:offset + 4]
    size = struct.unpack_from("<I", buf, offset + 4)[0]
    return cid, size


def read_wav(path):
    """Read a WAV file, returning channel 0 as a TimeSignal in [-1, 1].

    Integer PCM samples are scaled by 2**(bits-1); float files pass
    through unchanged.  Multichannel files keep only channel 0, with a
    warning on the diagnostic stream.
    """
    with open(path, "rb") as fh:
        buf = fh.read()

    if len(buf) < 12 or buf[0:4] != b"RIFF" or buf[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    offset = 12
    while offset + 8 <= len(buf):
        cid, size = _read_chunk_header(buf, offset, "RIFF")
        body = buf[offset + 8:offset + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(
                    f"{path}: truncated 'fmt ' chunk ({len(body)} of 16 bytes)")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if len(body) < size:
                raise WavFormatError(
                    f"{path}: truncated 'data' chunk "
                    f"({len(body)} of {size} bytes)")
            data = body
        offset += 8 + size + (size & 1)

    if fmt is None:
        raise WavFormatError(f"{path}: missing 'fmt ' chunk")
    if data is None:
        raise WavFormatError(f"{path}: missing 'data' chunk")

    code, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1:
        raise WavFormatError(f"{path}: 'fmt ' chunk declares zero channels")

    if code == _PCM:
        if bits == 8:
            raw = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
            samples = (raw - 128.0) / 128.0
        elif bits == 16:
            raw = np.frombuffer(data, dtype="<i2")
            samples = raw.astype(np.float64) / 32768.0
        elif bits == 24:
            b = np.frombuffer(data, dtype=np.uint8)
            b = b[:len(b) - len(b) % 3].reshape(-1, 3).astype(np.int64)
            raw = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
            raw[raw >= 1 << 23] -= 1 << 24
            samples = raw.astype(np.float64) / float(1 << 23)
        elif bits == 32:
            raw = np.frombuffer(data, dtype="<i4")
            samples = raw.astype(np.float64) / float(1 << 31)
        else:
            raise WavFormatError(
                f"{path}: 'fmt ' chunk has unsupported PCM depth {bits}")
    elif code == _IEEE_FLOAT:
        if bits == 32:
            samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
        elif bits == 64:
            samples = np.frombuffer(data, dtype="<f8").astype(np.float64)
        else:
            raise WavFormatError(
                f"{path}: 'fmt ' chunk has unsupported float depth {bits}")
    else:
        raise WavFormatError(
            f"{path}: 'fmt ' chunk has unsupported format code {code}")

    if n_channels > 1:
        warnings.warn(
            f"{path}: {n_channels} channels, using channel 0 only",
            stacklevel=2)
        samples = samples[::n_channels]
    samples = np.ascontiguousarray(samples)
    if samples.size == 0:
        raise WavFormatError(f"{path}: 'data' chunk holds no samples")
    return TimeSignal(samples, sample_rate)


def write_wav(signal, path, bit_depth=16):
    """Write a TimeSignal as RIFF WAV.

    ``bit_depth`` is 16 (integer PCM; out-of-range samples hard-clipped,
    with the clip count reported as a warning) or the string "32-float"
    (IEEE float32, no clipping).
    """
    if bit_depth == 16:
        scaled = np.round(signal.samples * 32768.0)
        clipped = int(np.count_nonzero((scaled > 32767.0) | (scaled < -32768.0)))
        if clipped:
            warnings.warn(
                f"{path}: hard-clipped {clipped} samples to 16-bit range",
                stacklevel=2)
        payload = np.clip(scaled, -32768, 32767).astype("<i2").tobytes()
        code, bits = _PCM, 16
    elif bit_depth in ("32-float", "32f"):
        payload = signal.samples.astype("<f4").tobytes()
        code, bits = _IEEE_FLOAT, 32
    else:
        raise ValueError(f"bit_depth must be 16 or '32-float', got {bit_depth!r}")

    block_align = bits // 8
    byte_rate = signal.sample_rate * block_align
    fmt_body = struct.pack("<HHIIHH", code, 1, signal.sample_rate,
                           byte_rate, block_align, bits)
    chunks = [(b"fmt ", fmt_body)]
    if code == _IEEE_FLOAT:
        chunks.append((b"fact", struct.pack("<I", len(signal))))
    chunks.append((b"data", payload))

    out = bytearray()
    for cid, body in chunks:
        out += cid + struct.pack("<I", len(body)) + body
        if len(body) & 1:
            out += b"\x00"
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + len(out)) + b"WAVE")
        fh.write(out)


# --------------------------------------------------------------------------
# Measurement CSV

_HEADER_KEYS = ("bins", "frames", "power", "sample_rate", "hop", "win")


def write_measurements(m, path):
    """Serialize a measurement grid as header + one CSV line per frame."""
    lines = [
        f"# bins={m.bins} frames={m.frames} power={m.power} "
        f"sample_rate={m.sample_rate} hop={m.hop} win={m.win_len}"
    ]
    for n in range(m.frames):
        lines.append(",".join(f"{v:.12g}" for v in m.values[:, n]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_measurements(path):
    """Parse a measurement CSV, validating header and grid shape."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing '# bins=... frames=...' header line")

    fields = {}
    for token in lines[0][1:].split():
        if "=" not in token:
            raise ValueError(f"{path}: malformed header token {token!r}")
        key, _, val = token.partition("=")
        fields[key] = val
    missing = [k for k in _HEADER_KEYS if k not in fields]
    if missing:
        raise ValueError(f"{path}: header missing {', '.join(missing)}")
    try:
        bins = int(fields["bins"])
        frames = int(fields["frames"])
        power = int(fields["power"])
        sample_rate = int(fields["sample_rate"])
        hop = int(fields["hop"])
        win = int(fields["win"])
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer header field: {exc}") from None

    body = lines[1:]
    if len(body) != frames:
        raise ValueError(
            f"{path}: header declares {frames} frames but file has "
            f"{len(body)} data lines")

    values = np.empty((bins, frames), dtype=np.float64)
    for n, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != bins:
            raise ValueError(
                f"{path}: line {n + 2} has {len(parts)} values, expected {bins}")
        for m_idx, part in enumerate(parts):
            try:
                v = float(part)
            except ValueError:
                raise ValueError(
                    f"{path}: line {n + 2}, column {m_idx + 1}: "
                    f"unparseable value {part!r}") from None
            if not np.isfinite(v):
                raise ValueError(
                    f"{path}: line {n + 2}, column {m_idx + 1}: "
                    f"non-finite value {part!r}")
            if v < 0:
                raise ValueError(
                    f"{path}: line {n + 2}, column {m_idx + 1}: "
                    f"negative value {part!r}")
            values[m_idx, n] = v

    return Measurements(values, power, sample_rate, hop, win)
