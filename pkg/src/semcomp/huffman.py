"""Canonical Huffman coding over arbitrary symbol alphabets.

Symbols can be anything ordered and hashable (characters, K-character
blocks, integer indices or cluster labels). Codes are canonical and all
tie-breaking is pinned down, so the encoder and decoder can each build the
identical code from a shared frequency table and no tree ever travels
in-band. Reported bit counts are payload only.
"""

import heapq
from dataclasses import dataclass, field

from .errors import TruncationError, UnknownSymbolError

__all__ = [
    "FrequencyTable",
    "HuffmanCode",
    "BitStream",
    "count_frequencies",
    "build_code",
    "encode",
    "decode",
    "total_bits",
    "block_symbolize",
    "join_blocks",
    "PAD_CHAR",
]

PAD_CHAR = "\x00"


@dataclass
class FrequencyTable:
    """Symbol weights with the alphabet held in canonical ascending order."""

    alphabet: list
    counts: list

    def __post_init__(self):
        if len(self.alphabet) < 1:
            raise ValueError("alphabet must have at least one symbol")
        if len(self.alphabet) != len(self.counts):
            raise ValueError("alphabet and counts lengths differ")
        if any(c <= 0 for c in self.counts):
            raise ValueError("counts must be strictly positive")
        order = sorted(range(len(self.alphabet)), key=lambda i: self.alphabet[i])
        self.alphabet = [self.alphabet[i] for i in order]
        self.counts = [self.counts[i] for i in order]
        if any(self.alphabet[i] == self.alphabet[i + 1] for i in range(len(self.alphabet) - 1)):
            raise ValueError("alphabet symbols must be distinct")


@dataclass
class HuffmanCode:
    """Canonical prefix code: shorter codes numerically precede longer ones,
    equal lengths are ordered by symbol identity."""

    code_lengths: dict
    codewords: dict = field(default=None)

    def __post_init__(self):
        if self.codewords is None:
            self.codewords = _canonical_codewords(self.code_lengths)

    def __len__(self):
        return len(self.code_lengths)

    def kraft_sum_num_den(self):
        """Kraft sum as an exact (numerator, denominator) pair."""
        max_len = max(self.code_lengths.values())
        num = sum(1 << (max_len - l) for l in self.code_lengths.values())
        return num, 1 << max_len


def count_frequencies(symbols) -> FrequencyTable:
    """Exact multiplicities of a non-empty symbol stream."""
    counts = {}
    for s in symbols:
        counts[s] = counts.get(s, 0) + 1
    if not counts:
        raise ValueError("cannot count frequencies of an empty stream")
    alphabet = sorted(counts)
    return FrequencyTable(alphabet, [counts[s] for s in alphabet])


def build_code(freqs: FrequencyTable) -> HuffmanCode:
    """Optimal prefix code lengths for the weights, canonically assigned.

    Merge ties break on (weight, smallest contained symbol) so the result is
    a pure function of the frequency table. A single-symbol alphabet gets a
    1-bit code to keep bit accounting defined for degenerate streams.
    """
    n = len(freqs.alphabet)
    if n == 1:
        return HuffmanCode({freqs.alphabet[0]: 1})

    # Heap entries: (weight, min symbol rank, leaf ranks). The rank is the
    # symbol's position in the canonical alphabet; min-rank is unique per
    # node, so ordering is total without comparing payloads.
    heap = [(w, i, [i]) for i, w in enumerate(freqs.counts)]
    heapq.heapify(heap)
    depths = [0] * n
    while len(heap) > 1:
        w1, r1, leaves1 = heapq.heappop(heap)
        w2, r2, leaves2 = heapq.heappop(heap)
        for leaf in leaves1:
            depths[leaf] += 1
        for leaf in leaves2:
            depths[leaf] += 1
        merged = leaves1 + leaves2
        heapq.heappush(heap, (w1 + w2, min(r1, r2), merged))

    lengths = {freqs.alphabet[i]: depths[i] for i in range(n)}
    return HuffmanCode(lengths)


def _canonical_codewords(code_lengths: dict) -> dict:
    ordered = sorted(code_lengths.items(), key=lambda kv: (kv[1], kv[0]))
    codewords = {}
    code = 0
    prev_len = ordered[0][1]
    for symbol, length in ordered:
        code <<= length - prev_len
        codewords[symbol] = (code, length)
        code += 1
        prev_len = length
    return codewords


@dataclass
class BitStream:
    """Packed bits, most significant bit first within each byte."""

    data: bytes
    bit_length: int

    def __post_init__(self):
        if self.bit_length > 8 * len(self.data):
            raise ValueError("bit_length exceeds available bytes")
        if self.bit_length < 8 * len(self.data) - 7:
            raise ValueError("more bytes than the bit_length needs")
        pad = 8 * len(self.data) - self.bit_length
        if pad and self.data and self.data[-1] & ((1 << pad) - 1):
            raise ValueError("trailing pad bits must be zero")

    def to_bytes(self) -> bytes:
        """Serialized form: 8-byte little-endian bit count, then the bits."""
        return self.bit_length.to_bytes(8, "little") + self.data

    @classmethod
    def from_bytes(cls, raw: bytes) -> "BitStream":
        if len(raw) < 8:
            raise ValueError("bitstream blob shorter than its header")
        bit_length = int.from_bytes(raw[:8], "little")
        return cls(raw[8:], bit_length)

    def bits(self):
        """Iterate bits as 0/1 ints."""
        data = self.data
        for i in range(self.bit_length):
            yield (data[i >> 3] >> (7 - (i & 7))) & 1


class _BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self.acc = 0
        self.nacc = 0
        self.bit_length = 0

    def write(self, value: int, length: int):
        self.acc = (self.acc << length) | value
        self.nacc += length
        self.bit_length += length
        while self.nacc >= 8:
            self.nacc -= 8
            self.buf.append((self.acc >> self.nacc) & 0xFF)
        self.acc &= (1 << self.nacc) - 1

    def finish(self) -> BitStream:
        if self.nacc:
            self.buf.append((self.acc << (8 - self.nacc)) & 0xFF)
        return BitStream(bytes(self.buf), self.bit_length)


def encode(symbols, code: HuffmanCode) -> BitStream:
    """Concatenated codewords for the symbol sequence."""
    writer = _BitWriter()
    codewords = code.codewords
    for s in symbols:
        try:
            value, length = codewords[s]
        except KeyError:
            raise UnknownSymbolError(f"symbol {s!r} is not in the code alphabet") from None
        writer.write(value, length)
    return writer.finish()


def decode(stream: BitStream, code: HuffmanCode, n_symbols: int):
    """First n_symbols symbols of the stream; exact inverse of encode."""
    lookup = {vl: s for s, vl in code.codewords.items()}
    out = []
    value = 0
    length = 0
    bit_iter = stream.bits()
    while len(out) < n_symbols:
        try:
            bit = next(bit_iter)
        except StopIteration:
            raise TruncationError(
                f"bitstream exhausted after {len(out)} of {n_symbols} symbols"
            ) from None
        value = (value << 1) | bit
        length += 1
        symbol = lookup.get((value, length))
        if symbol is not None:
            out.append(symbol)
            value = 0
            length = 0
    return out


def total_bits(symbols, code: HuffmanCode) -> int:
    """Payload size in bits; equals encode(symbols, code).bit_length."""
    lengths = code.code_lengths
    try:
        return sum(lengths[s] for s in symbols)
    except KeyError as e:
        raise UnknownSymbolError(f"symbol {e.args[0]!r} is not in the code alphabet") from None


def block_symbolize(text: str, k: int):
    """Split text into K-character symbols (Unicode scalars, not bytes).

    Returns (symbols, char_count); a final partial block is padded with NUL
    and the true character count rides outside the measured payload.
    """
    if k < 1:
        raise ValueError("block size must be >= 1")
    symbols = [text[i : i + k] for i in range(0, len(text), k)]
    if symbols and len(symbols[-1]) < k:
        symbols[-1] = symbols[-1] + PAD_CHAR * (k - len(symbols[-1]))
    return symbols, len(text)


def join_blocks(symbols, char_count: int) -> str:
    """Inverse of block_symbolize given the true character count."""
    return "".join(symbols)[:char_count]
