import hashlib


def recorded_vector(text: str, dim: int) -> list[float]:
    """Deterministic stand-in for a live encoder: hash-derived floats in [-1, 1).

    Pure byte arithmetic, so the recorded golden files reproduce on any
    platform or library version.
    """
    raw = hashlib.shake_256(text.encode("utf-8")).digest(dim * 8)
    return [
        int.from_bytes(raw[8 * i : 8 * (i + 1)], "big") / 2.0**64 * 2.0 - 1.0
        for i in range(dim)
    ]


def recorded_encoder(dim: int):
    def encode(texts: list[str]) -> list[list[float]]:
        return [recorded_vector(t, dim) for t in texts]

    return encode
