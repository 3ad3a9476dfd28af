"""
Fixed-width bit string helpers
"""


def to_bits(value: int, width: int) -> str:
    if width == 0:
        return ""
    return format(value, f"0{width}b")


def from_bits(bits: str) -> int:
    return int(bits, 2) if bits else 0


def hex_digits(width: int) -> int:
    return max(1, (width + 3) // 4)


def to_hex(value: int, width: int) -> str:
    return format(value, f"0{hex_digits(width)}x")


def from_hex(text: str) -> int:
    return int(text, 16)


def is_bit_string(text: str) -> bool:
    return all(ch in "01" for ch in text)
