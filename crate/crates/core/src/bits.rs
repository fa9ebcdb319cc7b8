//! Bit-width helpers.

/// `⌈log2 x⌉`, with `ceil_log2(0) == ceil_log2(1) == 0`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Bits needed to count `cells` leased cells: `⌈log2(cells + 1)⌉`.
pub fn position_bits(cells: u64) -> u32 {
    ceil_log2(cells + 1)
}

/// Two's-complement decode of an `width`-bit code.
pub fn twos_complement(code: u64, width: u32) -> i64 {
    debug_assert!((1..63).contains(&width));
    let half = 1u64 << (width - 1);
    if code >= half {
        code as i64 - (1i64 << width)
    } else {
        code as i64
    }
}

/// Two's-complement encode of `value` into `width` bits (wrapping).
pub fn twos_code(value: i64, width: u32) -> u64 {
    (value as u64) & ((1u64 << width) - 1)
}

/// Zigzag code of a signed value: 0, -1, 1, -2, 2, ... map to 0, 1, 2, 3, 4, ...
pub fn zigzag(value: i64) -> u64 {
    ((value << 1) ^ (value >> 63)) as u64
}

pub fn unzigzag(code: u64) -> i64 {
    ((code >> 1) as i64) ^ -((code & 1) as i64)
}
