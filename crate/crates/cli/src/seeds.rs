//! Deterministic per-run seed expansion.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// One splitmix64 output for the given state.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The `i`-th run seed is `splitmix64(master + i * golden)`.
pub fn expand(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| splitmix64(master.wrapping_add(i.wrapping_mul(GOLDEN))))
        .collect()
}
