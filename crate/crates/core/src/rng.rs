//! Counter-based random numbers for reproducible parallel simulation.
//!
//! Philox4x32-10 maps a 128-bit counter and a 64-bit key to 128 random bits.
//! The key is the run seed; the counter holds the regeneration-cycle index
//! in its low word pair and a block index within the cycle in its high pair.
//! Every cycle therefore owns an independent stream that does not depend on
//! which thread simulates it or in what order.

use rand::RngCore;

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32-10 block.
pub fn philox4x32(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut x = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, x[0]);
        let (hi1, lo1) = mulhilo(M1, x[2]);
        x = [hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0];
    }
    x
}

/// Seed of replication `index` derived from a base seed: the `index + 1`-th
/// output of a SplitMix64 generator started at `seed`.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream of a single regeneration cycle.
#[derive(Debug, Clone)]
pub struct CycleStream {
    key: [u32; 2],
    cycle: u64,
    block: u64,
    buf: [u32; 4],
    pos: usize,
}

impl CycleStream {
    pub fn new(seed: u64, cycle: u64) -> Self {
        CycleStream { key: [seed as u32, (seed >> 32) as u32], cycle, block: 0, buf: [0; 4], pos: 4 }
    }

    fn refill(&mut self) {
        let ctr = [self.cycle as u32, (self.cycle >> 32) as u32, self.block as u32, (self.block >> 32) as u32];
        self.buf = philox4x32(ctr, self.key);
        self.block += 1;
        self.pos = 0;
    }
}

impl RngCore for CycleStream {
    fn next_u32(&mut self) -> u32 {
        if self.pos == 4 {
            self.refill();
        }
        let v = self.buf[self.pos];
        self.pos += 1;
        v
    }

    fn next_u64(&mut self) -> u64 {
        let lo = u64::from(self.next_u32());
        let hi = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(4) {
            let bytes = self.next_u32().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
