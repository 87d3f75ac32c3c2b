//! Counter-based random streams.
//!
//! Every stream is a ChaCha20 keystream addressed by `(seed, stream id, key
//! extra)` in the key and by the replication index in the 64-bit stream
//! number, so replication `r` draws the same numbers whether it runs first,
//! last, or on another thread.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream identifiers. Distinct ids never share a keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamId {
    Noise = 1,
    Design = 2,
    Auxiliary = 3,
}

pub fn stream(seed: u64, id: StreamId, extra: u64, replication: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(id as u64).to_le_bytes());
    key[16..24].copy_from_slice(&extra.to_le_bytes());
    key[24..].copy_from_slice(b"ricsel/1");
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(replication);
    rng
}
