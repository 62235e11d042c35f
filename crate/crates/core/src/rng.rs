//! Seeded random streams.
//!
//! Every run derives one global stream and one stream per population from a
//! single `u64` seed. Streams are ChaCha8 generators distinguished by their
//! stream id, so consuming numbers in one population never shifts another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Stream id of the global (supernet sampling) stream.
pub const GLOBAL_STREAM: u64 = 0;

/// Stream id for population `layer`.
pub fn population_stream(layer: usize) -> u64 {
    layer as u64 + 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self(rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

#[derive(Serialize, Deserialize)]
struct StreamRepr {
    key: String,
    stream: u64,
    word_pos: String,
}

impl Serialize for RngStream {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        StreamRepr {
            key: hex::encode(self.0.get_seed()),
            stream: self.0.get_stream(),
            word_pos: self.0.get_word_pos().to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RngStream {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = StreamRepr::deserialize(deserializer)?;
        let key: [u8; 32] = hex::decode(&repr.key)
            .map_err(D::Error::custom)?
            .try_into()
            .map_err(|_| D::Error::custom("rng key must be 32 bytes"))?;
        let word_pos: u128 = repr.word_pos.parse().map_err(D::Error::custom)?;
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(repr.stream);
        rng.set_word_pos(word_pos);
        Ok(Self(rng))
    }
}
