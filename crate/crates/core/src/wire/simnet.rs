//! A deterministic in-process network on a manual clock.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::protocol::{Clock, ManualClock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "ms")]
pub enum Fault {
    None,
    /// Extra delay on top of the link latency.
    Delay(u64),
    /// Deliver the same bytes twice.
    Duplicate,
    Drop,
    /// Hold the message back until after the next one sent.
    Reorder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub seq: u64,
    pub arrive_at_ms: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug)]
pub struct SimNet {
    clock: ManualClock,
    rng: ChaCha20Rng,
    latency_ms: u64,
    jitter_ms: u64,
    seq: u64,
    held: Vec<(u64, Vec<u8>)>,
    transcript: Vec<Vec<u8>>,
}

impl SimNet {
    pub fn new(clock: ManualClock, seed: u64) -> Self {
        SimNet {
            clock,
            rng: ChaCha20Rng::seed_from_u64(seed),
            latency_ms: 5,
            jitter_ms: 3,
            seq: 0,
            held: Vec::new(),
            transcript: Vec::new(),
        }
    }

    pub fn with_latency(mut self, latency_ms: u64, jitter_ms: u64) -> Self {
        self.latency_ms = latency_ms;
        self.jitter_ms = jitter_ms;
        self
    }

    pub fn clock(&self) -> &ManualClock {
        &self.clock
    }

    /// Every byte string handed to the network, in send order.
    pub fn transcript(&self) -> &[Vec<u8>] {
        &self.transcript
    }

    pub fn clear_transcript(&mut self) {
        self.transcript.clear();
    }

    fn link_delay(&mut self) -> u64 {
        self.latency_ms + self.rng.next_u64() % (self.jitter_ms + 1)
    }

    /// Send `bytes` now and return the resulting deliveries in arrival
    /// order. Messages held by an earlier `Reorder` are released after this
    /// one.
    pub fn deliver(&mut self, bytes: &[u8], fault: Fault) -> Vec<Delivery> {
        self.transcript.push(bytes.to_vec());
        let seq = self.seq;
        self.seq += 1;
        let now = self.clock.now_ms();
        if fault == Fault::Reorder {
            self.held.push((seq, bytes.to_vec()));
            return Vec::new();
        }
        let mut out = Vec::new();
        let arrive = now + self.link_delay();
        match fault {
            Fault::None => out.push(Delivery {
                seq,
                arrive_at_ms: arrive,
                bytes: bytes.to_vec(),
            }),
            Fault::Delay(extra) => out.push(Delivery {
                seq,
                arrive_at_ms: arrive + extra,
                bytes: bytes.to_vec(),
            }),
            Fault::Duplicate => {
                out.push(Delivery {
                    seq,
                    arrive_at_ms: arrive,
                    bytes: bytes.to_vec(),
                });
                out.push(Delivery {
                    seq,
                    arrive_at_ms: arrive + 1,
                    bytes: bytes.to_vec(),
                });
            }
            Fault::Drop | Fault::Reorder => {}
        }
        let last = out.last().map_or(arrive, |d| d.arrive_at_ms);
        for (i, (held_seq, held)) in std::mem::take(&mut self.held).into_iter().enumerate() {
            out.push(Delivery {
                seq: held_seq,
                arrive_at_ms: last + 1 + i as u64,
                bytes: held,
            });
        }
        out
    }

    /// Release anything still held back.
    pub fn flush(&mut self) -> Vec<Delivery> {
        let now = self.clock.now_ms();
        let held = std::mem::take(&mut self.held);
        held.into_iter()
            .enumerate()
            .map(|(i, (seq, bytes))| Delivery {
                seq,
                arrive_at_ms: now + self.latency_ms + i as u64,
                bytes,
            })
            .collect()
    }

    /// Move the clock forward to `at_ms` if it is behind.
    pub fn arrive(&self, delivery: &Delivery) {
        if self.clock.now_ms() < delivery.arrive_at_ms {
            self.clock.set(delivery.arrive_at_ms);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(seed: u64) -> SimNet {
        SimNet::new(ManualClock::new(1000), seed)
    }

    #[test]
    fn deterministic_under_seed() {
        let run = |seed| {
            let mut n = net(seed);
            (0..20)
                .flat_map(|i| n.deliver(&[i], Fault::None))
                .map(|d| d.arrive_at_ms)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn duplicate_is_byte_identical() {
        let mut n = net(1);
        let d = n.deliver(b"req", Fault::Duplicate);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].bytes, d[1].bytes);
        assert!(d[1].arrive_at_ms > d[0].arrive_at_ms);
    }

    #[test]
    fn drop_delay_and_reorder() {
        let mut n = net(1).with_latency(5, 0);
        assert!(n.deliver(b"a", Fault::Drop).is_empty());
        let d = n.deliver(b"b", Fault::Delay(10_000));
        assert_eq!(d[0].arrive_at_ms, 1000 + 5 + 10_000);
        assert!(n.deliver(b"c", Fault::Reorder).is_empty());
        let d = n.deliver(b"d", Fault::None);
        let order: Vec<_> = d.iter().map(|x| x.bytes.clone()).collect();
        assert_eq!(order, vec![b"d".to_vec(), b"c".to_vec()]);
        assert_eq!(n.transcript().len(), 4);
        assert!(n.deliver(b"e", Fault::Reorder).is_empty());
        assert_eq!(n.flush().len(), 1);
    }
}
