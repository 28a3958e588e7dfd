//! Simulated communication channels between workers.
//!
//! Channels carry vertex sub-part buffers over in-process FIFO queues.
//! Latency and bandwidth are injectable: a message is stamped with the
//! instant it becomes deliverable and receivers wait out the remainder
//! when they actually need the buffer, so transfer cost that the
//! schedule manages to hide behind training never shows up in wall time.

use std::collections::HashMap;
use std::sync::mpsc::{Receiver, RecvTimeoutError, Sender};
use std::time::{Duration, Instant};

use crate::perfmodel::BandwidthProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Same-socket peer copy.
    IntraP2p,
    /// Peer copy that crosses a socket boundary; pays the staging
    /// penalty.
    CrossSocketStaged,
    /// Node-to-node link; routed through host staging on both ends.
    InterNode,
}

/// Latency/bandwidth model of one channel. Transfer time is
/// `latency + bytes / bandwidth * penalty`.
#[derive(Debug, Clone, Copy)]
pub struct CommChannel {
    pub kind: ChannelKind,
    pub latency_s: f64,
    pub bandwidth_bps: f64,
    pub penalty: f64,
}

impl CommChannel {
    pub fn from_profile(kind: ChannelKind, p: &BandwidthProfile) -> CommChannel {
        match kind {
            ChannelKind::IntraP2p => CommChannel {
                kind,
                latency_s: p.intra_p2p_latency_s,
                bandwidth_bps: p.intra_p2p_bps,
                penalty: 1.0,
            },
            ChannelKind::CrossSocketStaged => CommChannel {
                kind,
                latency_s: p.cross_socket_latency_s,
                bandwidth_bps: p.cross_socket_bps,
                penalty: p.cross_socket_penalty,
            },
            ChannelKind::InterNode => CommChannel {
                kind,
                latency_s: p.inter_node_latency_s,
                bandwidth_bps: p.inter_node_bps,
                penalty: 1.0,
            },
        }
    }

    pub fn transfer_seconds(&self, bytes: usize) -> f64 {
        self.latency_s + bytes as f64 / self.bandwidth_bps * self.penalty
    }
}

/// A sub-part buffer in flight.
#[derive(Debug)]
pub struct SubpartMsg {
    pub subpart: usize,
    pub rows: Vec<f32>,
    /// Instant the payload finishes arriving over the link.
    pub deliver_at: Instant,
    /// Host-to-device staging the receiver still has to pay (inter-node
    /// route only).
    pub stage_in_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryReceipt {
    pub subpart: usize,
    pub bytes: usize,
    pub transfer_seconds: f64,
}

/// One worker's communication endpoint: its receive queue, senders to
/// every peer, and the ownership set of sub-part buffers it currently
/// holds. Sending moves a buffer out of the ownership set; sending a
/// sub-part the endpoint does not hold is an ownership violation.
pub struct Endpoint {
    pub id: usize,
    held: HashMap<usize, Vec<f32>>,
    rx: Receiver<SubpartMsg>,
    txs: Vec<Sender<SubpartMsg>>,
}

impl Endpoint {
    /// Build a fully connected set of endpoints (everyone can send to
    /// everyone; the schedule restricts who actually does).
    pub fn ring(n: usize) -> Vec<Endpoint> {
        let mut txs = Vec::with_capacity(n);
        let mut rxs = Vec::with_capacity(n);
        for _ in 0..n {
            let (tx, rx) = std::sync::mpsc::channel();
            txs.push(tx);
            rxs.push(rx);
        }
        rxs.into_iter()
            .enumerate()
            .map(|(id, rx)| Endpoint {
                id,
                held: HashMap::new(),
                rx,
                txs: txs.clone(),
            })
            .collect()
    }

    pub fn insert(&mut self, subpart: usize, rows: Vec<f32>) {
        self.held.insert(subpart, rows);
    }

    pub fn take(&mut self, subpart: usize) -> Option<Vec<f32>> {
        self.held.remove(&subpart)
    }

    pub fn holds(&self, subpart: usize) -> bool {
        self.held.contains_key(&subpart)
    }

    pub fn held_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.held.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    /// Send a held sub-part to `to` over `ch`. Ownership moves with the
    /// message; the payload becomes deliverable after the modeled
    /// transfer time.
    pub fn send_subpart(
        &mut self,
        to: usize,
        subpart: usize,
        ch: &CommChannel,
        stage_in_seconds: f64,
    ) -> Result<DeliveryReceipt> {
        let bytes = self
            .held
            .get(&subpart)
            .map(|r| r.len() * std::mem::size_of::<f32>())
            .unwrap_or(0);
        let secs = ch.transfer_seconds(bytes);
        self.send_subpart_with_delay(to, subpart, secs, stage_in_seconds)
    }

    /// Like [`Endpoint::send_subpart`] but with a precomputed transfer
    /// time, for multi-leg routes whose delay the caller composed.
    pub fn send_subpart_with_delay(
        &mut self,
        to: usize,
        subpart: usize,
        delay_seconds: f64,
        stage_in_seconds: f64,
    ) -> Result<DeliveryReceipt> {
        let rows = self.held.remove(&subpart).ok_or_else(|| {
            Error::Channel(format!(
                "ownership violation: worker {} does not hold sub-part {subpart}",
                self.id
            ))
        })?;
        let bytes = rows.len() * std::mem::size_of::<f32>();
        let msg = SubpartMsg {
            subpart,
            rows,
            deliver_at: Instant::now() + Duration::from_secs_f64(delay_seconds.max(0.0)),
            stage_in_seconds,
        };
        self.txs[to]
            .send(msg)
            .map_err(|_| Error::Channel(format!("worker {to} hung up")))?;
        Ok(DeliveryReceipt {
            subpart,
            bytes,
            transfer_seconds: delay_seconds,
        })
    }

    /// Pop the next message, waiting up to `timeout` for one to be
    /// queued. Does not wait out `deliver_at`; the caller decides when
    /// it needs the payload.
    pub fn try_next(&mut self, timeout: Duration) -> Result<Option<SubpartMsg>> {
        match self.rx.recv_timeout(timeout) {
            Ok(msg) => Ok(Some(msg)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Channel("all senders disconnected".into()))
            }
        }
    }

    /// Blocking receive of a specific sub-part into the ownership set,
    /// waiting out its delivery time. Other sub-parts arriving first are
    /// parked in the ownership set as well.
    pub fn receive_subpart(&mut self, subpart: usize, timeout: Duration) -> Result<Vec<f32>> {
        let deadline = Instant::now() + timeout;
        loop {
            if let Some(rows) = self.held.remove(&subpart) {
                return Ok(rows);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(Error::Channel(format!(
                    "worker {} timed out waiting for sub-part {subpart}",
                    self.id
                )));
            }
            if let Some(msg) = self.try_next(deadline - now)? {
                let wait = msg.deliver_at.saturating_duration_since(Instant::now());
                if !wait.is_zero() {
                    std::thread::sleep(wait);
                }
                self.held.insert(msg.subpart, msg.rows);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instant_channel() -> CommChannel {
        CommChannel {
            kind: ChannelKind::IntraP2p,
            latency_s: 0.0,
            bandwidth_bps: f64::INFINITY,
            penalty: 1.0,
        }
    }

    #[test]
    fn send_then_receive_preserves_bytes() {
        let mut eps = Endpoint::ring(2);
        let payload = vec![1.0f32, -2.5, 3.25];
        eps[0].insert(7, payload.clone());
        eps[0]
            .send_subpart(1, 7, &instant_channel(), 0.0)
            .unwrap();
        let got = eps[1].receive_subpart(7, Duration::from_secs(1)).unwrap();
        assert_eq!(got, payload);
    }

    #[test]
    fn double_send_is_an_ownership_violation() {
        let mut eps = Endpoint::ring(2);
        eps[0].insert(3, vec![0.0; 4]);
        eps[0].send_subpart(1, 3, &instant_channel(), 0.0).unwrap();
        let err = eps[0]
            .send_subpart(1, 3, &instant_channel(), 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::Channel(_)), "{err:?}");
    }

    #[test]
    fn cross_socket_penalty_scales_bandwidth_term() {
        let ch = CommChannel {
            kind: ChannelKind::CrossSocketStaged,
            latency_s: 0.0,
            bandwidth_bps: 1000.0,
            penalty: 1.3,
        };
        let t = ch.transfer_seconds(500);
        assert!((t - 0.5 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn ring_exchange_stress_no_deadlock() {
        // 4 workers repeatedly pass disjoint sub-parts around the ring,
        // all-send-then-all-receive each iteration
        let n = 4;
        let iters = 10_000;
        let mut eps = Endpoint::ring(n);
        for (i, ep) in eps.iter_mut().enumerate() {
            ep.insert(i, vec![i as f32; 8]);
        }
        let ch = instant_channel();
        let handles: Vec<_> = eps
            .into_iter()
            .map(|mut ep| {
                std::thread::spawn(move || -> Result<usize> {
                    let me = ep.id;
                    let next = (me + 1) % n;
                    let mut have = me;
                    for _ in 0..iters {
                        ep.send_subpart(next, have, &ch, 0.0)?;
                        have = (have + n - 1) % n;
                        let rows = ep.receive_subpart(have, Duration::from_secs(10))?;
                        ep.insert(have, rows);
                    }
                    Ok(have)
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap().unwrap();
        }
    }

    #[test]
    fn delivery_respects_injected_latency() {
        let mut eps = Endpoint::ring(2);
        eps[0].insert(0, vec![0.0; 1]);
        let ch = CommChannel {
            kind: ChannelKind::InterNode,
            latency_s: 0.05,
            bandwidth_bps: f64::INFINITY,
            penalty: 1.0,
        };
        let t0 = Instant::now();
        eps[0].send_subpart(1, 0, &ch, 0.0).unwrap();
        eps[1].receive_subpart(0, Duration::from_secs(1)).unwrap();
        let elapsed = t0.elapsed().as_secs_f64();
        assert!(elapsed >= 0.05, "arrived after {elapsed}s, expected >= 0.05");
    }
}
