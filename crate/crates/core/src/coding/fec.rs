//! Any-`k`-of-`m` erasure code from Vandermonde rows over GF(2^8).

use super::gf256::Gf256;
use super::rlnc::{encode, CodedPacket, DecoderState};
use crate::error::{Error, Result};
use crate::radio_sim::PacketBudget;

/// Default ratio of coded packets to messages.
pub const DEFAULT_EXPANSION: usize = 4;

/// Distinct nonzero evaluation points available in the field.
pub const MAX_PACKETS: usize = 255;

/// Encodes `messages` into `m` packets; row `j` evaluates at the point
/// `GENERATOR^j`, so any `k` packets are jointly decodable.
pub fn fec_encode<M: AsRef<[u8]>>(
    block_id: u32,
    messages: &[M],
    m: usize,
) -> Result<Vec<CodedPacket>> {
    if m > MAX_PACKETS {
        return Err(Error::TooManyPackets {
            requested: m,
            max: MAX_PACKETS,
        });
    }
    let k = messages.len();
    if k > m {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds m = {m}")));
    }
    (0..m)
        .map(|j| {
            let x = Gf256::exp(j);
            let coeffs: Vec<Gf256> = (0..k as u32).map(|i| x.pow(i)).collect();
            encode(block_id, messages, &coeffs, PacketBudget::UNBOUNDED)
        })
        .collect()
}

/// Decodes `k` messages from any packets of one block.
pub fn fec_decode(packets: &[CodedPacket], k: usize) -> Result<Vec<Vec<u8>>> {
    let block_id = packets.first().map_or(0, |p| p.block_id);
    let mut d = DecoderState::new(block_id, k);
    for p in packets {
        d.absorb(p)?;
    }
    d.decode()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_equals_m() {
        let msgs = vec![vec![1u8, 2], vec![3, 4], vec![5, 6]];
        let pk = fec_encode(0, &msgs, 3).unwrap();
        assert_eq!(fec_decode(&pk, 3).unwrap(), msgs);
    }

    #[test]
    fn any_three_of_nine() {
        let msgs = vec![vec![10u8, 20, 30], vec![40, 50, 60], vec![70, 80, 90]];
        let pk = fec_encode(7, &msgs, 9).unwrap();
        let mut n = 0;
        for a in 0..9 {
            for b in a + 1..9 {
                for c in b + 1..9 {
                    let sub = [pk[a].clone(), pk[b].clone(), pk[c].clone()];
                    assert_eq!(fec_decode(&sub, 3).unwrap(), msgs);
                    n += 1;
                }
            }
        }
        assert_eq!(n, 84);
    }

    #[test]
    fn field_limit() {
        let msgs = vec![vec![0u8]];
        assert_eq!(
            fec_encode(0, &msgs, 300).unwrap_err(),
            Error::TooManyPackets {
                requested: 300,
                max: 255
            }
        );
        assert!(fec_encode(0, &msgs, 255).is_ok());
    }
}
