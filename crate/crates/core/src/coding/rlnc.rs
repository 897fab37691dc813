//! Random linear network coding over GF(2^8).

use rand::Rng;

use super::gf256::{mul_add_into, scale, Gf256};
use crate::error::{Error, Result};
use crate::radio_sim::PacketBudget;

/// Bytes of fixed header: block id (4) and block size (2).
pub const HEADER_BYTES: usize = 6;

/// A linear combination of the messages of one block.
///
/// Wire layout: `[block_id: u32 BE][b: u16 BE][coeffs: b bytes][payload]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CodedPacket {
    pub block_id: u32,
    pub coeffs: Vec<Gf256>,
    pub payload: Vec<u8>,
}

impl CodedPacket {
    pub fn block_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn wire_len(&self) -> usize {
        HEADER_BYTES + self.coeffs.len() + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.block_id.to_be_bytes());
        out.extend_from_slice(&(self.coeffs.len() as u16).to_be_bytes());
        out.extend(self.coeffs.iter().map(|c| c.0));
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::MalformedPacket(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        let block_id = u32::from_be_bytes(bytes[0..4].try_into().expect("4 bytes"));
        let b = u16::from_be_bytes(bytes[4..6].try_into().expect("2 bytes")) as usize;
        if bytes.len() < HEADER_BYTES + b {
            return Err(Error::MalformedPacket(format!(
                "truncated coefficient vector of length {b}"
            )));
        }
        Ok(CodedPacket {
            block_id,
            coeffs: bytes[HEADER_BYTES..HEADER_BYTES + b]
                .iter()
                .map(|&c| Gf256(c))
                .collect(),
            payload: bytes[HEADER_BYTES + b..].to_vec(),
        })
    }
}

/// Largest per-message payload a coded packet of block size `b` can carry
/// within `budget`.
pub fn effective_payload(budget: PacketBudget, b: usize) -> usize {
    budget.bytes().saturating_sub(HEADER_BYTES + b)
}

/// `Σ coeffs[i] · block[i]` over GF(2^8), checked against `budget`.
pub fn encode<M: AsRef<[u8]>>(
    block_id: u32,
    block: &[M],
    coeffs: &[Gf256],
    budget: PacketBudget,
) -> Result<CodedPacket> {
    if coeffs.len() != block.len() {
        return Err(Error::InvalidParameter(format!(
            "{} coefficients for a block of {}",
            coeffs.len(),
            block.len()
        )));
    }
    if block.len() > u16::MAX as usize {
        return Err(Error::InvalidParameter("block size exceeds 65535".into()));
    }
    let len = block.first().map_or(0, |m| m.as_ref().len());
    if block.iter().any(|m| m.as_ref().len() != len) {
        return Err(Error::RaggedBlock);
    }
    let bits = 8 * (HEADER_BYTES + block.len() + len);
    if bits > budget.bits {
        return Err(Error::PayloadTooLarge {
            bits,
            budget: budget.bits,
        });
    }
    let mut payload = vec![0u8; len];
    for (m, &c) in block.iter().zip(coeffs) {
        mul_add_into(&mut payload, m.as_ref(), c);
    }
    Ok(CodedPacket {
        block_id,
        coeffs: coeffs.to_vec(),
        payload,
    })
}

/// `b` coefficients drawn uniformly from the field.
pub fn random_coeffs<R: Rng + ?Sized>(b: usize, rng: &mut R) -> Vec<Gf256> {
    (0..b).map(|_| Gf256::random(rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Row {
    pivot: usize,
    coeffs: Vec<u8>,
    payload: Vec<u8>,
}

/// Incremental Gaussian elimination; rows are kept in reduced row echelon
/// form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderState {
    block_id: u32,
    b: usize,
    payload_len: Option<usize>,
    rows: Vec<Row>,
}

impl DecoderState {
    pub fn new(block_id: u32, b: usize) -> Self {
        DecoderState {
            block_id,
            b,
            payload_len: None,
            rows: Vec::with_capacity(b),
        }
    }

    pub fn block_id(&self) -> u32 {
        self.block_id
    }

    pub fn block_size(&self) -> usize {
        self.b
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_decodable(&self) -> bool {
        self.rows.len() == self.b
    }

    /// Adds a packet; returns whether it raised the rank.
    pub fn absorb(&mut self, pkt: &CodedPacket) -> Result<bool> {
        if pkt.block_id != self.block_id {
            return Err(Error::BlockMismatch {
                expected: self.block_id,
                got: pkt.block_id,
            });
        }
        if pkt.coeffs.len() != self.b {
            return Err(Error::MalformedPacket(format!(
                "{} coefficients, block size is {}",
                pkt.coeffs.len(),
                self.b
            )));
        }
        match self.payload_len {
            Some(l) if l != pkt.payload.len() => return Err(Error::RaggedBlock),
            _ => self.payload_len = Some(pkt.payload.len()),
        }
        if self.is_decodable() {
            return Ok(false);
        }
        let mut coeffs: Vec<u8> = pkt.coeffs.iter().map(|c| c.0).collect();
        let mut payload = pkt.payload.clone();
        for row in &self.rows {
            let c = Gf256(coeffs[row.pivot]);
            mul_add_into(&mut coeffs, &row.coeffs, c);
            mul_add_into(&mut payload, &row.payload, c);
        }
        let Some(pivot) = coeffs.iter().position(|&c| c != 0) else {
            return Ok(false);
        };
        let inv = Gf256(coeffs[pivot]).inv().expect("nonzero pivot");
        scale(&mut coeffs, inv);
        scale(&mut payload, inv);
        for row in &mut self.rows {
            let c = Gf256(row.coeffs[pivot]);
            mul_add_into(&mut row.coeffs, &coeffs, c);
            mul_add_into(&mut row.payload, &payload, c);
        }
        let at = self.rows.partition_point(|r| r.pivot < pivot);
        self.rows.insert(
            at,
            Row {
                pivot,
                coeffs,
                payload,
            },
        );
        Ok(true)
    }

    /// The original block, once the rank reaches the block size.
    pub fn decode(&self) -> Result<Vec<Vec<u8>>> {
        if !self.is_decodable() {
            return Err(Error::RankDeficient {
                rank: self.rank(),
                size: self.b,
            });
        }
        Ok(self.rows.iter().map(|r| r.payload.clone()).collect())
    }
}
