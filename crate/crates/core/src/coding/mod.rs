//! Linear coding over GF(2^8): random linear network coding and an MDS
//! erasure code.

pub mod fec;
pub mod gf256;
pub mod rlnc;

pub use fec::{fec_decode, fec_encode};
pub use gf256::Gf256;
pub use rlnc::{encode, random_coeffs, CodedPacket, DecoderState};
