//! Bit-exact reserved-field payloads.
//!
//! Layouts (MSB first within the bit stream, zero padding to a byte
//! boundary at the end):
//!
//! - query:    uid_type(4) nonce(16)          -> 3 bytes
//! - response: uid_type(4) uid(48) nonce(16)  -> 9 bytes
//! - tally:    mac(48) p(16) n(16)            -> 10 bytes
//!
//! A report is a one-byte entry count followed by that many tallies.

use thiserror::Error;

use crate::ident::{MacAddr, UidType, UidValue};

pub const QUERY_WIRE_BYTES: u32 = 3;
pub const RESPONSE_WIRE_BYTES: u32 = 9;
pub const LTO_ENTRY_WIRE_BYTES: u32 = 10;

pub fn lto_report_bytes(entries: usize) -> u32 {
    1 + LTO_ENTRY_WIRE_BYTES * entries as u32
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("unknown uid type {0}")]
    UnknownUidType(u8),
    #[error("truncated field: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("nonzero padding bits")]
    BadPadding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryField {
    pub uid_type: UidType,
    pub nonce: u16,
}

impl QueryField {
    pub fn pack(&self) -> [u8; 3] {
        let t = self.uid_type as u8;
        [
            (t << 4) | (self.nonce >> 12) as u8,
            (self.nonce >> 4) as u8,
            ((self.nonce & 0xF) as u8) << 4,
        ]
    }

    pub fn unpack(bytes: &[u8]) -> Result<QueryField, WireError> {
        if bytes.len() < 3 {
            return Err(WireError::Truncated {
                need: 3,
                have: bytes.len(),
            });
        }
        if bytes[2] & 0x0F != 0 {
            return Err(WireError::BadPadding);
        }
        let raw_type = bytes[0] >> 4;
        let uid_type = UidType::from_raw(raw_type).ok_or(WireError::UnknownUidType(raw_type))?;
        let nonce = (u16::from(bytes[0] & 0x0F) << 12)
            | (u16::from(bytes[1]) << 4)
            | u16::from(bytes[2] >> 4);
        Ok(QueryField { uid_type, nonce })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponseField {
    pub uid_type: UidType,
    pub uid: UidValue,
    pub nonce: u16,
}

impl ResponseField {
    pub fn pack(&self) -> [u8; 9] {
        // 4 + 48 + 16 = 68 bits, left-aligned in 72.
        let acc: u128 = (u128::from(self.uid_type as u8) << 68)
            | (u128::from(self.uid.0 & MacAddr::MASK) << 20)
            | (u128::from(self.nonce) << 4);
        let mut out = [0u8; 9];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = (acc >> (64 - 8 * i as u32)) as u8;
        }
        out
    }

    pub fn unpack(bytes: &[u8]) -> Result<ResponseField, WireError> {
        if bytes.len() < 9 {
            return Err(WireError::Truncated {
                need: 9,
                have: bytes.len(),
            });
        }
        let mut acc: u128 = 0;
        for (i, byte) in bytes[..9].iter().enumerate() {
            acc |= u128::from(*byte) << (64 - 8 * i as u32);
        }
        if acc & 0xF != 0 {
            return Err(WireError::BadPadding);
        }
        let raw_type = (acc >> 68) as u8;
        let uid_type = UidType::from_raw(raw_type).ok_or(WireError::UnknownUidType(raw_type))?;
        Ok(ResponseField {
            uid_type,
            uid: UidValue(((acc >> 20) as u64) & MacAddr::MASK),
            nonce: (acc >> 4) as u16,
        })
    }
}

/// One evidence tally as shipped toward the root: the subject identity and
/// the positive/negative counters of the reporting observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LtoEntry {
    pub subject: MacAddr,
    pub p: u16,
    pub n: u16,
}

impl LtoEntry {
    pub fn pack(&self) -> [u8; 10] {
        let mut out = [0u8; 10];
        out[..6].copy_from_slice(&self.subject.0.to_be_bytes()[2..8]);
        out[6..8].copy_from_slice(&self.p.to_be_bytes());
        out[8..10].copy_from_slice(&self.n.to_be_bytes());
        out
    }

    pub fn unpack(bytes: &[u8]) -> Result<LtoEntry, WireError> {
        if bytes.len() < 10 {
            return Err(WireError::Truncated {
                need: 10,
                have: bytes.len(),
            });
        }
        let mut mac = [0u8; 8];
        mac[2..8].copy_from_slice(&bytes[..6]);
        Ok(LtoEntry {
            subject: MacAddr(u64::from_be_bytes(mac)),
            p: u16::from_be_bytes([bytes[6], bytes[7]]),
            n: u16::from_be_bytes([bytes[8], bytes[9]]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn query_known_pattern() {
        let q = QueryField {
            uid_type: UidType::RadioTransceiver,
            nonce: 0xABCD,
        };
        assert_eq!(q.pack(), [0x1A, 0xBC, 0xD0]);
        assert_eq!(QueryField::unpack(&q.pack()).unwrap(), q);
    }

    #[test]
    fn response_known_pattern() {
        let r = ResponseField {
            uid_type: UidType::SiliconSerial,
            uid: UidValue(0x0123_4567_89AB),
            nonce: 0xF00D,
        };
        // 0x0 | 0x0123456789AB | 0xF00D | pad -> 00 12 34 56 78 9A BF 00 D0
        assert_eq!(
            r.pack(),
            [0x00, 0x12, 0x34, 0x56, 0x78, 0x9A, 0xBF, 0x00, 0xD0]
        );
        assert_eq!(ResponseField::unpack(&r.pack()).unwrap(), r);
    }

    #[test]
    fn tally_known_pattern() {
        let e = LtoEntry {
            subject: MacAddr(0x0200_0000_0007),
            p: 6,
            n: 3,
        };
        assert_eq!(
            e.pack(),
            [0x02, 0x00, 0x00, 0x00, 0x00, 0x07, 0x00, 0x06, 0x00, 0x03]
        );
        assert_eq!(LtoEntry::unpack(&e.pack()).unwrap(), e);
    }

    #[test]
    fn unknown_uid_type_rejected() {
        let mut bytes = QueryField {
            uid_type: UidType::SiliconSerial,
            nonce: 1,
        }
        .pack();
        bytes[0] |= 0xF0;
        assert_eq!(
            QueryField::unpack(&bytes).unwrap_err(),
            WireError::UnknownUidType(0xF)
        );
    }

    proptest! {
        #[test]
        fn query_round_trips(t in 0u8..3, nonce: u16) {
            let q = QueryField { uid_type: UidType::from_raw(t).unwrap(), nonce };
            prop_assert_eq!(QueryField::unpack(&q.pack()).unwrap(), q);
        }

        #[test]
        fn response_round_trips(t in 0u8..3, uid in 0u64..(1u64 << 48), nonce: u16) {
            let r = ResponseField {
                uid_type: UidType::from_raw(t).unwrap(),
                uid: UidValue(uid),
                nonce,
            };
            prop_assert_eq!(ResponseField::unpack(&r.pack()).unwrap(), r);
        }

        #[test]
        fn tally_round_trips(mac in 0u64..(1u64 << 48), p: u16, n: u16) {
            let e = LtoEntry { subject: MacAddr(mac), p, n };
            prop_assert_eq!(LtoEntry::unpack(&e.pack()).unwrap(), e);
        }
    }
}
