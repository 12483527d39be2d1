//! Control and data frames.
//!
//! The wire never carries anything but DIS, DIO, DAO and data frames; the
//! detection scheme only rides inside reserved fields of DIO and DAO.

use std::rc::Rc;

use crate::detector::wire::{self, LtoEntry, QueryField, ResponseField};
use crate::ident::MacAddr;

/// On-air frame sizes including MAC/IPv6/ICMPv6 framing.
pub const DIS_BYTES: u32 = 50;
pub const DIO_BYTES: u32 = 76;
pub const DAO_BYTES: u32 = 56;
pub const DATA_HEADER_BYTES: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FrameKind {
    Dis,
    Dio,
    Dao,
    Data,
}

impl FrameKind {
    pub fn label(&self) -> &'static str {
        match self {
            FrameKind::Dis => "dis",
            FrameKind::Dio => "dio",
            FrameKind::Dao => "dao",
            FrameKind::Data => "data",
        }
    }

    pub fn is_control(&self) -> bool {
        !matches!(self, FrameKind::Data)
    }
}

/// Payload carried in the reserved field of a DIO or DAO.
#[derive(Debug, Clone, PartialEq)]
pub enum Piggyback {
    /// Collective identifier query (DIO only).
    Query(QueryField),
    /// Identifier response (DAO only).
    Response(ResponseField),
    /// Evidence tallies shipped toward the root (DIO only).
    LtoReport(Vec<LtoEntry>),
}

impl Piggyback {
    pub fn wire_bytes(&self) -> u32 {
        match self {
            Piggyback::Query(_) => wire::QUERY_WIRE_BYTES,
            Piggyback::Response(_) => wire::RESPONSE_WIRE_BYTES,
            Piggyback::LtoReport(entries) => wire::lto_report_bytes(entries.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub kind: FrameKind,
    pub src_mac: MacAddr,
    /// `None` is link-local multicast.
    pub dst_mac: Option<MacAddr>,
    /// Advertised rank; meaningful on DIO only.
    pub rank: u16,
    /// Attack-detection alarm flag; meaningful on DIO only.
    pub alarm: bool,
    pub piggyback: Option<Rc<Piggyback>>,
    /// Origin sequence number for data frames.
    pub data_id: u64,
    /// Remaining hops for data frames.
    pub ttl: u8,
    pub bytes: u32,
}

impl Frame {
    pub fn dis(src_mac: MacAddr) -> Frame {
        Frame {
            kind: FrameKind::Dis,
            src_mac,
            dst_mac: None,
            rank: 0,
            alarm: false,
            piggyback: None,
            data_id: 0,
            ttl: 0,
            bytes: DIS_BYTES,
        }
    }

    pub fn dio(src_mac: MacAddr, rank: u16, alarm: bool, piggyback: Option<Piggyback>) -> Frame {
        debug_assert!(!matches!(piggyback, Some(Piggyback::Response(_))));
        let piggyback = piggyback.map(Rc::new);
        let bytes = DIO_BYTES + piggyback.as_deref().map_or(0, Piggyback::wire_bytes);
        Frame {
            kind: FrameKind::Dio,
            src_mac,
            dst_mac: None,
            rank,
            alarm,
            piggyback,
            data_id: 0,
            ttl: 0,
            bytes,
        }
    }

    pub fn dao(src_mac: MacAddr, dst_mac: MacAddr, response: Option<ResponseField>) -> Frame {
        let piggyback = response.map(|r| Rc::new(Piggyback::Response(r)));
        let bytes = DAO_BYTES + piggyback.as_deref().map_or(0, Piggyback::wire_bytes);
        Frame {
            kind: FrameKind::Dao,
            src_mac,
            dst_mac: Some(dst_mac),
            rank: 0,
            alarm: false,
            piggyback,
            data_id: 0,
            ttl: 0,
            bytes,
        }
    }

    pub fn data(src_mac: MacAddr, dst_mac: MacAddr, payload_bytes: u32, data_id: u64, ttl: u8) -> Frame {
        Frame {
            kind: FrameKind::Data,
            src_mac,
            dst_mac: Some(dst_mac),
            rank: 0,
            alarm: false,
            piggyback: None,
            data_id,
            ttl,
            bytes: DATA_HEADER_BYTES + payload_bytes,
        }
    }

    pub fn query(&self) -> Option<&QueryField> {
        match self.piggyback.as_deref() {
            Some(Piggyback::Query(q)) => Some(q),
            _ => None,
        }
    }

    pub fn response(&self) -> Option<&ResponseField> {
        match self.piggyback.as_deref() {
            Some(Piggyback::Response(r)) => Some(r),
            _ => None,
        }
    }

    pub fn lto_report(&self) -> Option<&[LtoEntry]> {
        match self.piggyback.as_deref() {
            Some(Piggyback::LtoReport(entries)) => Some(entries),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::{DeviceId, UidType, UidValue};

    fn mac(i: u16) -> MacAddr {
        MacAddr::device_default(DeviceId(i))
    }

    #[test]
    fn piggyback_grows_frames_in_place() {
        let plain = Frame::dio(mac(1), 256, false, None);
        let query = Frame::dio(
            mac(1),
            256,
            false,
            Some(Piggyback::Query(QueryField {
                uid_type: UidType::SiliconSerial,
                nonce: 7,
            })),
        );
        assert_eq!(plain.bytes, DIO_BYTES);
        assert_eq!(query.bytes, DIO_BYTES + 3);

        let resp = Frame::dao(
            mac(2),
            mac(1),
            Some(ResponseField {
                uid_type: UidType::SiliconSerial,
                uid: UidValue(42),
                nonce: 7,
            }),
        );
        assert_eq!(resp.bytes, DAO_BYTES + 9);
    }

    #[test]
    fn lto_report_bytes_scale_with_entries() {
        let entries = vec![
            LtoEntry {
                subject: mac(3),
                p: 6,
                n: 0,
            },
            LtoEntry {
                subject: mac(4),
                p: 0,
                n: 3,
            },
        ];
        let frame = Frame::dio(mac(1), 256, true, Some(Piggyback::LtoReport(entries)));
        assert_eq!(frame.bytes, DIO_BYTES + 1 + 2 * 10);
        assert!(frame.alarm);
    }
}
