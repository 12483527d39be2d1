//! Node, identity and hardware-identifier primitives shared across the stack.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Ground-truth index of a physical device in a simulation run.
///
/// Protocol logic never sees this; it identifies radios, positions and
/// energy ledgers. Everything on the wire is addressed by [`MacAddr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DeviceId(pub u16);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

/// 48-bit link-layer address, the unit of claimed identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MacAddr(pub u64);

impl MacAddr {
    pub const MASK: u64 = 0xFFFF_FFFF_FFFF;

    /// Factory-assigned address of an uncompromised device.
    pub fn device_default(device: DeviceId) -> Self {
        MacAddr(0x0200_0000_0000 | u64::from(device.0))
    }

    pub fn new(raw: u64) -> Self {
        MacAddr(raw & Self::MASK)
    }
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0.to_be_bytes();
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[2], b[3], b[4], b[5], b[6], b[7]
        )
    }
}

/// Hardware identifier families a query can ask for.
///
/// Rotation order goes silicon serial, then radio transceiver number,
/// then part/manufacturer number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UidType {
    SiliconSerial = 0,
    RadioTransceiver = 1,
    PartManufacturer = 2,
}

impl UidType {
    pub const ALL: [UidType; 3] = [
        UidType::SiliconSerial,
        UidType::RadioTransceiver,
        UidType::PartManufacturer,
    ];

    /// Bit width of identifiers of this family.
    pub fn bits(self) -> u32 {
        match self {
            UidType::SiliconSerial => 48,
            UidType::RadioTransceiver => 16,
            UidType::PartManufacturer => 20,
        }
    }

    /// Next family in the rotation; `None` once the rotation is exhausted.
    pub fn next(self) -> Option<UidType> {
        match self {
            UidType::SiliconSerial => Some(UidType::RadioTransceiver),
            UidType::RadioTransceiver => Some(UidType::PartManufacturer),
            UidType::PartManufacturer => None,
        }
    }

    pub fn from_raw(raw: u8) -> Option<UidType> {
        match raw {
            0 => Some(UidType::SiliconSerial),
            1 => Some(UidType::RadioTransceiver),
            2 => Some(UidType::PartManufacturer),
            _ => None,
        }
    }
}

/// One hardware identifier value (at most 48 bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UidValue(pub u64);

impl UidValue {
    pub fn masked(raw: u64, ty: UidType) -> Self {
        UidValue(raw & ((1u64 << ty.bits()) - 1))
    }
}

/// The immutable identifier set burned into one physical device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceUids {
    values: [UidValue; 3],
}

impl DeviceUids {
    /// Derives a per-device identifier set that is unique per family as long
    /// as device indices are unique.
    pub fn for_device(device: DeviceId, run_tag: u64) -> Self {
        let mut values = [UidValue(0); 3];
        for (i, ty) in UidType::ALL.iter().enumerate() {
            // splitmix64-style mixing keeps values spread while staying
            // deterministic in the device index alone.
            let mut x = run_tag
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(u64::from(device.0))
                .wrapping_add((i as u64) << 32);
            x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            x ^= x >> 31;
            // Reserve the low bits for the device index so distinct devices
            // can never collide within a family unless forced to.
            let uniq = (x << 16) | u64::from(device.0);
            values[i] = UidValue::masked(uniq, *ty);
        }
        DeviceUids { values }
    }

    pub fn get(&self, ty: UidType) -> UidValue {
        self.values[ty as usize]
    }

    /// Overwrites one family value; used to force identifier collisions
    /// between two devices in adversarial test scenarios.
    pub fn set(&mut self, ty: UidType, value: UidValue) {
        self.values[ty as usize] = value;
    }
}
