//! Datagram layout, 23 bytes, big-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TWTT"
//! 4       1     version (= 1)
//! 5       1     msg_type (1 = PPS, 2 = REPORT)
//! 6       1     node_id (0 = A / remote, 1 = B / local)
//! 7       4     epoch_index, u32
//! 11      8     payload_ps, i64 (PPS: sender clock offset; REPORT: dT_A)
//! 19      4     CRC-32 of bytes 0..19
//! ```

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TWTT";
pub const VERSION: u8 = 1;
pub const MESSAGE_LEN: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgType {
    Pps = 1,
    Report = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PpsMessage {
    pub msg_type: MsgType,
    /// 0 = A (remote), 1 = B (local).
    pub node_id: u8,
    pub epoch_index: u32,
    /// Picoseconds. PPS: the sender's clock offset at emission, plus any
    /// path delay accumulated in transit. REPORT: the remote TIC reading dT_A.
    pub payload_ps: i64,
}

pub fn encode(msg: &PpsMessage) -> [u8; MESSAGE_LEN] {
    let mut buf = [0u8; MESSAGE_LEN];
    buf[0..4].copy_from_slice(&MAGIC);
    buf[4] = VERSION;
    buf[5] = msg.msg_type as u8;
    buf[6] = msg.node_id;
    buf[7..11].copy_from_slice(&msg.epoch_index.to_be_bytes());
    buf[11..19].copy_from_slice(&msg.payload_ps.to_be_bytes());
    let crc = crc32fast::hash(&buf[0..19]);
    buf[19..23].copy_from_slice(&crc.to_be_bytes());
    buf
}

pub fn decode(bytes: &[u8]) -> Result<PpsMessage> {
    if bytes.len() != MESSAGE_LEN {
        return Err(Error::WireLength(bytes.len()));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::WireMagic);
    }
    let crc = u32::from_be_bytes(bytes[19..23].try_into().unwrap());
    if crc != crc32fast::hash(&bytes[0..19]) {
        return Err(Error::WireChecksum);
    }
    if bytes[4] != VERSION {
        return Err(Error::WireVersion(bytes[4]));
    }
    let msg_type = match bytes[5] {
        1 => MsgType::Pps,
        2 => MsgType::Report,
        other => return Err(Error::WireMsgType(other)),
    };
    Ok(PpsMessage {
        msg_type,
        node_id: bytes[6],
        epoch_index: u32::from_be_bytes(bytes[7..11].try_into().unwrap()),
        payload_ps: i64::from_be_bytes(bytes[11..19].try_into().unwrap()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn golden_layout() {
        let msg = PpsMessage {
            msg_type: MsgType::Pps,
            node_id: 1,
            epoch_index: 0,
            payload_ps: 0,
        };
        let bytes = encode(&msg);
        assert_eq!(bytes.len(), MESSAGE_LEN);
        assert_eq!(&bytes[..7], &[0x54, 0x57, 0x54, 0x54, 0x01, 0x01, 0x01]);
        assert_eq!(&bytes[7..19], &[0u8; 12]);
        // CRC-32 (IEEE) of the 19-byte prefix, fixed forever
        let crc = u32::from_be_bytes(bytes[19..23].try_into().unwrap());
        assert_eq!(crc, crc32fast::hash(&bytes[..19]));
        assert_eq!(decode(&bytes).unwrap(), msg);
    }

    #[test]
    fn golden_report_with_payload() {
        let msg = PpsMessage {
            msg_type: MsgType::Report,
            node_id: 0,
            epoch_index: 0x0102_0304,
            payload_ps: -2,
        };
        let bytes = encode(&msg);
        assert_eq!(bytes[5], 0x02);
        assert_eq!(bytes[6], 0x00);
        assert_eq!(&bytes[7..11], &[0x01, 0x02, 0x03, 0x04]);
        assert_eq!(
            &bytes[11..19],
            &[0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFE]
        );
        assert_eq!(decode(&bytes).unwrap(), msg);
    }

    #[test]
    fn distinct_errors() {
        let good = encode(&PpsMessage {
            msg_type: MsgType::Pps,
            node_id: 0,
            epoch_index: 7,
            payload_ps: 123,
        });

        assert!(matches!(decode(&good[..22]), Err(Error::WireLength(22))));

        let mut bad = good;
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::WireMagic)));

        let mut bad = good;
        bad[12] ^= 0x01;
        assert!(matches!(decode(&bad), Err(Error::WireChecksum)));

        // version and type checks happen after the checksum, so corrupt the
        // field and re-sign
        let mut bad = good;
        bad[4] = 9;
        let crc = crc32fast::hash(&bad[0..19]);
        bad[19..23].copy_from_slice(&crc.to_be_bytes());
        assert!(matches!(decode(&bad), Err(Error::WireVersion(9))));

        let mut bad = good;
        bad[5] = 3;
        let crc = crc32fast::hash(&bad[0..19]);
        bad[19..23].copy_from_slice(&crc.to_be_bytes());
        assert!(matches!(decode(&bad), Err(Error::WireMsgType(3))));
    }

    proptest! {
        #[test]
        fn round_trip(msg_type in prop::sample::select(vec![MsgType::Pps, MsgType::Report]),
                      node_id in 0u8..2, epoch in any::<u32>(), payload in any::<i64>()) {
            let msg = PpsMessage { msg_type, node_id, epoch_index: epoch, payload_ps: payload };
            prop_assert_eq!(decode(&encode(&msg)).unwrap(), msg);
        }

        #[test]
        fn any_single_bit_flip_detected(bit in 0usize..(MESSAGE_LEN * 8), payload in any::<i64>()) {
            let msg = PpsMessage { msg_type: MsgType::Pps, node_id: 1, epoch_index: 42, payload_ps: payload };
            let mut bytes = encode(&msg);
            bytes[bit / 8] ^= 1 << (bit % 8);
            prop_assert!(decode(&bytes).is_err());
        }
    }
}
