//! Bit-exact binary wire protocol for the ring.
//!
//! Every message is framed as
//!
//! ```text
//! +------+----------------+---------------------+
//! | kind | len (u16, LE)  | payload (len bytes) |
//! +------+----------------+---------------------+
//! ```
//!
//! Payloads, all little-endian:
//!
//! * `BoxAnnounce` (kind 1): 1 count byte `N_w`, then `N_w` records of
//!   9 bytes each — 1 id byte + 4 coordinates as 2-byte unsigned
//!   fixed-point against a declared image extent.
//! * `HiddenState` (kind 2): 1 round byte, then `d_h` 4-byte f32 values.
//! * `GoalClaim` (kind 3): 1 agent-id byte + 1 goal-id byte.
//!
//! Documented hex examples (asserted byte-for-byte in tests):
//!
//! * One box `(0, 0, 4096, 4096)` with id 7 at extent 4096:
//!   frame `01 0A 00`, payload `01 07 00 00 00 00 FF FF FF FF`.
//! * Hidden state round 3, d_h = 2, values `[1.0, -2.0]`:
//!   frame `02 09 00`, payload `03 00 00 80 3F 00 00 00 C0`.
//! * Goal claim agent 2 -> goal 5: frame `03 02 00`, payload `02 05`.

use crate::boxicp::BoxSet;
use crate::error::WireError;
use crate::geometry::BoundingBox;

pub const KIND_BOX_ANNOUNCE: u8 = 1;
pub const KIND_HIDDEN_STATE: u8 = 2;
pub const KIND_GOAL_CLAIM: u8 = 3;

/// Default image extent for fixed-point coordinates, in pixels.
pub const DEFAULT_IMAGE_EXTENT: f64 = 4096.0;

/// Frame overhead: kind byte plus u16 length.
pub const FRAME_OVERHEAD: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    BoxAnnounce { boxes: BoxSet },
    HiddenState { round: u8, values: Vec<f32> },
    GoalClaim { agent: u8, goal: u8 },
}

/// Quantize a pixel coordinate to a 2-byte unsigned fixed-point value.
pub fn quantize_coord(value: f64, image_extent: f64) -> Result<u16, WireError> {
    if !value.is_finite() || value < 0.0 || value > image_extent {
        return Err(WireError::OutOfRange {
            value,
            extent: image_extent,
        });
    }
    Ok((value / image_extent * 65535.0).round() as u16)
}

/// Decode a fixed-point coordinate back to pixels.
pub fn dequantize_coord(v: u16, image_extent: f64) -> f64 {
    v as f64 * (image_extent / 65535.0)
}

/// Encode a labeled box set as a `BoxAnnounce` payload: count byte plus
/// 9 bytes per box.
pub fn encode_boxes(set: &BoxSet, image_extent: f64) -> Result<Vec<u8>, WireError> {
    if set.len() > 255 {
        return Err(WireError::TooMany(set.len()));
    }
    let mut out = Vec::with_capacity(1 + 9 * set.len());
    out.push(set.len() as u8);
    for (b, &id) in set.boxes.iter().zip(set.ids.iter()) {
        if id > 255 {
            return Err(WireError::Malformed(format!("id {id} exceeds one byte")));
        }
        out.push(id as u8);
        for coord in [b.x_min, b.y_min, b.x_max, b.y_max] {
            out.extend_from_slice(&quantize_coord(coord, image_extent)?.to_le_bytes());
        }
    }
    Ok(out)
}

/// Inverse of `encode_boxes`, up to coordinate quantization.
pub fn decode_boxes(payload: &[u8], image_extent: f64) -> Result<BoxSet, WireError> {
    let (&count, body) = payload
        .split_first()
        .ok_or_else(|| WireError::Malformed("empty box payload".into()))?;
    let count = count as usize;
    if body.len() != 9 * count {
        return Err(WireError::Malformed(format!(
            "box payload length {} does not match count {count}",
            payload.len()
        )));
    }
    let mut boxes = Vec::with_capacity(count);
    let mut ids = Vec::with_capacity(count);
    for rec in body.chunks_exact(9) {
        ids.push(rec[0] as u32);
        let mut c = [0.0f64; 4];
        for (k, slot) in c.iter_mut().enumerate() {
            let v = u16::from_le_bytes([rec[1 + 2 * k], rec[2 + 2 * k]]);
            *slot = dequantize_coord(v, image_extent);
        }
        let b = BoundingBox::new(c[0], c[1], c[2], c[3])
            .map_err(|e| WireError::Malformed(format!("decoded degenerate box: {e}")))?;
        boxes.push(b);
    }
    Ok(BoxSet::new(boxes, ids))
}

/// Encode a hidden-state vector: round byte plus `d_h` f32 values.
pub fn encode_hidden(round: u8, values: &[f32]) -> Result<Vec<u8>, WireError> {
    if values.len() > 16383 {
        return Err(WireError::Malformed(format!(
            "hidden width {} exceeds the length field",
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(1 + 4 * values.len());
    out.push(round);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Inverse of `encode_hidden`; bit-exact for the floats.
pub fn decode_hidden(payload: &[u8]) -> Result<(u8, Vec<f32>), WireError> {
    let (&round, body) = payload
        .split_first()
        .ok_or_else(|| WireError::Malformed("empty hidden payload".into()))?;
    if body.len() % 4 != 0 {
        return Err(WireError::Malformed(format!(
            "hidden payload body of {} bytes is not a multiple of 4",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((round, values))
}

/// Frame a payload: kind byte, u16 little-endian length, payload.
pub fn frame(kind: u8, payload: &[u8]) -> Result<Vec<u8>, WireError> {
    if payload.len() > u16::MAX as usize {
        return Err(WireError::Malformed(format!(
            "payload of {} bytes exceeds the length field",
            payload.len()
        )));
    }
    let mut out = Vec::with_capacity(FRAME_OVERHEAD + payload.len());
    out.push(kind);
    out.extend_from_slice(&(payload.len() as u16).to_le_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Encode a full framed message.
pub fn encode_message(msg: &WireMessage, image_extent: f64) -> Result<Vec<u8>, WireError> {
    match msg {
        WireMessage::BoxAnnounce { boxes } => {
            frame(KIND_BOX_ANNOUNCE, &encode_boxes(boxes, image_extent)?)
        }
        WireMessage::HiddenState { round, values } => {
            frame(KIND_HIDDEN_STATE, &encode_hidden(*round, values)?)
        }
        WireMessage::GoalClaim { agent, goal } => frame(KIND_GOAL_CLAIM, &[*agent, *goal]),
    }
}

/// Decode exactly one framed message from `bytes`; trailing bytes, length
/// mismatches, unknown kinds, and per-kind payload violations are all
/// `Malformed`.
pub fn decode_message(bytes: &[u8], image_extent: f64) -> Result<WireMessage, WireError> {
    if bytes.len() < FRAME_OVERHEAD {
        return Err(WireError::Malformed("truncated frame header".into()));
    }
    let kind = bytes[0];
    let len = u16::from_le_bytes([bytes[1], bytes[2]]) as usize;
    let payload = &bytes[FRAME_OVERHEAD..];
    if payload.len() != len {
        return Err(WireError::Malformed(format!(
            "frame declares {len} payload bytes but carries {}",
            payload.len()
        )));
    }
    match kind {
        KIND_BOX_ANNOUNCE => Ok(WireMessage::BoxAnnounce {
            boxes: decode_boxes(payload, image_extent)?,
        }),
        KIND_HIDDEN_STATE => {
            let (round, values) = decode_hidden(payload)?;
            Ok(WireMessage::HiddenState { round, values })
        }
        KIND_GOAL_CLAIM => {
            if payload.len() != 2 {
                return Err(WireError::Malformed(format!(
                    "goal claim payload must be 2 bytes, got {}",
                    payload.len()
                )));
            }
            Ok(WireMessage::GoalClaim {
                agent: payload[0],
                goal: payload[1],
            })
        }
        other => Err(WireError::Malformed(format!("unknown kind byte {other}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BandwidthEstimate {
    /// Payload-body bytes per full exchange: `4*d_h + 9*N_w`.
    pub bytes: usize,
    /// Transmission latency at the given link speed, seconds.
    pub latency_seconds: f64,
    /// Framing bytes excluded from `bytes` (kind + length + count/round).
    pub frame_overhead: usize,
}

/// Closed-form message size and latency accounting. `bytes` follows the
/// payload-body arithmetic (ids and coordinates plus the hidden floats);
/// frame and count/round bytes are reported separately.
pub fn bandwidth_estimate(n_w: usize, d_h: usize, link_bits_per_second: f64) -> BandwidthEstimate {
    assert!(link_bits_per_second > 0.0);
    let bytes = 4 * d_h + 9 * n_w;
    BandwidthEstimate {
        bytes,
        latency_seconds: 8.0 * bytes as f64 / link_bits_per_second,
        frame_overhead: 2 * FRAME_OVERHEAD + 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut impl Rng, n: usize, extent: f64) -> BoxSet {
        let mut boxes = Vec::new();
        let mut ids = Vec::new();
        for i in 0..n {
            let x = rng.gen_range(0.0..extent * 0.8);
            let y = rng.gen_range(0.0..extent * 0.8);
            let w = rng.gen_range(extent * 0.01..extent * 0.15);
            let h = rng.gen_range(extent * 0.01..extent * 0.15);
            boxes.push(BoundingBox::new(x, y, x + w, y + h).unwrap());
            ids.push(i as u32);
        }
        BoxSet::new(boxes, ids)
    }

    #[test]
    fn box_payload_sizes() {
        let empty = BoxSet::new(vec![], vec![]);
        assert_eq!(encode_boxes(&empty, 4096.0).unwrap().len(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = random_set(&mut rng, 20, 4096.0);
        assert_eq!(encode_boxes(&set, 4096.0).unwrap().len(), 1 + 180);
    }

    #[test]
    fn box_roundtrip_within_half_step() {
        let extent = 4096.0;
        let half_step = extent / 65535.0 / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let n = rng.gen_range(1..12);
            let set = random_set(&mut rng, n, extent);
            let payload = encode_boxes(&set, extent).unwrap();
            let back = decode_boxes(&payload, extent).unwrap();
            assert_eq!(back.ids, set.ids);
            for (a, b) in back.boxes.iter().zip(set.boxes.iter()) {
                for (x, y) in [
                    (a.x_min, b.x_min),
                    (a.y_min, b.y_min),
                    (a.x_max, b.x_max),
                    (a.y_max, b.y_max),
                ] {
                    assert!((x - y).abs() <= half_step + 1e-12);
                }
            }
        }
    }

    #[test]
    fn quantize_roundtrip_exact_on_grid() {
        for v in [0u16, 1, 17, 4095, 65535] {
            let x = dequantize_coord(v, 4096.0);
            assert_eq!(quantize_coord(x, 4096.0).unwrap(), v);
        }
    }

    #[test]
    fn out_of_range_coordinate() {
        let set = BoxSet::new(
            vec![BoundingBox::new(0.0, 0.0, 5000.0, 10.0).unwrap()],
            vec![0],
        );
        assert!(matches!(
            encode_boxes(&set, 4096.0),
            Err(WireError::OutOfRange { .. })
        ));
    }

    #[test]
    fn malformed_box_payloads() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = random_set(&mut rng, 2, 4096.0);
        let mut payload = encode_boxes(&set, 4096.0).unwrap();
        payload.pop();
        assert!(matches!(
            decode_boxes(&payload, 4096.0),
            Err(WireError::Malformed(_))
        ));
        // Count byte claims 2 but only one record present.
        let one = random_set(&mut rng, 1, 4096.0);
        let mut p2 = encode_boxes(&one, 4096.0).unwrap();
        p2[0] = 2;
        assert!(matches!(
            decode_boxes(&p2, 4096.0),
            Err(WireError::Malformed(_))
        ));
    }

    #[test]
    fn hidden_roundtrip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let d_h = rng.gen_range(1..64);
            let values: Vec<f32> = (0..d_h)
                .map(|_| {
                    // include subnormals and extremes
                    f32::from_bits(rng.gen::<u32>() & 0x7fff_ffff)
                })
                .map(|v| if v.is_nan() { 0.5 } else { v })
                .collect();
            let round = rng.gen::<u8>();
            let payload = encode_hidden(round, &values).unwrap();
            assert_eq!(payload.len(), 1 + 4 * values.len());
            let (r, back) = decode_hidden(&payload).unwrap();
            assert_eq!(r, round);
            assert_eq!(
                back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn hidden_d32_payload_size() {
        let payload = encode_hidden(0, &vec![0.0f32; 32]).unwrap();
        assert_eq!(payload.len(), 129);
        let (_, back) = decode_hidden(&payload).unwrap();
        assert_eq!(back, vec![0.0f32; 32]);
    }

    #[test]
    fn documented_hex_examples() {
        let set = BoxSet::new(
            vec![BoundingBox::new(0.0, 0.0, 4096.0, 4096.0).unwrap()],
            vec![7],
        );
        let msg = encode_message(&WireMessage::BoxAnnounce { boxes: set }, 4096.0).unwrap();
        assert_eq!(
            msg,
            vec![0x01, 0x0A, 0x00, 0x01, 0x07, 0x00, 0x00, 0x00, 0x00, 0xFF, 0xFF, 0xFF, 0xFF]
        );

        let msg = encode_message(
            &WireMessage::HiddenState {
                round: 3,
                values: vec![1.0, -2.0],
            },
            4096.0,
        )
        .unwrap();
        assert_eq!(
            msg,
            vec![0x02, 0x09, 0x00, 0x03, 0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0xC0]
        );

        let msg = encode_message(&WireMessage::GoalClaim { agent: 2, goal: 5 }, 4096.0).unwrap();
        assert_eq!(msg, vec![0x03, 0x02, 0x00, 0x02, 0x05]);
    }

    #[test]
    fn frame_length_corruption_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(0..6);
            let set = random_set(&mut rng, n, 4096.0);
            let msg = encode_message(&WireMessage::BoxAnnounce { boxes: set }, 4096.0).unwrap();
            for byte_idx in 1..=2 {
                for flip in 0..8 {
                    let mut corrupt = msg.clone();
                    corrupt[byte_idx] ^= 1 << flip;
                    if corrupt == msg {
                        continue;
                    }
                    assert!(
                        decode_message(&corrupt, 4096.0).is_err(),
                        "corruption of length byte went undetected"
                    );
                }
            }
        }
    }

    #[test]
    fn bandwidth_paper_bound() {
        let est = bandwidth_estimate(20, 32, 1_000_000.0);
        assert_eq!(est.bytes, 308);
        assert!((est.latency_seconds - 0.002464).abs() < 1e-12);
        assert_eq!(bandwidth_estimate(0, 32, 1e6).bytes, 128);
    }

    #[test]
    fn measured_sizes_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n_w in [0usize, 1, 5, 20, 50] {
            for d_h in [1usize, 8, 32, 100] {
                let set = random_set(&mut rng, n_w.max(0), 4096.0);
                let boxes = encode_boxes(&set, 4096.0).unwrap();
                let hidden = encode_hidden(0, &vec![0.5f32; d_h]).unwrap();
                let est = bandwidth_estimate(n_w, d_h, 1e6);
                // payload bodies minus the count/round bytes match the paper form
                assert_eq!((boxes.len() - 1) + (hidden.len() - 1), est.bytes);
            }
        }
    }
}
