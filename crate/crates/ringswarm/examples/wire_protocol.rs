//! Wire protocol: frame, encode, and decode the three message kinds, and
//! print the closed-form bandwidth estimate.

use ringswarm::boxicp::BoxSet;
use ringswarm::geometry::BoundingBox;
use ringswarm::wire::{
    bandwidth_estimate, decode_message, encode_message, WireMessage, DEFAULT_IMAGE_EXTENT,
};

fn main() {
    let set = BoxSet::new(
        vec![
            BoundingBox::new(100.0, 200.0, 260.0, 420.0).unwrap(),
            BoundingBox::new(900.0, 1500.0, 1180.0, 1610.0).unwrap(),
        ],
        vec![3, 7],
    );
    let messages = [
        WireMessage::BoxAnnounce { boxes: set },
        WireMessage::HiddenState {
            round: 2,
            values: vec![0.25, -1.5, 0.125],
        },
        WireMessage::GoalClaim { agent: 1, goal: 4 },
    ];
    for msg in &messages {
        let bytes = encode_message(msg, DEFAULT_IMAGE_EXTENT).unwrap();
        let back = decode_message(&bytes, DEFAULT_IMAGE_EXTENT).unwrap();
        println!("{} bytes on the wire -> {back:?}", bytes.len());
    }

    let est = bandwidth_estimate(20, 32, 1e6);
    println!(
        "payload for 20 boxes + one 32-float hidden state: {} bytes \
         ({:.6} s at 1 Mbps)",
        est.bytes, est.latency_seconds
    );
}
