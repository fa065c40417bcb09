//! Randomized round-trips and decoder fuzzing at development scale; the
//! acceptance suite reruns these at full scale.

use panoptic_testkit::{gen, rng};
use panoptic_transport::{
    decode_frame, encode_frame, encode_message, parse_message, read_sequence, write_sequence,
    MsgType, ParseError, WireMessage, MAX_PAYLOAD,
};
use rand::Rng;

#[test]
fn frame_roundtrip_random() {
    let mut rng = rng(0x0701);
    for _ in 0..500 {
        let frame = gen::random_frame(&mut rng);
        let bytes = encode_frame(&frame).expect("generated frames encode");
        let back = decode_frame(&bytes).expect("own encoding decodes");
        assert_eq!(back, frame);
        assert_eq!(encode_frame(&back).expect("re-encode"), bytes);
    }
}

#[test]
fn message_roundtrip_random() {
    let mut rng = rng(0x0702);
    for _ in 0..500 {
        let msg_type = [MsgType::Frame, MsgType::Feedback, MsgType::Heartbeat, MsgType::Schema]
            [rng.gen_range(0..4)];
        let len = rng.gen_range(0..200);
        let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let msg = WireMessage { msg_type, payload };
        let bytes = encode_message(&msg);
        let (back, consumed) = parse_message(&bytes).expect("own encoding parses");
        assert_eq!(back, msg);
        assert_eq!(consumed, bytes.len());
    }
}

#[test]
fn decoder_fuzz_never_panics() {
    let mut rng = rng(0x0703);
    for i in 0..20_000 {
        let buf: Vec<u8> = if i % 2 == 0 {
            // Pure noise.
            let len = rng.gen_range(0..64);
            (0..len).map(|_| rng.gen()).collect()
        } else {
            // A valid encoding with a few mutations.
            let mut bytes = if i % 4 == 1 {
                encode_frame(&gen::random_frame(&mut rng)).expect("encodes")
            } else {
                encode_message(&WireMessage {
                    msg_type: MsgType::Schema,
                    payload: (0..rng.gen_range(0..32)).map(|_| rng.gen()).collect(),
                })
            };
            for _ in 0..rng.gen_range(1..4) {
                if bytes.is_empty() {
                    break;
                }
                let at = rng.gen_range(0..bytes.len());
                bytes[at] = rng.gen();
            }
            bytes
        };
        // Either decodes or errors; never panics, never over-allocates.
        let _ = decode_frame(&buf);
        let _ = parse_message(&buf);
    }
}

#[test]
fn oversize_declared_payload_is_rejected_up_front() {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&panoptic_transport::MAGIC);
    bytes.push(panoptic_transport::VERSION);
    bytes.push(MsgType::Frame as u8);
    bytes.extend_from_slice(&((MAX_PAYLOAD as u32) + 1).to_le_bytes());
    bytes.extend_from_slice(&[0; 32]);
    match parse_message(&bytes) {
        Err((ParseError::OversizePayload { declared }, _)) => {
            assert_eq!(declared as usize, MAX_PAYLOAD + 1);
        }
        other => panic!("expected oversize rejection, got {other:?}"),
    }
}

#[test]
fn sequence_roundtrip_random() {
    let mut rng = rng(0x0704);
    let dir = tempfile::tempdir().expect("tempdir");
    let mut frames = Vec::new();
    let mut next_id = 0u64;
    for _ in 0..20 {
        let mut f = gen::random_frame(&mut rng);
        f.frame_id = next_id;
        next_id += rng.gen_range(1..4);
        frames.push(f);
    }
    write_sequence(&frames, dir.path()).expect("writes");
    let back = read_sequence(dir.path()).expect("reads");
    assert_eq!(back, frames);
}

#[test]
fn walking_fixture_encodes_and_roundtrips() {
    let frames = panoptic_testkit::walking::walking_sequence();
    assert_eq!(frames.len(), 40);
    for f in &frames {
        assert!(f.semantic.is_some() && f.depth.is_some() && f.instances.is_some());
        assert!(!f.instances.as_ref().expect("present").is_empty());
        let bytes = encode_frame(f).expect("fixture encodes");
        assert_eq!(&decode_frame(&bytes).expect("fixture decodes"), f);
    }
    // 0.25 s cadence.
    for pair in frames.windows(2) {
        assert_eq!(pair[1].timestamp_us - pair[0].timestamp_us, 250_000);
    }
}
