//! Bit-exact persistence and wire transfer of frames and results: the frame
//! codec, the CRC-framed message protocol, and the sequence-on-disk format.

pub mod frame;
pub mod sequence;
pub mod wire;

pub use frame::{
    decode_frame, encode_frame, Frame, FrameCodecError, FrameInstance, CONFIDENCE_SCALE,
    PLANE_DEPTH, PLANE_INSTANCES, PLANE_PANOPTIC, PLANE_RGB, PLANE_SEMANTIC,
};
pub use sequence::{read_sequence, write_sequence, SequenceError};
pub use wire::{
    encode_message, parse_message, write_message, MessageReader, MsgType, ParseError, ReadEvent,
    WireMessage, MAGIC, MAX_PAYLOAD, VERSION,
};

use panoptic_core::feedback::FeedbackEvent;
use panoptic_core::LabelSchema;

/// FRAME message from an encodable frame.
pub fn frame_message(frame: &Frame) -> Result<WireMessage, FrameCodecError> {
    Ok(WireMessage { msg_type: MsgType::Frame, payload: encode_frame(frame)? })
}

/// SCHEMA message carrying the catalog as its JSON document.
pub fn schema_message(schema: &LabelSchema) -> WireMessage {
    WireMessage { msg_type: MsgType::Schema, payload: schema.to_json().into_bytes() }
}

/// FEEDBACK message: the frame's emitted events as JSON lines.
pub fn feedback_message(events: &[FeedbackEvent]) -> WireMessage {
    WireMessage {
        msg_type: MsgType::Feedback,
        payload: panoptic_core::feedback::events_to_jsonl(events).into_bytes(),
    }
}