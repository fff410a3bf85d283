//! Parameter serialization, message framing, and the TCP loops that run
//! the round protocol across processes. Byte layouts are a bit-exact
//! contract, documented with worked dumps in `protocol.md`.

mod frame;
mod net;
mod wire;

pub use frame::{deframe, frame, Message, DEFAULT_MAX_PAYLOAD, HEADER_LEN, MAGIC, VERSION};
pub use net::{connect, serve, serve_on, ServeOptions, WireRound};
pub use wire::{
    decode_values, deserialize_params, encode_values, manifest_of, serialize_params,
    ManifestEntry, WeightManifest,
};
