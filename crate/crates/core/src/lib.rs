//! IoT device identification from network traffic.
//!
//! The crate covers the whole offline pipeline: pcap ingest with per-device
//! attribution, flow segmentation, the four feature schemas (hour window,
//! second window, packet grid, flow statistics), from-scratch classifiers, and
//! the temporal evaluation protocol that measures how identification accuracy
//! decays outside a model's training period. A deterministic traffic
//! generator in [`synth`] produces drifting pcap fixtures for end-to-end runs.

pub mod capture;
pub mod error;
pub mod eval;
pub mod features;
pub mod flow;
pub mod io;
pub mod ml;
pub mod pipeline;
pub mod synth;
#[cfg(test)]
pub(crate) mod testutil;
mod time;

pub use capture::{
    parse_pcap, AttributedPacket, DeviceId, DeviceManifest, DnsObservation, IngestCounters,
    MacAddr, PacketRecord, ParsedCapture, TlsClientHelloObservation, Transport,
};
pub use error::{Error, Result};
pub use eval::{EvalReport, PeriodSpec};
pub use features::{FeatureSet, Schema};
pub use flow::{FlowKey, FlowRecord};
pub use ml::{ModelArtifact, ModelKind, Prediction};
pub use time::Timestamp;
