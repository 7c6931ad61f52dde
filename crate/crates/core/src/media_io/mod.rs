//! Video decoding, dataset manifests and artifact persistence.

pub mod artifact;
mod frame;
mod manifest;
mod video;

pub use artifact::{load_artifact, store_artifact, Artifact, DescriptorSet};
pub use frame::{luma_of, Frame, FrameSequence};
pub use manifest::{load_manifest, parse_manifest, DatasetManifest, Label, ManifestEntry};
pub use video::{
    decode_pnm, decode_video, decode_y4m, encode_ppm, write_pnm_dir, ycbcr_to_rgb,
    PNM_DEFAULT_FRAME_RATE,
};
