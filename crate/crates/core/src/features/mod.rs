//! Per-frame features: global histograms, Zernike moments and local
//! SIFT-family descriptors.

mod histogram;
mod pca;
pub(crate) mod plane;
mod sift;
mod zernike;

pub use histogram::{
    hue_degrees, hue_histogram, hue_histogram_of, hue_radians, l1_distance, rgb_histogram,
    RgbBins, ACHROMATIC_SATURATION,
};
pub use pca::{apply_pca, project_pca_sift, PcaProjection, PCA_SIFT_DIM};
pub use sift::{
    describe_huesift, describe_sift, detect_sift_keypoints, extract_huesift, extract_sift,
    normalize_clamped, support_hue_histogram, Keypoint, ScaleSpace, SiftParams, DESCR_CLAMP, HUESIFT_DIM,
    HUE_BINS, SIFT_DIM,
};
pub use zernike::{disk_samples, radial_polynomial, zernike_moments, ZERNIKE_ORDERS};
