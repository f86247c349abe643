use serde::{Deserialize, Serialize};

/// Which volume method produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Varsi,
    Rejection,
    Lawrence,
    Hnr,
    Nonconvex,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Varsi => "varsi",
            Method::Rejection => "rejection",
            Method::Lawrence => "lawrence",
            Method::Hnr => "hnr",
            Method::Nonconvex => "nonconvex",
        };
        f.write_str(s)
    }
}

/// A volume together with how it was obtained.
///
/// `value` is an absolute volume in the unit-simplex frame. Random-walk
/// results also carry `log_value`, since in high dimension the ball volumes
/// that anchor the telescoping product under- or overflow `f64`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub log_value: f64,
    pub method: Method,
    /// Relative standard error when the method provides one.
    pub rel_std_error: Option<f64>,
    /// Per-phase ratios vol(K_{i-1}) / vol(K_i), innermost first.
    pub phase_ratios: Vec<f64>,
    pub points_per_phase: usize,
    pub walk_length: usize,
    pub total_steps: u64,
    pub inscribed_radius: Option<f64>,
    pub enclosing_radius: Option<f64>,
    /// Set for the non-convex shell extension.
    pub experimental: bool,
    /// No interior point was found; `value` is 0.
    pub empty: bool,
    /// Some phase ratio came out as zero; `value` is NaN.
    pub zero_ratio: bool,
}

impl VolumeEstimate {
    /// A result with no sampling error.
    pub fn exact(value: f64, method: Method) -> Self {
        VolumeEstimate {
            value,
            log_value: value.ln(),
            method,
            rel_std_error: None,
            phase_ratios: Vec::new(),
            points_per_phase: 0,
            walk_length: 0,
            total_steps: 0,
            inscribed_radius: None,
            enclosing_radius: None,
            experimental: false,
            empty: false,
            zero_ratio: false,
        }
    }
}
