//! Deployment geometry and pinching-antenna activation.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{PasmConfig, PasmError, Result};

pub type Point3 = Vector3<f64>;

/// How waveguide lanes are spread along the y-axis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaneLayout {
    /// `y_m = (m−1)·D/N_wg`; the first waveguide starts at the origin.
    #[default]
    FromOrigin,
    /// Partition centers `y_m = D·(2m−1)/(2N_wg)`.
    Centered,
}

impl LaneLayout {
    pub fn lane(self, m: usize, n_wg: usize, side: f64) -> f64 {
        match self {
            LaneLayout::FromOrigin => m as f64 * side / n_wg as f64,
            LaneLayout::Centered => side * (2 * m + 1) as f64 / (2 * n_wg) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentGeometry {
    pub region_side: f64,
    pub wg_height: f64,
    /// One feed point per waveguide, all at `x = 0`, `z = d_h`.
    pub feed_points: Vec<Point3>,
    /// Common waveguide direction.
    pub wg_axis: Point3,
    pub receiver_elements: Vec<Point3>,
    pub rx_spacing: f64,
    pub wavelength: f64,
}

impl DeploymentGeometry {
    pub fn n_wg(&self) -> usize {
        self.feed_points.len()
    }

    pub fn n_r(&self) -> usize {
        self.receiver_elements.len()
    }

    /// Pitch of the activation candidate grid (`λ/2`).
    pub fn candidate_pitch(&self) -> f64 {
        self.wavelength / 2.0
    }

    /// Number of candidate positions per waveguide over `[0, D]`.
    pub fn candidate_count(&self) -> usize {
        (self.region_side / self.candidate_pitch() + 1e-9).floor() as usize + 1
    }

    /// Candidate `k` on waveguide `m`.
    pub fn candidate(&self, m: usize, k: usize) -> Point3 {
        self.feed_points[m] + self.wg_axis * (k as f64 * self.candidate_pitch())
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0.0..=self.region_side).contains(&p.x) && (0.0..=self.region_side).contains(&p.y)
    }
}

fn unit(v: [f64; 3]) -> Result<Point3> {
    let p = Point3::from(v);
    let n = p.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(PasmError::InvalidConfig("receive axis must be a nonzero vector".into()));
    }
    Ok(p / n)
}

/// Places the waveguide feed points and the receive ULA.
pub fn build_deployment(cfg: &PasmConfig) -> Result<DeploymentGeometry> {
    cfg.validate()?;
    let side = cfg.region_side;
    let spacing = cfg.rx_spacing();
    let span = spacing * (cfg.n_r - 1) as f64;
    if span > side {
        return Err(PasmError::InvalidConfig(format!(
            "receive array span {span} m exceeds region side {side} m"
        )));
    }
    let feed_points = (0..cfg.n_wg)
        .map(|m| Point3::new(0.0, cfg.lane_layout.lane(m, cfg.n_wg, side), cfg.wg_height))
        .collect();
    let axis = unit(cfg.rx_axis)?;
    let center = Point3::from(cfg.user_center);
    let receiver_elements = (0..cfg.n_r)
        .map(|n| center + axis * ((n as f64 - (cfg.n_r - 1) as f64 / 2.0) * spacing))
        .collect();
    Ok(DeploymentGeometry {
        region_side: side,
        wg_height: cfg.wg_height,
        feed_points,
        wg_axis: Point3::x(),
        receiver_elements,
        rx_spacing: spacing,
        wavelength: cfg.wavelength(),
    })
}

/// Radiating positions for one channel use, `N_wg × N_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationPattern {
    pub positions: Vec<Vec<Point3>>,
    /// Candidate-grid index of the distance-minimizing point per waveguide.
    pub anchor_index: Vec<usize>,
    /// Set when a cluster had to be shifted back inside the waveguide span.
    pub clipped: Vec<bool>,
}

impl ActivationPattern {
    pub fn n_wg(&self) -> usize {
        self.positions.len()
    }

    pub fn n_a(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    /// Positions in antenna order `(m, i) ↦ m·N_a + i`.
    pub fn flat(&self) -> impl Iterator<Item = &Point3> {
        self.positions.iter().flatten()
    }

    /// Fixed half-wavelength ULA of `N_t` elements along x, centered at
    /// `(D/2, D/2, d_h)`, grouped into `N_wg` blocks of `N_a`.
    pub fn uniform_array(geom: &DeploymentGeometry, cfg: &PasmConfig) -> Self {
        let n_t = cfg.n_t();
        let pitch = geom.wavelength / 2.0;
        let c = Point3::new(geom.region_side / 2.0, geom.region_side / 2.0, geom.wg_height);
        let flat: Vec<Point3> = (0..n_t)
            .map(|k| c + Point3::x() * ((k as f64 - (n_t - 1) as f64 / 2.0) * pitch))
            .collect();
        Self {
            positions: flat.chunks(cfg.n_a).map(<[Point3]>::to_vec).collect(),
            anchor_index: vec![0; cfg.n_wg],
            clipped: vec![false; cfg.n_wg],
        }
    }
}

/// Index of the candidate on waveguide `m` closest to `target`.
///
/// Exhaustive scan; ties resolve to the lowest index.
pub fn nearest_candidate(geom: &DeploymentGeometry, m: usize, target: &Point3) -> usize {
    let mut best = (f64::INFINITY, 0usize);
    for k in 0..geom.candidate_count() {
        let d = (geom.candidate(m, k) - target).norm_squared();
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Picks the anchor on each waveguide and lays out the remaining `N_a − 1`
/// slots at `λ/2` steps after it.
///
/// A cluster that would run past the far end of the waveguide is moved back
/// so its last slot is the last candidate, and `clipped` is set.
pub fn select_activation(
    geom: &DeploymentGeometry,
    user_center: &Point3,
    cfg: &PasmConfig,
) -> Result<ActivationPattern> {
    if !geom.contains(user_center) {
        return Err(PasmError::OutsideRegion([user_center.x, user_center.y, user_center.z]));
    }
    let count = geom.candidate_count();
    if cfg.n_a > count {
        return Err(PasmError::InvalidConfig(format!(
            "{} antennas do not fit on a waveguide with {count} candidate positions",
            cfg.n_a
        )));
    }
    let mut out = ActivationPattern {
        positions: Vec::with_capacity(geom.n_wg()),
        anchor_index: Vec::with_capacity(geom.n_wg()),
        clipped: Vec::with_capacity(geom.n_wg()),
    };
    for m in 0..geom.n_wg() {
        let anchor = nearest_candidate(geom, m, user_center);
        let start = anchor.min(count - cfg.n_a);
        out.positions.push((0..cfg.n_a).map(|i| geom.candidate(m, start + i)).collect());
        out.anchor_index.push(anchor);
        out.clipped.push(start != anchor);
    }
    Ok(out)
}
