//! Link-level simulation for pinching-antenna-aided spatial multiplexing (PASM).
//!
//! Each dielectric waveguide is fed by one RF chain and drives `N_a` pinching
//! antennas. The first antenna on a waveguide radiates the bare baseband
//! symbol; the others add a position-induced phase drawn from an `M_p`-PSK
//! alphabet. The crate covers:
//!
//! * [`scene`]: deployment geometry and activation-anchor selection,
//! * [`channel`]: Rician fading with correlated shadowing and COST-231 path
//!   loss, plus the exact first and second moments of `vec(Hᴴ)`,
//! * [`modem`]: composite constellations, bit mapping and demapping,
//! * [`detect`]: ML, ZF/MMSE, SIC and the waveguide-structured VAMP detector,
//! * [`analysis`]: pairwise error probabilities, the ML union bound and
//!   complexity estimates,
//! * [`harness`]: Monte-Carlo sweeps, profiles and CSV output.
//!
//! The numerical core is generic over the real scalar type ([`Real`]); the
//! aliases below fix it to `f64`, which is what the harness uses.

pub mod analysis;
pub mod channel;
pub mod detect;
mod error;
pub mod harness;
pub mod linalg;
pub mod modem;
pub mod scene;

pub use error::{PasmError, Result};
pub use modem::PasmConfig;

pub use num_complex::Complex;

/// Real scalar usable by the numerical core (`f32` or `f64`).
pub trait Real:
    nalgebra::RealField + Copy + num_traits::FromPrimitive + num_traits::ToPrimitive
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion back to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`] field.
pub type Cx<T> = Complex<T>;

/// `f64` flavor of the scene and signal types.
pub type Constellation = modem::CompositeConstellation<f64>;
pub type Frame = modem::TransmitFrame<f64>;
pub type Realization = channel::ChannelRealization<f64>;
pub type LargeScale = channel::LargeScaleState<f64>;
pub type Moments = analysis::ChannelMoments<f64>;
pub type Detection = detect::DetectionResult<f64>;
pub type Vamp = detect::VampParams<f64>;
