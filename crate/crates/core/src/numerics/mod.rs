//! Log-domain arithmetic, growth fits, quadrature and Taylor jets.

pub mod fit;
pub mod jet;
pub mod logvalue;
pub mod mjet;
pub mod power_integral;
pub mod quad;
pub mod trend;

pub use fit::{fit_growth, prefix_slopes, slope_drift, GrowthFit};
pub use jet::{taylor_derivatives, Field, Jet, Profile, TaylorJet};
pub use logvalue::LogValue;
pub use mjet::{MJet, MonomialIndex};
pub use power_integral::{integrate_piecewise_power, integrate_range, integrate_windowed, PowerMoment};
pub use quad::{integrate_oscillatory, Oscillatory};
pub use trend::{tail_trend, TailTrend, Trend};
