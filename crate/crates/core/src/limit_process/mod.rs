//! One coupled realization of the limit objects.
//!
//! `B` is a Brownian motion with local time `L`, `W` an independent two-sided
//! one-sided-stable subordinator, `V⋆(t) = ∫ L(t, W(x)) dx` the time change and
//! `X⋆(τ) = W⁻¹(B(V⋆⁻¹(τ)))` the limit walk with local time
//! `L⋆(τ, x) = L(V⋆⁻¹(τ), W(x))`.

mod brownian;
mod bundle;
mod grid;

pub use brownian::{
    build_brownian, build_subordinator, build_time_change, default_bin_width, local_time,
    BrownianGrid, LocalTimeField,
};
pub use bundle::{combined_power, fdd_chf, GridSummary, LimitBundle, LimitConfig, WALK_CLOCK};
pub use grid::{Interp, MonotoneGrid};
