//! Reduced problems: the radial Liouville equation `Δf = e^{-f}` in
//! dimension `m`, the ordered Toda system on an interval, and the decay and
//! integrability experiments built on their solutions.

pub mod decay;
pub mod radial;
pub mod toda;

pub use decay::{
    counterexample_profile, radial_decay_experiment, toda_decay_experiment, CounterexampleReport, DecayTrace,
};
pub use radial::{
    farina_integral, farina_scale_integral, liouville_stability_margin, radial_residual, singular_profile,
    solve_radial_liouville, RadialLiouville,
};
pub use toda::{q2_closed_form, q2_closed_form_roots, q2_first_integral, solve_toda_bvp, solve_toda_from, TodaState};
