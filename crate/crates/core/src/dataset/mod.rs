//! Dataset machinery: seeded randomness, sensor placement, frame splits,
//! synthetic sequences, and sample assembly.

pub mod placement;
pub mod rng;
pub mod sample;
pub mod split;
pub mod synth;

pub use placement::{free_candidates, place_sensors, PlacementMode, PlacementSpec};
pub use rng::{prng_next, Rng};
pub use sample::{
    assemble_sample, build_channel, climatology, fit_for_training, AssembledSet, SampleProvider,
    SampleRecipe,
};
pub use split::{extrapolation_split, partitioned_split, SplitPlan};
pub use synth::{gaussian_blur, synth_chaotic, synth_cyclical, CyclicalMode};
