//! Reconstruction with a unique vertex of maximum degree.

use crate::{fallthrough, ReconError, ReconState};
use caterpillar_core::Caterpillar;
use pattern_oracle::DeckOracle;

pub fn reconstruct_one_max(
    state: &mut ReconState,
    _o: &DeckOracle,
) -> Result<Caterpillar, ReconError> {
    fallthrough(state)
}
