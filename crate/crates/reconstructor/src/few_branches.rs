//! Reconstruction with at most three branch vertices.

use crate::{fallthrough, ReconError, ReconState};
use caterpillar_core::Caterpillar;
use pattern_oracle::DeckOracle;

pub fn reconstruct_few_branches(
    state: &mut ReconState,
    _o: &DeckOracle,
) -> Result<Caterpillar, ReconError> {
    fallthrough(state)
}
