//! Reconstruction with exactly two vertices of maximum degree.

use std::collections::BTreeMap;

use crate::{fallthrough, ReconError, ReconState};
use caterpillar_core::Caterpillar;
use maximal_recovery::MaximalFamilyTable;
use pattern_oracle::DeckOracle;

pub fn reconstruct_two_max(
    state: &mut ReconState,
    _o: &DeckOracle,
    _batons: &BTreeMap<usize, MaximalFamilyTable>,
) -> Result<Caterpillar, ReconError> {
    fallthrough(state)
}
