//! The three-source extractor, the block-source extractor and the
//! parameter engine behind both.

mod bext;
mod iext;
pub mod params;
mod suite;

pub use bext::{bext, BExtRound, BExtSuite, BExtTrace, BlockSide};
pub use iext::{iext, IExtSuite, IExtTrace};
pub use params::{
    bext_params, derive_params, log2_bins, solve_c0, theorem_inequalities, C0Point, C0Report, Constants,
    ConstraintItem, ConstraintReport, ErrorBudget, Mode, Overrides, ParamInputs, ParamSet,
};
pub use suite::{build_role, build_sr_stage, RoleSpec, RoleSpecs};

use crate::error::{domain, Result};
use crate::extractors::SRExtractor;

/// Strict mode refuses BasicExt substitutes without a soundness guarantee.
fn check_basicext(mode: Mode, basicext: &dyn SRExtractor) -> Result<()> {
    if mode == Mode::Strict && !basicext.sound() {
        return domain(format!(
            "strict mode refuses {}: it carries no extraction guarantee",
            basicext.describe()
        ));
    }
    Ok(())
}
