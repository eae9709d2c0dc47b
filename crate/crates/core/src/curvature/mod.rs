//! Patch-based curvature models for binary segmentation.

mod constraints;
mod histogram;
mod segmentation;
mod table;
mod window;

pub use constraints::{assemble_constraints, solve_patch_costs, ConstraintSystem, Row};
pub use histogram::{boundary_direction_histogram, DirectionHistogram};
pub use segmentation::{build_segmentation_instance, data_term_from_image, SegmentationInstance};
pub use table::{two_by_two_costs, PatchCostTable};
pub use window::{
    canonical_windows, expand_windows, generate_symmetry_orbit, rasterize_windows, reflect, rotate,
    sub_patch, Window, MAX_WINDOW_SIDE,
};

/// Default window side for the 5×5 model.
pub const DEFAULT_FIVE_WINDOW_SIDE: usize = 11;

/// Which patch model to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    TwoByTwo,
    ThreeByThree,
    FiveByFive,
}

impl Model {
    pub fn patch_side(self) -> usize {
        match self {
            Model::TwoByTwo => 2,
            Model::ThreeByThree => 3,
            Model::FiveByFive => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::TwoByTwo => "2x2",
            Model::ThreeByThree => "3x3",
            Model::FiveByFive => "5x5",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2x2" => Ok(Model::TwoByTwo),
            "3x3" => Ok(Model::ThreeByThree),
            "5x5" => Ok(Model::FiveByFive),
            _ => Err(crate::error::Error::input(format!("unknown model {s:?}"))),
        }
    }
}

/// The window set that defines a model's cost system. `window_side` only
/// applies to the 5×5 model.
pub fn model_windows(model: Model, window_side: Option<usize>) -> crate::Result<Vec<Window>> {
    match model {
        Model::TwoByTwo => Err(crate::error::Error::input("the 2x2 model has a fixed table")),
        Model::ThreeByThree => Ok(expand_windows(&canonical_windows())),
        Model::FiveByFive => rasterize_windows(16, window_side.unwrap_or(DEFAULT_FIVE_WINDOW_SIDE)),
    }
}

/// Builds the cost table for a model, solving the window system for 3×3 and 5×5.
pub fn model_costs(model: Model, seed: u64, window_side: Option<usize>) -> crate::Result<PatchCostTable> {
    if model == Model::TwoByTwo {
        return Ok(two_by_two_costs());
    }
    let windows = model_windows(model, window_side)?;
    let system = assemble_constraints(&windows, model.patch_side())?;
    solve_patch_costs(&system, seed)
}
