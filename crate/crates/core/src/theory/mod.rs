//! Exact analysis of small tabular UMDPs: policy sets, the regret game and
//! checkers for the statements relating them.

pub mod game;
pub mod tabular;

pub use game::{solve_regret_game, GameMethod, GameOptions, GameSolution, RegretMatrix};
pub use tabular::{PolicyClass, PolicyRestriction, PolicyTable, TabularLevel, TabularUmdp};
pub mod sets;
pub use sets::{classify_tabular, LevelClass};
pub mod instances;
pub use instances::{InstanceShape, ShiftSpec};
pub mod checks;
pub use checks::{CheckOutcome, Status};
pub mod report;
pub use report::{run_suites, Suite, SuiteReport, TheoryReport};
