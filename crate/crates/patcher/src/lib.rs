//! Static instrumentation of framework API calls in Python scripts.
//!
//! The scanner resolves imports, aliases and tracked objects to find call
//! sites; the patcher splices measurement breakpoints around them, either per
//! call (method level) or around the whole script (project level).

pub mod notebook;
pub mod patch;
pub mod python;
pub mod scan;
pub mod tree;
pub mod validation;
pub mod verify;

pub use notebook::{notebook_to_script, ConvertedNotebook, DroppedLine};
pub use patch::{
    breakpoint_pairs, breakpoints, patch_method_level, patch_project_level, patch_source, Level, PatchReport, PatchedScript,
    SkippedSite,
};
pub use python::{parse_module, SyntaxError};
pub use scan::{
    collect_bindings, find_call_sites, scan, CallSite, Framework, ImportBinding, ObjectOrigin, Placement, Scan, SkipReason,
    TrackedObject,
};
pub use verify::{behavior_diff, verify_patch, BehaviorOptions, BehaviorReport, Verdict};
pub use validation::{evaluate_corpus, evaluate_fixture, CorpusOptions, CorpusReport, FixtureReport};
