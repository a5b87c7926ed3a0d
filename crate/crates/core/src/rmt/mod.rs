//! RMT execution substrate: packet header vectors, stage-local registers,
//! forward-only dataflow, feedback paths, and the static constraint
//! checker.

pub mod manifest;
pub mod phv;
pub mod pipeline;
pub mod register;

pub use manifest::{check_program, AccessDecl, AccessMode, ManifestError, ProgramManifest, RegisterBinding, Violation};
pub use phv::{EventKind, PathTag, Phv, PhvFlags, Scratch, ScratchKey};
pub use phv::{PathWord, ScratchError, SCRATCH_CAPACITY};
pub use pipeline::{
    ConstraintFault, ControlEvent, Entry, FeedbackKind, FeedbackOp, FeedbackQueue,
    FeedbackVerdict, Notice, OutPacket, PipelineProgram, ProgramBuilder, ProgramError, RmtConfig,
    StageCtx, StageHandler, TraversalOutput, TraversalResult, TraversalTags,
};
pub use register::{RegId, RegisterFile};
