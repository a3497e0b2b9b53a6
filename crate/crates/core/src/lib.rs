pub mod cli;
pub mod choi;
pub mod error;
pub mod jc;
pub mod linalg;
pub mod phase_cov;
pub mod process;
pub mod random;
pub mod sdp;
pub mod signalling;
pub mod tensor;
