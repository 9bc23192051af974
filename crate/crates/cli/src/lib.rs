//! File formats and batch jobs behind the `specur` binary.

pub mod imageio;
pub mod job;
pub mod tensor_file;

pub use job::{run_transform, JobManifest, JobSummary};
pub use tensor_file::{DType, TensorData, TensorFile};
