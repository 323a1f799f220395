//! Standard-library side of the bilinear-Hessian toolkit: the FFT Gaussian
//! blur, file formats, the deconvolution benchmark harness, plotting and
//! the oracle self-check behind the `bhess` command line.

pub mod blur;
pub mod cli;
pub mod error;
pub mod harness;
pub mod io;
pub mod output;
pub mod verify;

pub use error::{BenchError, Result};
