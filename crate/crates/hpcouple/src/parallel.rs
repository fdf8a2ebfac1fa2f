//! Rayon-backed assembly and thread-count setup.

use hpcouple_core::bem::{LayerAssembler, LayerMatrices};
use hpcouple_core::geometry::BoundaryMesh;
use hpcouple_core::space::{BeFluxSpace, BeTraceSpace};
use hpcouple_core::Result;
use rayon::prelude::*;

/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "HPCOUPLE_THREADS";

/// Panel pairs are independent. `collect` keeps the pair order, so the
/// result is bitwise identical to the serial assembly for any thread count.
pub fn par_assemble_layers(mesh: &BoundaryMesh, trace: &BeTraceSpace, flux: &BeFluxSpace) -> Result<LayerMatrices> {
    let asm = LayerAssembler::new(mesh, trace, flux)?;
    let blocks = asm
        .pairs()
        .into_par_iter()
        .map(|(a, b)| asm.pair(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(asm.finish(&blocks))
}

/// Configures the global pool from `HPCOUPLE_THREADS`. Returns the thread
/// count in use; a malformed value is reported as an error message.
pub fn init_threads() -> std::result::Result<usize, String> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV}='{v}' is not a thread count"))?;
        // Fails only if the pool was already built, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}
