//! Multi-threaded assembly. Work is split into chunks whose contributions are
//! concatenated in the serial order, so the result is bitwise identical to
//! [`ndfm_core::assemble_full_with`].

use ndfm_core::assembly::{
    cell_contributions, dirichlet_values, fracture_contributions, neumann_contributions, Contributions,
};
use ndfm_core::{
    eliminate, trace_curve, validate_problem, AssemblyOptions, FractureTrace, FullSystem, LinearSystem, Problem, Result,
};
use rayon::prelude::*;

const CELLS_PER_CHUNK: usize = 2048;

pub fn trace_network_par(pb: &Problem) -> Result<Vec<FractureTrace>> {
    pb.network
        .fractures
        .par_iter()
        .enumerate()
        .map(|(i, f)| Ok(FractureTrace { fracture: i, pieces: trace_curve(&pb.mesh, &f.curve)? }))
        .collect()
}

pub fn assemble_full_par(pb: &Problem, opts: &AssemblyOptions) -> Result<FullSystem> {
    validate_problem(pb).into_result()?;
    let traces = trace_network_par(pb)?;
    let n = pb.mesh.n_cells();
    let chunks: Vec<_> = (0..n).step_by(CELLS_PER_CHUNK).map(|s| s..(s + CELLS_PER_CHUNK).min(n)).collect();
    let mut parts: Vec<Contributions> =
        chunks.into_par_iter().map(|r| cell_contributions(pb, r)).collect::<Result<_>>()?;
    let fracs: Vec<Contributions> =
        traces.par_iter().map(|t| fracture_contributions(pb, std::slice::from_ref(t), opts)).collect::<Result<_>>()?;
    parts.extend(fracs);
    parts.push(neumann_contributions(pb)?);
    Ok(FullSystem::from_contributions(pb.mesh.n_vertices(), parts))
}

pub fn assemble_par(pb: &Problem, opts: &AssemblyOptions) -> Result<LinearSystem> {
    eliminate(&assemble_full_par(pb, opts)?, &dirichlet_values(pb)?)
}
