use std::io::Write;

use crate::geometry::Direction;

use super::{GraphState, GridMode, SurfaceSample};

/// Azimuthal resolution used when revolving an axisymmetric meridian.
const REVOLVE_SEGMENTS: usize = 48;

/// Triangle mesh of the sample in OBJ format, in the frame of `direction`.
/// Axisymmetric samples are revolved about the axis; for n > 2 this is the
/// 3-D section through the first and last coordinates.
pub fn write_obj<W: Write>(sample: &SurfaceSample, direction: &Direction, mut w: W) -> std::io::Result<()> {
    let grid = sample.grid;
    let n = sample.n();
    let (rings, segments): (Vec<Vec<[f64; 3]>>, usize) = match grid.mode {
        GridMode::Full2d => (
            (0..grid.n_beta)
                .map(|i| {
                    (0..grid.n_xi)
                        .map(|j| {
                            let x = sample.x(grid.node(i, j));
                            [x[0], x[1], x[2]]
                        })
                        .collect()
                })
                .collect(),
            grid.n_xi,
        ),
        GridMode::Axisym => (
            (0..grid.n_beta)
                .map(|i| {
                    let x = sample.x(i);
                    (0..REVOLVE_SEGMENTS)
                        .map(|j| {
                            let phi = std::f64::consts::TAU * j as f64 / REVOLVE_SEGMENTS as f64;
                            [x[0] * phi.cos(), x[0] * phi.sin(), x[n]]
                        })
                        .collect()
                })
                .collect(),
            REVOLVE_SEGMENTS,
        ),
    };
    let out_dir = |p: [f64; 3]| -> Vec<f64> {
        if direction.as_slice().len() == 3 {
            direction.egress(&p)
        } else {
            p.to_vec()
        }
    };
    writeln!(w, "# capflow surface, grid {}", grid.label())?;
    let pole = out_dir(rings[0][0]);
    writeln!(w, "v {:.12} {:.12} {:.12}", pole[0], pole[1], pole[2])?;
    for ring in &rings[1..] {
        for &p in ring {
            let q = out_dir(p);
            writeln!(w, "v {:.12} {:.12} {:.12}", q[0], q[1], q[2])?;
        }
    }
    // OBJ indices are 1-based; vertex 1 is the pole.
    let idx = |i: usize, j: usize| 2 + (i - 1) * segments + (j % segments);
    for j in 0..segments {
        writeln!(w, "f 1 {} {}", idx(1, j), idx(1, j + 1))?;
    }
    for i in 1..rings.len() - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (idx(i, j), idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j));
            writeln!(w, "f {a} {d} {c}")?;
            writeln!(w, "f {a} {c} {b}")?;
        }
    }
    Ok(())
}

/// CSV table `beta,u,kappa_min,kappa_max` along an axisymmetric meridian.
pub fn write_axisym_csv<W: Write>(state: &GraphState, sample: &SurfaceSample, mut w: W) -> std::io::Result<()> {
    let grid = sample.grid;
    let n = sample.n();
    writeln!(w, "beta,u,kappa_min,kappa_max")?;
    for i in 0..grid.n_beta {
        let node = grid.node(i, 0);
        let k = sample.kappa(node);
        writeln!(w, "{},{},{},{}", grid.beta(i), state.u[node], k[0], k[n - 1])?;
    }
    Ok(())
}
