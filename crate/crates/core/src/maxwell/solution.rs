//! End-to-end field solve and export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::magnetic::recover_magnetic;
use super::spaces::StaggeredSpaces;
use super::wave::{assemble_wave_system, embed_boundary, solve_full, solve_tt, WaveMode, WaveProblem};
use super::{Component, ScalarField};
use crate::chebyshev::interp_matrix;
use crate::error::{Error, Result};
use crate::kron::KronOp;
use crate::tensor::{Shape4, Tensor4};
use crate::tt::io::write_tt;
use crate::tt::{AmenConfig, CrossConfig, StopReason, TtMatrix, TtTensor};

/// Values of one field component, dense or as a tensor train.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Full(Tensor4),
    Tt(TtTensor),
}

impl Field {
    pub fn shape(&self) -> Shape4 {
        match self {
            Field::Full(t) => t.shape(),
            Field::Tt(t) => {
                let m = t.mode_sizes();
                [m[0], m[1], m[2], m[3]]
            }
        }
    }

    pub fn to_full(&self) -> Result<Tensor4> {
        match self {
            Field::Full(t) => Ok(t.clone()),
            Field::Tt(t) => t.full(),
        }
    }

    pub fn storage_bytes(&self) -> u64 {
        match self {
            Field::Full(t) => 8 * t.len() as u64,
            Field::Tt(t) => t.storage_bytes(),
        }
    }

    pub fn ranks(&self) -> Option<Vec<usize>> {
        match self {
            Field::Full(_) => None,
            Field::Tt(t) => Some(t.ranks()),
        }
    }

    pub fn apply(&self, op: &KronOp) -> Result<Field> {
        match self {
            Field::Full(t) => Ok(Field::Full(op.apply(t)?)),
            Field::Tt(t) => Ok(Field::Tt(TtMatrix::from_kron(op)?.apply(t)?)),
        }
    }
}

/// Wave problems for the three electric components plus initial magnetic data.
#[derive(Clone)]
pub struct MaxwellData {
    pub e: [WaveProblem; 3],
    pub b_initial: [ScalarField; 3],
}

impl std::fmt::Debug for MaxwellData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MaxwellData").field("e", &self.e).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub mode: WaveMode,
    pub cross: CrossConfig,
    pub amen: AmenConfig,
}

impl SolveOptions {
    pub fn full() -> Self {
        Self { mode: WaveMode::Full, cross: CrossConfig::new(1e-12), amen: AmenConfig::new(1e-12) }
    }

    /// TT mode with cross, rounding and solver tolerances all set to `tol`.
    pub fn tt(tol: f64) -> Self {
        Self { mode: WaveMode::Tt, cross: CrossConfig::new(tol), amen: AmenConfig::new(tol) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub n: usize,
    pub mode: WaveMode,
    pub tt_tol: Option<f64>,
    /// Relative residuals of the three wave solves.
    pub e_residuals: [f64; 3],
    /// Relative residuals of the magnetic time solves (zero in full mode).
    pub b_residuals: [f64; 3],
    pub e_stop: Option<[StopReason; 3]>,
    pub e_ranks: Option<[Vec<usize>; 3]>,
    pub b_ranks: Option<[Vec<usize>; 3]>,
    /// Peak live TT storage over the solve (zero in full mode).
    pub peak_tt_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub spaces: StaggeredSpaces,
    pub e: [Field; 3],
    pub b: [Field; 3],
    pub meta: SolutionMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    /// Row-major little-endian `f64` values plus a JSON sidecar.
    Raw,
    /// TT binary dump.
    Tt,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    name: &'a str,
    shape: Shape4,
    dtype: &'static str,
    order: &'static str,
    grids: [&'a [f64]; 4],
    meta: &'a SolutionMeta,
}

impl FieldSolution {
    /// Writes one file per component into `dir` (created if missing).
    pub fn export(&self, dir: &Path, format: ExportFormat) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (k, c) in Component::ALL.iter().enumerate() {
            let grids = [&self.spaces.e_grids(*c), &self.spaces.b_grids(*c)];
            for (which, field, g) in [("E", &self.e[k], grids[0]), ("B", &self.b[k], grids[1])] {
                let name = format!("{which}_{}", c.name());
                match format {
                    ExportFormat::Tt => {
                        let tt = match field {
                            Field::Tt(t) => t.clone(),
                            Field::Full(t) => TtTensor::from_full(t, 0.0)?,
                        };
                        write_tt(BufWriter::new(File::create(dir.join(format!("{name}.tt")))?), &tt)?;
                    }
                    ExportFormat::Raw => {
                        let full = field.to_full()?;
                        let mut w = BufWriter::new(File::create(dir.join(format!("{name}.f64")))?);
                        for v in full.data() {
                            w.write_all(&v.to_le_bytes())?;
                        }
                        w.flush()?;
                        let side = Sidecar {
                            name: &name,
                            shape: full.shape(),
                            dtype: "f64-le",
                            order: "row-major (t, x, y, z)",
                            grids: [g[0].nodes(), g[1].nodes(), g[2].nodes(), g[3].nodes()],
                            meta: &self.meta,
                        };
                        serde_json::to_writer_pretty(File::create(dir.join(format!("{name}.json")))?, &side)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lobatto → staggered interpolation along the component's own axis.
fn to_staggered(s: &StaggeredSpaces, c: Component) -> Result<KronOp> {
    let a = c.axis();
    let mut f: [DMatrix<f64>; 4] = s.wave_grids().map(|g| DMatrix::identity(g.len(), g.len()));
    f[a] = interp_matrix(s.lobatto(a), s.gauss(a))?.into_entries();
    Ok(KronOp::single(1.0, f))
}

struct ComponentSolve {
    field: Field,
    residual: f64,
    stop: Option<StopReason>,
    peak: u64,
}

/// Solves the three wave systems, moves `E` onto its staggered grids and
/// recovers `B`.
pub fn solve_fields(s: &StaggeredSpaces, data: &MaxwellData, opts: &SolveOptions) -> Result<FieldSolution> {
    for (k, p) in data.e.iter().enumerate() {
        if p.component.index() != k {
            return Err(Error::InvalidArgument(format!("wave problem {k} is for component {:?}", p.component)));
        }
    }
    let solved: Vec<ComponentSolve> = data
        .e
        .par_iter()
        .map(|p| -> Result<ComponentSolve> {
            let sys = assemble_wave_system(p, s, opts.mode, &opts.cross)?;
            let (interior, residual, stop, peak) = match opts.mode {
                WaveMode::Full => {
                    let r = solve_full(&sys)?;
                    (Field::Full(r.x), r.residual, None, 0)
                }
                WaveMode::Tt => {
                    let r = solve_tt(&sys, &opts.amen)?;
                    (Field::Tt(r.x), r.residual, Some(r.stop), r.peak_bytes)
                }
            };
            let full = embed_boundary(&interior, &sys)?;
            let mut field = full.apply(&to_staggered(s, p.component)?)?;
            if let Field::Tt(t) = &field {
                field = Field::Tt(t.round(opts.cross.tol * 1e-2));
            }
            let peak = peak + full.storage_bytes() + field.storage_bytes();
            Ok(ComponentSolve { field, residual, stop, peak })
        })
        .collect::<Result<_>>()?;

    let e: [Field; 3] = [solved[0].field.clone(), solved[1].field.clone(), solved[2].field.clone()];
    let mag = recover_magnetic(&e, s, &data.b_initial, &opts.cross, &opts.amen)?;

    let tt = opts.mode == WaveMode::Tt;
    let meta = SolutionMeta {
        n: s.n(),
        mode: opts.mode,
        tt_tol: tt.then_some(opts.amen.tol),
        e_residuals: [solved[0].residual, solved[1].residual, solved[2].residual],
        b_residuals: mag.residuals,
        e_stop: if tt {
            Some([0, 1, 2].map(|k| solved[k].stop.expect("TT solves report a stop reason")))
        } else {
            None
        },
        e_ranks: tt.then(|| e.clone().map(|f| f.ranks().unwrap_or_default())),
        b_ranks: tt.then(|| mag.b.clone().map(|f| f.ranks().unwrap_or_default())),
        peak_tt_bytes: if tt { solved.iter().map(|c| c.peak).max().unwrap_or(0).max(mag.peak_bytes) } else { 0 },
    };
    Ok(FieldSolution { spaces: s.clone(), e, b: mag.b, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxwell::build_staggered_spaces;
    use crate::verify::{builtin_case, weighted_l2_error};

    fn ex1(n: usize, opts: &SolveOptions) -> (FieldSolution, crate::verify::ManufacturedCase) {
        let case = builtin_case("ex1").unwrap();
        let s = build_staggered_spaces(n, case.domain).unwrap();
        (solve_fields(&s, &case.maxwell_data(1.0, 1.0), opts).unwrap(), case)
    }

    #[test]
    fn full_mode_electric_error_at_n12() {
        let (sol, case) = ex1(12, &SolveOptions::full());
        let c = Component::Y;
        let err = weighted_l2_error(&sol.e[1].to_full().unwrap(), &case.exact_e(c), &sol.spaces.e_grids(c)).unwrap();
        assert!(err <= 1e-5, "{err:e}");
        assert!(sol.meta.e_ranks.is_none());
        assert_eq!(sol.meta.peak_tt_bytes, 0);
    }

    #[test]
    fn tt_mode_matches_full_mode() {
        let (full, _) = ex1(8, &SolveOptions::full());
        let (tt, _) = ex1(8, &SolveOptions::tt(1e-10));
        for k in 0..3 {
            for (a, b) in [(&full.e[k], &tt.e[k]), (&full.b[k], &tt.b[k])] {
                let (a, b) = (a.to_full().unwrap(), b.to_full().unwrap());
                assert!(a.sub(&b).unwrap().norm() <= 1e-8 * a.norm().max(1.0));
            }
        }
        assert!(tt.meta.peak_tt_bytes > 0);
        assert_eq!(tt.meta.e_stop.unwrap(), [StopReason::Converged; 3]);
    }

    #[test]
    fn raw_export_writes_data_and_sidecars() {
        let (sol, _) = ex1(4, &SolveOptions::full());
        let dir = tempfile::tempdir().unwrap();
        sol.export(dir.path(), ExportFormat::Raw).unwrap();
        let bytes = std::fs::metadata(dir.path().join("E_x.f64")).unwrap().len();
        assert_eq!(bytes, 8 * 5 * 4 * 5 * 5);
        let side: serde_json::Value =
            serde_json::from_reader(File::open(dir.path().join("B_z.json")).unwrap()).unwrap();
        assert_eq!(side["shape"], serde_json::json!([5, 4, 4, 5]));
        sol.export(dir.path(), ExportFormat::Tt).unwrap();
        assert!(dir.path().join("B_y.tt").exists());
    }

    #[test]
    fn mismatched_component_order_is_rejected() {
        let case = builtin_case("ex1").unwrap();
        let s = build_staggered_spaces(4, case.domain).unwrap();
        let mut data = case.maxwell_data(1.0, 1.0);
        data.e.swap(0, 1);
        assert!(solve_fields(&s, &data, &SolveOptions::full()).is_err());
    }
}
