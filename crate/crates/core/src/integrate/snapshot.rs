//! Binary snapshot files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "TMHDSNAP"
//! 8       4     version (u32, currently 1)
//! 12      4     points per axis N (u32)
//! 16      8     step (u64)
//! 24      8·14  f64: t, n₁, n₂, n₃, γ_ad, μ, λ, c₀, r, γ (Lyapunov weight),
//!               Poincaré constant C(3), ∫D_basic, ∫‖n·∇B‖²_{H^{r+3}}, ‖div B‖ before projection
//! 136     4     number m of Sobolev orders (u32)
//! 140     8·m   the orders (f64)
//! ...     7·N³·16  coefficient blocks for a, u₁, u₂, u₃, B₁, B₂, B₃
//! ```
//!
//! Each block lists `(re, im)` pairs in lexicographic order of
//! `k = (k₁, k₂, k₃)`, every component running from `−N/2 + 1` to `N/2`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use crate::diagnostics::{DiagnosticsConfig, StepContext};
use crate::error::{MhdError, Result};
use crate::model::{Params, PressureLaw, State, Viscosities};
use crate::spectral::{Grid, SpectralScalar, SpectralVector};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"TMHDSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Everything in a snapshot besides the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub params: Params,
    pub diagnostics: DiagnosticsConfig,
    pub ctx: StepContext,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub meta: SnapshotMeta,
    pub state: State,
}

/// `dir/snap_<step>.bin` with the step zero-padded to ten digits.
pub fn snapshot_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("snap_{step:010}.bin"))
}

fn lexicographic_indices(grid: &Grid) -> Vec<usize> {
    let half = (grid.points_per_axis() / 2) as i64;
    let range: Vec<i64> = (-half + 1..=half).collect();
    let mut out = Vec::with_capacity(grid.len());
    for &k0 in &range {
        for &k1 in &range {
            for &k2 in &range {
                out.push(grid.index_of([k0, k1, k2]));
            }
        }
    }
    out
}

pub fn write_snapshot(path: &Path, state: &State, meta: &SnapshotMeta) -> Result<()> {
    let grid = state.grid();
    let io = |source| MhdError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut buf: Vec<u8> = Vec::with_capacity(200 + 7 * grid.len() * 16);
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_axis() as u32).to_le_bytes());
    buf.extend_from_slice(&meta.ctx.step.to_le_bytes());
    let p = &meta.params;
    let d = &meta.diagnostics;
    for v in [
        state.t,
        p.n[0],
        p.n[1],
        p.n[2],
        p.pressure.gamma_ad,
        p.viscosities.mu,
        p.viscosities.lambda,
        p.c0,
        d.r,
        d.gamma,
        d.poincare_h3,
        meta.ctx.cum_dissipation,
        meta.ctx.cum_nb2,
        meta.ctx.divb_pre,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(d.norm_orders.len() as u32).to_le_bytes());
    for s in &d.norm_orders {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    let order = lexicographic_indices(grid);
    for c in state.components() {
        let coeffs = c.coeffs();
        for &i in &order {
            buf.extend_from_slice(&coeffs[i].re.to_le_bytes());
            buf.extend_from_slice(&coeffs[i].im.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&buf).map_err(io)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.data.len() {
            return Err(MhdError::Format {
                path: self.path.to_path_buf(),
                message: format!("truncated: need {} bytes, file has {}", self.pos + n, self.data.len()),
            });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Reads a snapshot. Grids are shared when `grid` matches the stored size.
pub fn read_snapshot(path: &Path, grid: Option<&Arc<Grid>>) -> Result<Snapshot> {
    let data = std::fs::read(path).map_err(|source| MhdError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = |message: String| MhdError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut c = Cursor {
        data: &data,
        pos: 0,
        path,
    };
    if c.take(8)? != SNAPSHOT_MAGIC {
        return Err(format("not a snapshot file (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(format(format!("unsupported snapshot version {version} (expected {SNAPSHOT_VERSION})")));
    }
    let n = c.u32()? as usize;
    if n < 2 || n % 2 != 0 || n > 1024 {
        return Err(format(format!("invalid grid size {n}")));
    }
    let step = c.u64()?;
    let mut v = [0.0; 14];
    for x in v.iter_mut() {
        *x = c.f64()?;
    }
    let m = c.u32()? as usize;
    if m > 64 {
        return Err(format(format!("implausible number of Sobolev orders {m}")));
    }
    let orders = (0..m).map(|_| c.f64()).collect::<Result<Vec<f64>>>()?;
    let expected = c.pos + 7 * n * n * n * 16;
    if data.len() != expected {
        return Err(format(format!("truncated or padded: expected {expected} bytes, found {}", data.len())));
    }
    let grid = match grid {
        Some(g) if g.points_per_axis() == n => Arc::clone(g),
        _ => Grid::new(n),
    };
    let order = lexicographic_indices(&grid);
    let mut comps: Vec<SpectralScalar> = Vec::with_capacity(7);
    for _ in 0..7 {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for &i in &order {
            let re = c.f64()?;
            let im = c.f64()?;
            coeffs[i] = Complex64::new(re, im);
        }
        comps.push(SpectralScalar::from_coeffs(&grid, coeffs));
    }
    let mut it = comps.into_iter();
    let mut next = || it.next().unwrap();
    let a = next();
    let u = SpectralVector::new([next(), next(), next()]);
    let b = SpectralVector::new([next(), next(), next()]);
    let params = Params {
        n: [v[1], v[2], v[3]],
        pressure: PressureLaw::new(v[4]).map_err(|e| format(e.to_string()))?,
        viscosities: Viscosities::new(v[5], v[6]).map_err(|e| format(e.to_string()))?,
        c0: v[7],
    };
    Ok(Snapshot {
        meta: SnapshotMeta {
            params,
            diagnostics: DiagnosticsConfig {
                r: v[8],
                gamma: v[9],
                norm_orders: orders,
                poincare_h3: v[10],
            },
            ctx: StepContext {
                step,
                cum_dissipation: v[11],
                cum_nb2: v[12],
                divb_pre: v[13],
            },
        },
        state: State { t: v[0], a, u, b },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_state;

    fn meta() -> SnapshotMeta {
        SnapshotMeta {
            params: Params {
                n: [1.0, 2f64.sqrt(), 3f64.sqrt()],
                pressure: PressureLaw::default(),
                viscosities: Viscosities::new(0.1, 0.0).unwrap(),
                c0: 0.5,
            },
            diagnostics: DiagnosticsConfig::new(3.0),
            ctx: StepContext {
                step: 42,
                cum_dissipation: 1.5e-7,
                cum_nb2: 3.25e-3,
                divb_pre: 1e-18,
            },
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = std::env::temp_dir().join(format!("torus-mhd-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let grid = Grid::new(8);
        let mut s = random_state(&grid, 2, 0.01, 3);
        s.t = 0.125;
        let path = snapshot_path(&dir, 42);
        write_snapshot(&path, &s, &meta()).unwrap();
        let back = read_snapshot(&path, Some(&grid)).unwrap();
        assert_eq!(back.state.t, 0.125);
        assert_eq!(back.meta.ctx, meta().ctx);
        assert_eq!(back.meta.params, meta().params);
        assert_eq!(back.meta.diagnostics.norm_orders, meta().diagnostics.norm_orders);
        for (x, y) in s.components().iter().zip(back.state.components()) {
            assert_eq!(x.coeffs(), y.coeffs());
        }
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn lexicographic_layout() {
        let dir = std::env::temp_dir().join(format!("torus-mhd-snap-lex-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let grid = Grid::new(4);
        let mut s = State::zeros(&grid);
        s.a = SpectralScalar::single_mode(&grid, [-1, 0, 1], Complex64::new(0.25, 0.5));
        let path = dir.join("x.bin");
        write_snapshot(&path, &s, &meta()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = 140 + 8 * 4;
        // k ranges over {-1, 0, 1, 2}; (-1, 0, 1) sits at 0·16 + 1·4 + 2.
        let at = header + (4 + 2) * 16;
        let re = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[at + 8..at + 16].try_into().unwrap());
        assert_eq!((re, im), (0.25, 0.5));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn truncated_file_is_a_format_error() {
        let dir = std::env::temp_dir().join(format!("torus-mhd-snap-trunc-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let grid = Grid::new(4);
        let path = dir.join("t.bin");
        write_snapshot(&path, &State::zeros(&grid), &meta()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        let err = read_snapshot(&path, None).unwrap_err();
        assert!(matches!(err, MhdError::Format { .. }));
        assert!(err.to_string().contains("t.bin"));
        std::fs::write(&path, b"garbage").unwrap();
        assert!(matches!(read_snapshot(&path, None), Err(MhdError::Format { .. })));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
