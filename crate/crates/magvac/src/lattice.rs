//! Finite-lattice spectral oracle for the Pauli operator on a torus.
//!
//! Sites carry two spin components; hopping from `x` to `x + e_j` picks up
//! the Peierls phase `e^{-i theta_j(x)}`, and the Zeeman term is `-sigma.B`
//! per site. Torus energies come from dense Hermitian eigensolves; stripe
//! chains reduce to periodic tridiagonal blocks with an `O(p^2)` solver.

use std::f64::consts::PI;
use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::evd::tridiagonal_self_adjoint_evd;
use faer::{c64, ColMut, ColRef, Mat, Par, Side};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::pvscheme::{f_pv, PvScheme};
use crate::quad::{gauss_legendre, neumaier_sum, QuadratureConfig};

/// Largest dense matrix accepted.
pub const MAX_DENSE_DIM: usize = 20000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSpec {
    /// Sites per dimension.
    pub n: usize,
    /// Lattice spacing.
    pub a: f64,
    /// Flux quanta through each (x1, x2) plane for constant-field runs.
    pub flux_quanta: i64,
    pub dims: usize,
    /// Boundary twists per direction; spectra are averaged over a `twists^dims`
    /// grid of Bloch phases.
    pub twists: usize,
}

impl LatticeSpec {
    pub fn new(n: usize, a: f64, flux_quanta: i64, dims: usize) -> Result<LatticeSpec> {
        if n < 2 {
            return domain(format!("need at least two sites per dimension, got {n}"));
        }
        if !(a > 0.0 && a.is_finite()) {
            return domain(format!("spacing must be positive, got {a}"));
        }
        if !(dims == 2 || dims == 3) {
            return domain(format!("dims must be 2 or 3, got {dims}"));
        }
        Ok(LatticeSpec { n, a, flux_quanta, dims, twists: 1 })
    }

    pub fn with_twists(mut self, twists: usize) -> Result<LatticeSpec> {
        if twists == 0 {
            return domain("need at least one twist");
        }
        self.twists = twists;
        Ok(self)
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.a
    }

    pub fn sites(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    /// Two spin components per site.
    pub fn matrix_dim(&self) -> usize {
        2 * self.sites()
    }

    /// `b = 2 pi N / (n a)^2`.
    pub fn field(&self) -> f64 {
        2.0 * PI * self.flux_quanta as f64 / self.length().powi(2)
    }

    /// Errors unless `b a^2 n^2 = 2 pi N`.
    pub fn check_field(&self, b: f64) -> Result<()> {
        let want = self.field();
        if (b - want).abs() > 1e-12 * want.abs().max(b.abs()).max(1e-300) {
            return Err(Error::FluxInconsistency(format!(
                "b = {b} does not thread {} quanta through an {}-site plane of spacing {} (needs {want})",
                self.flux_quanta, self.n, self.a
            )));
        }
        Ok(())
    }

    fn site(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        let mut s = 0;
        for d in 0..self.dims {
            s = s * n + idx[d] % n;
        }
        s
    }

    fn coords(&self, mut s: usize) -> [usize; 3] {
        let mut c = [0; 3];
        for d in (0..self.dims).rev() {
            c[d] = s % self.n;
            s /= self.n;
        }
        c
    }
}

/// Peierls phases `theta_j(x)` on the link from `x` to `x + e_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkPhases {
    pub theta: Vec<[f64; 3]>,
}

impl LinkPhases {
    pub fn zero(spec: &LatticeSpec) -> LinkPhases {
        LinkPhases { theta: vec![[0.0; 3]; spec.sites()] }
    }

    /// Landau gauge for the constant field: `theta_2 = b a^2 i1` and a seam
    /// `theta_1(n-1, i2) = -b a^2 n i2` closing the torus.
    pub fn landau(spec: &LatticeSpec) -> LinkPhases {
        let phi = spec.field() * spec.a * spec.a;
        LinkPhases::from_plaquette_fluxes(spec, &vec![phi; spec.n * spec.n]).expect("quantized by construction")
    }

    /// Phases realizing the given (x1, x2)-plaquette fluxes, identical in
    /// every x3 layer. `flux[i1 * n + i2]` is the flux through the plaquette
    /// with lower corner `(i1, i2)`.
    pub fn from_plaquette_fluxes(spec: &LatticeSpec, flux: &[f64]) -> Result<LinkPhases> {
        let n = spec.n;
        if flux.len() != n * n {
            return domain(format!("expected {} plaquette fluxes, got {}", n * n, flux.len()));
        }
        let total: f64 = flux.iter().sum();
        let quanta = total / (2.0 * PI);
        if (quanta - quanta.round()).abs() > 1e-9 * quanta.abs().max(1.0) {
            return Err(Error::FluxInconsistency(format!("total flux {total} is not a multiple of 2 pi")));
        }
        let mut t2 = vec![0.0; n * n];
        let mut column = vec![0.0; n];
        for j in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                t2[i * n + j] = acc;
                acc += flux[i * n + j];
            }
            column[j] = acc;
        }
        let mut seam = vec![0.0; n];
        for j in 1..n {
            seam[j] = seam[j - 1] - column[j - 1];
        }
        let mut theta = vec![[0.0; 3]; spec.sites()];
        for (s, th) in theta.iter_mut().enumerate() {
            let c = spec.coords(s);
            th[1] = t2[c[0] * n + c[1]];
            if c[0] == n - 1 {
                th[0] = seam[c[1]];
            }
        }
        Ok(LinkPhases { theta })
    }

    /// `theta_j(x) -> theta_j(x) + chi(x + e_j) - chi(x)`.
    pub fn gauge_transform(&self, spec: &LatticeSpec, chi: &[f64]) -> Result<LinkPhases> {
        if chi.len() != spec.sites() {
            return domain("gauge function needs one value per site");
        }
        let mut theta = self.theta.clone();
        for (s, th) in theta.iter_mut().enumerate() {
            let c = spec.coords(s);
            for j in 0..spec.dims {
                let mut up = c;
                up[j] += 1;
                th[j] += chi[spec.site(up)] - chi[s];
            }
        }
        Ok(LinkPhases { theta })
    }

    /// Flux through the (j, k) plaquette at site `s`, reduced to `(-pi, pi]`.
    pub fn plaquette_flux(&self, spec: &LatticeSpec, s: usize, j: usize, k: usize) -> f64 {
        let c = spec.coords(s);
        let mut cj = c;
        cj[j] += 1;
        let mut ck = c;
        ck[k] += 1;
        let raw = self.theta[s][j] + self.theta[spec.site(cj)][k] - self.theta[spec.site(ck)][j] - self.theta[s][k];
        let r = raw.rem_euclid(2.0 * PI);
        if r > PI {
            r - 2.0 * PI
        } else {
            r
        }
    }

    /// Flux quanta through the (x1, x2) planes. On a torus the reduced
    /// plaquette fluxes of a layer always add to a multiple of `2 pi`; layers
    /// that disagree are an error.
    pub fn check_quantized(&self, spec: &LatticeSpec) -> Result<i64> {
        let n = spec.n;
        let layers = if spec.dims == 3 { n } else { 1 };
        let mut quanta = None;
        for l in 0..layers {
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    total += self.plaquette_flux(spec, spec.site([i, j, l]), 0, 1);
                }
            }
            let q = total / (2.0 * PI);
            if (q - q.round()).abs() > 1e-9 * q.abs().max(1.0) {
                return Err(Error::FluxInconsistency(format!("layer {l} carries flux {total}")));
            }
            if *quanta.get_or_insert(q.round() as i64) != q.round() as i64 {
                return Err(Error::FluxInconsistency("layers carry different flux".into()));
            }
        }
        Ok(quanta.unwrap_or(0))
    }
}

/// Dense Pauli matrix `-Delta_A - sigma.B` with Bloch twists `twist[j]` on the
/// links that wrap around direction j. Row/column `2 * site + spin`.
pub fn build_pauli(spec: &LatticeSpec, phases: &LinkPhases, zeeman: &[[f64; 3]], twist: [f64; 3]) -> Result<Mat<c64>> {
    let dim = spec.matrix_dim();
    if dim > MAX_DENSE_DIM {
        return Err(Error::DimensionTooLarge { dim, cap: MAX_DENSE_DIM });
    }
    if phases.theta.len() != spec.sites() || zeeman.len() != spec.sites() {
        return domain("phases and Zeeman field need one entry per site");
    }
    let lap = build_laplacian(spec, phases, twist)?;
    let mut h = Mat::<c64>::zeros(dim, dim);
    for s in 0..spec.sites() {
        for t in 0..spec.sites() {
            let v = lap[(s, t)];
            if v != c64::new(0.0, 0.0) {
                h[(2 * s, 2 * t)] = v;
                h[(2 * s + 1, 2 * t + 1)] = v;
            }
        }
        // -sigma.B
        let b = zeeman[s];
        h[(2 * s, 2 * s)] -= c64::new(b[2], 0.0);
        h[(2 * s + 1, 2 * s + 1)] += c64::new(b[2], 0.0);
        h[(2 * s, 2 * s + 1)] += c64::new(-b[0], b[1]);
        h[(2 * s + 1, 2 * s)] += c64::new(-b[0], -b[1]);
    }
    Ok(h)
}

pub fn hermitian_defect(h: &Mat<c64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in 0..=i {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn eigenvalues(h: &Mat<c64>) -> Result<Vec<f64>> {
    let mut e = h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    e.sort_by(f64::total_cmp);
    Ok(e)
}

fn real_eigenvalues(h: &Mat<f64>) -> Result<Vec<f64>> {
    let mut e = h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Eigenvalues of the symmetric periodic tridiagonal matrix with diagonal
/// `diag` and every nearest-neighbour entry, the corner included, equal to
/// `hop`.
///
/// Interleaving the sites as `0, p-1, 1, p-2, ...` puts the ring inside a
/// band of half-width 2. Givens rotations chase that band down to
/// tridiagonal form in `O(p^2)`, and the implicit QR sweep finishes.
pub fn periodic_tridiagonal_eigenvalues(diag: &[f64], hop: f64) -> Result<Vec<f64>> {
    let p = diag.len();
    if p < 4 {
        let h = Mat::<f64>::from_fn(p, p, |i, j| {
            if i == j {
                diag[i]
            } else if (i + 1) % p == j || (j + 1) % p == i {
                hop
            } else {
                0.0
            }
        });
        return real_eigenvalues(&h);
    }
    let mut pos = vec![0; p];
    for k in 0..p {
        let site = if k % 2 == 0 { k / 2 } else { p - 1 - k / 2 };
        pos[site] = k;
    }
    let mut band = Band { cols: vec![[0.0; 4]; p] };
    for s in 0..p {
        band.set(pos[s], pos[s], diag[s]);
        band.set(pos[s], pos[(s + 1) % p], hop);
    }
    for j in 0..p - 2 {
        // Zero (j + 2, j), then chase the bulge each rotation leaves behind.
        let (mut r, mut c) = (j + 1, j);
        while r + 1 < p {
            let (x, y) = (band.get(r, c), band.get(r + 1, c));
            if y == 0.0 {
                break;
            }
            let h = x.hypot(y);
            band.rotate(r, x / h, y / h);
            c = r;
            r += 2;
        }
    }
    let d: Vec<f64> = (0..p).map(|i| band.get(i, i)).collect();
    let e: Vec<f64> = (0..p).map(|i| if i + 1 < p { band.get(i + 1, i) } else { 0.0 }).collect();
    let mut out = vec![0.0; p];
    let mut mem = MemBuffer::new(StackReq::new::<f64>(2 * p + 64));
    tridiagonal_self_adjoint_evd::<f64>(
        ColRef::from_slice(&d).as_diagonal(),
        ColRef::from_slice(&e).as_diagonal(),
        ColMut::from_slice_mut(&mut out).as_diagonal_mut(),
        None,
        Par::Seq,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Lower band of a symmetric matrix, room for one bulge below the band.
struct Band {
    cols: Vec<[f64; 4]>,
}

impl Band {
    fn get(&self, i: usize, k: usize) -> f64 {
        let (r, c) = if i >= k { (i, k) } else { (k, i) };
        if r - c > 3 {
            0.0
        } else {
            self.cols[c][r - c]
        }
    }

    fn set(&mut self, i: usize, k: usize, v: f64) {
        let (r, c) = if i >= k { (i, k) } else { (k, i) };
        self.cols[c][r - c] = v;
    }

    /// `G A G^T` with `G` rotating rows `r, r + 1` so `(r + 1, c)` vanishes.
    fn rotate(&mut self, r: usize, cs: f64, sn: f64) {
        let p = self.cols.len();
        for k in r.saturating_sub(3)..(r + 5).min(p) {
            if k == r || k == r + 1 {
                continue;
            }
            let (x, y) = (self.get(r, k), self.get(r + 1, k));
            let u = cs * x + sn * y;
            let v = cs * y - sn * x;
            if r.abs_diff(k) <= 3 {
                self.set(r, k, u);
            }
            if (r + 1).abs_diff(k) <= 3 {
                self.set(r + 1, k, v);
            }
        }
        let (a, b, c) = (self.cols[r][0], self.cols[r][1], self.cols[r + 1][0]);
        self.cols[r][0] = cs * cs * a + 2.0 * cs * sn * b + sn * sn * c;
        self.cols[r + 1][0] = sn * sn * a - 2.0 * cs * sn * b + cs * cs * c;
        self.cols[r][1] = cs * sn * (c - a) + (cs * cs - sn * sn) * b;
    }
}

/// `2 sum_j (1 - cos(a k_j))/a^2` over the allowed momenta, each twice.
pub fn free_dispersion(spec: &LatticeSpec, twist: [f64; 3]) -> Vec<f64> {
    let inv = 1.0 / (spec.a * spec.a);
    let mut e: Vec<f64> = (0..spec.sites())
        .flat_map(|s| {
            let c = spec.coords(s);
            let v: f64 = (0..spec.dims).map(|j| 2.0 * (1.0 - ((2.0 * PI * c[j] as f64 + twist[j]) / spec.n as f64).cos()) * inv).sum();
            [v, v]
        })
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    /// Full `2 n^dims` matrix per twist.
    Dense,
    /// Constant field only: 2D magnetic blocks, plane waves along x3 and
    /// the Zeeman shift `-+b` added analytically.
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralEnergy {
    /// Sorted, all twist sectors pooled, spin included.
    pub eigenvalues_free: Vec<f64>,
    pub eigenvalues_field: Vec<f64>,
    /// PV vacuum energy per unit volume.
    pub density: f64,
    pub scheme: PvScheme,
    pub min_eigenvalue: f64,
    pub route: Route,
}

/// Centred twist grid `2 pi (k + 1/2)/K`.
fn twist_grid(k: usize) -> Vec<f64> {
    (0..k).map(|t| 2.0 * PI * (t as f64 + 0.5) / k as f64).collect()
}

/// `sum_j c_j int dxi/2pi sqrt(lambda + xi^2 + m_j^2)`, regulated:
/// `-(1/4 pi) sum_j c_j (lambda + m_j^2) log(lambda + m_j^2)`.
pub fn longitudinal_factor(lambda: f64, scheme: &PvScheme) -> f64 {
    -scheme.combine(|m2| (lambda + m2) * (lambda + m2).ln()) / (4.0 * PI)
}

fn sqrt_factor(lambda: f64, scheme: &PvScheme) -> f64 {
    scheme.combine(|m2| (lambda + m2).sqrt())
}

fn check_floor(lmin: f64, scheme: &PvScheme) -> Result<()> {
    let m0 = scheme.masses()[0];
    if lmin + m0 * m0 <= 0.0 {
        return Err(Error::Domain(format!("eigenvalue {lmin} lies below -m0^2; the PV sum is undefined")));
    }
    Ok(())
}

/// PV energy per unit volume for the constant field `b e3`.
///
/// For `dims = 2` the x3 direction stays continuous and enters through
/// [`longitudinal_factor`]; for `dims = 3` the density is
/// `(1/V) sum_k sum_j c_j (sqrt(l0_k + m_j^2) - sqrt(l_k + m_j^2))`.
pub fn pv_energy_density(spec: &LatticeSpec, b: f64, scheme: &PvScheme, route: Route) -> Result<SpectralEnergy> {
    spec.check_field(b)?;
    let (free, field) = match route {
        Route::Dense => dense_spectra(spec, b)?,
        Route::Blocks => block_spectra(spec, b)?,
    };
    spectral_energy(spec, free, field, scheme, route)
}

fn spectral_energy(spec: &LatticeSpec, mut free: Vec<f64>, mut field: Vec<f64>, scheme: &PvScheme, route: Route) -> Result<SpectralEnergy> {
    let sectors = spec.twists.pow(spec.dims as u32) as f64;
    let min_eigenvalue = field.iter().chain(&free).cloned().fold(f64::INFINITY, f64::min);
    check_floor(min_eigenvalue, scheme)?;
    let density = if spec.dims == 2 {
        let area = spec.length().powi(2);
        (neumaier_sum(free.iter().map(|&l| longitudinal_factor(l, scheme))) - neumaier_sum(field.iter().map(|&l| longitudinal_factor(l, scheme)))) / (sectors * area)
    } else {
        let vol = spec.length().powi(3);
        neumaier_sum(free.iter().zip(&field).map(|(&l0, &l)| sqrt_factor(l0, scheme) - sqrt_factor(l, scheme))) / (sectors * vol)
    };
    free.sort_by(f64::total_cmp);
    field.sort_by(f64::total_cmp);
    Ok(SpectralEnergy { eigenvalues_free: free, eigenvalues_field: field, density, scheme: *scheme, min_eigenvalue, route })
}

fn twist_tuples(spec: &LatticeSpec) -> Vec<[f64; 3]> {
    let g = twist_grid(spec.twists);
    let mut out = Vec::new();
    for &t1 in &g {
        for &t2 in &g {
            if spec.dims == 3 {
                for &t3 in &g {
                    out.push([t1, t2, t3]);
                }
            } else {
                out.push([t1, t2, 0.0]);
            }
        }
    }
    out
}

fn dense_spectra(spec: &LatticeSpec, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let phases = LinkPhases::landau(spec);
    let zero = LinkPhases::zero(spec);
    let zeeman = vec![[0.0, 0.0, b]; spec.sites()];
    let none = vec![[0.0; 3]; spec.sites()];
    let parts: Result<Vec<(Vec<f64>, Vec<f64>)>> = twist_tuples(spec)
        .par_iter()
        .map(|&tw| {
            let f = eigenvalues(&build_pauli(spec, &zero, &none, tw)?)?;
            let h = eigenvalues(&build_pauli(spec, &phases, &zeeman, tw)?)?;
            Ok((f, h))
        })
        .collect();
    let (mut free, mut field) = (Vec::new(), Vec::new());
    for (f, h) in parts? {
        free.extend(f);
        field.extend(h);
    }
    Ok((free, field))
}

/// Spinless covariant Laplacian `-Delta_A`.
pub fn build_laplacian(spec: &LatticeSpec, phases: &LinkPhases, twist: [f64; 3]) -> Result<Mat<c64>> {
    let dim = spec.sites();
    if dim > MAX_DENSE_DIM {
        return Err(Error::DimensionTooLarge { dim, cap: MAX_DENSE_DIM });
    }
    if phases.theta.len() != dim {
        return domain("phases need one entry per site");
    }
    let inv = 1.0 / (spec.a * spec.a);
    let mut h = Mat::<c64>::zeros(dim, dim);
    for s in 0..dim {
        let c = spec.coords(s);
        h[(s, s)] += c64::new(2.0 * spec.dims as f64 * inv, 0.0);
        for j in 0..spec.dims {
            let mut up = c;
            up[j] += 1;
            let t = spec.site(up);
            let mut th = phases.theta[s][j];
            if c[j] == spec.n - 1 {
                th += twist[j];
            }
            let hop = c64::new(-th.cos() * inv, th.sin() * inv);
            h[(s, t)] += hop;
            h[(t, s)] += hop.conj();
        }
    }
    Ok(h)
}

fn block_spectra(spec: &LatticeSpec, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = twist_grid(spec.twists);
    let kappa: Vec<f64> = if spec.dims == 3 {
        g.iter()
            .flat_map(|&t| (0..spec.n).map(move |k| (2.0 - 2.0 * ((2.0 * PI * k as f64 + t) / spec.n as f64).cos()) / (spec.a * spec.a)))
            .collect()
    } else {
        vec![0.0]
    };
    let plane = LatticeSpec { dims: 2, ..*spec };
    let phases = LinkPhases::landau(&plane);
    let zero = LinkPhases::zero(&plane);
    let pairs: Vec<(f64, f64)> = g.iter().flat_map(|&t1| g.iter().map(move |&t2| (t1, t2))).collect();
    let parts: Result<Vec<(Vec<f64>, Vec<f64>)>> = pairs
        .par_iter()
        .map(|&(t1, t2)| {
            let mu = eigenvalues(&build_laplacian(&plane, &phases, [t1, t2, 0.0])?)?;
            let mu0 = eigenvalues(&build_laplacian(&plane, &zero, [t1, t2, 0.0])?)?;
            let mut f = Vec::with_capacity(2 * mu.len() * kappa.len());
            let mut h = Vec::with_capacity(2 * mu.len() * kappa.len());
            for &k in &kappa {
                for (&m, &m0) in mu.iter().zip(&mu0) {
                    f.extend([m0 + k, m0 + k]);
                    h.extend([m + k - b, m + k + b]);
                }
            }
            Ok((f, h))
        })
        .collect();
    let (mut free, mut field) = (Vec::new(), Vec::new());
    for (f, h) in parts? {
        free.extend(f);
        field.extend(h);
    }
    Ok((free, field))
}

/// Value at `a = 0` of the polynomial in `a^2` through the given
/// `(a, value)` points.
pub fn richardson_extrapolate(points: &[(f64, f64)]) -> Result<f64> {
    let k = points.len();
    if k == 0 {
        return domain("need at least one point");
    }
    let mut hs: Vec<f64> = points.iter().map(|p| p.0).collect();
    hs.sort_by(f64::total_cmp);
    if hs.windows(2).any(|w| w[0] == w[1]) || hs[0] <= 0.0 {
        return domain("spacings must be positive and distinct");
    }
    let m = DMatrix::from_fn(k, k, |i, j| (points[i].0 * points[i].0).powi(j as i32));
    let y = DVector::from_iterator(k, points.iter().map(|p| p.1));
    let c = m.lu().solve(&y).ok_or_else(|| Error::Domain("singular extrapolation system".into()))?;
    Ok(c[0])
}

/// Field profile varying along x1 only, `beta(x) = b0 (1 + eta s(x/L))`
/// with `s` of zero mean over one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StripeProfile {
    Zero,
    Constant,
    /// `s(u) = cos(2 pi u)`.
    Cosine { eta: f64 },
    /// `s(u) = g(u) - <g>`, `g(u) = e^{-(u - 1/2)^2/w^2}` on one period.
    Gaussian { eta: f64, width: f64 },
}

impl StripeProfile {
    pub fn validate(&self) -> Result<()> {
        let eta = match *self {
            StripeProfile::Cosine { eta } => eta,
            StripeProfile::Gaussian { eta, width } => {
                if !(width > 0.0 && width <= 0.5) {
                    return domain(format!("gaussian width must lie in (0, 0.5], got {width}"));
                }
                eta
            }
            _ => 0.0,
        };
        // The field must stay positive for the profile to be a modulation.
        let low = self.shape_range().0;
        if !(1.0 + eta * low > 0.0 && 1.0 + eta * self.shape_range().1 > 0.0) {
            return domain(format!("modulation amplitude {eta} makes the field change sign"));
        }
        Ok(())
    }

    fn gaussian_mean(width: f64) -> f64 {
        let (x, w) = gauss_legendre(64);
        x.iter().zip(&w).map(|(x, w)| 0.5 * w * (-(0.5 * x).powi(2) / (width * width)).exp()).sum()
    }

    fn shape_range(&self) -> (f64, f64) {
        match *self {
            StripeProfile::Cosine { .. } => (-1.0, 1.0),
            StripeProfile::Gaussian { width, .. } => {
                let m = Self::gaussian_mean(width);
                ((-0.25 / (width * width)).exp() - m, 1.0 - m)
            }
            _ => (0.0, 0.0),
        }
    }

    /// Mean-zero shape on the unit period.
    pub fn shape(&self, u: f64) -> f64 {
        match *self {
            StripeProfile::Zero | StripeProfile::Constant => 0.0,
            StripeProfile::Cosine { .. } => (2.0 * PI * u).cos(),
            StripeProfile::Gaussian { width, .. } => {
                let v = u.rem_euclid(1.0) - 0.5;
                (-v * v / (width * width)).exp() - Self::gaussian_mean(width)
            }
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            StripeProfile::Cosine { eta } | StripeProfile::Gaussian { eta, .. } => eta,
            _ => 0.0,
        }
    }

    /// `beta(x)` on a period of length `length`.
    pub fn field(&self, b0: f64, length: f64, x: f64) -> f64 {
        match self {
            StripeProfile::Zero => 0.0,
            _ => b0 * (1.0 + self.eta() * self.shape(x / length)),
        }
    }

    /// Length over which the field changes appreciably, as a fraction of the period.
    pub fn variation_fraction(&self) -> Option<f64> {
        match *self {
            StripeProfile::Cosine { .. } => Some(1.0 / (2.0 * PI)),
            StripeProfile::Gaussian { width, .. } => Some(width),
            _ => None,
        }
    }
}

/// Best rational approximation with denominator at most `max_den`.
fn rational(x: f64, max_den: i64) -> (i64, i64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    loop {
        let a = r.floor();
        let (p2, q2) = (a as i64 * p1 + p0, a as i64 * q1 + q0);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    (p1, q1)
}

/// Plaquette fluxes `a int_cell beta` of one period, by 10-point Gauss-Legendre.
fn strip_fluxes(profile: &StripeProfile, b0: f64, length: f64, a: f64, n1: usize) -> Vec<f64> {
    let (x, w) = gauss_legendre(10);
    (0..n1)
        .map(|i| {
            let lo = i as f64 * a;
            a * x.iter().zip(&w).map(|(x, w)| 0.5 * a * w * profile.field(b0, length, lo + 0.5 * a * (x + 1.0))).sum::<f64>()
        })
        .collect()
}

/// Chain geometry: `(n1, q, fluxes)` where one period has `n1` sites and the
/// chain closes after `q` periods.
fn chain_geometry(profile: &StripeProfile, b0: f64, length: f64, a: f64) -> Result<(usize, usize, Vec<f64>)> {
    profile.validate()?;
    let n1f = length / a;
    let n1 = n1f.round() as usize;
    if (n1f - n1 as f64).abs() > 1e-9 * n1f || n1 < 2 {
        return domain(format!("period {length} is not a whole number of spacings {a}"));
    }
    let strip = b0 * a * length / (2.0 * PI);
    let total = strip * n1 as f64;
    if (total - total.round()).abs() > 1e-9 * total.abs().max(1.0) {
        return Err(Error::FluxInconsistency(format!("torus flux {total} quanta is not an integer")));
    }
    let (p, q) = rational(strip, 100_000);
    if (strip - p as f64 / q as f64).abs() > 1e-9 * strip.abs().max(1.0) {
        return Err(Error::FluxInconsistency(format!("strip flux {strip} quanta has no small denominator")));
    }
    Ok((n1, q as usize, strip_fluxes(profile, b0, length, a, n1)))
}

/// Spectrum of the 2D Pauli operator for a stripe field on an infinite
/// strip lattice, sampled at `k2_count` momenta per reduced zone.
///
/// In the Landau gauge `theta_2(i) = sum_{i' < i} Phi(i')` the x2 momentum
/// is conserved; the phase shift per period `2 pi p/q` closes the chain after
/// `q` periods. The Zeeman term uses the plaquette-averaged field.
pub fn stripe_chain_spectrum(profile: &StripeProfile, b0: f64, length: f64, a: f64, k2_count: usize) -> Result<(Vec<f64>, usize)> {
    if k2_count == 0 {
        return domain("need at least one momentum sample");
    }
    let (n1, q, flux) = chain_geometry(profile, b0, length, a)?;
    let p = n1 * q;
    if p > MAX_DENSE_DIM {
        return Err(Error::DimensionTooLarge { dim: p, cap: MAX_DENSE_DIM });
    }
    let inv = 1.0 / (a * a);
    let mut theta2 = vec![0.0; p];
    for i in 1..p {
        theta2[i] = theta2[i - 1] + flux[(i - 1) % n1];
    }
    let zeeman: Vec<f64> = (0..n1).map(|i| 0.5 * (flux[(i + n1 - 1) % n1] + flux[i]) * inv).collect();
    let ks: Vec<f64> = (0..k2_count).map(|t| 2.0 * PI * t as f64 / (q * k2_count) as f64).collect();
    let parts: Result<Vec<Vec<f64>>> = ks
        .par_iter()
        .map(|&k2| {
            let mut out = Vec::with_capacity(2 * p);
            for sign in [-1.0, 1.0] {
                let d: Vec<f64> = (0..p).map(|i| 4.0 * inv - 2.0 * inv * (k2 - theta2[i]).cos() + sign * zeeman[i % n1]).collect();
                out.extend(periodic_tridiagonal_eigenvalues(&d, -inv)?);
            }
            Ok(out)
        })
        .collect();
    let mut all: Vec<f64> = parts?.into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    Ok((all, p))
}

/// Spectrum of the same stripe field on a finite `n x n` torus with the
/// dense builder, for cross-checks of the chain reduction.
pub fn stripe_torus_spectrum(profile: &StripeProfile, b0: f64, length: f64, n: usize) -> Result<Vec<f64>> {
    let a = length / n as f64;
    let (_, _, flux) = chain_geometry(profile, b0, length, a)?;
    let spec = LatticeSpec::new(n, a, 0, 2)?;
    let plaq: Vec<f64> = (0..n * n).map(|k| flux[k / n]).collect();
    let phases = LinkPhases::from_plaquette_fluxes(&spec, &plaq)?;
    let zeeman: Vec<[f64; 3]> = (0..n * n).map(|k| [0.0, 0.0, 0.5 * (flux[(k / n + n - 1) % n] + flux[k / n]) / (a * a)]).collect();
    eigenvalues(&build_pauli(&spec, &phases, &zeeman, [0.0; 3])?)
}

/// Longitudinal treatment of the x3 direction in stripe runs.
fn longitudinal(lambda: f64, scheme: &PvScheme, a: f64, dims: usize, m3: usize) -> f64 {
    if dims == 2 {
        longitudinal_factor(lambda, scheme)
    } else {
        // Periodic lattice of m3 sites along x3, per unit length.
        let s: f64 = (0..m3)
            .map(|k| {
                let kap = (2.0 - 2.0 * ((2.0 * PI * (k as f64 + 0.5)) / m3 as f64).cos()) / (a * a);
                sqrt_factor(lambda + kap, scheme)
            })
            .sum();
        s / (m3 as f64 * a)
    }
}

/// Free lattice energy per unit volume, from a midpoint grid over the zone.
fn free_stripe_density(a: f64, scheme: &PvScheme, dims: usize, m3: usize) -> f64 {
    let k = if dims == 2 { 400 } else { 96 };
    let c: Vec<f64> = (0..k).map(|t| 2.0 - 2.0 * (2.0 * PI * (t as f64 + 0.5) / k as f64).cos()).collect();
    let vals: Vec<f64> = c
        .par_iter()
        .map(|&u| neumaier_sum(c.iter().map(|&v| longitudinal((u + v) / (a * a), scheme, a, dims, m3))))
        .collect();
    2.0 * neumaier_sum(vals) / ((k * k) as f64 * a * a)
}

/// PV energy per unit volume of a stripe field at spacing `a`.
pub fn stripe_density(profile: &StripeProfile, b0: f64, length: f64, a: f64, k2_count: usize, scheme: &PvScheme, dims: usize) -> Result<(f64, usize)> {
    if !(dims == 2 || dims == 3) {
        return domain(format!("dims must be 2 or 3, got {dims}"));
    }
    let m3 = (length / a).round() as usize;
    let (spec, p) = stripe_chain_spectrum(profile, b0, length, a, k2_count)?;
    check_floor(spec[0], scheme)?;
    let field = neumaier_sum(spec.iter().map(|&l| longitudinal(l, scheme, a, dims, m3)));
    let free = free_stripe_density(a, scheme, dims, m3);
    Ok((free - field / ((k2_count * p) as f64 * a * a), p))
}

/// Mean of `f_pv(beta)` over one period, by 64-point Gauss-Legendre.
pub fn stripe_lda(profile: &StripeProfile, b0: f64, scheme: &PvScheme, cfg: &QuadratureConfig) -> Result<f64> {
    let (x, w) = gauss_legendre(64);
    let mut s = 0.0;
    for (x, w) in x.iter().zip(&w) {
        s += 0.5 * w * f_pv(profile.field(b0, 1.0, 0.5 * (x + 1.0)), scheme, cfg)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub profile: StripeProfile,
    /// Period of the unscaled profile; the scaled torus has side `L0/eps`.
    pub base_length: f64,
    /// Flux quanta through the unscaled `L0 x L0` cell.
    pub flux_quanta: i64,
    /// Coarsest spacing is `L0/base_sites`.
    pub base_sites: usize,
    /// Richardson levels `a0, a0/2, ...`.
    pub levels: usize,
    pub eps: Vec<f64>,
    /// Momentum samples per reduced zone at the coarsest spacing; `None`
    /// picks `max(4, 32 eps)`. Finer levels use as many as keep the x2
    /// period `q k2 a` of the sampled torus fixed.
    pub k2: Option<usize>,
    pub dims: usize,
    pub scheme: PvScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    /// `eps^dims E_lattice(A_eps)` per unit base volume, extrapolated to `a = 0`.
    pub lattice_energy_density: f64,
    pub lda_value: f64,
    pub deviation: f64,
    pub runtime_s: f64,
    pub spacings: Vec<f64>,
    pub level_densities: Vec<f64>,
    pub chain_lengths: Vec<usize>,
    /// Momentum samples per reduced zone at each spacing.
    pub k2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log |deviation|` against `log eps`.
    pub slope: Option<f64>,
    pub monotone_decreasing: bool,
    pub rate_in_window: bool,
    pub warnings: Vec<String>,
}

/// Lattice energy of the scaled fields `B(eps x)` against the local-density
/// value, for each `eps`.
///
/// With `beta(x1)` the field depends on one coordinate, so the torus
/// problem reduces to chains; the energy per unit volume on the scaled
/// torus equals `eps^dims E / L0^dims`.
pub fn semiclassical_sweep(cfg: &SweepConfig, qcfg: &QuadratureConfig) -> Result<SweepReport> {
    if cfg.eps.is_empty() {
        return domain("need at least one eps");
    }
    if cfg.eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return domain("eps values must lie in (0, 1]");
    }
    if cfg.eps.windows(2).any(|w| w[1] >= w[0]) {
        return domain("eps list must be strictly descending");
    }
    if cfg.levels == 0 || cfg.base_sites < 2 {
        return domain("need at least one level and two base sites");
    }
    if !(cfg.base_length > 0.0) {
        return domain("base length must be positive");
    }
    cfg.profile.validate()?;
    let b0 = if cfg.profile == StripeProfile::Zero { 0.0 } else { 2.0 * PI * cfg.flux_quanta as f64 / cfg.base_length.powi(2) };
    let lda_value = stripe_lda(&cfg.profile, b0, &cfg.scheme, qcfg)?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        let start = Instant::now();
        let length = cfg.base_length / eps;
        let a0 = cfg.base_length / cfg.base_sites as f64;
        let k2 = cfg.k2.unwrap_or(((32.0 * eps).ceil() as usize).max(4));
        if let Some(frac) = cfg.profile.variation_fraction() {
            let pts = frac * length / a0;
            if pts < 4.0 {
                warnings.push(format!("eps = {eps}: only {pts:.2} points per field variation length at the coarsest spacing"));
            }
        }
        let spacings: Vec<f64> = (0..cfg.levels).map(|l| a0 / 2f64.powi(l as i32)).collect();
        let mut level_densities = Vec::new();
        let mut chain_lengths = Vec::new();
        let mut k2_levels = Vec::new();
        let mut width = None;
        for &a in &spacings {
            let (d, p, k) = if b0 == 0.0 {
                (0.0, (length / a).round() as usize, k2)
            } else {
                let q = chain_geometry(&cfg.profile, b0, length, a)?.1 as f64;
                let w = *width.get_or_insert(q * k2 as f64 * a);
                let k = ((w / (q * a)).round() as usize).max(1);
                let (d, p) = stripe_density(&cfg.profile, b0, length, a, k, &cfg.scheme, cfg.dims)?;
                (d, p, k)
            };
            level_densities.push(d);
            chain_lengths.push(p);
            k2_levels.push(k);
        }
        let pts: Vec<(f64, f64)> = spacings.iter().cloned().zip(level_densities.iter().cloned()).collect();
        let lattice_energy_density = richardson_extrapolate(&pts)?;
        rows.push(SweepRow {
            eps,
            lattice_energy_density,
            lda_value,
            deviation: lattice_energy_density - lda_value,
            runtime_s: start.elapsed().as_secs_f64(),
            spacings,
            level_densities,
            chain_lengths,
            k2: k2_levels,
        });
    }
    let monotone_decreasing = rows.windows(2).all(|w| w[1].deviation.abs() < w[0].deviation.abs());
    let slope = fit_slope(&rows);
    let rate_in_window = slope.map(|s| (0.5..=1.5).contains(&s)).unwrap_or(false);
    Ok(SweepReport { rows, slope, monotone_decreasing, rate_in_window, warnings })
}

fn fit_slope(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.deviation != 0.0).map(|r| (r.eps.ln(), r.deviation.abs().ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
