//! Spectra of the four limit operators on the base rectangle.
//!
//! * `A`: Neumann Laplacian on `Ω`.
//! * `A_q`: `A ⊕ q·I`, i.e. `σ(A) ∪ {q}`.
//! * `A_r`: Neumann Laplacian with extra mass `r` on `Γ`, pencil `(K, M + r·G̃)`.
//! * `A_qr`: two-field problem, equivalent to the λ-dependent Robin
//!   condition `∂ₙu = μ(λ)·u` on `Γ` with `μ(λ) = λqr/(q − λ)`.
//!
//! `A_qr` is solved in two independent ways: directly on the block pencil,
//! and by locating the fixed points `λ_k(μ(λ)) = λ` of the Robin curves with
//! inertia counts of `K − μ(λ)G̃ − λM`.

pub mod analytic;
mod fixed_point;

pub use analytic::{
    dirichlet_gamma_analytic, neumann_rectangle_analytic, separable_oracle, DEFAULT_Q_WINDOW,
};
pub use fixed_point::{Branch, BranchEigenvalue, FixedPointOptions, FixedPointResult};

use crate::assembly::{
    assemble_aqr_blocks, assemble_boundary_mass, assemble_mass, assemble_stiffness, lift_boundary_mass, AssemblyError,
    DensityField, TraceMap,
};
use crate::eigen::ldlt::SymbolicPencil;
use crate::eigen::spectrum::{SpectralTag, Spectrum};
use crate::eigen::{EigSolveOptions, EigenError, EigenSolution, Pencil};
use crate::geometry::{QLimit, RLimit, RegimeClass};
use crate::mesh::TriMesh;
use crate::sparse::SparseSymMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower end of every interval solve, just below the zero eigenvalue.
pub const SPECTRUM_FLOOR: f64 = -1e-8;

/// Relative distance from a Dirichlet eigenvalue below which `q` is
/// considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("q = {q} is within {tol:e} (relative) of a Dirichlet-on-Gamma eigenvalue; perturb q (e.g. by 1e-4 relative)")]
    DegenerateQ { q: f64, tol: f64 },
    #[error("separable oracle root count did not stabilise for transverse mode {p}")]
    OracleUnstable { p: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operator", rename_all = "kebab-case")]
pub enum LimitProblem {
    A,
    Aq { q: f64 },
    Ar { r: f64 },
    Aqr { q: f64, r: f64 },
}

impl LimitProblem {
    /// Operator selected by a regime: finite `q` keeps the coupling, positive
    /// `r` keeps the boundary mass.
    pub fn for_regime(regime: &RegimeClass) -> Self {
        match (regime.q, regime.r) {
            (QLimit::Infinite, RLimit::Zero) => LimitProblem::A,
            (QLimit::Infinite, RLimit::Positive(r)) => LimitProblem::Ar { r },
            (QLimit::Zero, RLimit::Zero) => LimitProblem::Aq { q: 0.0 },
            (QLimit::FinitePositive(q), RLimit::Zero) => LimitProblem::Aq { q },
            // q → 0 with r > 0: the coupling vanishes and Γ decouples into q·I
            (QLimit::Zero, RLimit::Positive(_)) => LimitProblem::Aq { q: 0.0 },
            (QLimit::FinitePositive(q), RLimit::Positive(r)) => LimitProblem::Aqr { q, r },
        }
    }

    pub fn check(&self) -> Result<(), LimitError> {
        let bad = |m: String| Err(LimitError::InvalidArgument(m));
        match *self {
            LimitProblem::A => Ok(()),
            LimitProblem::Aq { q } if !(q >= 0.0 && q.is_finite()) => bad(format!("A_q needs finite q >= 0, got {q}")),
            LimitProblem::Ar { r } if !(r > 0.0 && r.is_finite()) => bad(format!("A_r needs finite r > 0, got {r}")),
            LimitProblem::Aqr { q, r } if !(q > 0.0 && r > 0.0 && q.is_finite() && r.is_finite()) => {
                bad(format!("A_qr needs finite q, r > 0, got q = {q}, r = {r}"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LimitProblem::A => "A",
            LimitProblem::Aq { .. } => "A_q",
            LimitProblem::Ar { .. } => "A_r",
            LimitProblem::Aqr { .. } => "A_qr",
        }
    }
}

/// Operators on a base-rectangle mesh, shared by all limit problems.
pub struct LimitSolver {
    mesh: TriMesh,
    stiffness: SparseSymMatrix,
    mass: SparseSymMatrix,
    boundary_mass: SparseSymMatrix,
    lifted_boundary_mass: SparseSymMatrix,
    trace: TraceMap,
    opts: EigSolveOptions,
}

impl LimitSolver {
    pub fn new(mesh: &TriMesh, opts: EigSolveOptions) -> Result<Self, LimitError> {
        opts.validate()?;
        let stiffness = assemble_stiffness(mesh)?;
        let mass = assemble_mass(mesh, &DensityField::uniform())?;
        let trace = TraceMap::from_mesh(mesh);
        let boundary_mass = assemble_boundary_mass(mesh, &trace)?;
        let lifted_boundary_mass = lift_boundary_mass(&boundary_mass, &trace, mesh.vertex_count());
        Ok(Self {
            mesh: mesh.clone(),
            stiffness,
            mass,
            boundary_mass,
            lifted_boundary_mass,
            trace,
            opts,
        })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn stiffness(&self) -> &SparseSymMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        &self.mass
    }

    pub fn boundary_mass(&self) -> &SparseSymMatrix {
        &self.boundary_mass
    }

    pub fn lifted_boundary_mass(&self) -> &SparseSymMatrix {
        &self.lifted_boundary_mass
    }

    pub fn trace(&self) -> &TraceMap {
        &self.trace
    }

    pub fn options(&self) -> &EigSolveOptions {
        &self.opts
    }

    fn interval(&self, s: &SparseSymMatrix, b: &SparseSymMatrix, lambda_max: f64) -> Result<Spectrum, LimitError> {
        if !(lambda_max > 0.0) {
            return Err(LimitError::InvalidArgument(format!("Λ must be positive, got {lambda_max}")));
        }
        let pencil = Pencil::new(s, b, self.opts.clone())?;
        Ok(pencil.eigs_in_interval(SPECTRUM_FLOOR, lambda_max)?.spectrum())
    }

    /// Neumann spectrum on `[−10⁻⁸, Λ]`.
    pub fn spectrum_a(&self, lambda_max: f64) -> Result<Spectrum, LimitError> {
        self.interval(&self.stiffness, &self.mass, lambda_max)
    }

    /// `σ(A) ∪ {q}` with `q` tagged `essential-limit`.
    pub fn spectrum_aq(&self, q: f64, lambda_max: f64) -> Result<Spectrum, LimitError> {
        LimitProblem::Aq { q }.check()?;
        let mut spec = self.spectrum_a(lambda_max)?;
        if q <= lambda_max {
            spec.insert_tagged(q, Some(SpectralTag::EssentialLimit), 0.0);
        }
        Ok(spec)
    }

    /// Pencil `(K, M + r·G̃)`.
    pub fn spectrum_ar(&self, r: f64, lambda_max: f64) -> Result<Spectrum, LimitError> {
        LimitProblem::Ar { r }.check()?;
        let b = SparseSymMatrix::linear_combination(&[(1.0, &self.mass), (r, &self.lifted_boundary_mass)]);
        self.interval(&self.stiffness, &b, lambda_max)
    }

    /// `k` smallest eigenvalues of `(K − μ·G̃, M)`, the Robin condition
    /// `∂ₙu = μ·u` on `Γ`.
    pub fn robin_eigenvalues(&self, mu: f64, k: usize) -> Result<EigenSolution, LimitError> {
        let s = SparseSymMatrix::linear_combination(&[(1.0, &self.stiffness), (-mu, &self.lifted_boundary_mass)]);
        Ok(Pencil::new(&s, &self.mass, self.opts.clone())?.eigs_smallest(k)?)
    }

    fn dirichlet_pencil(&self) -> (SparseSymMatrix, SparseSymMatrix) {
        let keep: Vec<usize> = (0..self.mesh.vertex_count())
            .filter(|&v| self.trace.local_index(v).is_none())
            .collect();
        (
            self.stiffness.principal_submatrix(&keep),
            self.mass.principal_submatrix(&keep),
        )
    }

    /// `k` smallest eigenvalues with the `Γ` unknowns removed.
    pub fn dirichlet_gamma_eigenvalues(&self, k: usize) -> Result<EigenSolution, LimitError> {
        let (s, b) = self.dirichlet_pencil();
        Ok(Pencil::new(&s, &b, self.opts.clone())?.eigs_smallest(k)?)
    }

    /// Number of Dirichlet-on-`Γ` eigenvalues not exceeding `q`, by inertia.
    pub fn compute_k0(&self, q: f64) -> Result<usize, LimitError> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(LimitError::InvalidArgument(format!("q must be positive, got {q}")));
        }
        let (s, b) = self.dirichlet_pencil();
        let pencil = Pencil::new(&s, &b, self.opts.clone())?;
        let below = pencil.count_below(q * (1.0 - DEGENERACY_TOL));
        let above = pencil.count_below(q * (1.0 + DEGENERACY_TOL));
        match (below, above) {
            (Ok(a), Ok(b)) if a == b => Ok(a),
            (Ok(_), Ok(_)) | (Err(EigenError::Factorization { .. }), _) | (_, Err(EigenError::Factorization { .. })) => {
                Err(LimitError::DegenerateQ { q, tol: DEGENERACY_TOL })
            }
            (Err(e), _) | (_, Err(e)) => Err(e.into()),
        }
    }

    /// Eigenvalues of the two-field block pencil on `[−10⁻⁸, Λ]`; values
    /// with `|λ − q| ≤ window·q` are tagged `essential-limit-cluster`.
    pub fn spectrum_aqr_block(&self, q: f64, r: f64, lambda_max: f64, window: f64) -> Result<Spectrum, LimitError> {
        LimitProblem::Aqr { q, r }.check()?;
        let (s, b) = assemble_aqr_blocks(&self.stiffness, &self.mass, &self.boundary_mass, &self.trace, q, r)?;
        let mut spec = self.interval(&s, &b, lambda_max)?;
        for i in 0..spec.len() {
            if (spec.values()[i] - q).abs() <= window * q {
                spec.add_tag(i, SpectralTag::EssentialLimitCluster);
            }
        }
        Ok(spec)
    }

    /// Branch eigenvalues of `A_qr` from the Robin-curve fixed points.
    pub fn spectrum_aqr_fixed_point(
        &self,
        q: f64,
        r: f64,
        lambda_max: f64,
        opts: &FixedPointOptions,
    ) -> Result<FixedPointResult, LimitError> {
        LimitProblem::Aqr { q, r }.check()?;
        let k0 = self.compute_k0(q)?;
        let terms = [&self.stiffness, &self.lifted_boundary_mass, &self.mass];
        let symbolic = SymbolicPencil::new(&terms);
        fixed_point::solve(
            &fixed_point::RobinFamily {
                symbolic: &symbolic,
                terms,
                gamma_dofs: self.trace.len(),
            },
            q,
            r,
            lambda_max,
            k0,
            opts,
        )
    }

    /// Limit spectrum selected by the regime, on `[0, Λ]`.
    pub fn sigma0(&self, regime: &RegimeClass, lambda_max: f64) -> Result<Spectrum, LimitError> {
        self.sigma0_for_problem(&LimitProblem::for_regime(regime), lambda_max)
    }

    pub fn sigma0_for_problem(&self, problem: &LimitProblem, lambda_max: f64) -> Result<Spectrum, LimitError> {
        match *problem {
            LimitProblem::A => self.spectrum_a(lambda_max),
            LimitProblem::Aq { q } => self.spectrum_aq(q, lambda_max),
            LimitProblem::Ar { r } => self.spectrum_ar(r, lambda_max),
            LimitProblem::Aqr { q, r } => {
                let mut spec = self.spectrum_aqr_block(q, r, lambda_max, DEFAULT_Q_WINDOW)?;
                if q <= lambda_max {
                    spec.insert_tagged(q, Some(SpectralTag::EssentialLimit), 0.0);
                }
                Ok(spec)
            }
        }
    }
}

pub fn spectrum_a(mesh: &TriMesh, lambda_max: f64) -> Result<Spectrum, LimitError> {
    LimitSolver::new(mesh, EigSolveOptions::default())?.spectrum_a(lambda_max)
}

pub fn spectrum_aq(mesh: &TriMesh, q: f64, lambda_max: f64) -> Result<Spectrum, LimitError> {
    LimitSolver::new(mesh, EigSolveOptions::default())?.spectrum_aq(q, lambda_max)
}

pub fn spectrum_ar(mesh: &TriMesh, r: f64, lambda_max: f64) -> Result<Spectrum, LimitError> {
    LimitSolver::new(mesh, EigSolveOptions::default())?.spectrum_ar(r, lambda_max)
}

pub fn robin_eigenvalues(mesh: &TriMesh, mu: f64, k: usize) -> Result<Spectrum, LimitError> {
    Ok(LimitSolver::new(mesh, EigSolveOptions::default())?
        .robin_eigenvalues(mu, k)?
        .spectrum())
}

pub fn dirichlet_gamma_eigenvalues(mesh: &TriMesh, k: usize) -> Result<Spectrum, LimitError> {
    Ok(LimitSolver::new(mesh, EigSolveOptions::default())?
        .dirichlet_gamma_eigenvalues(k)?
        .spectrum())
}

pub fn compute_k0(mesh: &TriMesh, q: f64) -> Result<usize, LimitError> {
    LimitSolver::new(mesh, EigSolveOptions::default())?.compute_k0(q)
}

pub fn spectrum_aqr_fixed_point(mesh: &TriMesh, q: f64, r: f64, lambda_max: f64) -> Result<FixedPointResult, LimitError> {
    LimitSolver::new(mesh, EigSolveOptions::default())?.spectrum_aqr_fixed_point(
        q,
        r,
        lambda_max,
        &FixedPointOptions::default(),
    )
}

pub fn spectrum_aqr_block(mesh: &TriMesh, q: f64, r: f64, lambda_max: f64) -> Result<Spectrum, LimitError> {
    LimitSolver::new(mesh, EigSolveOptions::default())?.spectrum_aqr_block(q, r, lambda_max, DEFAULT_Q_WINDOW)
}

pub fn sigma0_for_regime(regime: &RegimeClass, mesh: &TriMesh, lambda_max: f64) -> Result<Spectrum, LimitError> {
    LimitSolver::new(mesh, EigSolveOptions::default())?.sigma0(regime, lambda_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BaseDomain;
    use crate::mesh::mesh_rectangle;

    fn solver(n: f64) -> LimitSolver {
        let mesh = mesh_rectangle(&BaseDomain::unit_square(), 1.0 / n).unwrap();
        LimitSolver::new(&mesh, EigSolveOptions::default()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn neumann_matches_analytic_on_coarse_mesh() {
        let s = solver(16.0);
        // the diagonal split breaks the x ↔ y symmetry, so π² splits in two
        let fem = s.spectrum_a(25.0).unwrap().expanded();
        let exact = neumann_rectangle_analytic(1.0, 1.0, 25.0).expanded();
        assert_eq!(fem.len(), exact.len());
        for (a, b) in fem.iter().zip(&exact) {
            assert!(rel(*a, *b) < 2e-2, "{a} vs {b}");
        }
    }

    #[test]
    fn aq_adds_q_once() {
        let s = solver(8.0);
        let spec = s.spectrum_aq(5.0, 25.0).unwrap();
        let i = spec.values().iter().position(|&v| v == 5.0).unwrap();
        assert!(spec.has_tag(i, SpectralTag::EssentialLimit));
        assert_eq!(spec.total_count(), s.spectrum_a(25.0).unwrap().total_count() + 1);
        assert!(s.spectrum_aq(-1.0, 25.0).is_err());
    }

    #[test]
    fn boundary_mass_lowers_the_spectrum() {
        let s = solver(8.0);
        let a = s.spectrum_a(25.0).unwrap().expanded();
        let ar = s.spectrum_ar(1.0, 25.0).unwrap().expanded();
        assert!(ar.len() >= a.len());
        for (x, y) in ar.iter().zip(&a) {
            assert!(*x <= *y + 1e-9);
        }
    }

    #[test]
    fn robin_zero_is_neumann_and_dirichlet_is_above() {
        let s = solver(8.0);
        let robin = s.robin_eigenvalues(0.0, 4).unwrap();
        let neumann = s.spectrum_a(25.0).unwrap().expanded();
        for (a, b) in robin.values.iter().zip(&neumann) {
            assert!((a - b).abs() < 1e-8);
        }
        let d = s.dirichlet_gamma_eigenvalues(3).unwrap();
        assert!((d.values[0] - std::f64::consts::PI.powi(2) / 4.0).abs() < 0.05);
        assert_eq!(s.compute_k0(1.6).unwrap(), 0);
        assert_eq!(s.compute_k0(3.0).unwrap(), 1);
    }

    #[test]
    fn degenerate_q_is_rejected() {
        let s = solver(8.0);
        let d = s.dirichlet_gamma_eigenvalues(1).unwrap().values[0];
        assert!(matches!(s.compute_k0(d), Err(LimitError::DegenerateQ { .. })));
    }

    #[test]
    fn fixed_point_and_block_agree() {
        let s = solver(8.0);
        let (q, r, lmax) = (1.6, 0.25, 30.0);
        let fp = s.spectrum_aqr_fixed_point(q, r, lmax, &FixedPointOptions::default()).unwrap();
        let block = s.spectrum_aqr_block(q, r, lmax, DEFAULT_Q_WINDOW).unwrap().expanded();
        let fpv: Vec<f64> = fp.branches.iter().map(|b| b.lambda).collect();
        assert_eq!(fpv.len(), block.len());
        for (a, b) in fpv.iter().zip(&block) {
            assert!(rel(*a, *b) < 1e-6, "{a} vs {b}");
        }
        assert_eq!(fp.branches[0].lambda, 0.0);
        assert!(fp.plus().all(|b| b.lambda < q));
        assert!(fp.minus().all(|b| b.lambda > q));
        assert_eq!(fp.plus().count(), s.trace().len() + fp.k0);
    }

    #[test]
    fn minus_roots_sit_between_neumann_and_dirichlet_curves() {
        // λ_j⁻ lies on curve k0 + j with μ < 0, between its Neumann (μ = 0)
        // and Dirichlet (μ → −∞) ends
        let s = solver(8.0);
        let (q, lmax) = (1.6, 23.3);
        let fp = s.spectrum_aqr_fixed_point(q, 0.25, lmax, &FixedPointOptions::default()).unwrap();
        let d = s.dirichlet_gamma_eigenvalues(12).unwrap().values;
        let n = s.robin_eigenvalues(0.0, 12).unwrap().values;
        let minus: Vec<_> = fp.minus().collect();
        assert!(minus.len() >= d.iter().filter(|&&v| v > q && v <= lmax).count());
        for b in minus {
            assert!(n[b.k - 1] <= b.lambda && b.lambda <= d[b.k - 1], "{b:?}");
            assert!(b.mu_at_solution < -q * 0.25);
        }
    }

    #[test]
    fn regime_selects_operator() {
        use crate::geometry::{classify_regime, ShapeSpec};
        let shape = ShapeSpec::canonical();
        let p = LimitProblem::for_regime(&classify_regime(2.0, -1.0, &shape).unwrap());
        assert!(matches!(p, LimitProblem::Aqr { .. }));
        let p = LimitProblem::for_regime(&classify_regime(4.0, 0.0, &shape).unwrap());
        assert_eq!(p, LimitProblem::Aq { q: 0.0 });
        let p = LimitProblem::for_regime(&classify_regime(1.0, -1.0, &shape).unwrap());
        assert!(matches!(p, LimitProblem::Ar { .. }));
        assert_eq!(LimitProblem::for_regime(&classify_regime(1.0, 0.0, &shape).unwrap()), LimitProblem::A);
    }
}
