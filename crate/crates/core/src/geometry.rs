//! Perturbed domains: a base rectangle with thin passages and rooms attached
//! periodically along its top edge.
//!
//! The base is `Ω = (0, W) × (−H, 0)` with `Γ` its whole top side. For each
//! admissible index `i` a passage `(εi ± d·w_D/2) × (0, h)` rises from `Γ` and
//! carries a room `(εi ± b·w_B/2) × (h, h + b·h_B)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("base domain needs positive width and depth, got W = {width}, H = {depth}")]
    InvalidBase { width: f64, depth: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("eps = {eps} must lie in (0, 1)")]
    EpsOutOfRange { eps: f64 },
    #[error("alpha = {alpha} < 1 would make the passage wider than the room scale")]
    AlphaTooSmall { alpha: f64 },
    #[error("beta = {beta} < -1 is outside the admissible range")]
    BetaTooSmall { beta: f64 },
    #[error("no anchor point fits on the top edge for eps = {eps} and width {width}")]
    EmptyIndexSet { eps: f64, width: f64 },
    #[error("hard assumption failed: {0}")]
    AssumptionFailed(String),
}

/// Smallness threshold for `ε·|ln d|` used by [`validate_assumptions`].
pub const DEFAULT_CAPACITY_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseDomain {
    pub width: f64,
    pub depth: f64,
}

impl BaseDomain {
    pub fn new(width: f64, depth: f64) -> Result<Self, GeometryError> {
        if !(width > 0.0 && depth > 0.0 && width.is_finite() && depth.is_finite()) {
            return Err(GeometryError::InvalidBase { width, depth });
        }
        Ok(Self { width, depth })
    }

    pub fn unit_square() -> Self {
        Self { width: 1.0, depth: 1.0 }
    }

    pub fn area(&self) -> f64 {
        self.width * self.depth
    }

    /// Length of the top side.
    pub fn gamma_length(&self) -> f64 {
        self.width
    }

    pub fn rect(&self) -> Rect {
        Rect::new(0.0, self.width, -self.depth, 0.0)
    }
}

/// Reference room and passage shapes in cell units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    /// Room width `w_B`.
    pub room_width: f64,
    /// Room height `h_B`.
    pub room_height: f64,
    /// Passage cross-section width `w_D`.
    pub passage_width: f64,
    /// Radius `R` of the flat disk on the room floor the passage must fit in.
    pub gluing_radius: f64,
}

impl ShapeSpec {
    pub fn canonical() -> Self {
        Self {
            room_width: 0.5,
            room_height: 0.5,
            passage_width: 0.4,
            gluing_radius: 0.25,
        }
    }

    pub fn new(room_width: f64, room_height: f64, passage_width: f64, gluing_radius: f64) -> Result<Self, GeometryError> {
        let s = Self {
            room_width,
            room_height,
            passage_width,
            gluing_radius,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        let failed: Vec<String> = shape_checks(self)
            .into_iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (margin {:.3e})", c.name, c.margin))
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(GeometryError::InvalidShape(failed.join(", ")))
        }
    }

    /// `|B|`
    pub fn room_area(&self) -> f64 {
        self.room_width * self.room_height
    }

    /// `|D|`
    pub fn passage_measure(&self) -> f64 {
        self.passage_width
    }
}

impl Default for ShapeSpec {
    fn default() -> Self {
        Self::canonical()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub eps: f64,
    /// Room scale.
    pub b: f64,
    /// Passage width scale.
    pub d: f64,
    /// Passage length.
    pub h: f64,
    /// Mass density inside the rooms.
    pub rho: f64,
}

impl PerturbationParams {
    pub fn check(&self) -> Result<(), GeometryError> {
        let p = self;
        if !(p.eps > 0.0 && p.b > 0.0 && p.d > 0.0 && p.h > 0.0 && p.rho > 0.0) {
            return Err(GeometryError::InvalidParams(format!(
                "all of eps, b, d, h, rho must be positive: {p:?}"
            )));
        }
        if !(p.d <= p.b && p.b <= p.eps) {
            return Err(GeometryError::InvalidParams(format!(
                "sizes must satisfy d <= b <= eps, got d = {}, b = {}, eps = {}",
                p.d, p.b, p.eps
            )));
        }
        Ok(())
    }
}

/// `b = h = ε`, `d = ε^α`, `ϱ = ε^β`.
pub fn exponents_to_params(eps: f64, alpha: f64, beta: f64) -> Result<PerturbationParams, GeometryError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(GeometryError::EpsOutOfRange { eps });
    }
    if !(alpha >= 1.0) {
        return Err(GeometryError::AlphaTooSmall { alpha });
    }
    if !(beta >= -1.0) {
        return Err(GeometryError::BetaTooSmall { beta });
    }
    Ok(PerturbationParams {
        eps,
        b: eps,
        d: eps.powf(alpha),
        h: eps,
        rho: eps.powf(beta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingNumbers {
    pub q_eps: f64,
    pub r_eps: f64,
    /// `|ln d|`, the two-dimensional passage capacity scale.
    pub capacity: f64,
    /// Number of attached rooms.
    pub room_count: usize,
    /// `ϱ·b²·|B|·N`
    pub total_room_mass: f64,
}

pub fn compute_scaling(params: &PerturbationParams, shape: &ShapeSpec, base: &BaseDomain) -> ScalingNumbers {
    let p = params;
    let room = p.rho * p.b * p.b * shape.room_area();
    let count = anchor_indices(base, p.eps).len();
    ScalingNumbers {
        q_eps: p.d * shape.passage_measure() / (p.h * room),
        r_eps: room / p.eps,
        capacity: p.d.ln().abs(),
        room_count: count,
        total_room_mass: room * count as f64,
    }
}

/// Limit of `q_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum QLimit {
    Zero,
    FinitePositive(f64),
    Infinite,
}

/// Limit of `r_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum RLimit {
    Zero,
    Positive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClass {
    pub q: QLimit,
    pub r: RLimit,
}

impl RegimeClass {
    /// Finite `q` value, with `0` for a vanishing limit.
    pub fn q_value(&self) -> Option<f64> {
        match self.q {
            QLimit::Zero => Some(0.0),
            QLimit::FinitePositive(v) => Some(v),
            QLimit::Infinite => None,
        }
    }

    pub fn r_value(&self) -> f64 {
        match self.r {
            RLimit::Zero => 0.0,
            RLimit::Positive(v) => v,
        }
    }
}

const EXPONENT_MATCH: f64 = 1e-12;

/// Limits of `q_ε = (|D|/|B|)·ε^(α−β−3)` and `r_ε = |B|·ε^(β+1)` for the
/// exponent family.
pub fn classify_regime(alpha: f64, beta: f64, shape: &ShapeSpec) -> Result<RegimeClass, GeometryError> {
    if !(alpha >= 1.0) {
        return Err(GeometryError::AlphaTooSmall { alpha });
    }
    if !(beta >= -1.0) {
        return Err(GeometryError::BetaTooSmall { beta });
    }
    let gap = alpha - (beta + 3.0);
    let q = if gap.abs() <= EXPONENT_MATCH {
        QLimit::FinitePositive(shape.passage_measure() / shape.room_area())
    } else if gap > 0.0 {
        QLimit::Zero
    } else {
        QLimit::Infinite
    };
    let r = if (beta + 1.0).abs() <= EXPONENT_MATCH {
        RLimit::Positive(shape.room_area())
    } else {
        RLimit::Zero
    };
    Ok(RegimeClass { q, r })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Hard,
    Warning,
}

/// One checked assumption; `margin ≥ 0` means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
    /// `ε·|ln d|`
    pub capacity_product: f64,
}

impl ValidationReport {
    pub fn hard_failures(&self) -> Vec<&AssumptionCheck> {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.severity == Severity::Hard)
            .collect()
    }

    pub fn warnings(&self) -> Vec<&AssumptionCheck> {
        self.checks
            .iter()
            .filter(|c| !c.passed && c.severity == Severity::Warning)
            .collect()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &'static str, margin: f64, strict: bool, severity: Severity) -> AssumptionCheck {
    let passed = if strict { margin > 0.0 } else { margin >= 0.0 };
    AssumptionCheck {
        name,
        passed,
        margin,
        severity,
    }
}

fn shape_checks(s: &ShapeSpec) -> Vec<AssumptionCheck> {
    use Severity::Hard;
    vec![
        check("room_height_positive", s.room_height, true, Hard),
        // room fits inside its period cell
        check("room_inside_cell", 1.0 - s.room_width, true, Hard),
        check("gluing_radius_range", s.gluing_radius.min(0.5 - s.gluing_radius), true, Hard),
        // flat disk of radius R lies on the room floor
        check("gluing_disk_on_room_floor", s.room_width - 2.0 * s.gluing_radius, false, Hard),
        check("passage_width_positive", s.passage_width, true, Hard),
        check("passage_inside_gluing_disk", 2.0 * s.gluing_radius - s.passage_width, true, Hard),
    ]
}

/// Checks every geometric assumption and reports the margins. Only the
/// capacity smallness `ε·|ln d| ≤ threshold` is a warning.
pub fn validate_assumptions(params: &PerturbationParams, shape: &ShapeSpec, capacity_threshold: f64) -> ValidationReport {
    use Severity::{Hard, Warning};
    let p = params;
    let mut checks = shape_checks(shape);
    checks.push(check("eps_positive", p.eps, true, Hard));
    checks.push(check("passage_scale_positive", p.d, true, Hard));
    checks.push(check("passage_not_wider_than_room", p.b - p.d, false, Hard));
    checks.push(check("room_not_wider_than_cell", p.eps - p.b, false, Hard));
    checks.push(check("passage_length_positive", p.h, true, Hard));
    checks.push(check("room_density_positive", p.rho, true, Hard));
    let capacity_product = if p.d > 0.0 { p.eps * p.d.ln().abs() } else { f64::INFINITY };
    checks.push(check(
        "capacity_smallness",
        capacity_threshold - capacity_product,
        false,
        Warning,
    ));
    ValidationReport {
        checks,
        capacity_product,
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self { xmin, xmax, ymin, ymax }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Interiors intersect.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.xmin < other.xmax && other.xmin < self.xmax && self.ymin < other.ymax && other.ymin < self.ymax
    }
}

/// Integers `i ≥ 1` whose anchor `(εi, 0)` lies inside the top edge at
/// distance at least `ε·√2/2` from the rest of the boundary.
pub fn anchor_indices(base: &BaseDomain, eps: f64) -> Vec<i64> {
    let min_dist = eps * std::f64::consts::SQRT_2 / 2.0;
    let mut out = Vec::new();
    let mut i: i64 = 1;
    loop {
        let x = eps * i as f64;
        if x >= base.width {
            break;
        }
        if x.min(base.width - x).min(base.depth) >= min_dist {
            out.push(i);
        }
        i += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedDomain {
    pub base: BaseDomain,
    pub rooms: Vec<Rect>,
    pub passages: Vec<Rect>,
    pub indices: Vec<i64>,
    pub params: PerturbationParams,
    pub shape: ShapeSpec,
}

pub fn build_perturbed_domain(
    base: &BaseDomain,
    params: &PerturbationParams,
    shape: &ShapeSpec,
) -> Result<PerturbedDomain, GeometryError> {
    let report = validate_assumptions(params, shape, DEFAULT_CAPACITY_THRESHOLD);
    let failed: Vec<&str> = report.hard_failures().iter().map(|c| c.name).collect();
    if !failed.is_empty() {
        return Err(GeometryError::AssumptionFailed(failed.join(", ")));
    }
    let indices = anchor_indices(base, params.eps);
    if indices.is_empty() {
        return Err(GeometryError::EmptyIndexSet {
            eps: params.eps,
            width: base.width,
        });
    }
    let p = params;
    let half_passage = p.d * shape.passage_width / 2.0;
    let half_room = p.b * shape.room_width / 2.0;
    let mut rooms = Vec::with_capacity(indices.len());
    let mut passages = Vec::with_capacity(indices.len());
    for &i in &indices {
        let x = p.eps * i as f64;
        passages.push(Rect::new(x - half_passage, x + half_passage, 0.0, p.h));
        rooms.push(Rect::new(x - half_room, x + half_room, p.h, p.h + p.b * shape.room_height));
    }
    Ok(PerturbedDomain {
        base: *base,
        rooms,
        passages,
        indices,
        params: *params,
        shape: *shape,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Omega,
    Passage,
    Room,
}

#[derive(Serialize)]
struct RectEntry {
    rect: [f64; 4],
    tag: RegionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<i64>,
}

#[derive(Serialize)]
struct DomainDocument<'a> {
    base: &'a BaseDomain,
    params: &'a PerturbationParams,
    shape: &'a ShapeSpec,
    rectangles: Vec<RectEntry>,
}

impl PerturbedDomain {
    pub fn room_count(&self) -> usize {
        self.indices.len()
    }

    /// `|Ω| + N·|T| + N·|B_i|`
    pub fn area(&self) -> f64 {
        self.base.area()
            + self.passages.iter().map(Rect::area).sum::<f64>()
            + self.rooms.iter().map(Rect::area).sum::<f64>()
    }

    /// `∫ ρ dx`
    pub fn mass(&self) -> f64 {
        self.base.area()
            + self.passages.iter().map(Rect::area).sum::<f64>()
            + self.params.rho * self.rooms.iter().map(Rect::area).sum::<f64>()
    }

    /// All rectangles with their region kind and index (`None` for Ω).
    pub fn rectangles(&self) -> Vec<(Rect, RegionKind, Option<i64>)> {
        let mut out = vec![(self.base.rect(), RegionKind::Omega, None)];
        for (k, &i) in self.indices.iter().enumerate() {
            out.push((self.passages[k], RegionKind::Passage, Some(i)));
            out.push((self.rooms[k], RegionKind::Room, Some(i)));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = DomainDocument {
            base: &self.base,
            params: &self.params,
            shape: &self.shape,
            rectangles: self
                .rectangles()
                .into_iter()
                .map(|(r, tag, index)| RectEntry {
                    rect: [r.xmin, r.xmax, r.ymin, r.ymax],
                    tag,
                    index,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("domain serializes")
    }
}
