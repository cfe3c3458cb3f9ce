//! Concrete N-to-one systems (X, μ, φ), their branch decompositions,
//! cylinder sets and σ-algebra generation diagnostics.

pub mod blaschke;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{CompositeRule, GaussLegendre, DEFAULT_ORDER};
use crate::scalar::C64;
pub use blaschke::BlaschkeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    FullShift,
    CircleMonomial,
    BlaschkeCover,
    WeightedCircleMonomial,
    ProductShiftRotation,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::FullShift => "full-shift",
            SystemKind::CircleMonomial => "circle-monomial",
            SystemKind::BlaschkeCover => "blaschke-cover",
            SystemKind::WeightedCircleMonomial => "weighted-circle-monomial",
            SystemKind::ProductShiftRotation => "product-shift-rotation",
        }
    }

    pub fn is_circle(self) -> bool {
        matches!(
            self,
            SystemKind::CircleMonomial | SystemKind::BlaschkeCover | SystemKind::WeightedCircleMonomial
        )
    }
}

/// ρ(θ) = c + Σ_k a_k cos 2πkθ + b_k sin 2πkθ, k ≥ 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigDensity {
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigDensity {
    pub fn uniform() -> Self {
        TrigDensity { constant: 1.0, cos: vec![], sin: vec![] }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * (2.0 * PI * (k + 1) as f64 * theta).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += b * (2.0 * PI * (k + 1) as f64 * theta).sin();
        }
        v
    }

    /// ∫₀^θ ρ.
    pub fn antiderivative(&self, theta: f64) -> f64 {
        let mut v = self.constant * theta;
        for (k, a) in self.cos.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            v += a * (w * theta).sin() / w;
        }
        for (k, b) in self.sin.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            v += b * (1.0 - (w * theta).cos()) / w;
        }
        v
    }

    /// ρ̂(m) = ∫ ρ(θ) e^{−2πimθ} dθ.
    pub fn coefficient(&self, m: i64) -> C64 {
        if m == 0 {
            return C64::new(self.constant, 0.0);
        }
        let k = m.unsigned_abs() as usize - 1;
        let a = self.cos.get(k).copied().unwrap_or(0.0);
        let b = self.sin.get(k).copied().unwrap_or(0.0);
        if m > 0 {
            C64::new(a / 2.0, -b / 2.0)
        } else {
            C64::new(a / 2.0, b / 2.0)
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    /// (inf, sup) sampled on a uniform grid.
    pub fn range_on_grid(&self, grid: usize) -> (f64, f64) {
        (0..grid).map(|j| self.eval(j as f64 / grid as f64)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    UniformProduct,
    ArcLength,
    Density(TrigDensity),
    ProductWithArcLength,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemParams {
    Plain,
    Zeros(BlaschkeMap),
    Density(TrigDensity),
    Rotation(f64),
}

/// A concrete N-to-one measure system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemDescriptor {
    pub kind: SystemKind,
    pub branch_count: usize,
    pub params: SystemParams,
}

/// Largest denominator scanned when testing a rotation angle for rationality.
pub const RATIONAL_SCAN: u64 = 1000;

impl SystemDescriptor {
    pub fn full_shift(n: usize) -> Result<Self> {
        Self::checked(SystemKind::FullShift, n, SystemParams::Plain)
    }

    pub fn circle_monomial(n: usize) -> Result<Self> {
        Self::checked(SystemKind::CircleMonomial, n, SystemParams::Plain)
    }

    pub fn blaschke(zeros: Vec<C64>) -> Result<Self> {
        let n = zeros.len();
        Self::checked(SystemKind::BlaschkeCover, n, SystemParams::Zeros(BlaschkeMap::new(zeros)))
    }

    pub fn weighted_monomial(n: usize, density: TrigDensity) -> Result<Self> {
        Self::checked(SystemKind::WeightedCircleMonomial, n, SystemParams::Density(density))
    }

    pub fn product_rotation(n: usize, tau: f64) -> Result<Self> {
        Self::checked(SystemKind::ProductShiftRotation, n, SystemParams::Rotation(tau))
    }

    fn checked(kind: SystemKind, n: usize, params: SystemParams) -> Result<Self> {
        let sys = SystemDescriptor { kind, branch_count: n, params };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSystem(m));
        if self.branch_count < 2 {
            return bad(format!("branch count {} < 2", self.branch_count));
        }
        match (&self.kind, &self.params) {
            (SystemKind::FullShift | SystemKind::CircleMonomial, SystemParams::Plain) => Ok(()),
            (SystemKind::BlaschkeCover, SystemParams::Zeros(b)) => {
                if b.degree() != self.branch_count {
                    return bad("zero count must equal branch count".into());
                }
                if let Some(a) = b.zeros().iter().find(|a| a.norm() >= 1.0) {
                    return bad(format!("zero {a} not inside the unit disk"));
                }
                if !b.zeros().iter().any(|a| a.norm() == 0.0) {
                    return bad("a Blaschke cover needs a zero at the origin".into());
                }
                Ok(())
            }
            (SystemKind::WeightedCircleMonomial, SystemParams::Density(rho)) => {
                let (lo, hi) = rho.range_on_grid(4096);
                if !(lo > 0.0 && hi.is_finite()) {
                    return bad(format!("density must be positive and bounded (inf {lo}, sup {hi})"));
                }
                if (rho.constant - 1.0).abs() > 1e-12 {
                    return bad(format!("density integrates to {} instead of 1", rho.constant));
                }
                Ok(())
            }
            (SystemKind::ProductShiftRotation, SystemParams::Rotation(tau)) => {
                if !(*tau > 0.0 && *tau < 1.0) {
                    return bad(format!("rotation angle {tau} outside (0, 1)"));
                }
                if let Some((p, q)) = nearby_rational(*tau, RATIONAL_SCAN, 1e-9) {
                    return bad(format!("rotation angle {tau} is within 1e-9 of {p}/{q}"));
                }
                Ok(())
            }
            _ => bad(format!("parameters do not match kind {}", self.kind.name())),
        }
    }

    pub fn measure(&self) -> MeasureKind {
        match (&self.kind, &self.params) {
            (SystemKind::FullShift, _) => MeasureKind::UniformProduct,
            (SystemKind::WeightedCircleMonomial, SystemParams::Density(rho)) => MeasureKind::Density(rho.clone()),
            (SystemKind::ProductShiftRotation, _) => MeasureKind::ProductWithArcLength,
            _ => MeasureKind::ArcLength,
        }
    }

    pub fn density(&self) -> Option<&TrigDensity> {
        match &self.params {
            SystemParams::Density(rho) => Some(rho),
            _ => None,
        }
    }

    pub fn rotation(&self) -> Option<f64> {
        match self.params {
            SystemParams::Rotation(t) => Some(t),
            _ => None,
        }
    }

    pub fn blaschke_map(&self) -> Option<&BlaschkeMap> {
        match &self.params {
            SystemParams::Zeros(b) => Some(b),
            _ => None,
        }
    }
}

/// First p/q with q ≤ max_den and |x − p/q| < tol.
pub fn nearby_rational(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    (1..=max_den).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() < tol).then_some((p as i64, q))
    })
}

/// A finite word over {1, …, N}.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn new(letters: Vec<u8>, n: usize) -> Result<Self> {
        if let Some(&l) = letters.iter().find(|&&l| l == 0 || l as usize > n) {
            return Err(Error::LetterOutOfRange { letter: l, n });
        }
        Ok(Word(letters))
    }

    pub fn empty() -> Self {
        Word(vec![])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    /// Lexicographic index among words of the same length, first letter most significant.
    pub fn index(&self, n: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * n + (l as usize - 1))
    }

    pub fn from_index(mut idx: usize, len: usize, n: usize) -> Self {
        let mut v = vec![0u8; len];
        for slot in v.iter_mut().rev() {
            *slot = (idx % n) as u8 + 1;
            idx /= n;
        }
        Word(v)
    }

    /// All words of length `len`, in index order.
    pub fn all(len: usize, n: usize) -> impl Iterator<Item = Word> {
        (0..n.pow(len as u32)).map(move |i| Word::from_index(i, len, n))
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "[{}]", s.join(","))
    }
}

/// Points of the supported spaces. Symbols are 1-based; a symbol sequence is
/// a finite prefix whose tail is irrelevant to every depth-bounded computation.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Symbols(Vec<u8>),
    Angle(f64),
    Pair(Vec<u8>, f64),
}

/// φ(x).
pub fn evaluate_map(sys: &SystemDescriptor, x: &Point) -> Result<Point> {
    let n = sys.branch_count;
    let check = |s: &[u8]| -> Result<()> {
        if s.is_empty() {
            return Err(Error::InvalidSystem("symbol prefix too short to shift".into()));
        }
        Word::new(s.to_vec(), n).map(|_| ())
    };
    match (sys.kind, x) {
        (SystemKind::FullShift, Point::Symbols(s)) => {
            check(s)?;
            Ok(Point::Symbols(s[1..].to_vec()))
        }
        (SystemKind::CircleMonomial | SystemKind::WeightedCircleMonomial, Point::Angle(t)) => {
            Ok(Point::Angle((n as f64 * t).rem_euclid(1.0)))
        }
        (SystemKind::BlaschkeCover, Point::Angle(t)) => {
            let b = sys.blaschke_map().expect("validated");
            Ok(Point::Angle(b.angle_map(*t)))
        }
        (SystemKind::ProductShiftRotation, Point::Pair(s, t)) => {
            check(s)?;
            let tau = sys.rotation().expect("validated");
            Ok(Point::Pair(s[1..].to_vec(), (t + tau).rem_euclid(1.0)))
        }
        (kind, _) => Err(Error::PointMismatch { kind: kind.name() }),
    }
}

/// A branch domain U_i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// Half-open arc [start, end); `end` may exceed 1 when the arc wraps past 0.
    Arc { start: f64, end: f64 },
    Cylinder { word: Word },
    Product { word: Word, start: f64, end: f64 },
}

#[derive(Clone, Debug)]
struct BlaschkeBranch {
    lift_base: f64,
    start: f64,
    end: f64,
}

#[derive(Clone, Debug)]
enum BranchMaps {
    Shift,
    Monomial,
    Weighted(TrigDensity),
    Blaschke { map: BlaschkeMap, branches: Vec<BlaschkeBranch>, lift_floor: f64, order: Vec<usize> },
    Product { tau: f64 },
}

/// Domains U_i, sections ψ_i and Radon–Nikodym weights u_i.
#[derive(Clone, Debug)]
pub struct BranchDecomposition {
    n: usize,
    kind: SystemKind,
    pub domains: Vec<Domain>,
    maps: BranchMaps,
}

/// The explicit maximal decomposition for each system family.
pub fn decompose(sys: &SystemDescriptor) -> Result<BranchDecomposition> {
    sys.validate()?;
    let n = sys.branch_count;
    let arcs = || {
        (0..n)
            .map(|i| Domain::Arc { start: i as f64 / n as f64, end: (i + 1) as f64 / n as f64 })
            .collect::<Vec<_>>()
    };
    let (domains, maps) = match (&sys.kind, &sys.params) {
        (SystemKind::FullShift, _) => (
            (1..=n).map(|i| Domain::Cylinder { word: Word(vec![i as u8]) }).collect(),
            BranchMaps::Shift,
        ),
        (SystemKind::CircleMonomial, _) => (arcs(), BranchMaps::Monomial),
        (SystemKind::WeightedCircleMonomial, SystemParams::Density(rho)) => (arcs(), BranchMaps::Weighted(rho.clone())),
        (SystemKind::ProductShiftRotation, SystemParams::Rotation(tau)) => (
            (1..=n).map(|i| Domain::Product { word: Word(vec![i as u8]), start: 0.0, end: 1.0 }).collect(),
            BranchMaps::Product { tau: *tau },
        ),
        (SystemKind::BlaschkeCover, SystemParams::Zeros(map)) => blaschke_branches(map)?,
        _ => return Err(Error::InvalidSystem("parameters do not match kind".into())),
    };
    Ok(BranchDecomposition { n, kind: sys.kind, domains, maps })
}

fn blaschke_branches(map: &BlaschkeMap) -> Result<(Vec<Domain>, BranchMaps)> {
    let n = map.degree();
    let theta0 = map.lift(0.0);
    let mut m0 = theta0.ceil();
    if (theta0 - theta0.round()).abs() < 1e-13 {
        m0 = theta0.round();
    }
    let mut cuts = Vec::with_capacity(n + 1);
    for j in 0..n {
        let target = m0 + j as f64;
        let b = if j == 0 && (target - theta0).abs() < 1e-13 { 0.0 } else { map.invert_lift(target, 0.0, 1.0)? };
        cuts.push(b);
    }
    cuts.push(cuts[0] + 1.0);
    let branches: Vec<BlaschkeBranch> = (0..n)
        .map(|j| BlaschkeBranch { lift_base: m0 + j as f64, start: cuts[j], end: cuts[j + 1] })
        .collect();
    // order by infimum of the domain: a wrapping last branch contains 0
    let order: Vec<usize> = if cuts[0] == 0.0 { (0..n).collect() } else { std::iter::once(n - 1).chain(0..n - 1).collect() };
    let domains = order
        .iter()
        .map(|&j| Domain::Arc { start: branches[j].start.rem_euclid(1.0), end: branches[j].start.rem_euclid(1.0) + (branches[j].end - branches[j].start) })
        .collect();
    Ok((domains, BranchMaps::Blaschke { map: map.clone(), branches, lift_floor: m0, order }))
}

impl BranchDecomposition {
    pub fn branch_count(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn rotation(&self) -> Option<f64> {
        match self.maps {
            BranchMaps::Product { tau } => Some(tau),
            _ => None,
        }
    }

    /// Measure density ρ of μ with respect to arc length (circle kinds).
    pub fn rho(&self, x: f64) -> f64 {
        match &self.maps {
            BranchMaps::Weighted(rho) => rho.eval(x),
            _ => 1.0,
        }
    }

    pub fn density(&self) -> Option<&TrigDensity> {
        match &self.maps {
            BranchMaps::Weighted(rho) => Some(rho),
            _ => None,
        }
    }

    /// φ on the circle, consistent with the sections.
    pub fn phi_angle(&self, x: f64) -> f64 {
        match &self.maps {
            BranchMaps::Monomial | BranchMaps::Weighted(_) => (self.n as f64 * x).rem_euclid(1.0),
            BranchMaps::Blaschke { map, .. } => map.lift(x).rem_euclid(1.0),
            _ => panic!("phi_angle on a symbolic system"),
        }
    }

    /// Index i (0-based) with x ∈ U_i.
    pub fn branch_of_angle(&self, x: f64) -> usize {
        let x = x.rem_euclid(1.0);
        match &self.maps {
            BranchMaps::Monomial | BranchMaps::Weighted(_) => ((self.n as f64 * x).floor() as usize).min(self.n - 1),
            BranchMaps::Blaschke { map, lift_floor, order, .. } => {
                let j = (map.lift(x) - lift_floor).floor() as i64;
                let j = j.rem_euclid(self.n as i64) as usize;
                order.iter().position(|&o| o == j).expect("branch")
            }
            _ => panic!("branch_of_angle on a symbolic system"),
        }
    }

    /// ψ_i(y) on the circle (0-based i).
    pub fn psi_angle(&self, i: usize, y: f64) -> f64 {
        self.try_psi_angle(i, y).expect("monotone branch always brackets")
    }

    pub fn try_psi_angle(&self, i: usize, y: f64) -> Result<f64> {
        let y = y.rem_euclid(1.0);
        match &self.maps {
            BranchMaps::Monomial | BranchMaps::Weighted(_) => Ok((y + i as f64) / self.n as f64),
            BranchMaps::Blaschke { map, branches, order, .. } => {
                let br = &branches[order[i]];
                let t = map.invert_lift(br.lift_base + y, br.start, br.end).map_err(|_| Error::BracketFailure { y })?;
                Ok(t.rem_euclid(1.0))
            }
            _ => panic!("psi_angle on a symbolic system"),
        }
    }

    /// u_i(y) with respect to μ.
    pub fn weight_angle(&self, i: usize, y: f64) -> f64 {
        match &self.maps {
            BranchMaps::Monomial => 1.0 / self.n as f64,
            BranchMaps::Weighted(rho) => rho.eval(self.psi_angle(i, y)) / (self.n as f64 * rho.eval(y)),
            BranchMaps::Blaschke { map, .. } => 1.0 / map.lift_derivative(self.psi_angle(i, y)),
            _ => 1.0 / self.n as f64,
        }
    }

    /// u_i(φ(x)) for the branch i containing x, computed without inverting φ.
    pub fn weight_at_preimage(&self, x: f64) -> f64 {
        match &self.maps {
            BranchMaps::Weighted(rho) => rho.eval(x) / (self.n as f64 * rho.eval(self.phi_angle(x))),
            BranchMaps::Blaschke { map, .. } => 1.0 / map.lift_derivative(x),
            _ => 1.0 / self.n as f64,
        }
    }

    /// w = Σ u_i, the density of μ∘φ⁻¹.
    pub fn density_angle(&self, y: f64) -> f64 {
        (0..self.n).map(|i| self.weight_angle(i, y)).sum()
    }

    /// ψ_i on generic points; `i` is 0-based.
    pub fn section(&self, i: usize, y: &Point) -> Result<Point> {
        let letter = i as u8 + 1;
        match (&self.maps, y) {
            (BranchMaps::Shift, Point::Symbols(s)) => Ok(Point::Symbols(std::iter::once(letter).chain(s.iter().copied()).collect())),
            (BranchMaps::Product { tau }, Point::Pair(s, t)) => Ok(Point::Pair(
                std::iter::once(letter).chain(s.iter().copied()).collect(),
                (t - tau).rem_euclid(1.0),
            )),
            (BranchMaps::Monomial | BranchMaps::Weighted(_) | BranchMaps::Blaschke { .. }, Point::Angle(t)) => {
                Ok(Point::Angle(self.try_psi_angle(i, *t)?))
            }
            _ => Err(Error::PointMismatch { kind: self.kind.name() }),
        }
    }

    /// u_i on generic points.
    pub fn weight(&self, i: usize, y: &Point) -> Result<f64> {
        match (&self.maps, y) {
            (BranchMaps::Shift, Point::Symbols(_)) | (BranchMaps::Product { .. }, Point::Pair(..)) => Ok(1.0 / self.n as f64),
            (_, Point::Angle(t)) if self.kind.is_circle() => Ok(self.weight_angle(i, *t)),
            _ => Err(Error::PointMismatch { kind: self.kind.name() }),
        }
    }

    /// Whether x ∈ U_i.
    pub fn contains(&self, i: usize, x: &Point) -> Result<bool> {
        match x {
            Point::Symbols(s) | Point::Pair(s, _) if !self.kind.is_circle() => Ok(s.first() == Some(&(i as u8 + 1))),
            Point::Angle(t) if self.kind.is_circle() => Ok(self.branch_of_angle(*t) == i),
            _ => Err(Error::PointMismatch { kind: self.kind.name() }),
        }
    }

    /// Sorted breakpoints in [0, 1) of the depth-d cylinder partition of the circle.
    pub fn breakpoints(&self, depth: usize) -> Vec<f64> {
        assert!(self.kind.is_circle());
        if matches!(self.maps, BranchMaps::Monomial | BranchMaps::Weighted(_)) {
            let m = self.n.pow(depth as u32);
            return (0..m).map(|j| j as f64 / m as f64).collect();
        }
        let mut level = vec![0.0];
        let mut all = vec![0.0];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * self.n);
            for &e in &level {
                for i in 0..self.n {
                    next.push(self.psi_angle(i, e));
                }
            }
            all.extend_from_slice(&next);
            level = next;
        }
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        all
    }

    /// Branch itinerary of x for `depth` steps (0-based letters).
    pub fn itinerary_angle(&self, x: f64, depth: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(depth);
        let mut y = x;
        for _ in 0..depth {
            out.push(self.branch_of_angle(y));
            y = self.phi_angle(y);
        }
        out
    }

    /// μ([a, b]) for 0 ≤ a ≤ b ≤ 1.
    pub fn arc_measure(&self, a: f64, b: f64) -> f64 {
        match &self.maps {
            BranchMaps::Weighted(rho) => rho.antiderivative(b) - rho.antiderivative(a),
            _ => b - a,
        }
    }

    /// Elementary arcs of the depth-d partition, grouped by itinerary.
    pub fn cylinder_arcs(&self, depth: usize) -> BTreeMap<Vec<usize>, Vec<(f64, f64)>> {
        let mut pts = self.breakpoints(depth);
        pts.push(1.0);
        let mut groups: BTreeMap<Vec<usize>, Vec<(f64, f64)>> = BTreeMap::new();
        for w in pts.windows(2) {
            let it = self.itinerary_angle(0.5 * (w[0] + w[1]), depth);
            let arcs = groups.entry(it).or_default();
            match arcs.last_mut() {
                Some(last) if (last.1 - w[0]).abs() < 1e-15 => last.1 = w[1],
                _ => arcs.push((w[0], w[1])),
            }
        }
        groups
    }
}

/// Descriptor of a cylinder set U_w.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetDescriptor {
    /// Union of half-open arcs inside [0, 1).
    Arcs { arcs: Vec<(f64, f64)> },
    Symbols { prefix: Word },
    Product { prefix: Word, start: f64, end: f64 },
}

impl SetDescriptor {
    /// Containment of `other` in `self`, up to `tol` at arc ends.
    pub fn contains_set(&self, other: &SetDescriptor, tol: f64) -> bool {
        match (self, other) {
            (SetDescriptor::Arcs { arcs: big }, SetDescriptor::Arcs { arcs: small }) => small
                .iter()
                .all(|(a, b)| big.iter().any(|(c, d)| *c <= a + tol && *b <= d + tol)),
            (SetDescriptor::Symbols { prefix: p }, SetDescriptor::Symbols { prefix: q }) => p.is_prefix_of(q),
            (SetDescriptor::Product { prefix: p, .. }, SetDescriptor::Product { prefix: q, .. }) => p.is_prefix_of(q),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderSet {
    pub word: Word,
    pub set: SetDescriptor,
    pub measure: f64,
}

/// U_w = {x : x ∈ U_{w₁}, φ(x) ∈ U_{w₂}, …}.
pub fn cylinder(sys: &SystemDescriptor, decomp: &BranchDecomposition, w: &Word) -> Result<CylinderSet> {
    let n = sys.branch_count;
    Word::new(w.0.clone(), n)?;
    let uniform = (n as f64).powi(-(w.len() as i32));
    let (set, measure) = match sys.kind {
        SystemKind::FullShift => (SetDescriptor::Symbols { prefix: w.clone() }, uniform),
        SystemKind::ProductShiftRotation => (SetDescriptor::Product { prefix: w.clone(), start: 0.0, end: 1.0 }, uniform),
        _ => {
            let key: Vec<usize> = w.0.iter().map(|&l| l as usize - 1).collect();
            let arcs = decomp.cylinder_arcs(w.len()).remove(&key).unwrap_or_default();
            let measure = arcs.iter().map(|&(a, b)| decomp.arc_measure(a, b)).sum();
            (SetDescriptor::Arcs { arcs }, measure)
        }
    };
    Ok(CylinderSet { word: w.clone(), set, measure })
}

/// Resolution controls for [`generation_defect`].
#[derive(Clone, Debug)]
pub struct GenerationOptions {
    /// Symbol depth at which the test function is sampled (symbolic kinds).
    pub extra_symbols: usize,
    /// Minimum number of quadrature panels on [0, 1) (angle coordinates).
    pub panels: usize,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        GenerationOptions { extra_symbols: 6, panels: 64 }
    }
}

/// ‖f − E[f | A_d]‖₂ where A_d is generated by the cylinders of length ≤ d.
pub fn generation_defect(
    sys: &SystemDescriptor,
    decomp: &BranchDecomposition,
    depth: usize,
    f: &dyn Fn(&Point) -> C64,
    opts: &GenerationOptions,
) -> Result<f64> {
    let n = sys.branch_count;
    let gl = GaussLegendre::new(DEFAULT_ORDER);
    match sys.kind {
        SystemKind::FullShift | SystemKind::ProductShiftRotation => {
            let res = depth + opts.extra_symbols;
            let block = n.pow(opts.extra_symbols as u32);
            let weight = (n as f64).powi(-(res as i32));
            let t_rule = (sys.kind == SystemKind::ProductShiftRotation).then(|| CompositeRule::uniform(opts.panels, &gl));
            let eval = |word: &Word| -> Vec<(f64, C64)> {
                match &t_rule {
                    None => vec![(weight, f(&Point::Symbols(word.0.clone())))],
                    Some(r) => r
                        .nodes
                        .iter()
                        .zip(&r.weights)
                        .map(|(&t, &wt)| (weight * wt, f(&Point::Pair(word.0.clone(), t))))
                        .collect(),
                }
            };
            let mut total = 0.0;
            let words: Vec<Word> = Word::all(res, n).collect();
            for chunk in words.chunks(block) {
                let samples: Vec<(f64, C64)> = chunk.iter().flat_map(eval).collect();
                let mass: f64 = samples.iter().map(|s| s.0).sum();
                let avg = samples.iter().map(|(w, v)| v * w).sum::<C64>() / mass;
                total += samples.iter().map(|(w, v)| w * (v - avg).norm_sqr()).sum::<f64>();
            }
            Ok(total.sqrt())
        }
        _ => {
            let mut total = 0.0;
            for arcs in decomp.cylinder_arcs(depth).values() {
                let mut samples = Vec::new();
                for &(a, b) in arcs {
                    let rule = CompositeRule::aligned(&[], ((opts.panels as f64 * (b - a)).ceil() as usize).max(1), &gl);
                    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                        let t = a + (b - a) * x;
                        samples.push((w * (b - a) * decomp.rho(t), f(&Point::Angle(t))));
                    }
                }
                let mass: f64 = samples.iter().map(|s| s.0).sum();
                if mass == 0.0 {
                    continue;
                }
                let avg = samples.iter().map(|(w, v)| v * w).sum::<C64>() / mass;
                total += samples.iter().map(|(w, v)| w * (v - avg).norm_sqr()).sum::<f64>();
            }
            Ok(total.sqrt())
        }
    }
}
