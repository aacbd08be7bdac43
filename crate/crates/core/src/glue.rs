//! Smooth glue maps, exact approach sequences, and diffeomorphism assembly.
//!
//! A glue map rises from `(p, q)` to `(p + delta, q + delta(1 + gamma))`
//! with derivative one and flat higher derivatives at both endpoints.
//! Approach sequences pick dyadic abscissae and rational bump amplitudes so
//! that every inequality controlling the construction holds in exact
//! rational arithmetic; the assembled map passes through an arbitrary
//! rational target point and is certified smooth there by finite
//! differences over the exact value decomposition.

use crate::bump::{BumpError, BumpFunction, K_MAX};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Quadrature tolerance for glue-map evaluation.
pub const GLUE_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GlueError {
    #[error("input {x} outside the piece domain [{lo}, {hi}]")]
    OutsideDomain { x: String, lo: String, hi: String },
    #[error("derivative order {0} out of the supported range 1..={K_MAX}")]
    UnsupportedOrder(usize),
    #[error("depth {0} too small: {1}")]
    DepthTooSmall(usize, String),
    #[error(transparent)]
    Bump(#[from] BumpError),
}

/// Parameters of one smooth transition piece.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GlueSpec {
    pub p: Rational,
    pub q: Rational,
    pub delta: Rational,
    pub gamma: Rational,
}

impl<'de> Deserialize<'de> for GlueSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            p: Rational,
            q: Rational,
            delta: Rational,
            gamma: Rational,
        }
        let raw = Raw::deserialize(deserializer)?;
        if !raw.delta.is_positive() || !raw.gamma.is_positive() {
            return Err(serde::de::Error::custom(
                "glue spec needs positive delta and gamma",
            ));
        }
        Ok(GlueSpec {
            p: raw.p,
            q: raw.q,
            delta: raw.delta,
            gamma: raw.gamma,
        })
    }
}

impl GlueSpec {
    pub fn new(p: Rational, q: Rational, delta: Rational, gamma: Rational) -> Self {
        assert!(delta.is_positive(), "delta must be positive");
        assert!(gamma.is_positive(), "gamma must be positive");
        GlueSpec { p, q, delta, gamma }
    }

    /// Domain `[p, p + delta]`.
    pub fn domain(&self) -> (Rational, Rational) {
        (self.p.clone(), &self.p + &self.delta)
    }

    /// Upper endpoint image `q + delta (1 + gamma)`, exact.
    pub fn upper_value(&self) -> Rational {
        &self.q + &(&self.delta * &(&Rational::one() + &self.gamma))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let (lo, hi) = self.domain();
        *x >= lo && *x <= hi
    }

    fn domain_error(&self, x: &Rational) -> GlueError {
        let (lo, hi) = self.domain();
        GlueError::OutsideDomain {
            x: x.to_string(),
            lo: lo.to_string(),
            hi: hi.to_string(),
        }
    }

    /// Value split into the exact affine part `q + (x - p)` and the small
    /// bump correction `delta gamma I((x-p)/delta)`, quadrature-certified.
    pub fn eval_split(
        &self,
        bump: &BumpFunction,
        x: &Rational,
    ) -> Result<(Rational, f64), GlueError> {
        if !self.contains(x) {
            return Err(self.domain_error(x));
        }
        let exact = &self.q + &(x - &self.p);
        let u = (&(x - &self.p) / &self.delta).to_f64();
        let correction = if u == 0.0 {
            0.0
        } else {
            let integral = bump.integral_to(u, GLUE_QUAD_TOL).value;
            (&self.delta * &self.gamma).to_f64() * integral
        };
        Ok((exact, correction))
    }

    /// `q + delta (u + gamma I(u))` with `u = (x-p)/delta`.
    pub fn eval(&self, bump: &BumpFunction, x: &Rational) -> Result<f64, GlueError> {
        let (exact, correction) = self.eval_split(bump, x)?;
        Ok(exact.to_f64() + correction)
    }

    /// Closed-form derivatives: order one is `1 + gamma b(u)`, order `k >= 2`
    /// is `(gamma / delta^{k-1}) b^{(k-1)}(u)`.
    pub fn deriv(&self, bump: &BumpFunction, x: &Rational, k: usize) -> Result<f64, GlueError> {
        if k == 0 || k > K_MAX {
            return Err(GlueError::UnsupportedOrder(k));
        }
        if !self.contains(x) {
            return Err(self.domain_error(x));
        }
        let u = (&(x - &self.p) / &self.delta).to_f64();
        if k == 1 {
            Ok(1.0 + self.gamma.to_f64() * bump.eval(u)?)
        } else {
            let scale = (&self.gamma / &self.delta.pow(k as i32 - 1)).to_f64();
            Ok(scale * bump.deriv(u, k - 1)?)
        }
    }
}

/// Which side of the target an approach sequence climbs from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Exact-rational approach data: `n` glue pieces plus the lookahead entries
/// needed by the controlling inequalities.
///
/// Index conventions (0-based storage of the 1-based construction):
/// `p` holds `n + 2` abscissae, `delta` holds `n + 1` widths, `q` and `v`
/// hold `n + 1` entries, and `gamma` holds `n` amplitudes. On the right side
/// the abscissae decrease toward the target and the chain runs downward.
#[derive(Clone, Debug, Serialize)]
pub struct ApproachSequence {
    pub side: Side,
    pub target: (Rational, Rational),
    pub p: Vec<Rational>,
    pub q: Vec<Rational>,
    pub delta: Vec<Rational>,
    pub gamma: Vec<Rational>,
    pub v: Vec<Rational>,
}

/// One exact inequality (or identity) instance from the construction.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityRecord {
    pub label: String,
    pub lhs: String,
    pub relation: String,
    pub rhs: String,
    pub exact: bool,
    pub holds: bool,
}

impl InequalityRecord {
    fn strict_less(label: impl Into<String>, lhs: &Rational, rhs: &Rational) -> Self {
        InequalityRecord {
            label: label.into(),
            lhs: lhs.to_string(),
            relation: "<".into(),
            rhs: rhs.to_string(),
            exact: true,
            holds: lhs < rhs,
        }
    }

    fn equal(label: impl Into<String>, lhs: &Rational, rhs: &Rational) -> Self {
        InequalityRecord {
            label: label.into(),
            lhs: lhs.to_string(),
            relation: "=".into(),
            rhs: rhs.to_string(),
            exact: true,
            holds: lhs == rhs,
        }
    }
}

/// Exact certificate for one approach sequence.
#[derive(Clone, Debug, Serialize)]
pub struct ApproachCertificate {
    pub side: Side,
    pub depth: usize,
    pub entries: Vec<InequalityRecord>,
    pub all_hold: bool,
}

/// Builds the approach sequence for a rational target: dyadic abscissae
/// `w -+ 2^{-n}`, the first ordinate placed half a width below the slope-one
/// line through the target, and each bump amplitude at the midpoint of its
/// admissible interval, keeping every step exact.
pub fn build_approach(target: &(Rational, Rational), side: Side, n: usize) -> ApproachSequence {
    assert!(n >= 1, "depth must be at least one");
    let (w, z) = target;
    // Left-side construction; the right side mirrors through the target.
    let mut p = Vec::with_capacity(n + 2);
    for i in 0..n + 2 {
        p.push(w - &Rational::dyadic(i as u32 + 1));
    }
    let mut delta = Vec::with_capacity(n + 1);
    for i in 0..n + 1 {
        delta.push(&p[i + 1] - &p[i]);
    }
    // L(x) = x + (z - w); vertical distance of (p, q) below L is L(p) - q.
    let line = |x: &Rational| x + &(z - w);
    let mut q = Vec::with_capacity(n + 1);
    let mut v = Vec::with_capacity(n + 1);
    let two = Rational::integer(2);
    q.push(&line(&p[0]) - &(&delta[0] / &two));
    v.push(&line(&p[0]) - &q[0]);
    let mut gamma = Vec::with_capacity(n);
    for i in 0..n {
        let step = i as i64 + 1; // the 1-based index of this piece
        let lookahead = delta[i + 1].pow(step as i32 + 1);
        let mid_slack = &lookahead / &Rational::integer(2 * (step + 1));
        let g = &(&v[i] - &mid_slack) / &delta[i];
        gamma.push(g.clone());
        q.push(&q[i] + &(&delta[i] * &(&Rational::one() + &g)));
        v.push(&line(&p[i + 1]) - &q[i + 1]);
    }
    let sequence = match side {
        Side::Left => ApproachSequence {
            side,
            target: target.clone(),
            p,
            q,
            delta,
            gamma,
            v,
        },
        Side::Right => {
            let two_w = &Rational::integer(2) * w;
            let two_z = &Rational::integer(2) * z;
            ApproachSequence {
                side,
                target: target.clone(),
                p: p.iter().map(|x| &two_w - x).collect(),
                q: q.iter().map(|y| &two_z - y).collect(),
                delta,
                gamma,
                v,
            }
        }
    };
    // Contract: every controlling inequality holds exactly before return.
    let certificate = sequence.verify_exact();
    assert!(
        certificate.all_hold,
        "approach construction violated an exact invariant: {:?}",
        certificate
            .entries
            .iter()
            .find(|e| !e.holds)
            .map(|e| &e.label)
    );
    sequence
}

impl ApproachSequence {
    pub fn depth(&self) -> usize {
        self.gamma.len()
    }

    /// Vertical distance from the slope-one line through the target to the
    /// i-th anchor; shared by both sides.
    fn line_distance(&self, i: usize) -> Rational {
        let (w, z) = &self.target;
        match self.side {
            Side::Left => &(&self.p[i] + &(z - w)) - &self.q[i],
            Side::Right => &self.q[i] - &(&self.p[i] + &(z - w)),
        }
    }

    /// Glue piece `i` (0-based). On the left it spans `[p_i, p_{i+1}]`; on
    /// the right the mirrored piece spans `[p_{i+1}, p_i]` and its lower
    /// anchor is the mirrored next junction.
    pub fn piece(&self, i: usize) -> GlueSpec {
        assert!(i < self.depth());
        match self.side {
            Side::Left => GlueSpec::new(
                self.p[i].clone(),
                self.q[i].clone(),
                self.delta[i].clone(),
                self.gamma[i].clone(),
            ),
            Side::Right => GlueSpec::new(
                self.p[i + 1].clone(),
                self.q[i + 1].clone(),
                self.delta[i].clone(),
                self.gamma[i].clone(),
            ),
        }
    }

    /// Domain of piece `i`, lower bound first.
    pub fn piece_domain(&self, i: usize) -> (Rational, Rational) {
        match self.side {
            Side::Left => (self.p[i].clone(), self.p[i + 1].clone()),
            Side::Right => (self.p[i + 1].clone(), self.p[i].clone()),
        }
    }

    /// The residual vertical distance at the truncation junction.
    pub fn residual(&self) -> &Rational {
        self.v.last().unwrap()
    }

    /// Verifies every controlling inequality in exact rational arithmetic:
    /// widths in (0,1), positive distances, the induction bound
    /// `v_n < delta_n^n / n`, the amplitude window, the ratio bound
    /// `gamma_n / delta_n^{n-1} < 1/n`, the junction chain, and the exact
    /// distance recursion.
    pub fn verify_exact(&self) -> ApproachCertificate {
        let n = self.depth();
        let mut entries = Vec::new();
        let one = Rational::one();
        let zero = Rational::zero();
        for i in 0..n {
            let step = i as i64 + 1;
            entries.push(InequalityRecord::strict_less(
                format!("0 < Delta_{step}"),
                &zero,
                &self.delta[i],
            ));
            entries.push(InequalityRecord::strict_less(
                format!("Delta_{step} < 1"),
                &self.delta[i],
                &one,
            ));
            entries.push(InequalityRecord::strict_less(
                format!("0 < v_{step}"),
                &zero,
                &self.v[i],
            ));
            let ih = &self.delta[i].pow(step as i32) / &Rational::integer(step);
            entries.push(InequalityRecord::strict_less(
                format!("IH_{step}: v_{step} < Delta_{step}^{step}/{step}"),
                &self.v[i],
                &ih,
            ));
            entries.push(InequalityRecord::strict_less(
                format!("0 < gamma_{step}"),
                &zero,
                &self.gamma[i],
            ));
            let product = &self.gamma[i] * &self.delta[i];
            let lookahead =
                &self.delta[i + 1].pow(step as i32 + 1) / &Rational::integer(step + 1);
            let lower = &self.v[i] - &lookahead;
            entries.push(InequalityRecord::strict_less(
                format!(
                    "v_{step} - Delta_{}^{}/{} < gamma_{step} Delta_{step}",
                    step + 1,
                    step + 1,
                    step + 1
                ),
                &lower,
                &product,
            ));
            entries.push(InequalityRecord::strict_less(
                format!("gamma_{step} Delta_{step} < v_{step}"),
                &product,
                &self.v[i],
            ));
            let ratio = &self.gamma[i] / &self.delta[i].pow(step as i32 - 1);
            let cap = &one / &Rational::integer(step);
            entries.push(InequalityRecord::strict_less(
                format!("gamma_{step}/Delta_{step}^{} < 1/{step}", step - 1),
                &ratio,
                &cap,
            ));
            // Junction chain, oriented by side.
            let rise = &self.delta[i] * &(&one + &self.gamma[i]);
            let expected = match self.side {
                Side::Left => &self.q[i] + &rise,
                Side::Right => &self.q[i] - &rise,
            };
            entries.push(InequalityRecord::equal(
                format!("q_{} = q_{step} -+ Delta_{step}(1+gamma_{step})", step + 1),
                &self.q[i + 1],
                &expected,
            ));
            // Exact distance recursion v_{n+1} = v_n - gamma_n Delta_n.
            let recursed = &self.v[i] - &product;
            entries.push(InequalityRecord::equal(
                format!("v_{} = v_{step} - gamma_{step} Delta_{step}", step + 1),
                &self.v[i + 1],
                &recursed,
            ));
            // Distances really are the vertical distances to the line.
            entries.push(InequalityRecord::equal(
                format!("v_{step} = vDist(L, A_{step})"),
                &self.v[i],
                &self.line_distance(i),
            ));
            // Monotone approach to the target.
            let (lo, hi) = (&self.p[i], &self.p[i + 1]);
            match self.side {
                Side::Left => entries.push(InequalityRecord::strict_less(
                    format!("p_{step} < p_{}", step + 1),
                    lo,
                    hi,
                )),
                Side::Right => entries.push(InequalityRecord::strict_less(
                    format!("p_{} < p_{step}", step + 1),
                    hi,
                    lo,
                )),
            }
        }
        entries.push(InequalityRecord::strict_less(
            format!("0 < v_{}", n + 1),
            &zero,
            &self.v[n],
        ));
        let all_hold = entries.iter().all(|e| e.holds);
        ApproachCertificate {
            side: self.side,
            depth: n,
            entries,
            all_hold,
        }
    }
}

/// Where a point landed in the assembled map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PieceRef {
    PsiLeft,
    GlueLeft(usize),
    TruncatedLeft,
    Hole,
    TruncatedRight,
    GlueRight(usize),
    PsiRight,
}

impl PieceRef {
    pub fn zone(&self) -> String {
        match self {
            PieceRef::PsiLeft | PieceRef::PsiRight => "line".into(),
            PieceRef::GlueLeft(i) | PieceRef::GlueRight(i) => format!("glue-{}", i + 1),
            PieceRef::Hole => "hole".into(),
            PieceRef::TruncatedLeft | PieceRef::TruncatedRight => "truncated".into(),
        }
    }

    pub fn piece_id(&self) -> String {
        match self {
            PieceRef::PsiLeft => "psi-L".into(),
            PieceRef::GlueLeft(i) => format!("L{}", i + 1),
            PieceRef::TruncatedLeft => "trunc-L".into(),
            PieceRef::Hole => "hole".into(),
            PieceRef::TruncatedRight => "trunc-R".into(),
            PieceRef::GlueRight(i) => format!("R{}", i + 1),
            PieceRef::PsiRight => "psi-R".into(),
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, PieceRef::TruncatedLeft | PieceRef::TruncatedRight)
    }
}

/// The assembled piecewise map through the target point: a slope-one line,
/// the left glue pieces, the target value, the mirrored right pieces, and a
/// slope-one line again. Inside the truncation gap evaluation interpolates
/// along the slope-one line through the target, with the recorded residual.
#[derive(Clone, Debug, Serialize)]
pub struct DiffeoAssembly {
    pub target: (Rational, Rational),
    pub depth: usize,
    pub left: ApproachSequence,
    pub right: ApproachSequence,
}

pub fn assemble_diffeo(target: &(Rational, Rational), depth: usize) -> DiffeoAssembly {
    DiffeoAssembly {
        target: target.clone(),
        depth,
        left: build_approach(target, Side::Left, depth),
        right: build_approach(target, Side::Right, depth),
    }
}

impl DiffeoAssembly {
    /// Width of the truncation gap on either side of the target.
    pub fn gap_width(&self) -> Rational {
        &self.target.0 - &self.left.p[self.depth]
    }

    /// Recorded residual bound inside the truncated zone.
    pub fn residual(&self) -> &Rational {
        self.left.residual()
    }

    pub fn locate(&self, x: &Rational) -> PieceRef {
        let n = self.depth;
        let (w, _) = &self.target;
        if x == w {
            return PieceRef::Hole;
        }
        if x < w {
            let p = &self.left.p;
            if *x < p[0] {
                return PieceRef::PsiLeft;
            }
            if *x > p[n] {
                return PieceRef::TruncatedLeft;
            }
            if *x == p[n] {
                return PieceRef::GlueLeft(n - 1);
            }
            let idx = p[..=n].partition_point(|r| r <= x) - 1;
            PieceRef::GlueLeft(idx)
        } else {
            let p = &self.right.p;
            if *x >= p[0] {
                return PieceRef::PsiRight;
            }
            if *x < p[n] {
                return PieceRef::TruncatedRight;
            }
            if *x == p[n] {
                return PieceRef::GlueRight(n - 1);
            }
            // Decreasing list: find i with p[i+1] <= x < p[i].
            let idx = p[..=n].partition_point(|r| r > x) - 1;
            PieceRef::GlueRight(idx)
        }
    }

    /// Value split into exact rational part and bump correction, plus the
    /// piece that produced it.
    pub fn eval_split(
        &self,
        bump: &BumpFunction,
        x: &Rational,
    ) -> Result<(Rational, f64, PieceRef), GlueError> {
        let piece = self.locate(x);
        let (w, z) = &self.target;
        let value = match piece {
            PieceRef::PsiLeft => ((x - &self.left.p[0]) + self.left.q[0].clone(), 0.0),
            PieceRef::PsiRight => ((x - &self.right.p[0]) + self.right.q[0].clone(), 0.0),
            PieceRef::TruncatedLeft | PieceRef::TruncatedRight => ((x - w) + z.clone(), 0.0),
            PieceRef::Hole => (z.clone(), 0.0),
            PieceRef::GlueLeft(i) => self.left.piece(i).eval_split(bump, x)?,
            PieceRef::GlueRight(i) => self.right.piece(i).eval_split(bump, x)?,
        };
        Ok((value.0, value.1, piece))
    }

    pub fn eval(&self, bump: &BumpFunction, x: &Rational) -> Result<(f64, PieceRef), GlueError> {
        let (exact, corr, piece) = self.eval_split(bump, x)?;
        Ok((exact.to_f64() + corr, piece))
    }

    /// Piecewise closed-form derivative. At the hole the certified limit
    /// values are reported (one for the first order, zero above).
    pub fn deriv(
        &self,
        bump: &BumpFunction,
        x: &Rational,
        k: usize,
    ) -> Result<(f64, PieceRef), GlueError> {
        if k == 0 || k > K_MAX {
            return Err(GlueError::UnsupportedOrder(k));
        }
        let piece = self.locate(x);
        let v = match piece {
            PieceRef::PsiLeft
            | PieceRef::PsiRight
            | PieceRef::TruncatedLeft
            | PieceRef::TruncatedRight
            | PieceRef::Hole => {
                if k == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            PieceRef::GlueLeft(i) => self.left.piece(i).deriv(bump, x, k)?,
            PieceRef::GlueRight(i) => self.right.piece(i).deriv(bump, x, k)?,
        };
        Ok((v, piece))
    }

    /// Junction continuity and endpoint-derivative checks between built
    /// pieces (boundary lines included).
    pub fn junction_report(&self, bump: &BumpFunction) -> Result<Vec<JunctionCheck>, GlueError> {
        let mut checks = Vec::new();
        for seq in [&self.left, &self.right] {
            for i in 0..self.depth {
                let (lo, hi) = seq.piece_domain(i);
                let spec = seq.piece(i);
                // Neighbour value at the lower junction.
                let lower_neighbor = match (seq.side, i) {
                    (Side::Left, 0) => (&lo - &seq.p[0]).to_f64() + seq.q[0].to_f64(),
                    (Side::Left, _) => seq.piece(i - 1).eval(bump, &lo)?,
                    (Side::Right, _) if i + 1 == self.depth => {
                        // Gap boundary: compare against the interpolating line.
                        let (w, z) = &self.target;
                        ((&lo - w) + z.clone()).to_f64()
                    }
                    (Side::Right, _) => seq.piece(i + 1).eval(bump, &lo)?,
                };
                let here_lo = spec.eval(bump, &lo)?;
                let deriv_lo = spec.deriv(bump, &lo, 1)?;
                checks.push(JunctionCheck {
                    x: lo.to_string(),
                    value_gap: (here_lo - lower_neighbor).abs(),
                    deriv_gap: (deriv_lo - 1.0).abs(),
                    at_truncation: seq.side == Side::Right && i + 1 == self.depth,
                });
                // Neighbour value at the upper junction.
                let upper_neighbor = match (seq.side, i) {
                    (Side::Left, _) if i + 1 == self.depth => {
                        let (w, z) = &self.target;
                        ((&hi - w) + z.clone()).to_f64()
                    }
                    (Side::Left, _) => seq.piece(i + 1).eval(bump, &hi)?,
                    (Side::Right, 0) => (&hi - &seq.p[0]).to_f64() + seq.q[0].to_f64(),
                    (Side::Right, _) => seq.piece(i - 1).eval(bump, &hi)?,
                };
                let here_hi = spec.eval(bump, &hi)?;
                let deriv_hi = spec.deriv(bump, &hi, 1)?;
                checks.push(JunctionCheck {
                    x: hi.to_string(),
                    value_gap: (here_hi - upper_neighbor).abs(),
                    deriv_gap: (deriv_hi - 1.0).abs(),
                    at_truncation: seq.side == Side::Left && i + 1 == self.depth,
                });
            }
        }
        Ok(checks)
    }

    /// Evenly spaced rational probes across the whole assembly, endpoints
    /// one unit beyond the boundary lines' anchors.
    pub fn probe_grid(&self, count: usize) -> Vec<Rational> {
        let lo = &self.left.p[0] - &Rational::one();
        let hi = &self.right.p[0] + &Rational::one();
        let width = &hi - &lo;
        (0..=count)
            .map(|i| &lo + &(&width * &Rational::new(i as i64, count as i64)))
            .collect()
    }

    /// CSV curve export: `x, G(x), G'(x), piece-id, zone`.
    pub fn csv_curve(
        &self,
        bump: &BumpFunction,
        probes: &[Rational],
    ) -> Result<String, GlueError> {
        let mut out = String::from("x,G(x),G'(x),piece-id,zone\n");
        for x in probes {
            let (value, piece) = self.eval(bump, x)?;
            let (slope, _) = self.deriv(bump, x, 1)?;
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{},{}\n",
                x,
                value,
                slope,
                piece.piece_id(),
                piece.zone()
            ));
        }
        Ok(out)
    }
}

/// Continuity and first-derivative data at one junction.
#[derive(Clone, Debug, Serialize)]
pub struct JunctionCheck {
    pub x: String,
    pub value_gap: f64,
    pub deriv_gap: f64,
    /// Junctions against the truncated-zone interpolation carry the
    /// recorded residual rather than a smoothness claim.
    pub at_truncation: bool,
}

/// Finite-difference smoothness trend for one derivative order.
#[derive(Clone, Debug, Serialize)]
pub struct OrderTrend {
    pub order: usize,
    pub target: f64,
    pub tolerance: f64,
    pub scales: Vec<String>,
    pub left_estimates: Vec<f64>,
    pub right_estimates: Vec<f64>,
    pub errors: Vec<f64>,
    pub monotone: bool,
    pub within_tolerance: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothnessReport {
    pub conclusive: bool,
    pub suggestion: Option<String>,
    pub orders: Vec<OrderTrend>,
    pub passed: bool,
}

fn binomial(k: usize, j: usize) -> i64 {
    let mut c = 1i64;
    for i in 0..j {
        c = c * (k - i) as i64 / (i + 1) as i64;
    }
    c
}

/// Tolerances pinned for the finite-difference certification.
pub fn smoothness_tolerance(order: usize) -> f64 {
    if order == 1 {
        1e-3
    } else {
        1e-2
    }
}

/// Default certification scales: the construction widths at depths 5, 8,
/// and 12, matching the dyadic junctions.
pub fn default_scales(assembly: &DiffeoAssembly) -> Result<Vec<Rational>, GlueError> {
    if assembly.depth < 14 {
        return Err(GlueError::DepthTooSmall(
            assembly.depth,
            "default certification scales need depth >= 14".into(),
        ));
    }
    Ok(vec![
        assembly.left.delta[4].clone(),
        assembly.left.delta[7].clone(),
        assembly.left.delta[11].clone(),
    ])
}

/// Finite-difference certification over a generic split evaluation: the
/// exact parts accumulate in rational arithmetic so the differences cancel
/// without float noise, and only the tiny bump corrections ride along in
/// binary64.
pub fn certify_smooth_profile<F>(
    eval_split: F,
    w: &Rational,
    orders: usize,
    scales: &[Rational],
    gap_width: &Rational,
) -> SmoothnessReport
where
    F: Fn(&Rational) -> (Rational, f64),
{
    let mut report = SmoothnessReport {
        conclusive: true,
        suggestion: None,
        orders: Vec::new(),
        passed: true,
    };
    if scales.len() < 3 {
        report.conclusive = false;
        report.passed = false;
        report.suggestion = Some("need at least three decreasing scales".into());
        return report;
    }
    if scales.windows(2).any(|p| p[0] <= p[1]) || !scales.iter().all(|h| h.is_positive()) {
        report.conclusive = false;
        report.passed = false;
        report.suggestion = Some("scales must be positive and strictly decreasing".into());
        return report;
    }
    if scales.iter().any(|h| h < gap_width) {
        report.conclusive = false;
        report.passed = false;
        report.suggestion = Some(format!(
            "scale below the truncation gap {gap_width}; rebuild with a larger depth"
        ));
        return report;
    }
    for k in 1..=orders {
        let target = if k == 1 { 1.0 } else { 0.0 };
        let tolerance = smoothness_tolerance(k);
        let mut left_estimates = Vec::new();
        let mut right_estimates = Vec::new();
        let mut errors = Vec::new();
        for h in scales {
            let h_pow = h.pow(k as i32);
            let h_pow_f = h_pow.to_f64();
            let mut exact_left = Rational::zero();
            let mut corr_left = 0.0;
            let mut exact_right = Rational::zero();
            let mut corr_right = 0.0;
            for j in 0..=k {
                let c = binomial(k, j);
                let sign_left = if j % 2 == 0 { 1 } else { -1 };
                let x_left = w - &(h * &Rational::integer(j as i64));
                let (e, corr) = eval_split(&x_left);
                exact_left = &exact_left + &(&Rational::integer(sign_left * c) * &e);
                corr_left += (sign_left * c) as f64 * corr;

                let sign_right = if (k - j) % 2 == 0 { 1 } else { -1 };
                let x_right = w + &(h * &Rational::integer(j as i64));
                let (e, corr) = eval_split(&x_right);
                exact_right = &exact_right + &(&Rational::integer(sign_right * c) * &e);
                corr_right += (sign_right * c) as f64 * corr;
            }
            let left = (&exact_left / &h_pow).to_f64() + corr_left / h_pow_f;
            let right = (&exact_right / &h_pow).to_f64() + corr_right / h_pow_f;
            errors.push((left - target).abs().max((right - target).abs()));
            left_estimates.push(left);
            right_estimates.push(right);
        }
        // Trend requirement: non-increasing across the last three scales.
        let tail = &errors[errors.len() - 3..];
        let monotone = tail.windows(2).all(|p| p[0] >= p[1]);
        let within_tolerance = *errors.last().unwrap() <= tolerance;
        let passed = monotone && within_tolerance;
        report.passed &= passed;
        report.orders.push(OrderTrend {
            order: k,
            target,
            tolerance,
            scales: scales.iter().map(|h| h.to_string()).collect(),
            left_estimates,
            right_estimates,
            errors,
            monotone,
            within_tolerance,
            passed,
        });
    }
    report
}

/// Finite-difference smoothness certificate at the target of an assembly.
pub fn certify_smooth_at_target(
    assembly: &DiffeoAssembly,
    bump: &BumpFunction,
    orders: usize,
    scales: &[Rational],
) -> SmoothnessReport {
    let w = assembly.target.0.clone();
    let gap = assembly.gap_width();
    certify_smooth_profile(
        |x| {
            let (exact, corr, _) = assembly
                .eval_split(bump, x)
                .expect("assembly evaluation is total");
            (exact, corr)
        },
        &w,
        orders,
        scales,
        &gap,
    )
}

/// Supremum bound for one derivative order across all pieces.
#[derive(Clone, Debug, Serialize)]
pub struct OrderBound {
    pub order: usize,
    pub sup_bound: f64,
    /// Index (1-based) from which the per-piece bound sequence is verified
    /// strictly decreasing through the built prefix.
    pub decreasing_from: Option<usize>,
    pub decreasing_verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzReport {
    pub orders: Vec<OrderBound>,
    pub min_first_derivative: f64,
    pub inverse_first_derivative_bound: f64,
    pub gamma_decreasing: bool,
    pub passed: bool,
}

/// Bounds all derivatives up to `k_max` over the assembled pieces using the
/// closed forms: order one is `1 + gamma_n ||b||` at worst, and order `k`
/// on piece `n` is bounded by `(gamma_n / delta_n^{k-1}) ||b^{(k-1)}||`,
/// whose sequence in `n` is verified eventually decreasing in exact
/// arithmetic. All pieces have derivative at least one, so the inverse has
/// first derivative at most one.
pub fn certify_lipschitz(
    assembly: &DiffeoAssembly,
    bump: &BumpFunction,
    k_max: usize,
) -> Result<LipschitzReport, GlueError> {
    if k_max == 0 || k_max > K_MAX {
        return Err(GlueError::UnsupportedOrder(k_max));
    }
    let seq = &assembly.left;
    let n = seq.depth();
    let mut orders = Vec::new();
    let gamma_max = seq
        .gamma
        .iter()
        .cloned()
        .reduce(|a, b| a.max(b))
        .expect("at least one piece");
    let b_norm = bump.sup_norm(0)?;
    orders.push(OrderBound {
        order: 1,
        sup_bound: 1.0 + gamma_max.to_f64() * b_norm,
        decreasing_from: Some(1),
        decreasing_verified: seq.gamma.windows(2).all(|g| g[1] < g[0]),
    });
    for k in 2..=k_max {
        let norm = bump.sup_norm(k - 1)?;
        let alphas: Vec<Rational> = (0..n)
            .map(|i| &seq.gamma[i] / &seq.delta[i].pow(k as i32 - 1))
            .collect();
        let sup = alphas
            .iter()
            .map(|a| a.to_f64() * norm)
            .fold(0.0f64, f64::max);
        // First index from which the per-piece bounds strictly decrease.
        let mut from = n;
        while from > 1 && alphas[from - 1] < alphas[from - 2] {
            from -= 1;
        }
        let decreasing_verified = from < n;
        orders.push(OrderBound {
            order: k,
            sup_bound: sup,
            decreasing_from: if decreasing_verified { Some(from) } else { None },
            decreasing_verified,
        });
    }
    // Probe the first derivative across the assembly; every glue piece
    // satisfies G' = 1 + gamma b >= 1 and the lines have slope one.
    let mut min_first = f64::INFINITY;
    for x in assembly.probe_grid(1000) {
        let (d, _) = assembly.deriv(bump, &x, 1)?;
        if d < min_first {
            min_first = d;
        }
    }
    let gamma_decreasing = seq.gamma.windows(2).all(|g| g[1] < g[0]);
    let passed = orders
        .iter()
        .all(|o| o.sup_bound.is_finite() && o.decreasing_verified)
        && min_first >= 1.0 - 1e-12;
    Ok(LipschitzReport {
        orders,
        min_first_derivative: min_first,
        inverse_first_derivative_bound: 1.0,
        gamma_decreasing,
        passed,
    })
}
