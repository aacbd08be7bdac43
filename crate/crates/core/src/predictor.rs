//! Predictors over the step-function universe.
//!
//! The strong predictor evaluates the least wellordered extension of a past
//! at the canonical witness cutoff; the weak predictor forgets everything
//! above the hole. Verification entry points make anonymity, witness
//! independence, and goodness (finite certified bad sets) testable claims,
//! and the amalgamated predictor handles a generator with finitely many
//! rational fixed points by gluing per-interval cyclic predictors.

use crate::homeo::{Affine, Bound, GroupElement, GroupError};
use crate::rational::Rational;
use crate::step::{
    canonical_witness, least_extension, wellorder_key, Alphabet, HoledFunction, PastFunction,
    State, StepError, StepFunction,
};
use serde::Serialize;
use thiserror::Error;

/// Iteration cap for orbit walks; affine orbits terminate well before this.
pub const ORBIT_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("cutoff {0} lies in the fixed-point set")]
    CutoffInFixedSet(Rational),
    #[error("fixed-point set of phi is not a finite rational set")]
    FixedSetNotFinite,
    #[error("phi must act by exact rational affine maps")]
    NotAffine,
    #[error("phi does not preserve the interval ({0}, {1})")]
    IntervalNotPreserved(Bound, Bound),
    #[error("orbit translation exceeded the iteration cap")]
    OrbitCapExceeded,
    #[error("evaluation error: {0}")]
    Eval(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum AnonymityOutcome {
    Ok { value: State },
    Mismatch { direct: State, precomposed: State },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum WelldefOutcome {
    Ok { value: State },
    /// Precondition unmet: the least extension does not extend one of the
    /// precompose-images. Reported, not a failure.
    Skipped { reason: String },
    Mismatch { at_phi1: State, at_phi2: State },
}

/// Certified failures and verified successes of the defining prediction
/// condition for one total function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BadSet {
    pub certified: Vec<Rational>,
    pub sampled_ok: Vec<Rational>,
}

/// The predictor: prediction by least wellordered extension over the
/// positive-slope rational affine group.
#[derive(Clone, Debug)]
pub struct Predictor {
    alphabet: Alphabet,
}

impl Predictor {
    pub fn new(alphabet: Alphabet) -> Self {
        Predictor { alphabet }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Predicts the value at the cutoff: the least extension of the orbit of
    /// `f`, evaluated at the canonical witness image of the cutoff. Exact.
    pub fn predict(&self, f: &PastFunction) -> Result<State, PredictorError> {
        f.validate_states(&self.alphabet)?;
        let best = least_extension(f);
        let witness = canonical_witness(f);
        let eval_point = witness.inverse().apply(f.cutoff());
        debug_assert!(best.extends(&f.precompose(&witness)));
        Ok(best.value_at(&eval_point))
    }

    /// Weak prediction from both sides of a hole: ignores all data at or
    /// above the hole and predicts from the left restriction.
    pub fn predict_weak(&self, g: &HoledFunction) -> Result<State, PredictorError> {
        self.predict(&g.left_of_hole())
    }

    /// The defining anonymity property for one pair: prediction is
    /// unchanged under precomposition. Exact equality.
    pub fn verify_anonymity(
        &self,
        f: &PastFunction,
        phi: &Affine,
    ) -> Result<AnonymityOutcome, PredictorError> {
        let direct = self.predict(f)?;
        let precomposed = self.predict(&f.precompose(phi))?;
        if direct == precomposed {
            Ok(AnonymityOutcome::Ok { value: direct })
        } else {
            Ok(AnonymityOutcome::Mismatch {
                direct,
                precomposed,
            })
        }
    }

    /// Witness independence: when the least extension extends both
    /// precompose-images, its values at the two witness cutoffs agree.
    pub fn verify_welldefined(
        &self,
        f: &PastFunction,
        phi1: &Affine,
        phi2: &Affine,
    ) -> Result<WelldefOutcome, PredictorError> {
        f.validate_states(&self.alphabet)?;
        let best = least_extension(f);
        for (name, phi) in [("phi1", phi1), ("phi2", phi2)] {
            if !best.extends(&f.precompose(phi)) {
                return Ok(WelldefOutcome::Skipped {
                    reason: format!("least extension does not extend f o {name}"),
                });
            }
        }
        let at_phi1 = best.value_at(&phi1.inverse().apply(f.cutoff()));
        let at_phi2 = best.value_at(&phi2.inverse().apply(f.cutoff()));
        if at_phi1 == at_phi2 {
            Ok(WelldefOutcome::Ok { value: at_phi1 })
        } else {
            Ok(WelldefOutcome::Mismatch { at_phi1, at_phi2 })
        }
    }

    /// Evaluates the defining bad-set condition exactly at every breakpoint
    /// of `h` and at every probe; ascending output order.
    pub fn bad_set(
        &self,
        h: &StepFunction,
        probes: &[Rational],
    ) -> Result<BadSet, PredictorError> {
        h.validate_states(&self.alphabet)?;
        let mut points: Vec<Rational> = h.breakpoints().to_vec();
        points.extend_from_slice(probes);
        points.sort();
        points.dedup();
        let mut certified = Vec::new();
        let mut sampled_ok = Vec::new();
        for t in points {
            let predicted = self.predict(&h.restrict(&t))?;
            if predicted == h.value_at(&t) {
                sampled_ok.push(t);
            } else {
                certified.push(t);
            }
        }
        Ok(BadSet {
            certified,
            sampled_ok,
        })
    }

    /// Default probe set: 64 interior probes per segment, plus width-2
    /// windows beyond the extreme breakpoints. Breakpoints themselves are
    /// always evaluated by [`Predictor::bad_set`] directly.
    pub fn default_probes(&self, h: &StepFunction) -> Vec<Rational> {
        const PER_SEGMENT: i64 = 64;
        let two = Rational::integer(2);
        let mut edges: Vec<Rational> = Vec::new();
        match (h.breakpoints().first(), h.breakpoints().last()) {
            (Some(first), Some(last)) => {
                edges.push(first - &two);
                edges.extend(h.breakpoints().iter().cloned());
                edges.push(last + &two);
            }
            _ => {
                edges.push(-two.clone());
                edges.push(two);
            }
        }
        let mut probes = Vec::new();
        for seg in edges.windows(2) {
            let width = &seg[1] - &seg[0];
            for j in 1..=PER_SEGMENT {
                probes.push(&seg[0] + &(&width * &Rational::new(j, PER_SEGMENT + 1)));
            }
        }
        probes.sort();
        probes.dedup();
        probes
    }
}

/// The order-embedding property behind goodness: along certified bad points
/// `s < t`, the keys of the least extensions of the pasts strictly increase.
pub fn monotone_embedding_holds(h: &StepFunction, bad: &BadSet) -> bool {
    bad.certified.windows(2).all(|pair| {
        let ks = wellorder_key(&least_extension(&h.restrict(&pair[0])));
        let kt = wellorder_key(&least_extension(&h.restrict(&pair[1])));
        ks < kt
    })
}

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("past is not phi-invariant before its cutoff at {point}")]
    NotInvariant { point: Rational },
    #[error("orbit walk exceeded the iteration cap at {point}")]
    CapExceeded { point: Rational },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Lazily evaluated total extension of a phi-invariant past: the value at
/// `y` is the past's value at the first orbit point below the cutoff,
/// walking the monotone orbit, and the free value otherwise.
#[derive(Clone, Debug)]
pub struct LazyInvariantExtension {
    past: PastFunction,
    phi: GroupElement,
    default: State,
}

/// Builds the invariant extension after checking the precondition on the
/// past's breakpoints and segment samples.
pub fn invariant_extension(
    past: PastFunction,
    phi: GroupElement,
    default: State,
) -> Result<LazyInvariantExtension, ExtensionError> {
    let cutoff = past.cutoff().clone();
    let mut samples: Vec<Rational> = past.breakpoints().to_vec();
    for pair in past.breakpoints().windows(2) {
        samples.push(&(&pair[0] + &pair[1]) / &Rational::integer(2));
    }
    if let Some(first) = past.breakpoints().first() {
        samples.push(first - &Rational::one());
        let last = past.breakpoints().last().unwrap();
        samples.push(&(last + &cutoff) / &Rational::integer(2));
    }
    samples.push(&cutoff - &Rational::one());
    for x in samples {
        if x >= cutoff {
            continue;
        }
        let image = phi.apply_exact(&x)?;
        if image < cutoff && past.value_at(&image) != past.value_at(&x) {
            return Err(ExtensionError::NotInvariant { point: x });
        }
        let pre = phi.invert().apply_exact(&x)?;
        if pre < cutoff && past.value_at(&pre) != past.value_at(&x) {
            return Err(ExtensionError::NotInvariant { point: pre });
        }
    }
    Ok(LazyInvariantExtension {
        past,
        phi,
        default,
    })
}

impl LazyInvariantExtension {
    pub fn past(&self) -> &PastFunction {
        &self.past
    }

    pub fn default_state(&self) -> State {
        self.default
    }

    /// Orbit-walk evaluation: exact, with an early exit when the decreasing
    /// direction of an affine orbit is trapped above the cutoff by its
    /// fixed point.
    pub fn eval(&self, y: &Rational) -> Result<State, ExtensionError> {
        let cutoff = self.past.cutoff();
        if y < cutoff {
            return Ok(self.past.value_at(y).expect("below cutoff"));
        }
        let image = self.phi.apply_exact(y)?;
        if image == *y {
            // The whole orbit is {y}, at or above the cutoff.
            return Ok(self.default);
        }
        let step = if image < *y {
            self.phi.clone()
        } else {
            self.phi.invert()
        };
        if let Some(aff) = step.as_affine() {
            if !aff.a.is_one() {
                let fp = &aff.b / &(&Rational::one() - &aff.a);
                // Decreasing orbit converging to a fixed point at or above
                // the cutoff never descends below it.
                if aff.a < Rational::one() && fp >= *cutoff {
                    return Ok(self.default);
                }
            }
        }
        let mut z = y.clone();
        for _ in 0..ORBIT_CAP {
            z = step.apply_exact(&z)?;
            if z < *cutoff {
                return Ok(self.past.value_at(&z).expect("below cutoff"));
            }
            let next = step.apply_exact(&z)?;
            if next == z {
                return Ok(self.default);
            }
        }
        Err(ExtensionError::CapExceeded { point: y.clone() })
    }
}

/// Anything that can be evaluated to a state at a rational point.
pub trait StateFn {
    fn state_at(&self, x: &Rational) -> Result<State, PredictorError>;
}

impl StateFn for StepFunction {
    fn state_at(&self, x: &Rational) -> Result<State, PredictorError> {
        Ok(self.value_at(x))
    }
}

impl StateFn for LazyInvariantExtension {
    fn state_at(&self, x: &Rational) -> Result<State, PredictorError> {
        self.eval(x).map_err(|e| PredictorError::Eval(e.to_string()))
    }
}

/// Closure adapter for test and CLI evaluables.
pub struct FnState<F: Fn(&Rational) -> State>(pub F);

impl<F: Fn(&Rational) -> State> StateFn for FnState<F> {
    fn state_at(&self, x: &Rational) -> Result<State, PredictorError> {
        Ok((self.0)(x))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum PromotionOutcome {
    Ok,
    /// One of the stated hypotheses fails on the samples; not a conclusion
    /// counterexample.
    HypothesisError { hypothesis: String, point: Rational },
    Counterexample { point: Rational },
}

/// Past invariance promotion: given that `f_eval` is psi-invariant on the
/// samples and phi-invariant below the cutoff, checks the promoted claim
/// that it is phi-invariant at the samples at or above the cutoff too.
pub fn promotion_check(
    f_eval: &dyn StateFn,
    phi: &GroupElement,
    psi: &GroupElement,
    cutoff: &Rational,
    samples: &[Rational],
) -> Result<PromotionOutcome, PredictorError> {
    if psi.is_identity() {
        return Ok(PromotionOutcome::HypothesisError {
            hypothesis: "psi must be a non-identity element".into(),
            point: cutoff.clone(),
        });
    }
    for x in samples {
        let image = psi.apply_exact(x)?;
        if f_eval.state_at(&image)? != f_eval.state_at(x)? {
            return Ok(PromotionOutcome::HypothesisError {
                hypothesis: "psi-invariance".into(),
                point: x.clone(),
            });
        }
    }
    for x in samples {
        if x >= cutoff {
            continue;
        }
        let image = phi.apply_exact(x)?;
        if image < *cutoff && f_eval.state_at(&image)? != f_eval.state_at(x)? {
            return Ok(PromotionOutcome::HypothesisError {
                hypothesis: "phi-invariance before the cutoff".into(),
                point: x.clone(),
            });
        }
    }
    for x in samples {
        if x < cutoff {
            continue;
        }
        let image = phi.apply_exact(x)?;
        if f_eval.state_at(&image)? != f_eval.state_at(x)? {
            return Ok(PromotionOutcome::Counterexample { point: x.clone() });
        }
    }
    Ok(PromotionOutcome::Ok)
}

/// Finite rational fixed-point set `C` and the open intervals it cuts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FixedPointDecomposition {
    c: Vec<Rational>,
}

impl FixedPointDecomposition {
    pub fn new(mut c: Vec<Rational>) -> Self {
        c.sort();
        c.dedup();
        FixedPointDecomposition { c }
    }

    pub fn fixed_points(&self) -> &[Rational] {
        &self.c
    }

    pub fn contains(&self, t: &Rational) -> bool {
        self.c.binary_search(t).is_ok()
    }

    /// The decomposition interval around `t`.
    pub fn locate(&self, t: &Rational) -> Result<(Bound, Bound), PredictorError> {
        interval_decomposition(&self.c, t)
    }

    pub fn intervals(&self) -> Vec<(Bound, Bound)> {
        let mut edges = vec![Bound::NegInf];
        edges.extend(self.c.iter().cloned().map(Bound::Finite));
        edges.push(Bound::PosInf);
        edges.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
    }
}

/// `(a(t), b(t))`: the largest fixed point below `t` (or -inf) and the
/// smallest above (or +inf). `t` itself must not be a fixed point.
pub fn interval_decomposition(
    c: &[Rational],
    t: &Rational,
) -> Result<(Bound, Bound), PredictorError> {
    debug_assert!(c.windows(2).all(|w| w[0] < w[1]), "C must be sorted");
    match c.binary_search(t) {
        Ok(_) => Err(PredictorError::CutoffInFixedSet(t.clone())),
        Err(idx) => {
            let a = if idx == 0 {
                Bound::NegInf
            } else {
                Bound::Finite(c[idx - 1].clone())
            };
            let b = if idx == c.len() {
                Bound::PosInf
            } else {
                Bound::Finite(c[idx].clone())
            };
            Ok((a, b))
        }
    }
}

fn interval_anchor(a: &Bound, b: &Bound) -> Rational {
    match (a, b) {
        (Bound::Finite(a), Bound::Finite(b)) => &(a + b) / &Rational::integer(2),
        (Bound::Finite(a), Bound::PosInf) => a + &Rational::one(),
        (Bound::NegInf, Bound::Finite(b)) => b - &Rational::one(),
        _ => Rational::zero(),
    }
}

/// Amalgamated predictor for the cyclic group generated by one element with
/// a finite rational fixed-point set: cutoffs at fixed points get the
/// designated state, and each complementary interval carries a cyclic
/// predictor that canonicalizes the cutoff into a fundamental domain and
/// continues the last value.
#[derive(Clone, Debug)]
pub struct AmalgamatedPredictor {
    decomposition: FixedPointDecomposition,
    phi: Affine,
    s0: State,
}

/// Requires `fixed_points(phi)` to be a finite rational set and `phi` to act
/// by an exact rational affine map preserving each decomposition interval.
pub fn build_amalgamated(
    phi: &GroupElement,
    s0: State,
) -> Result<AmalgamatedPredictor, PredictorError> {
    let c = phi
        .fixed_points()
        .rational_points()
        .ok_or(PredictorError::FixedSetNotFinite)?;
    let affine = phi.as_affine().ok_or(PredictorError::NotAffine)?;
    let decomposition = FixedPointDecomposition::new(c);
    for (a, b) in decomposition.intervals() {
        let anchor = interval_anchor(&a, &b);
        let image = affine.apply(&anchor);
        let inside = match (&a, &b) {
            (Bound::NegInf, Bound::PosInf) => true,
            (Bound::NegInf, Bound::Finite(ub)) => image < *ub,
            (Bound::Finite(lb), Bound::PosInf) => image > *lb,
            (Bound::Finite(lb), Bound::Finite(ub)) => image > *lb && image < *ub,
            _ => false,
        };
        if !inside {
            return Err(PredictorError::IntervalNotPreserved(a, b));
        }
    }
    Ok(AmalgamatedPredictor {
        decomposition,
        phi: affine,
        s0,
    })
}

impl AmalgamatedPredictor {
    pub fn decomposition(&self) -> &FixedPointDecomposition {
        &self.decomposition
    }

    pub fn designated_state(&self) -> State {
        self.s0
    }

    /// Prediction: the designated state at fixed-point cutoffs; otherwise
    /// the past is restricted to its interval, its cutoff is translated
    /// into the fundamental domain `[x0, d(x0))` by a power of the
    /// restricted generator, and the translated past is continued with its
    /// last value.
    pub fn predict(&self, f: &PastFunction) -> Result<State, PredictorError> {
        let t = f.cutoff();
        if self.decomposition.contains(t) {
            return Ok(self.s0);
        }
        let (a, b) = self.decomposition.locate(t)?;
        let restricted = match &a {
            Bound::Finite(lo) => f.restrict_above(lo),
            _ => f.clone(),
        };
        // Increasing direction of the generator inside this interval.
        let anchor = interval_anchor(&a, &b);
        let d = if self.phi.apply(&anchor) > anchor {
            self.phi.clone()
        } else {
            self.phi.inverse()
        };
        if d.is_identity() {
            // The identity generates nothing to canonicalize; continue.
            return Ok(restricted.last_value());
        }
        let domain_low = anchor.clone();
        let domain_high = d.apply(&anchor);
        // Translate the cutoff into [x0, d(x0)) by a power of d; the
        // translation map psi satisfies psi^{-1}(t) in the domain.
        let mut psi = Affine::identity();
        let mut z = t.clone();
        let mut iterations = 0usize;
        while z < domain_low {
            z = d.apply(&z);
            psi = psi.compose(&d.inverse());
            iterations += 1;
            if iterations > ORBIT_CAP {
                return Err(PredictorError::OrbitCapExceeded);
            }
        }
        while z >= domain_high {
            z = d.inverse().apply(&z);
            psi = psi.compose(&d);
            iterations += 1;
            if iterations > ORBIT_CAP {
                return Err(PredictorError::OrbitCapExceeded);
            }
        }
        let translated = restricted.precompose(&psi);
        debug_assert!(*translated.cutoff() >= domain_low && *translated.cutoff() < domain_high);
        Ok(translated.last_value())
    }
}
