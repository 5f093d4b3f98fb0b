//! Exact decision procedure for equality of observation processes.
//!
//! Two labeled walks generate identically distributed observation sequences
//! iff every finite observation string has the same probability under both.
//! The prefix functionals `pi D(o_1) M D(o_2) ... M D(o_t)` span a subspace
//! of dimension at most |H_1| + |H_2| of the joint state space; growing that
//! span to closure and checking the terminal-sum functional on it decides
//! equality completely, with a shortest distinguishing string as the
//! certificate in the negative case. Exact rational arithmetic gives a hard
//! decision; the float path never certifies equality, only "no distinction
//! found at tolerance".

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::numeric::{working_scale, BigReal};
use crate::scenery::Scenery;
use crate::walk::{
    AnalysisVerdict, StepDistribution, Verdict, DEFAULT_FLOAT_TOLERANCE,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use std::collections::VecDeque;

/// Cap on |H| for full equivalence-class enumeration (2^|H| sceneries).
pub const CLASS_ENUM_CAP: u64 = 12;

/// A hidden walk labeled by a scenery, started uniformly.
#[derive(Debug, Clone)]
pub struct ObservationProcess {
    pub walk: StepDistribution,
    pub scenery: Scenery,
}

impl ObservationProcess {
    pub fn new(walk: StepDistribution, scenery: Scenery) -> Result<Self> {
        if walk.group() != scenery.group() {
            return Err(Error::Mismatch("walk and scenery on different groups".into()));
        }
        Ok(ObservationProcess { walk, scenery })
    }
}

/// A shortest observation string with different probabilities under the two
/// processes, both probabilities recomputed by the direct forward algorithm.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub observations: String,
    pub p1: String,
    pub p2: String,
}

/// Outcome of the equivalence decision.
#[derive(Debug, Clone)]
pub enum Equivalence {
    /// Exact mode: the processes are equal in distribution.
    Equivalent,
    /// Float mode: no distinguishing string exists at the working tolerance.
    /// Heuristic by construction; floating point cannot certify equality.
    NoDistinctionFound,
    NotEquivalent(Certificate),
    /// A quantity landed within 10x of the tolerance; no verdict.
    Undecided(String),
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent | Equivalence::NoDistinctionFound)
    }
}

// ---------------------------------------------------------------------------
// Scalar abstraction: the closure algorithm is identical over exact rationals
// and tolerance-bracketed reals.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Zeroness {
    Zero,
    Near,
    NonZero,
}

trait ScalarOps {
    type Elem: Clone + std::fmt::Debug + Send + Sync;
    fn zero(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn zeroness(&self, a: &Self::Elem) -> Zeroness;
    /// |a| > |b|, for pivot selection.
    fn abs_greater(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
}

struct RationalOps;

impl ScalarOps for RationalOps {
    type Elem = BigRational;
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn div(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a / b
    }
    fn zeroness(&self, a: &BigRational) -> Zeroness {
        if a.is_zero() {
            Zeroness::Zero
        } else {
            Zeroness::NonZero
        }
    }
    fn abs_greater(&self, a: &BigRational, b: &BigRational) -> bool {
        // Exact arithmetic only needs a nonzero pivot; prefer shorter
        // representations.
        let an = a.numer().bits() + a.denom().bits();
        let bn = b.numer().bits() + b.denom().bits();
        an < bn
    }
}

struct RealOps {
    scale: u32,
    tol: BigReal,
    near: BigReal,
}

impl RealOps {
    fn new(precision_bits: u32, tolerance: f64) -> Self {
        let scale = working_scale(precision_bits);
        RealOps {
            scale,
            tol: BigReal::from_f64(tolerance, scale),
            near: BigReal::from_f64(tolerance * 10.0, scale),
        }
    }
}

impl ScalarOps for RealOps {
    type Elem = BigReal;
    fn zero(&self) -> BigReal {
        BigReal::zero(self.scale)
    }
    fn add(&self, a: &BigReal, b: &BigReal) -> BigReal {
        a.add(b)
    }
    fn sub(&self, a: &BigReal, b: &BigReal) -> BigReal {
        a.sub(b)
    }
    fn mul(&self, a: &BigReal, b: &BigReal) -> BigReal {
        a.mul(b)
    }
    fn div(&self, a: &BigReal, b: &BigReal) -> BigReal {
        a.div(b)
    }
    fn zeroness(&self, a: &BigReal) -> Zeroness {
        let m = a.abs();
        if m <= self.tol {
            Zeroness::Zero
        } else if m <= self.near {
            Zeroness::Near
        } else {
            Zeroness::NonZero
        }
    }
    fn abs_greater(&self, a: &BigReal, b: &BigReal) -> bool {
        a.abs() > b.abs()
    }
}

/// One process prepared for the linear algebra: state count, sparse step
/// law, observation mask.
struct PreparedProcess<E> {
    order: usize,
    group: GroupSpec,
    steps: Vec<(u64, E)>,
    bits: Vec<u8>,
    initial: E,
}

impl<E: Clone> PreparedProcess<E> {
    /// u' = (u M) masked by observation o.
    fn advance(&self, u: &[E], o: u8, ops: &impl ScalarOps<Elem = E>) -> Vec<E> {
        let mut out = vec![ops.zero(); self.order];
        for (delta, w) in &self.steps {
            for s in 0..self.order as u64 {
                let dest = self.group.index_add(s, *delta);
                if self.bits[dest as usize] == o {
                    let term = ops.mul(&u[s as usize], w);
                    out[dest as usize] = ops.add(&out[dest as usize], &term);
                }
            }
        }
        out
    }

    fn seed(&self, o: u8, ops: &impl ScalarOps<Elem = E>) -> Vec<E> {
        (0..self.order)
            .map(|s| {
                if self.bits[s] == o {
                    self.initial.clone()
                } else {
                    ops.zero()
                }
            })
            .collect()
    }
}

enum ClosureOutcome {
    AllZero,
    Distinguished { word: String },
    Poisoned { word: String },
}

/// Grow the span of prefix functionals of the joint space to closure; report
/// the first word whose probability difference is nonzero.
fn closure_decision<O: ScalarOps>(
    ops: &O,
    p1: &PreparedProcess<O::Elem>,
    p2: &PreparedProcess<O::Elem>,
) -> ClosureOutcome {
    let n1 = p1.order;
    let n2 = p2.order;
    let dim = n1 + n2;
    // Echelonized basis rows, pivot normalized to 1.
    // (functional of process 1, functional of process 2, word so far)
    type Pending<E> = VecDeque<(Vec<E>, Vec<E>, String)>;
    let mut basis: Vec<(Vec<O::Elem>, usize)> = Vec::new();
    let mut queue: Pending<O::Elem> = VecDeque::new();
    for o in [0u8, 1] {
        let u1 = p1.seed(o, ops);
        let u2 = p2.seed(o, ops);
        queue.push_back((u1, u2, o.to_string()));
    }
    while let Some((u1, u2, word)) = queue.pop_front() {
        // Probability difference of this word: sum(u1) - sum(u2).
        let mut s = ops.zero();
        for v in &u1 {
            s = ops.add(&s, v);
        }
        for v in &u2 {
            s = ops.sub(&s, v);
        }
        match ops.zeroness(&s) {
            Zeroness::NonZero => return ClosureOutcome::Distinguished { word },
            Zeroness::Near => return ClosureOutcome::Poisoned { word },
            Zeroness::Zero => {}
        }
        // Span test on the joint vector.
        let mut v: Vec<O::Elem> = u1.iter().chain(u2.iter()).cloned().collect();
        for (row, pc) in &basis {
            if ops.zeroness(&v[*pc]) != Zeroness::Zero {
                let coef = v[*pc].clone();
                for (vi, ri) in v.iter_mut().zip(row) {
                    let t = ops.mul(&coef, ri);
                    *vi = ops.sub(vi, &t);
                }
            }
        }
        let mut pivot: Option<usize> = None;
        let mut saw_near = false;
        for (i, e) in v.iter().enumerate() {
            match ops.zeroness(e) {
                Zeroness::NonZero => {
                    if pivot.map(|p| ops.abs_greater(e, &v[p])).unwrap_or(true) {
                        pivot = Some(i);
                    }
                }
                Zeroness::Near => saw_near = true,
                Zeroness::Zero => {}
            }
        }
        match pivot {
            None => {
                if saw_near {
                    return ClosureOutcome::Poisoned { word };
                }
                // Dependent: nothing new, do not extend.
            }
            Some(pc) => {
                let piv = v[pc].clone();
                let row: Vec<O::Elem> = v.iter().map(|e| ops.div(e, &piv)).collect();
                basis.push((row, pc));
                debug_assert!(basis.len() <= dim, "basis exceeded joint dimension");
                for o in [0u8, 1] {
                    let w1 = p1.advance(&u1, o, ops);
                    let w2 = p2.advance(&u2, o, ops);
                    let mut next_word = word.clone();
                    next_word.push(if o == 0 { '0' } else { '1' });
                    queue.push_back((w1, w2, next_word));
                }
            }
        }
    }
    ClosureOutcome::AllZero
}

fn prepare_exact(p: &ObservationProcess) -> Result<PreparedProcess<BigRational>> {
    let probs = p
        .walk
        .exact_entries()
        .ok_or_else(|| Error::Domain("exact oracle needs exact probabilities".into()))?;
    let order = p.walk.group().order() as usize;
    Ok(PreparedProcess {
        order,
        group: p.walk.group().clone(),
        steps: probs.iter().map(|(&k, v)| (k, v.clone())).collect(),
        bits: p.scenery.bits().to_vec(),
        initial: BigRational::new(BigInt::one(), BigInt::from(order as u64)),
    })
}

fn prepare_float(p: &ObservationProcess, scale: u32) -> PreparedProcess<BigReal> {
    let order = p.walk.group().order() as usize;
    let initial = BigReal::one(scale).div(&BigReal::from_i64(order as i64, scale));
    PreparedProcess {
        order,
        group: p.walk.group().clone(),
        steps: p.walk.entries_as_reals(scale),
        bits: p.scenery.bits().to_vec(),
        initial,
    }
}

/// Probability of an observation string under a process, by the direct
/// forward algorithm over exact rationals.
pub fn forward_probability(p: &ObservationProcess, observations: &str) -> Result<BigRational> {
    let prep = prepare_exact(p)?;
    let ops = RationalOps;
    let mut u: Option<Vec<BigRational>> = None;
    for ch in observations.chars() {
        let o = match ch {
            '0' => 0u8,
            '1' => 1,
            _ => return Err(Error::Parse(format!("bad observation char {ch:?}"))),
        };
        u = Some(match u {
            None => prep.seed(o, &ops),
            Some(prev) => prep.advance(&prev, o, &ops),
        });
    }
    Ok(u.map(|v| v.iter().sum()).unwrap_or_else(BigRational::one))
}

fn forward_probability_float(
    p: &ObservationProcess,
    observations: &str,
    scale: u32,
) -> Vec<BigReal> {
    let prep = prepare_float(p, scale);
    let ops = RealOps { scale, tol: BigReal::zero(scale), near: BigReal::zero(scale) };
    let mut u: Option<Vec<BigReal>> = None;
    for ch in observations.chars() {
        let o = if ch == '0' { 0u8 } else { 1 };
        u = Some(match u {
            None => prep.seed(o, &ops),
            Some(prev) => prep.advance(&prev, o, &ops),
        });
    }
    u.unwrap_or_default()
}

/// Decide whether two processes generate identically distributed observation
/// sequences. Exact when both walks are exact; otherwise the float path at
/// `precision_bits` with the walks' declared tolerance.
pub fn processes_equivalent(
    p1: &ObservationProcess,
    p2: &ObservationProcess,
    precision_bits: u32,
) -> Result<Equivalence> {
    if p1.walk.is_exact() && p2.walk.is_exact() {
        let prep1 = prepare_exact(p1)?;
        let prep2 = prepare_exact(p2)?;
        match closure_decision(&RationalOps, &prep1, &prep2) {
            ClosureOutcome::AllZero => Ok(Equivalence::Equivalent),
            ClosureOutcome::Poisoned { .. } => {
                Err(Error::Inconsistency("exact path cannot poison".into()))
            }
            ClosureOutcome::Distinguished { word } => {
                let q1 = forward_probability(p1, &word)?;
                let q2 = forward_probability(p2, &word)?;
                if q1 == q2 {
                    return Err(Error::Inconsistency(
                        "certificate refuted by forward recomputation".into(),
                    ));
                }
                Ok(Equivalence::NotEquivalent(Certificate {
                    observations: word,
                    p1: q1.to_string(),
                    p2: q2.to_string(),
                }))
            }
        }
    } else {
        let tolerance = p1
            .walk
            .declared_tolerance()
            .into_iter()
            .chain(p2.walk.declared_tolerance())
            .fold(DEFAULT_FLOAT_TOLERANCE, f64::max);
        let ops = RealOps::new(precision_bits, tolerance);
        let scale = ops.scale;
        let prep1 = prepare_float(p1, scale);
        let prep2 = prepare_float(p2, scale);
        match closure_decision(&ops, &prep1, &prep2) {
            ClosureOutcome::AllZero => Ok(Equivalence::NoDistinctionFound),
            ClosureOutcome::Poisoned { word } => Ok(Equivalence::Undecided(format!(
                "quantity within 10x of tolerance at observation string {word}"
            ))),
            ClosureOutcome::Distinguished { word } => {
                let v1 = forward_probability_float(p1, &word, scale);
                let v2 = forward_probability_float(p2, &word, scale);
                let s1 = v1.iter().fold(BigReal::zero(scale), |acc, v| acc.add(v));
                let s2 = v2.iter().fold(BigReal::zero(scale), |acc, v| acc.add(v));
                Ok(Equivalence::NotEquivalent(Certificate {
                    observations: word,
                    p1: format!("{:e}", s1.to_f64()),
                    p2: format!("{:e}", s2.to_f64()),
                }))
            }
        }
    }
}

/// The partition of all sceneries (up to shift) into observation-equivalence
/// classes under a walk.
#[derive(Debug, Clone)]
pub struct EquivalenceClassReport {
    pub group: GroupSpec,
    pub walk_text: String,
    /// Each class lists its member shift-orbits; an orbit is given by the
    /// ones positions of its canonical (lexicographically smallest shift)
    /// representative.
    pub classes: Vec<Vec<Vec<u64>>>,
    /// True iff every class is a single shift orbit.
    pub minimal: bool,
    /// True when the decision ran on the float path.
    pub heuristic: bool,
}

/// Enumerate all `2^|H|` sceneries, collapse shift orbits, and partition the
/// representatives by pairwise process equivalence.
pub fn enumerate_classes(
    walk: &StepDistribution,
    precision_bits: u32,
) -> Result<EquivalenceClassReport> {
    let group = walk.group().clone();
    let order = group.order();
    if order > CLASS_ENUM_CAP {
        return Err(Error::Capacity(format!(
            "class enumeration needs |H| <= {CLASS_ENUM_CAP}, got {order}"
        )));
    }
    let heuristic = !walk.is_exact();

    // Shift-orbit representatives, grouped by ones-count.
    let mut reps: Vec<Vec<u8>> = Vec::new();
    {
        let mut seen = std::collections::BTreeSet::new();
        for mask in 0u64..(1 << order) {
            let bits: Vec<u8> = (0..order).map(|i| ((mask >> i) & 1) as u8).collect();
            let canon = Scenery::new(group.clone(), bits)?.canonical_shift_form();
            if seen.insert(canon.clone()) {
                reps.push(canon);
            }
        }
    }
    let mut buckets: Vec<Vec<Vec<u8>>> = vec![Vec::new(); order as usize + 1];
    for r in reps {
        let ones: usize = r.iter().map(|&b| b as usize).sum();
        buckets[ones].push(r);
    }

    // Partition each bucket by testing against one representative per class.
    // Different ones-counts can never be equivalent (the single-observation
    // distribution already differs).
    let partitioned: Result<Vec<Vec<Vec<Vec<u8>>>>> = buckets
        .into_par_iter()
        .map(|bucket| {
            let mut classes: Vec<Vec<Vec<u8>>> = Vec::new();
            'next: for bits in bucket {
                let cand = ObservationProcess::new(
                    walk.clone(),
                    Scenery::new(group.clone(), bits.clone())?,
                )?;
                for class in classes.iter_mut() {
                    let rep = ObservationProcess::new(
                        walk.clone(),
                        Scenery::new(group.clone(), class[0].clone())?,
                    )?;
                    match processes_equivalent(&cand, &rep, precision_bits)? {
                        Equivalence::Equivalent | Equivalence::NoDistinctionFound => {
                            class.push(bits);
                            continue 'next;
                        }
                        Equivalence::NotEquivalent(_) => {}
                        Equivalence::Undecided(reason) => {
                            return Err(Error::Numerical(format!(
                                "class enumeration undecided: {reason}"
                            )));
                        }
                    }
                }
                classes.push(vec![bits]);
            }
            Ok(classes)
        })
        .collect();

    let mut classes: Vec<Vec<Vec<u64>>> = Vec::new();
    for bucket_classes in partitioned? {
        for class in bucket_classes {
            classes.push(
                class
                    .into_iter()
                    .map(|bits| {
                        bits.iter()
                            .enumerate()
                            .filter(|(_, &b)| b == 1)
                            .map(|(i, _)| i as u64)
                            .collect()
                    })
                    .collect(),
            );
        }
    }
    let minimal = classes.iter().all(|c| c.len() == 1);
    Ok(EquivalenceClassReport {
        group,
        walk_text: walk.to_string(),
        classes,
        minimal,
        heuristic,
    })
}

/// Cross-validation of an analysis verdict against the oracle.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub verdict: Verdict,
    pub minimal: bool,
    pub heuristic: bool,
    pub consistent: bool,
    /// For Unknown verdicts: what the oracle found.
    pub resolution: Option<String>,
}

/// Check a verdict against full class enumeration: Reconstructive must give
/// minimal classes, NotReconstructive a non-minimal class; a contradiction
/// is a fatal internal error. Unknown verdicts are resolved empirically.
pub fn verify_verdict(
    verdict: &AnalysisVerdict,
    walk: &StepDistribution,
    precision_bits: u32,
) -> Result<ConsistencyReport> {
    let report = enumerate_classes(walk, precision_bits)?;
    match verdict.verdict {
        Verdict::Reconstructive => {
            if !report.minimal {
                return Err(Error::Inconsistency(
                    "verdict Reconstructive but oracle finds a non-minimal class".into(),
                ));
            }
        }
        Verdict::NotReconstructive => {
            if report.minimal {
                return Err(Error::Inconsistency(
                    "verdict NotReconstructive but oracle classes are minimal".into(),
                ));
            }
        }
        Verdict::Unknown => {}
    }
    let resolution = if verdict.verdict == Verdict::Unknown {
        Some(format!(
            "oracle{} finds {} classes ({})",
            if report.heuristic { " (heuristic)" } else { "" },
            report.classes.len(),
            if report.minimal { "minimal" } else { "non-minimal" },
        ))
    } else {
        None
    };
    Ok(ConsistencyReport {
        verdict: verdict.verdict,
        minimal: report.minimal,
        heuristic: report.heuristic,
        consistent: true,
        resolution,
    })
}
