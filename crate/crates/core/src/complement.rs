//! Complements on the projective line, the `D_τ` transforms, and bounded
//! denominator subboundaries on chains.

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::discrepancy::{solve_log_discrepancies, DiscrepancyError};
use crate::dual_graph::{DualGraph, SingularityClass};
use crate::linalg;
use crate::rational::{format_list, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplementError {
    #[error("coefficient {0} outside [0,1]")]
    CoefficientOutOfRange(Rational),
    #[error("coefficient sum {0} is not below 2")]
    NotFano(Rational),
    #[error("coefficient 1 cannot be rounded into a klt complement")]
    CoefficientOne,
    #[error("delta {0} outside (0,1]")]
    DeltaOutOfRange(Rational),
    #[error("no complement for n in {0:?}")]
    NoCandidate(Vec<u64>),
    #[error("search guard exceeded: n = {n}, points = {points}")]
    GuardExceeded { n: u64, points: usize },
    #[error("the set A is empty")]
    EmptySet,
    #[error("tau must be non-negative, got {0}")]
    NegativeTau(Rational),
    #[error(transparent)]
    Discrepancy(#[from] DiscrepancyError),
    #[error("no bounded-denominator subboundary found up to denominator {0}")]
    SubboundaryNotFound(BigInt),
}

/// Boundary `Σ b_i·P_i` on the projective line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundaryP1 {
    pub coeffs: Vec<Rational>,
}

impl BoundaryP1 {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        BoundaryP1 { coeffs }
    }

    pub fn sum(&self) -> Rational {
        self.coeffs.iter().sum()
    }

    /// Weak log Fano condition on the line: degree of `K + B` negative.
    pub fn is_weak_log_fano(&self) -> bool {
        self.sum() < 2
    }

    fn validate(&self) -> Result<(), ComplementError> {
        for c in &self.coeffs {
            if c.is_negative() || *c > 1 {
                return Err(ComplementError::CoefficientOutOfRange(c.clone()));
            }
        }
        Ok(())
    }
}

/// A complement `K + B⁺` on the line: the original points carry `plus_coeffs`
/// (same order as the boundary), new points carry `padding_coeffs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplementResult {
    pub n: u64,
    pub plus_coeffs: Vec<Rational>,
    pub padding_coeffs: Vec<Rational>,
    pub eps_achieved: Rational,
}

impl ComplementResult {
    /// Builds a result with `eps_achieved = 1 − max coefficient`.
    pub fn new(n: u64, plus_coeffs: Vec<Rational>, padding_coeffs: Vec<Rational>) -> Self {
        let max = plus_coeffs
            .iter()
            .chain(&padding_coeffs)
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero);
        ComplementResult {
            n,
            plus_coeffs,
            padding_coeffs,
            eps_achieved: Rational::one() - max,
        }
    }

    pub fn all_coeffs(&self) -> impl Iterator<Item = &Rational> {
        self.plus_coeffs.iter().chain(&self.padding_coeffs)
    }

    pub fn total(&self) -> Rational {
        self.all_coeffs().sum()
    }

    /// Flat `key=value` record.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n={}", self.n).unwrap();
        writeln!(out, "plus={}", format_list(&self.plus_coeffs)).unwrap();
        writeln!(out, "padding={}", format_list(&self.padding_coeffs)).unwrap();
        writeln!(out, "eps={}", self.eps_achieved).unwrap();
        out
    }

    /// One-row CSV; list fields are `;`-separated.
    pub fn to_csv(&self) -> String {
        let join = |v: &[Rational]| {
            v.iter()
                .map(Rational::to_string)
                .collect::<Vec<_>>()
                .join(";")
        };
        format!(
            "n,plus,padding,eps\n{},{},{},{}\n",
            self.n,
            join(&self.plus_coeffs),
            join(&self.padding_coeffs),
            self.eps_achieved
        )
    }
}

impl fmt::Display for ComplementResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

/// A member of the standard multiplicities `{(k−1)/k : k ≥ 1} ∪ {1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Standard {
    /// `(k−1)/k`
    Finite(u64),
    One,
}

impl Standard {
    pub fn value(self) -> Rational {
        match self {
            Standard::Finite(k) => {
                let k = k as i64;
                Rational::new(k - 1, k)
            }
            Standard::One => Rational::one(),
        }
    }
}

/// Queries on the set of standard multiplicities.
pub struct StandardSet;

impl StandardSet {
    pub fn member(b: &Rational) -> Option<Standard> {
        if *b == 1 {
            return Some(Standard::One);
        }
        if b.is_negative() || *b > 1 {
            return None;
        }
        // b = (k−1)/k  ⇔  k = 1/(1−b)
        let k = (Rational::one() - b).recip();
        k.is_integer()
            .then(|| Standard::Finite(k.numer().to_u64().expect("small k")))
    }

    pub fn contains(b: &Rational) -> bool {
        Self::member(b).is_some()
    }

    /// Largest standard value `<= b`, for `b` in `[0, 1]`.
    pub fn at_or_below(b: &Rational) -> Standard {
        if *b >= 1 {
            return Standard::One;
        }
        let k = (Rational::one() - b).recip().floor();
        Standard::Finite(k.to_u64().expect("small k"))
    }

    /// Smallest standard value `>= b`, for `b` in `[0, 1]`.
    pub fn at_or_above(b: &Rational) -> Standard {
        if *b >= 1 {
            return Standard::One;
        }
        let k = (Rational::one() - b).recip().ceil();
        Standard::Finite(k.to_u64().expect("small k").max(1))
    }
}

/// `⌊(n+1)·b⌋ ≤ n·b⁺`
pub fn floor_condition(b: &Rational, b_plus: &Rational, n: u64) -> bool {
    let n = n as i64;
    Rational::from_bigint(b.mul_int(n + 1).floor()) <= b_plus.mul_int(n)
}

/// Checks that `result` is an `(ε, n)`-complement of `boundary` on the line.
pub fn is_complement_p1(boundary: &BoundaryP1, result: &ComplementResult, eps: &Rational) -> bool {
    complement_violations(boundary, result, eps).is_empty()
}

/// Every failed condition, by name; empty when the result is a complement.
pub fn complement_violations(
    boundary: &BoundaryP1,
    result: &ComplementResult,
    eps: &Rational,
) -> Vec<&'static str> {
    let mut bad = Vec::new();
    let n = result.n as i64;
    if n <= 0 {
        bad.push("n positive");
        return bad;
    }
    if !result.all_coeffs().all(|c| c.mul_int(n).is_integer()) {
        bad.push("n·b⁺ integral");
    }
    if result.all_coeffs().any(|c| c.is_negative() || *c > 1) {
        bad.push("coefficients in [0,1]");
    }
    if result.padding_coeffs.iter().any(|c| !c.is_positive()) {
        bad.push("padding positive");
    }
    if result.total() != 2 {
        bad.push("degree zero");
    }
    if result.plus_coeffs.len() != boundary.coeffs.len()
        || !boundary
            .coeffs
            .iter()
            .zip(&result.plus_coeffs)
            .all(|(b, bp)| floor_condition(b, bp, result.n))
    {
        bad.push("rounding");
    }
    let max = result
        .all_coeffs()
        .max()
        .cloned()
        .unwrap_or_else(Rational::zero);
    if result.eps_achieved != Rational::one() - &max {
        bad.push("eps_achieved = 1 − max");
    }
    if max > Rational::one() - eps {
        bad.push("eps-lc");
    }
    bad
}

/// `m` with `(m−1)/m ≤ 1 − δ < m/(m+1)`, i.e. `⌊1/δ⌋`.
pub fn lc_level(delta: &Rational) -> Result<u64, ComplementError> {
    if !delta.is_positive() || *delta > 1 {
        return Err(ComplementError::DeltaOutOfRange(delta.clone()));
    }
    Ok(delta.recip().floor().to_u64().expect("small m"))
}

/// `k` with `(k−1)/k ≤ b < k/(k+1)` for `b = max B`; 1 for an empty boundary.
pub fn rounding_level(boundary: &BoundaryP1) -> Result<u64, ComplementError> {
    match boundary.coeffs.iter().max() {
        None => Ok(1),
        Some(b) if *b >= 1 => Err(ComplementError::CoefficientOne),
        Some(b) => match StandardSet::at_or_below(b) {
            Standard::Finite(k) => Ok(k),
            Standard::One => Err(ComplementError::CoefficientOne),
        },
    }
}

/// Attempts an `n`-complement by rounding `b⁺ = ⌊(n+1)b⌋/n` and padding the
/// deficit greedily with the largest multiples of `1/n` not above
/// `(n−1)/n`. Returns `None` when the rounded sum already exceeds 2 or the
/// deficit cannot be filled under the cap.
pub fn try_complement(boundary: &BoundaryP1, n: u64) -> Option<ComplementResult> {
    let ni = n as i64;
    let units: Vec<BigInt> = boundary
        .coeffs
        .iter()
        .map(|b| b.mul_int(ni + 1).floor())
        .collect();
    let used: BigInt = units.iter().sum();
    let mut deficit = BigInt::from(2 * ni) - used;
    if deficit < BigInt::zero() {
        return None;
    }
    let cap = BigInt::from(ni - 1);
    if deficit > BigInt::zero() && cap.is_zero() {
        return None;
    }
    let mut padding = Vec::new();
    while deficit > BigInt::zero() {
        let piece = deficit.clone().min(cap.clone());
        deficit -= &piece;
        padding.push(Rational::from_big(piece, BigInt::from(ni)));
    }
    let plus = units
        .into_iter()
        .map(|u| Rational::from_big(u, BigInt::from(ni)))
        .collect();
    Some(ComplementResult::new(n, plus, padding))
}

/// Indices tried by [`find_curve_complement`], in order.
///
/// For `k ≥ 2` these are `k, k+1`. For `k = 1` the index 1 never admits
/// a klt complement, and 2 fails once five points have `b ≥ 1/3`
/// (e.g. `1/3` five times); then at most six points have `b ≥ 1/4`, so 3
/// always works and is appended.
pub fn candidate_indices(k: u64) -> Vec<u64> {
    if k == 1 {
        vec![1, 2, 3]
    } else {
        vec![k, k + 1]
    }
}

/// Complement of a weak log Fano boundary on the line; see
/// [`candidate_indices`] for the order in which indices are tried.
pub fn find_curve_complement(
    boundary: &BoundaryP1,
    delta: &Rational,
) -> Result<ComplementResult, ComplementError> {
    boundary.validate()?;
    let sum = boundary.sum();
    if sum >= 2 {
        return Err(ComplementError::NotFano(sum));
    }
    lc_level(delta)?;
    let k = rounding_level(boundary)?;
    let candidates = candidate_indices(k);
    candidates
        .iter()
        .find_map(|&n| try_complement(boundary, n))
        .ok_or(ComplementError::NoCandidate(candidates))
}

/// Exhaustive search for an `(ε, n)`-complement on the grid `(1/n)ℤ`.
///
/// Original points range over `[⌊(n+1)b⌋/n, 1−ε]`, and up to `2n` padding
/// points over `(0, 1−ε]`, listed non-increasing. Candidates are ordered by
/// the original coefficients lexicographically, then by the number of
/// padding points, then by the padding lexicographically; the least one is
/// returned.
pub fn brute_force_complement(
    boundary: &BoundaryP1,
    n: u64,
    eps: &Rational,
) -> Result<Option<ComplementResult>, ComplementError> {
    if n == 0 || n > 12 || boundary.coeffs.len() > 8 {
        return Err(ComplementError::GuardExceeded {
            n,
            points: boundary.coeffs.len(),
        });
    }
    boundary.validate()?;
    let ni = n as i64;
    let cap = (Rational::one() - eps)
        .mul_int(ni)
        .floor()
        .to_i64()
        .unwrap_or(-1);
    let lows: Vec<i64> = boundary
        .coeffs
        .iter()
        .map(|b| b.mul_int(ni + 1).floor().to_i64().expect("small"))
        .collect();
    let target = 2 * ni;
    let max_pad = (2 * ni) as usize;

    fn originals(
        lows: &[i64],
        cap: i64,
        remaining: i64,
        max_pad: usize,
        chosen: &mut Vec<i64>,
    ) -> Option<(Vec<i64>, Vec<i64>)> {
        if chosen.len() == lows.len() {
            return shortest_padding(remaining, cap, max_pad).map(|pad| (chosen.clone(), pad));
        }
        let lo = lows[chosen.len()];
        for x in lo..=cap {
            if x > remaining {
                break;
            }
            chosen.push(x);
            if let Some(found) = originals(lows, cap, remaining - x, max_pad, chosen) {
                return Some(found);
            }
            chosen.pop();
        }
        None
    }

    fn shortest_padding(remaining: i64, cap: i64, max_pad: usize) -> Option<Vec<i64>> {
        (0..=max_pad).find_map(|len| {
            let mut parts = Vec::with_capacity(len);
            padding(remaining, cap, len, &mut parts).then_some(parts)
        })
    }

    // Exactly `slots` non-increasing parts in [1, prev] summing to `remaining`.
    fn padding(remaining: i64, prev: i64, slots: usize, parts: &mut Vec<i64>) -> bool {
        if slots == 0 {
            return remaining == 0;
        }
        let slots_i = slots as i64;
        for p in 1..=prev.min(remaining) {
            // The rest needs slots−1 parts, each in [1, p].
            let rest = remaining - p;
            if rest < slots_i - 1 || rest > (slots_i - 1) * p {
                continue;
            }
            parts.push(p);
            if padding(rest, p, slots - 1, parts) {
                return true;
            }
            parts.pop();
        }
        false
    }

    let found = if cap < 0 {
        None
    } else {
        originals(&lows, cap, target, max_pad, &mut Vec::new())
    };
    Ok(found.map(|(plus, pad)| {
        let to_q = |u: i64| Rational::new(u, ni);
        ComplementResult::new(
            n,
            plus.into_iter().map(to_q).collect(),
            pad.into_iter().map(to_q).collect(),
        )
    }))
}

/// Rounds each coefficient within `τ` below some `(k−1)/k` up to that value,
/// using the smallest such `k`; other coefficients are unchanged.
pub fn dtau_transform(
    coeffs: &[Rational],
    tau: &Rational,
) -> Result<Vec<Rational>, ComplementError> {
    if tau.is_negative() {
        return Err(ComplementError::NegativeTau(tau.clone()));
    }
    Ok(coeffs
        .iter()
        .map(|b| {
            if *b >= 1 || b.is_negative() {
                return b.clone();
            }
            // (k−1)/k is increasing in k, so the smallest k with b ≤ (k−1)/k
            // is the only candidate whose window can contain b.
            let target = StandardSet::at_or_above(b).value();
            if &target - tau <= *b {
                target
            } else {
                b.clone()
            }
        })
        .collect())
}

/// Rounds each coefficient lying in `[a − τ, a]` for some `a ∈ A` up to the
/// biggest such `a`; other coefficients are unchanged.
pub fn dtau_general(
    coeffs: &[Rational],
    tau: &Rational,
    set: &[Rational],
) -> Result<Vec<Rational>, ComplementError> {
    if set.is_empty() {
        return Err(ComplementError::EmptySet);
    }
    if tau.is_negative() {
        return Err(ComplementError::NegativeTau(tau.clone()));
    }
    Ok(coeffs
        .iter()
        .map(|b| {
            set.iter()
                .filter(|a| *a >= b && &(*a - tau) <= b)
                .max()
                .cloned()
                .unwrap_or_else(|| b.clone())
        })
        .collect())
}

/// How a subboundary was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubboundaryPath {
    /// `δ = 0`: all zeros.
    Zero,
    /// All curves are `-2` curves: all zeros.
    DuVal,
    /// Seeded block construction. Positions are 1-based along the chain as
    /// oriented by `reversed`.
    Structured {
        reversed: bool,
        valley: usize,
        run_start: usize,
        divisor: u64,
    },
    /// Grid search with common denominator `q`.
    Exhaustive { q: u64 },
}

impl fmt::Display for SubboundaryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubboundaryPath::Zero => f.write_str("zero"),
            SubboundaryPath::DuVal => f.write_str("du-val"),
            SubboundaryPath::Structured { divisor, .. } => write!(f, "structured(N={divisor})"),
            SubboundaryPath::Exhaustive { q } => write!(f, "exhaustive(q={q})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subboundary {
    /// Curve ids in chain order.
    pub ids: Vec<String>,
    pub u: Vec<Rational>,
    /// Reported bound on every denominator of `u`.
    pub denominator_bound: BigInt,
    pub path: SubboundaryPath,
}

impl Subboundary {
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        writeln!(out, "path={}", self.path).unwrap();
        writeln!(out, "denominator_bound={}", self.denominator_bound).unwrap();
        for (id, u) in self.ids.iter().zip(&self.u) {
            writeln!(out, "u.{id}={u}").unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,u\n");
        for (id, u) in self.ids.iter().zip(&self.u) {
            writeln!(out, "{id},{u}").unwrap();
        }
        out
    }
}

/// Left-hand sides of the inequality system on a chain with weights `w`:
/// `u_1w_1 − u_2 − 1`, `u_iw_i − u_{i−1} − u_{i+1}`, `u_rw_r − u_{r−1} − 1`.
/// For `r = 1` the single row is `u_1w_1 − 2`.
pub fn chain_inequality_rows(weights: &[u32], u: &[Rational]) -> Vec<Rational> {
    let r = weights.len();
    (0..r)
        .map(|i| {
            let left = if i == 0 {
                Rational::one()
            } else {
                u[i - 1].clone()
            };
            let right = if i + 1 == r {
                Rational::one()
            } else {
                u[i + 1].clone()
            };
            u[i].mul_int(i64::from(weights[i])) - left - right
        })
        .collect()
}

/// True when `u` satisfies every row with `0 ≤ u_i < 1`.
pub fn satisfies_chain_inequalities(weights: &[u32], u: &[Rational]) -> bool {
    weights.len() == u.len()
        && u.iter().all(|x| !x.is_negative() && *x < 1)
        && chain_inequality_rows(weights, u)
            .iter()
            .all(|v| !v.is_positive())
}

/// Determinant of the tridiagonal `w`-matrix of a chain segment (1 if empty).
fn segment_det(weights: &[u32]) -> BigInt {
    let m: Vec<Vec<i64>> = (0..weights.len())
        .map(|i| {
            (0..weights.len())
                .map(|j| match i.abs_diff(j) {
                    0 => i64::from(weights[i]),
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect();
    linalg::determinant(&linalg::to_big(&m))
}

/// Solves the equality rows of a segment given its two outer neighbour values.
fn solve_segment(weights: &[u32], left: &Rational, right: &Rational) -> Vec<Rational> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let m: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.abs_diff(j) {
                    0 => i64::from(weights[i]),
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect();
    let mut rhs = vec![Rational::zero(); n];
    rhs[0] += left;
    rhs[n - 1] += right;
    linalg::solve(&linalg::to_big(&m), &rhs).expect("segment of a contractible chain")
}

struct Seeded {
    u: Vec<Rational>,
    valley: usize,
    run_start: usize,
    divisor: u64,
    segment_lcm: BigInt,
}

/// Seeds `u_j = ... = u_i = 1/(2N)` on the `-2` run ending at the valley,
/// solves head and tail segments as equalities, and takes the least `N` up
/// to `max_divisor` for which every row holds.
fn seeded_construction(weights: &[u32], a: &[Rational], max_divisor: u64) -> Option<Seeded> {
    let r = weights.len();
    let min = a.iter().min()?;
    let valley = a.iter().position(|x| x == min)?;
    let mut run_start = valley;
    while run_start > 0 && weights[run_start - 1] == 2 {
        run_start -= 1;
    }
    let head = &weights[..run_start];
    let tail = &weights[valley + 1..];
    let segment_lcm = segment_det(head).lcm(&segment_det(tail));
    for divisor in 1..=max_divisor {
        let seed = Rational::new(1, 2 * divisor as i64);
        let mut u = solve_segment(head, &Rational::one(), &seed);
        u.extend(std::iter::repeat_n(seed.clone(), valley + 1 - run_start));
        u.extend(solve_segment(tail, &seed, &Rational::one()));
        debug_assert_eq!(u.len(), r);
        if satisfies_chain_inequalities(weights, &u) {
            return Some(Seeded {
                u,
                valley: valley + 1,
                run_start: run_start + 1,
                divisor,
                segment_lcm,
            });
        }
    }
    None
}

/// Grid search over `u_i ∈ {1/q, ..., (q−1)/q}` for `q = 2..=q_max`;
/// returns the first `(q, u)` found. Strictly positive entries only, so the
/// trivial all-zero solution is never returned.
pub fn exhaustive_subboundary(weights: &[u32], q_max: u64) -> Option<(u64, Vec<Rational>)> {
    fn dfs(weights: &[u32], q: i64, u: &mut Vec<i64>) -> bool {
        let r = weights.len();
        let k = u.len();
        // Row k−1 becomes checkable once u_k is placed (or at the end).
        let row_ok = |u: &[i64], i: usize| -> bool {
            let left = if i == 0 { q } else { u[i - 1] };
            let right = if i + 1 == r { q } else { u[i + 1] };
            u[i] * i64::from(weights[i]) - left - right <= 0
        };
        if k == r {
            return row_ok(u, r - 1);
        }
        for x in 1..q {
            u.push(x);
            let ok = k == 0 || row_ok(u, k - 1);
            if ok && dfs(weights, q, u) {
                return true;
            }
            u.pop();
        }
        false
    }
    for q in 2..=q_max {
        let mut u = Vec::with_capacity(weights.len());
        if dfs(weights, q as i64, &mut u) {
            return Some((
                q,
                u.into_iter().map(|x| Rational::new(x, q as i64)).collect(),
            ));
        }
    }
    None
}

/// Bounded-denominator solution of the chain inequality system.
///
/// `δ = 0` yields the zero solution; all `-2` chains yield zero as well.
/// Otherwise the seeded construction runs in both orientations with seed
/// divisor `N ≤ ⌈1/δ⌉`, and the reported bound is
/// `D(δ) = 2·⌈1/δ⌉·lcm(head det, tail det)`. If no seed works the grid
/// search up to `D(δ)` is used instead.
pub fn construct_chain_subboundary(
    graph: &DualGraph,
    delta: &Rational,
) -> Result<Subboundary, ComplementError> {
    if graph.has_boundary() {
        return Err(DiscrepancyError::BoundaryPresent.into());
    }
    if !matches!(
        graph.classify().map_err(DiscrepancyError::from)?,
        SingularityClass::A(_)
    ) {
        return Err(DiscrepancyError::NotChain.into());
    }
    if delta.is_negative() {
        return Err(ComplementError::DeltaOutOfRange(delta.clone()));
    }
    let order = graph.chain_order().expect("A-type graph is a chain");
    let ids: Vec<String> = order.iter().map(|&i| graph.id(i).to_string()).collect();
    let weights: Vec<u32> = order.iter().map(|&i| graph.weight(i).unwrap()).collect();
    let zeros = || vec![Rational::zero(); weights.len()];
    if delta.is_zero() {
        return Ok(Subboundary {
            ids,
            u: zeros(),
            denominator_bound: BigInt::one(),
            path: SubboundaryPath::Zero,
        });
    }
    let profile = solve_log_discrepancies(graph)?;
    if !profile.is_eps_lc(delta) {
        return Err(DiscrepancyError::NotDeltaLc {
            mld: profile.mld().clone(),
            delta: delta.clone(),
        }
        .into());
    }
    if weights.iter().all(|&w| w == 2) {
        return Ok(Subboundary {
            ids,
            u: zeros(),
            denominator_bound: BigInt::one(),
            path: SubboundaryPath::DuVal,
        });
    }
    let a = profile.values_along(graph, &order);
    let max_divisor = delta.recip().ceil().to_u64().expect("small bound");

    let forward = seeded_construction(&weights, &a, max_divisor);
    let rev_w: Vec<u32> = weights.iter().rev().copied().collect();
    let rev_a: Vec<Rational> = a.iter().rev().cloned().collect();
    let backward = seeded_construction(&rev_w, &rev_a, max_divisor);
    let lcm_all = [&forward, &backward]
        .iter()
        .filter_map(|s| s.as_ref().map(|s| s.segment_lcm.clone()))
        .fold(BigInt::one(), |acc, l| acc.max(l));
    let bound_for = |lcm: &BigInt| BigInt::from(2 * max_divisor) * lcm;

    // Prefer the orientation needing the smaller seed divisor.
    let pick = match (forward, backward) {
        (Some(f), Some(b)) => Some(if b.divisor < f.divisor {
            (b, true)
        } else {
            (f, false)
        }),
        (Some(f), None) => Some((f, false)),
        (None, Some(b)) => Some((b, true)),
        (None, None) => None,
    };
    if let Some((s, reversed)) = pick {
        let mut u = s.u;
        if reversed {
            u.reverse();
        }
        return Ok(Subboundary {
            ids,
            u,
            denominator_bound: bound_for(&s.segment_lcm),
            path: SubboundaryPath::Structured {
                reversed,
                valley: s.valley,
                run_start: s.run_start,
                divisor: s.divisor,
            },
        });
    }
    // Segment lcm of the canonical orientation bounds the search.
    let lcm = {
        let min = a.iter().min().unwrap();
        let valley = a.iter().position(|x| x == min).unwrap();
        let mut start = valley;
        while start > 0 && weights[start - 1] == 2 {
            start -= 1;
        }
        segment_det(&weights[..start])
            .lcm(&segment_det(&weights[valley + 1..]))
            .max(lcm_all)
    };
    let bound = bound_for(&lcm);
    let q_max = bound.to_u64().unwrap_or(u64::MAX);
    match exhaustive_subboundary(&weights, q_max) {
        Some((q, u)) => Ok(Subboundary {
            ids,
            u,
            denominator_bound: bound,
            path: SubboundaryPath::Exhaustive { q },
        }),
        None => Err(ComplementError::SubboundaryNotFound(bound)),
    }
}

/// Local mld of a chain with one boundary component: the minimum of the
/// exceptional log discrepancies and `1 − b`.
pub fn local_mld_with_boundary(graph: &DualGraph) -> Result<Rational, DiscrepancyError> {
    let profile = solve_log_discrepancies(graph)?;
    let mut m = profile.mld().clone();
    for i in graph.boundaries() {
        if let crate::dual_graph::NodeKind::Boundary { coeff } = &graph.nodes()[i].kind {
            m = m.min(Rational::one() - coeff);
        }
    }
    Ok(m)
}

/// One row of the transform table: grid value `τ`, number of instances
/// meeting the preconditions, and how many of them lose `1/m`-lc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauRow {
    pub tau: Rational,
    pub instances: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauTable {
    pub m: u64,
    pub rows: Vec<TauRow>,
    /// Largest grid `τ` with no violation at it or at any smaller grid value.
    pub tau_m: Rational,
    /// A violating instance at the first bad grid value, serialized.
    pub first_violation: Option<String>,
}

impl TauTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,tau,instances,violations\n");
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", self.m, r.tau, r.instances, r.violations).unwrap();
        }
        out
    }
}

/// A chain with one boundary component attached at `position` (0-based along
/// the chain); log discrepancies are affine in the coefficient:
/// `a(b) = base + b·slope`.
#[derive(Debug, Clone)]
pub struct AttachedChain {
    pub weights: Vec<u32>,
    pub position: usize,
    base: Vec<Rational>,
    slope: Vec<Rational>,
}

impl AttachedChain {
    pub fn new(weights: &[u32], position: usize) -> Result<Self, DiscrepancyError> {
        let g = crate::dual_graph::generate_chain(weights)?;
        let order = g.chain_order().ok_or(DiscrepancyError::NotChain)?;
        let target = g.id(order[position]).to_string();
        let solve = |b: Rational| -> Result<Vec<Rational>, DiscrepancyError> {
            let gb = g.with_boundary("b", b, &target)?;
            let p = solve_log_discrepancies(&gb)?;
            Ok(order
                .iter()
                .map(|&i| p.get(g.id(i)).unwrap().clone())
                .collect())
        };
        let base = solve(Rational::zero())?;
        let at_one = solve(Rational::one())?;
        let slope = at_one.iter().zip(&base).map(|(x, y)| x - y).collect();
        Ok(AttachedChain {
            weights: weights.to_vec(),
            position,
            base,
            slope,
        })
    }

    pub fn values(&self, b: &Rational) -> Vec<Rational> {
        self.base
            .iter()
            .zip(&self.slope)
            .map(|(x, s)| x + &(s * b))
            .collect()
    }

    /// `min(min a_i(b), 1 − b)`
    pub fn local_mld(&self, b: &Rational) -> Rational {
        let exc = self.values(b).into_iter().min().unwrap();
        exc.min(Rational::one() - b)
    }

    /// Graph text with the boundary coefficient filled in.
    pub fn describe(&self, b: &Rational) -> String {
        let w: Vec<String> = self.weights.iter().map(u32::to_string).collect();
        format!("chain={} at={} b={}", w.join(","), self.position + 1, b)
    }
}

/// Every chain with weights in `[2, max_weight]` and length `≤ max_r`, with a
/// boundary attached at each position.
pub fn attached_chains(max_r: usize, max_weight: u32) -> Vec<AttachedChain> {
    let mut out = Vec::new();
    for r in 1..=max_r {
        for ws in crate::dual_graph::weight_sequences(r, 2, max_weight) {
            for pos in 0..r {
                out.push(AttachedChain::new(&ws, pos).expect("chains are contractible"));
            }
        }
    }
    out
}

/// Coefficients `p/d` in `[0, 1)` with `d ≤ max_denom`, ascending, without repeats.
pub fn coefficient_grid(max_denom: i64) -> Vec<Rational> {
    let mut v: Vec<Rational> = (1..=max_denom)
        .flat_map(|d| (0..d).map(move |p| Rational::new(p, d)))
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Empirical table for the transform: for each grid `τ`, the instances with
/// local mld `≥ 1/m` whose transformed coefficient is standard, and the ones
/// among them whose transformed pair is no longer `1/m`-lc.
pub fn transform_tau_table(
    m: u64,
    chains: &[AttachedChain],
    coeffs: &[Rational],
    tau_grid: &[Rational],
) -> TauTable {
    let floor = Rational::new(1, m as i64);
    let admissible: Vec<(&AttachedChain, &Rational)> = chains
        .iter()
        .flat_map(|c| coeffs.iter().map(move |b| (c, b)))
        .filter(|(c, b)| c.local_mld(b) >= floor)
        .collect();
    let mut grid: Vec<Rational> = tau_grid.to_vec();
    grid.sort();
    let mut rows = Vec::new();
    let mut tau_m: Option<Rational> = None;
    let mut clean = true;
    let mut first_violation = None;
    for tau in grid {
        let mut instances = 0;
        let mut violations = 0;
        for (c, b) in &admissible {
            let d = dtau_transform(std::slice::from_ref(*b), &tau)
                .expect("tau ≥ 0")
                .remove(0);
            if !StandardSet::contains(&d) {
                continue;
            }
            instances += 1;
            if c.local_mld(&d) < floor {
                violations += 1;
                if clean && first_violation.is_none() {
                    first_violation = Some(format!("{} tau={}", c.describe(b), tau));
                }
            }
        }
        if violations > 0 {
            clean = false;
        }
        if clean {
            tau_m = Some(tau.clone());
        }
        rows.push(TauRow {
            tau,
            instances,
            violations,
        });
    }
    TauTable {
        m,
        rows,
        tau_m: tau_m.unwrap_or_else(Rational::zero),
        first_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual_graph::generate_chain;
    use crate::rational::q;

    fn bnd(v: &[(i64, i64)]) -> BoundaryP1 {
        BoundaryP1::new(v.iter().map(|&(p, d)| q(p, d)).collect())
    }

    #[test]
    fn floor_condition_examples() {
        assert!(floor_condition(&q(2, 3), &q(2, 3), 3));
        for n in 1..20 {
            assert!(floor_condition(&q(0, 1), &q(0, 1), n));
        }
        assert!(!floor_condition(&q(3, 4), &q(1, 2), 4));
    }

    #[test]
    fn complement_examples_from_definition() {
        let empty = BoundaryP1::default();
        let ones = ComplementResult::new(1, vec![], vec![q(1, 1), q(1, 1)]);
        assert!(is_complement_p1(&empty, &ones, &q(0, 1)));
        assert!(!is_complement_p1(&empty, &ones, &q(1, 3)));
        let thirds = ComplementResult::new(3, vec![], vec![q(2, 3), q(2, 3), q(2, 3)]);
        assert!(is_complement_p1(&empty, &thirds, &q(1, 3)));
    }

    #[test]
    fn violations_are_named() {
        let b = bnd(&[(3, 4)]);
        let r = ComplementResult::new(4, vec![q(1, 2)], vec![q(3, 4), q(3, 4)]);
        assert_eq!(complement_violations(&b, &r, &q(0, 1)), vec!["rounding"]);
        let r = ComplementResult::new(3, vec![q(3, 4)], vec![q(3, 4), q(1, 2)]);
        assert!(complement_violations(&b, &r, &q(0, 1)).contains(&"n·b⁺ integral"));
    }

    #[test]
    fn levels() {
        assert_eq!(lc_level(&q(1, 3)).unwrap(), 3);
        assert_eq!(lc_level(&q(1, 5)).unwrap(), 5);
        assert_eq!(lc_level(&q(2, 5)).unwrap(), 2);
        assert_eq!(lc_level(&q(1, 1)).unwrap(), 1);
        assert!(lc_level(&q(0, 1)).is_err());
        assert_eq!(rounding_level(&bnd(&[(3, 4)])).unwrap(), 4);
        assert_eq!(rounding_level(&bnd(&[(1, 4), (1, 2)])).unwrap(), 2);
        assert_eq!(rounding_level(&BoundaryP1::default()).unwrap(), 1);
    }

    #[test]
    fn empty_boundary_falls_through_to_two() {
        let r = find_curve_complement(&BoundaryP1::default(), &q(1, 3)).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.padding_coeffs, vec![q(1, 2); 4]);
        assert_eq!(r.eps_achieved, q(1, 2));
        // Oracle: the grid search agrees that n = 1 is impossible and n = 2 works.
        assert_eq!(
            brute_force_complement(&BoundaryP1::default(), 1, &q(1, 4)).unwrap(),
            None
        );
        assert!(brute_force_complement(&BoundaryP1::default(), 2, &q(1, 4))
            .unwrap()
            .is_some());
    }

    #[test]
    fn three_quarters() {
        let b = bnd(&[(3, 4)]);
        let r = find_curve_complement(&b, &q(1, 5)).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.plus_coeffs, vec![q(3, 4)]);
        assert_eq!(r.padding_coeffs, vec![q(3, 4), q(1, 2)]);
        assert_eq!(r.eps_achieved, q(1, 4));
        assert!(is_complement_p1(&b, &r, &q(1, 6)));
        let brute = brute_force_complement(&b, 4, &q(1, 6)).unwrap().unwrap();
        assert!(is_complement_p1(&b, &brute, &q(1, 6)));
        assert_eq!(brute.plus_coeffs, vec![q(3, 4)]);
        assert_eq!(brute.padding_coeffs, vec![q(3, 4), q(1, 2)]);
    }

    #[test]
    fn small_single_point() {
        for b in [q(0, 1), q(1, 4), q(1, 3) - q(1, 100)] {
            let bd = BoundaryP1::new(vec![b]);
            let r = find_curve_complement(&bd, &q(1, 2)).unwrap();
            assert_eq!(r.n, 2);
            assert_eq!(r.plus_coeffs, vec![q(0, 1)]);
            assert_eq!(r.padding_coeffs, vec![q(1, 2); 4]);
        }
    }

    #[test]
    fn five_thirds_need_index_three() {
        let b = BoundaryP1::new(vec![q(1, 3); 5]);
        assert!(try_complement(&b, 1).is_none());
        assert!(try_complement(&b, 2).is_none());
        let r = find_curve_complement(&b, &q(1, 2)).unwrap();
        assert_eq!(r.n, 3);
        assert_eq!(r.padding_coeffs, vec![q(1, 3)]);
        assert!(is_complement_p1(&b, &r, &q(1, 3)));
        // The grid search agrees on all three indices.
        assert_eq!(brute_force_complement(&b, 1, &q(1, 3)).unwrap(), None);
        assert_eq!(brute_force_complement(&b, 2, &q(1, 3)).unwrap(), None);
        assert!(brute_force_complement(&b, 3, &q(1, 3)).unwrap().is_some());
    }

    #[test]
    fn complement_errors() {
        assert!(matches!(
            find_curve_complement(&bnd(&[(1, 1), (1, 1)]), &q(1, 2)),
            Err(ComplementError::NotFano(_))
        ));
        assert!(matches!(
            find_curve_complement(&bnd(&[(3, 2)]), &q(1, 2)),
            Err(ComplementError::CoefficientOutOfRange(_))
        ));
        assert!(matches!(
            find_curve_complement(&bnd(&[(1, 1)]), &q(1, 2)),
            Err(ComplementError::CoefficientOne)
        ));
        assert!(matches!(
            brute_force_complement(&BoundaryP1::default(), 13, &q(0, 1)),
            Err(ComplementError::GuardExceeded { .. })
        ));
    }

    #[test]
    fn brute_force_thirds() {
        let r = brute_force_complement(&BoundaryP1::default(), 3, &q(1, 3))
            .unwrap()
            .unwrap();
        assert_eq!(r.padding_coeffs, vec![q(2, 3); 3]);
        assert!(is_complement_p1(&BoundaryP1::default(), &r, &q(1, 3)));
    }

    // Scan k = 1.. directly from the definition.
    fn dtau_oracle(b: &Rational, tau: &Rational) -> Rational {
        for k in 1..=200i64 {
            let s = q(k - 1, k);
            if &s - tau <= *b && *b <= s {
                return s;
            }
        }
        b.clone()
    }

    #[test]
    fn dtau_examples() {
        assert_eq!(
            dtau_transform(&[q(16, 25)], &q(1, 20)).unwrap(),
            vec![q(2, 3)]
        );
        assert_eq!(
            dtau_transform(&[q(1, 2)], &q(1, 10)).unwrap(),
            vec![q(1, 2)]
        );
        assert_eq!(
            dtau_transform(&[q(1, 10)], &q(1, 20)).unwrap(),
            vec![q(1, 10)]
        );
        for d in 1..=30 {
            for p in 0..=d {
                let b = q(p, d);
                for tau in [q(0, 1), q(1, 50), q(1, 7), q(1, 3)] {
                    assert_eq!(
                        dtau_transform(std::slice::from_ref(&b), &tau).unwrap()[0],
                        dtau_oracle(&b, &tau)
                    );
                }
            }
        }
    }

    #[test]
    fn dtau_general_examples() {
        let a = [q(1, 2), q(2, 3)];
        assert_eq!(
            dtau_general(&[q(16, 25)], &q(1, 20), &a).unwrap(),
            vec![q(2, 3)]
        );
        assert_eq!(
            dtau_general(&[q(16, 25)], &q(1, 5), &a).unwrap(),
            vec![q(2, 3)]
        );
        // b ∈ A: the biggest a with a − τ ≤ b wins.
        assert_eq!(
            dtau_general(&[q(1, 2)], &q(1, 5), &a).unwrap(),
            vec![q(2, 3)]
        );
        assert_eq!(
            dtau_general(&[q(1, 2)], &q(1, 10), &a).unwrap(),
            vec![q(1, 2)]
        );
        assert_eq!(
            dtau_general(&[q(1, 2)], &q(1, 10), &[]),
            Err(ComplementError::EmptySet)
        );
        // Tie-breaks differ from the smallest-k rule on overlapping windows.
        let phi = [q(1, 2), q(2, 3), q(3, 4)];
        let b = [q(1, 2)];
        assert_eq!(dtau_transform(&b, &q(1, 4)).unwrap(), vec![q(1, 2)]);
        assert_eq!(dtau_general(&b, &q(1, 4), &phi).unwrap(), vec![q(3, 4)]);
    }

    #[test]
    fn standard_set_queries() {
        assert_eq!(StandardSet::member(&q(2, 3)), Some(Standard::Finite(3)));
        assert_eq!(StandardSet::member(&q(0, 1)), Some(Standard::Finite(1)));
        assert_eq!(StandardSet::member(&q(1, 1)), Some(Standard::One));
        assert_eq!(StandardSet::member(&q(3, 5)), None);
        assert_eq!(StandardSet::at_or_below(&q(3, 5)), Standard::Finite(2));
        assert_eq!(StandardSet::at_or_above(&q(3, 5)), Standard::Finite(3));
        assert_eq!(StandardSet::at_or_above(&q(2, 3)), Standard::Finite(3));
    }

    #[test]
    fn subboundary_all_two_and_zero_delta() {
        let g = generate_chain(&[2, 2, 2]).unwrap();
        let s = construct_chain_subboundary(&g, &q(1, 2)).unwrap();
        assert!(s.u.iter().all(Rational::is_zero));
        assert!(satisfies_chain_inequalities(&[2, 2, 2], &s.u));
        let g = generate_chain(&[3, 5, 2]).unwrap();
        let s = construct_chain_subboundary(&g, &q(0, 1)).unwrap();
        assert_eq!(s.path, SubboundaryPath::Zero);
        assert!(satisfies_chain_inequalities(&[3, 5, 2], &s.u));
    }

    #[test]
    fn subboundary_chain_three_four() {
        let g = generate_chain(&[3, 4]).unwrap();
        let delta = q(4, 11);
        let s = construct_chain_subboundary(&g, &delta).unwrap();
        assert!(satisfies_chain_inequalities(&[3, 4], &s.u));
        assert!(s.u.iter().all(|x| x.denom().clone() <= s.denominator_bound));
        // The grid search finds a solution inside the same bound.
        let (qq, u) =
            exhaustive_subboundary(&[3, 4], s.denominator_bound.to_u64().unwrap()).unwrap();
        assert!(satisfies_chain_inequalities(&[3, 4], &u));
        assert!(BigInt::from(qq) <= s.denominator_bound);
        assert!(construct_chain_subboundary(&g, &q(1, 2)).is_err());
    }

    #[test]
    fn subboundary_single_curve() {
        let g = generate_chain(&[5]).unwrap();
        let s = construct_chain_subboundary(&g, &q(2, 5)).unwrap();
        assert!(satisfies_chain_inequalities(&[5], &s.u));
        assert!(s.u[0].is_positive());
    }
}
