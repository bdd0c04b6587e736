//! Exhaustive and seeded verification of the structural properties.
//!
//! Each property enumerates its instances from an [`EnumerationSpec`] in a
//! fixed order and re-derives the claim by an independent route where one
//! exists. Failures carry a one-line instance string that replays the case.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::blowup::{
    blow_down, blow_up, check_cor_3c, check_lemma_3a, check_lemma_3b, count_double_run,
    model_from_solved_graph, negativity, Center, CurveKind, DoubleStep, Move, SmoothModel,
};
use crate::complement::{
    attached_chains, brute_force_complement, candidate_indices, coefficient_grid,
    construct_chain_subboundary, dtau_transform, find_curve_complement, is_complement_p1, lc_level,
    rounding_level, transform_tau_table, BoundaryP1, StandardSet, TauTable,
};
use crate::discrepancy::{
    bound_report, chain_closed_form, chain_weights_3_2_4, dr_reduce, residuals,
    solve_log_discrepancies, DiscrepancyProfile,
};
use crate::dual_graph::{
    generate_chain, generate_e_type, generate_fork, parse_graph, weight_sequences, DualGraph,
    SingularityClass, E_FAMILIES,
};
use crate::rational::{format_list, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Chains,
    Forks,
    ETypes,
    Boundaries,
    Towers,
}

impl FromStr for Shape {
    type Err = OracleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chains" => Ok(Shape::Chains),
            "forks" => Ok(Shape::Forks),
            "e_types" | "e-types" => Ok(Shape::ETypes),
            "boundaries" => Ok(Shape::Boundaries),
            "towers" => Ok(Shape::Towers),
            _ => Err(OracleError::UnknownShape(s.to_string())),
        }
    }
}

/// What to enumerate and how far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumerationSpec {
    pub shape: Shape,
    /// Chain length (or fork chain length, or closed-form family length).
    pub max_r: usize,
    pub max_weight: u32,
    /// Largest centre weight for E-types.
    pub max_p: u32,
    pub max_denominator: i64,
    pub max_points: usize,
    pub max_depth: usize,
    /// Number of random towers or runs.
    pub count: usize,
    pub deltas: Vec<Rational>,
    pub seed: u64,
}

impl EnumerationSpec {
    pub fn new(shape: Shape) -> Self {
        EnumerationSpec {
            shape,
            max_r: 7,
            max_weight: 5,
            max_p: 8,
            max_denominator: 12,
            max_points: 6,
            max_depth: 6,
            count: 1000,
            deltas: vec![
                Rational::new(1, 2),
                Rational::new(1, 3),
                Rational::new(1, 5),
            ],
            seed: 1,
        }
    }

    fn validate(&self) -> Result<(), OracleError> {
        let caps = [
            self.max_r,
            self.max_weight as usize,
            self.max_p as usize,
            self.max_denominator.max(0) as usize,
            self.max_points,
            self.max_depth,
        ];
        if caps.contains(&0) {
            return Err(OracleError::InvalidSpec("caps must be positive".into()));
        }
        if self.deltas.iter().any(|d| d.is_negative() || *d > 1) {
            return Err(OracleError::InvalidSpec("deltas must lie in [0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Residual,
    Unimodality,
    MonotoneDifference,
    ClosedForm,
    LrBound,
    DrReduce,
    DrMonotone,
    ContractibleChains,
    ClassifyRoundtrip,
    CurveComplement,
    Dtau,
    Subboundary,
    Lemma3B,
    Lemma3A,
    DoubleRun,
    Lemma4,
}

impl Property {
    pub const ALL: [Property; 16] = [
        Property::Residual,
        Property::Unimodality,
        Property::MonotoneDifference,
        Property::ClosedForm,
        Property::LrBound,
        Property::DrReduce,
        Property::DrMonotone,
        Property::ContractibleChains,
        Property::ClassifyRoundtrip,
        Property::CurveComplement,
        Property::Dtau,
        Property::Subboundary,
        Property::Lemma3B,
        Property::Lemma3A,
        Property::DoubleRun,
        Property::Lemma4,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Property::Residual => "residual",
            Property::Unimodality => "unimodality",
            Property::MonotoneDifference => "monotone-difference",
            Property::ClosedForm => "closed-form",
            Property::LrBound => "lr-bound",
            Property::DrReduce => "dr-reduce",
            Property::DrMonotone => "dr-monotone",
            Property::ContractibleChains => "contractible-chains",
            Property::ClassifyRoundtrip => "classify-roundtrip",
            Property::CurveComplement => "curve-complement-theorem",
            Property::Dtau => "dtau",
            Property::Subboundary => "subboundary",
            Property::Lemma3B => "lemma3b",
            Property::Lemma3A => "lemma3a",
            Property::DoubleRun => "double-run",
            Property::Lemma4 => "lemma4",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Property {
    type Err = OracleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Property::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| OracleError::UnknownProperty(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// Replayable instance serialization.
    pub instance: String,
    pub witness: String,
}

/// Outcome of one property over one enumeration.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub property: String,
    pub instances: u64,
    pub failures: Vec<Failure>,
    pub elapsed: Duration,
    /// Extra lines for report-only output, such as published tables.
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(property: impl Into<String>) -> Self {
        VerificationReport {
            property: property.into(),
            instances: 0,
            failures: Vec::new(),
            elapsed: Duration::ZERO,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(
        &mut self,
        ok: bool,
        instance: impl FnOnce() -> String,
        witness: impl FnOnce() -> String,
    ) {
        self.instances += 1;
        if !ok {
            self.fail(instance(), witness());
        }
    }

    fn fail(&mut self, instance: String, witness: String) {
        self.failures.push(Failure { instance, witness });
    }

    /// `property,instances,failures,status`; elapsed time is left out so
    /// the output is byte-deterministic.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.property,
            self.instances,
            self.failures.len(),
            if self.passed() { "pass" } else { "fail" }
        )
    }

    pub fn failures_csv(&self) -> String {
        let mut out = String::new();
        for f in &self.failures {
            writeln!(
                out,
                "{},\"{}\",\"{}\"",
                self.property, f.instance, f.witness
            )
            .unwrap();
        }
        out
    }
}

pub const REPORT_HEADER: &str = "property,instances,failures,status";

/// Runs each property over the enumeration described by `spec`.
pub fn enumerate_and_verify(
    spec: &EnumerationSpec,
    properties: &[Property],
) -> Result<Vec<VerificationReport>, OracleError> {
    spec.validate()?;
    Ok(properties
        .iter()
        .map(|&p| verify_property(spec, p))
        .collect())
}

/// Same as [`enumerate_and_verify`] with property ids.
pub fn enumerate_and_verify_ids(
    spec: &EnumerationSpec,
    ids: &[&str],
) -> Result<Vec<VerificationReport>, OracleError> {
    let props = ids
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<Property>, _>>()?;
    enumerate_and_verify(spec, &props)
}

fn verify_property(spec: &EnumerationSpec, property: Property) -> VerificationReport {
    let start = Instant::now();
    let mut report = match property {
        Property::Residual => residual(spec),
        Property::Unimodality => unimodality(spec),
        Property::MonotoneDifference => monotone_difference(spec),
        Property::ClosedForm => closed_form(spec),
        Property::LrBound => lr_bound(spec),
        Property::DrReduce => dr_paths(spec),
        Property::DrMonotone => dr_monotone(spec),
        Property::ContractibleChains => contractible_chains(spec),
        Property::ClassifyRoundtrip => classify_roundtrip(spec),
        Property::CurveComplement => curve_complement(spec),
        Property::Dtau => dtau(spec),
        Property::Subboundary => subboundary(spec),
        Property::Lemma3B => random_towers(spec),
        Property::Lemma3A => lemma_3a(spec),
        Property::DoubleRun => double_runs(spec),
        Property::Lemma4 => lemma_4(spec),
    };
    report.property = property.id().to_string();
    report.elapsed = start.elapsed();
    report
}

fn join_weights(ws: &[u32]) -> String {
    ws.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// Chains with weights in `[2, max_weight]`, lengths `1..=max_r`.
pub fn chain_family(max_r: usize, max_weight: u32) -> Vec<(String, Vec<u32>, DualGraph)> {
    (1..=max_r)
        .flat_map(|r| weight_sequences(r, 2, max_weight))
        .map(|ws| {
            let g = generate_chain(&ws).expect("valid weights");
            (format!("chain={}", join_weights(&ws)), ws, g)
        })
        .collect()
}

/// Forks with two `-2` leaves on the first chain curve; chain lengths
/// `2..=max_r`, chain weights in `[2, max_weight]`.
pub fn fork_family(max_r: usize, max_weight: u32) -> Vec<(String, DualGraph)> {
    (2..=max_r)
        .flat_map(|r| weight_sequences(r, 2, max_weight))
        .map(|ws| {
            let g = generate_fork(&ws).expect("valid weights");
            (format!("fork={}", join_weights(&ws)), g)
        })
        .collect()
}

/// Contractible E-type graphs, families 1..=15, centre weight `2..=max_p`.
pub fn e_type_family(max_p: u32) -> Vec<(String, DualGraph)> {
    let mut out = Vec::new();
    for f in 1..=E_FAMILIES.len() as u32 {
        for p in 2..=max_p {
            let g = generate_e_type(f, p).expect("family in range");
            if g.is_contractible() {
                out.push((format!("e-type={f},{p}"), g));
            }
        }
    }
    out
}

fn graphs_for(spec: &EnumerationSpec) -> Vec<(String, DualGraph)> {
    match spec.shape {
        Shape::Forks => fork_family(spec.max_r, spec.max_weight),
        Shape::ETypes => e_type_family(spec.max_p),
        _ => chain_family(spec.max_r, spec.max_weight)
            .into_iter()
            .map(|(s, _, g)| (s, g))
            .collect(),
    }
}

fn residual(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("residual");
    for (name, g) in graphs_for(spec) {
        match solve_log_discrepancies(&g) {
            Ok(p) => {
                // Re-evaluate each row from the intersection matrix directly.
                let m = g.intersection_matrix();
                let exc = g.exceptional();
                let mut bad = Vec::new();
                for (row, &i) in exc.iter().enumerate() {
                    let w = -m[row][row];
                    let mut lhs = Rational::from_integer(w - 2);
                    for (col, &j) in exc.iter().enumerate() {
                        let c = Rational::one() - p.get(g.id(j)).unwrap();
                        lhs += c.mul_int(m[row][col]);
                    }
                    if !lhs.is_zero() {
                        bad.push(format!("{}:{}", g.id(i), lhs));
                    }
                }
                let via_module = residuals(&g, &p).iter().all(Rational::is_zero);
                rep.check(
                    bad.is_empty() && via_module,
                    || name.clone(),
                    || bad.join(";"),
                );
            }
            Err(e) => rep.check(false, || name.clone(), || e.to_string()),
        }
    }
    rep
}

fn chain_values(g: &DualGraph) -> Option<(Vec<u32>, Vec<Rational>, DiscrepancyProfile)> {
    let order = g.chain_order()?;
    let p = solve_log_discrepancies(g).ok()?;
    let ws = order.iter().map(|&i| g.weight(i).unwrap()).collect();
    let a = p.values_along(g, &order);
    Some((ws, a, p))
}

/// Non-increasing up to some position and non-decreasing after it.
pub fn is_unimodal(a: &[Rational]) -> bool {
    let mut k = 0;
    while k + 1 < a.len() && a[k] >= a[k + 1] {
        k += 1;
    }
    a[k..].windows(2).all(|w| w[0] <= w[1])
}

fn unimodality(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("unimodality");
    for (name, _, g) in chain_family(spec.max_r, spec.max_weight) {
        let (_, a, _) = chain_values(&g).expect("chain solves");
        rep.check(is_unimodal(&a), || name.clone(), || format_list(&a));
    }
    rep
}

fn monotone_difference(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("monotone-difference");
    for (name, _, g) in chain_family(spec.max_r, spec.max_weight) {
        let (_, a, _) = chain_values(&g).expect("chain solves");
        let ok = a
            .windows(3)
            .all(|w| (w[0] > w[1] || w[1] <= w[2]) && (w[0] >= w[1] || w[1] < w[2]));
        rep.check(ok, || name.clone(), || format_list(&a));
    }
    rep
}

fn closed_form(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("closed-form");
    for r in 2..=spec.max_r.max(2) {
        let name = format!("family r={r}");
        let g = generate_chain(&chain_weights_3_2_4(r)).expect("valid weights");
        match (chain_closed_form(r), chain_values(&g)) {
            (Ok(cf), Some((_, a, _))) => {
                let ok = cf.profile.values() == a.as_slice();
                rep.check(
                    ok,
                    || name.clone(),
                    || format!("t={} solver={}", cf.t, format_list(&a)),
                );
            }
            _ => rep.check(false, || name.clone(), || "solve failed".into()),
        }
    }
    rep
}

/// Counts of non-`-2` curves on either side of the valley, recomputed from
/// the weights and values: `l` over `valley ≤ j < r`, `l'` over `1 ≤ j ≤ valley`.
pub fn valley_counts(ws: &[u32], a: &[Rational]) -> (usize, usize, usize) {
    let min = a.iter().min().unwrap();
    let v = a.iter().position(|x| x == min).unwrap();
    let l = (v..ws.len() - 1).filter(|&j| ws[j] > 2).count();
    let lp = (0..=v).filter(|&j| ws[j] > 2).count();
    (v + 1, l, lp)
}

fn lr_bound(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("lr-bound");
    for (name, _, g) in chain_family(spec.max_r, spec.max_weight) {
        let (ws, a, p) = chain_values(&g).expect("chain solves");
        for delta in spec.deltas.iter().filter(|d| d.is_positive()) {
            if p.mld() < delta {
                continue;
            }
            let (_, l, lp) = valley_counts(&ws, &a);
            let inv = delta.recip();
            let ok_direct = Rational::from_integer(l as i64) <= inv
                && Rational::from_integer((l + lp) as i64) <= inv.mul_int(2);
            let ok_module = bound_report(&p, &g, delta)
                .map(|b| b.l_within && b.sum_within && b.l == l && b.l_prime == lp)
                .unwrap_or(false);
            rep.check(
                ok_direct && ok_module,
                || format!("{name} delta={delta}"),
                || format!("l={l} l'={lp}"),
            );
        }
    }
    rep
}

fn dr_paths(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("dr-reduce");
    for (name, g) in fork_family(spec.max_r, spec.max_weight) {
        let full = solve_log_discrepancies(&g);
        let reduced = dr_reduce(&g).and_then(|r| r.solve_full());
        let ok = matches!((&full, &reduced), (Ok(x), Ok(y)) if x.values() == y.values() && x.ids() == y.ids());
        rep.check(ok, || name.clone(), || format!("{full:?} vs {reduced:?}"));
    }
    rep
}

fn dr_monotone(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("dr-monotone");
    for (name, g) in fork_family(spec.max_r, spec.max_weight) {
        let shape = g.fork_shape().expect("fork");
        let p = solve_log_discrepancies(&g).expect("fork solves");
        let a = p.values_along(&g, &shape.chain);
        rep.check(
            a.windows(2).all(|w| w[0] <= w[1]),
            || name.clone(),
            || format_list(&a),
        );
    }
    rep
}

fn contractible_chains(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("contractible-chains");
    for (name, ws, g) in chain_family(spec.max_r, spec.max_weight) {
        let ok = g.is_contractible() && g.classify() == Ok(SingularityClass::A(ws.len()));
        rep.check(ok, || name.clone(), || format!("{:?}", g.classify()));
    }
    rep
}

fn classify_roundtrip(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("classify-roundtrip");
    for (name, ws, g) in chain_family(spec.max_r, spec.max_weight) {
        let back = parse_graph(&g.serialize());
        let ok = back.as_ref() == Ok(&g) && g.classify() == Ok(SingularityClass::A(ws.len()));
        rep.check(ok, || name.clone(), || format!("{:?}", g.classify()));
    }
    for f in 1..=E_FAMILIES.len() as u32 {
        for p in 2..=spec.max_p {
            let g = generate_e_type(f, p).expect("family in range");
            let back = parse_graph(&g.serialize());
            let ok =
                back.as_ref() == Ok(&g) && g.classify() == Ok(SingularityClass::E { family: f, p });
            rep.check(
                ok,
                || format!("e-type={f},{p}"),
                || format!("{:?}", g.classify()),
            );
        }
    }
    rep
}

/// Calls `visit` with every non-decreasing multiset of nonzero coefficients
/// `p/d ≤ cap`, `d ≤ max_denom`, at most `max_points` of them, with sum `< 2`.
/// Values are passed in integer units of `1/unit` together with `unit`.
pub fn for_each_boundary(
    max_denom: i64,
    max_points: usize,
    cap: &Rational,
    mut visit: impl FnMut(&[Rational]),
) -> u64 {
    let values: Vec<Rational> = coefficient_grid(max_denom)
        .into_iter()
        .filter(|v| v.is_positive() && v <= cap)
        .collect();
    let unit = (1..=max_denom).fold(1i64, |acc, d| acc.lcm(&d));
    let units: Vec<i64> = values
        .iter()
        .map(|v| (v.mul_int(unit)).numer().to_i64().unwrap())
        .collect();
    let limit = 2 * unit;
    let mut chosen: Vec<Rational> = Vec::with_capacity(max_points);
    let mut count = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn rec(
        values: &[Rational],
        units: &[i64],
        from: usize,
        sum: i64,
        limit: i64,
        max_points: usize,
        chosen: &mut Vec<Rational>,
        count: &mut u64,
        visit: &mut dyn FnMut(&[Rational]),
    ) {
        visit(chosen);
        *count += 1;
        if chosen.len() == max_points {
            return;
        }
        for i in from..values.len() {
            if sum + units[i] >= limit {
                break;
            }
            chosen.push(values[i].clone());
            rec(
                values,
                units,
                i,
                sum + units[i],
                limit,
                max_points,
                chosen,
                count,
                visit,
            );
            chosen.pop();
        }
    }
    rec(
        &values,
        &units,
        0,
        0,
        limit,
        max_points,
        &mut chosen,
        &mut count,
        &mut visit,
    );
    count
}

/// Checks one boundary against the curve-complement claims at `delta`.
/// Returns the index found, or a witness string on failure.
pub fn check_curve_complement(coeffs: &[Rational], delta: &Rational) -> Result<u64, String> {
    let boundary = BoundaryP1::new(coeffs.to_vec());
    let m = lc_level(delta).map_err(|e| e.to_string())?;
    let eps = Rational::new(1, m as i64 + 1);
    let k = rounding_level(&boundary).map_err(|e| e.to_string())?;
    let result = find_curve_complement(&boundary, delta).map_err(|e| e.to_string())?;
    // ∪_{0<j≤m} {j, j+1} = {1, ..., m+1}
    if result.n == 0 || result.n > m + 1 || !candidate_indices(k).contains(&result.n) {
        return Err(format!("n={} k={k} m={m}", result.n));
    }
    if !is_complement_p1(&boundary, &result, &eps) || result.eps_achieved < eps {
        return Err(format!(
            "not a ({eps},{})-complement: {}",
            result.n,
            result.to_record().replace('\n', " ")
        ));
    }
    // Every index tried before the returned one must be infeasible on the grid too.
    let brute = |n: u64| brute_force_complement(&boundary, n, &eps).map_err(|e| e.to_string());
    for n in candidate_indices(k)
        .into_iter()
        .take_while(|&n| n < result.n)
    {
        if brute(n)?.is_some() {
            return Err(format!("brute force succeeds at skipped n={n}"));
        }
    }
    match brute(result.n)? {
        Some(b) if is_complement_p1(&boundary, &b, &eps) => Ok(result.n),
        Some(_) => Err("brute-force result fails the check".into()),
        None => Err(format!("brute force finds nothing at n={}", result.n)),
    }
}

fn curve_complement(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("curve-complement-theorem");
    let mut third = 0u64;
    for delta in spec.deltas.iter().filter(|d| d.is_positive()) {
        let cap = Rational::one() - delta;
        for_each_boundary(spec.max_denominator, spec.max_points, &cap, |b| {
            let out = check_curve_complement(b, delta);
            if out == Ok(3) && rounding_level(&BoundaryP1::new(b.to_vec())) == Ok(1) {
                third += 1;
            }
            rep.check(
                out.is_ok(),
                || format!("b={} delta={delta}", format_list(b)),
                || out.clone().unwrap_err(),
            );
        });
    }
    rep.notes
        .push(format!("k=1 instances needing n=3: {third}"));
    rep
}

/// Scan `k = 1, 2, ...` for the first window `[(k−1)/k − τ, (k−1)/k]` holding `b`.
fn dtau_scan(b: &Rational, tau: &Rational) -> Rational {
    if *b >= 1 {
        return b.clone();
    }
    let limit = (Rational::one() - b).recip().ceil().to_i64().unwrap() + 1;
    for k in 1..=limit {
        let s = Rational::new(k - 1, k);
        if &s - tau <= *b && *b <= s {
            return s;
        }
    }
    b.clone()
}

fn dtau(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("dtau");
    let mut grid = coefficient_grid(spec.max_denominator);
    grid.push(Rational::one());
    let taus: Vec<Rational> = [
        (0, 1),
        (1, 100),
        (1, 50),
        (1, 20),
        (1, 10),
        (1, 7),
        (1, 5),
        (1, 3),
        (1, 2),
    ]
    .iter()
    .map(|&(p, q)| Rational::new(p, q))
    .collect();
    let mut previous: Option<Vec<Rational>> = None;
    for tau in &taus {
        let out = dtau_transform(&grid, tau).expect("tau ≥ 0");
        let twice = dtau_transform(&out, tau).expect("tau ≥ 0");
        for (i, (b, d)) in grid.iter().zip(&out).enumerate() {
            let name = || format!("b={b} tau={tau}");
            let mut bad = Vec::new();
            if *d != dtau_scan(b, tau) {
                bad.push("scan");
            }
            if twice[i] != *d {
                bad.push("idempotent");
            }
            if d < b {
                bad.push("increasing");
            }
            if d != b && !StandardSet::contains(d) {
                bad.push("standard");
            }
            if tau.is_zero() && d != b {
                bad.push("tau=0 fixes");
            }
            if i > 0 && out[i - 1] > *d {
                bad.push("monotone in b");
            }
            if let Some(prev) = &previous {
                if prev[i] > *d {
                    bad.push("monotone in tau");
                }
            }
            rep.check(bad.is_empty(), name, || format!("{d} {}", bad.join(";")));
        }
        previous = Some(out);
    }
    rep
}

/// Row values `w_i·u_i − Σ_{j~i} u_j − (2 − deg i)` from the intersection
/// matrix of a boundary-free chain.
fn rows_from_matrix(g: &DualGraph, u_by_id: &[(String, Rational)]) -> Vec<Rational> {
    let m = g.intersection_matrix();
    let exc = g.exceptional();
    let u: Vec<Rational> = exc
        .iter()
        .map(|&i| {
            u_by_id
                .iter()
                .find(|(id, _)| id == g.id(i))
                .map(|(_, v)| v.clone())
                .expect("u for every curve")
        })
        .collect();
    (0..exc.len())
        .map(|r| {
            let deg: i64 = (0..exc.len()).filter(|&c| c != r).map(|c| m[r][c]).sum();
            let mut v = Rational::from_integer(2 - deg);
            for c in 0..exc.len() {
                v += u[c].mul_int(m[r][c]);
            }
            -v
        })
        .collect()
}

fn subboundary(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("subboundary");
    let mut deltas: Vec<Rational> = spec.deltas.clone();
    if !deltas.iter().any(Rational::is_zero) {
        deltas.push(Rational::zero());
    }
    for (name, _, g) in chain_family(spec.max_r, spec.max_weight) {
        let mld = solve_log_discrepancies(&g)
            .expect("chain solves")
            .mld()
            .clone();
        for delta in &deltas {
            if mld < *delta {
                continue;
            }
            let instance = || format!("{name} delta={delta}");
            match construct_chain_subboundary(&g, delta) {
                Ok(s) => {
                    let pairs: Vec<(String, Rational)> =
                        s.ids.iter().cloned().zip(s.u.iter().cloned()).collect();
                    let rows = rows_from_matrix(&g, &pairs);
                    let rows_ok = rows.iter().all(|v| !v.is_positive());
                    let range_ok = s.u.iter().all(|x| !x.is_negative() && *x < 1);
                    let den_ok = s.u.iter().all(|x| x.denom().clone() <= s.denominator_bound);
                    let zero_ok = !delta.is_zero() || s.u.iter().all(Rational::is_zero);
                    rep.check(rows_ok && range_ok && den_ok && zero_ok, instance, || {
                        format!(
                            "u={} D={} path={}",
                            format_list(&s.u),
                            s.denominator_bound,
                            s.path
                        )
                    });
                }
                Err(e) => rep.check(false, instance, || e.to_string()),
            }
        }
    }
    rep
}

fn solved_model(g: &DualGraph) -> (SmoothModel, Rational) {
    let p = solve_log_discrepancies(g).expect("contractible graph solves");
    let mld = p.mld().clone();
    (
        model_from_solved_graph(g, &p).expect("profile matches"),
        mld,
    )
}

fn random_a(rng: &mut ChaCha8Rng) -> Rational {
    let q = rng.gen_range(1..=12i64);
    Rational::new(rng.gen_range(0..=2 * q), q)
}

fn intersecting_pairs(model: &SmoothModel) -> Vec<(String, String)> {
    let idx: Vec<usize> = model.counted().collect();
    let mut out = Vec::new();
    for (x, &i) in idx.iter().enumerate() {
        for &j in &idx[x + 1..] {
            if model.matrix()[i][j] > 0 {
                out.push((model.curves()[i].id.clone(), model.curves()[j].id.clone()));
            }
        }
    }
    out
}

fn matrix_ok(model: &SmoothModel) -> bool {
    let m = model.matrix();
    (0..m.len()).all(|i| (0..m.len()).all(|j| m[i][j] == m[j][i]))
}

/// Seeded towers over solved chains: random blow-ups (single or double) and
/// blow-downs, checking the negativity identities, the inverse move, the
/// blow-down update `N'(G) = N(G) + (G·F)·N(F)`, and the single-move margin
/// whenever its preconditions hold.
pub fn random_towers(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("lemma3b");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let max_r = spec.max_r.min(6);
    let max_w = spec.max_weight.max(2);
    for t in 0..spec.count {
        let r = rng.gen_range(1..=max_r);
        let ws: Vec<u32> = (0..r).map(|_| rng.gen_range(2..=max_w)).collect();
        let g = generate_chain(&ws).expect("valid weights");
        let (mut model, delta) = solved_model(&g);
        let depth = rng.gen_range(1..=spec.max_depth);
        let mut script: Vec<String> = Vec::new();
        for _ in 0..depth {
            let downs = model.minus_one_curves();
            let pairs = intersecting_pairs(&model);
            let roll = rng.gen_range(0..10);
            let before = model.clone();
            let instance = |script: &[String]| {
                format!(
                    "seed={} tower={t} chain={} moves={}",
                    spec.seed,
                    join_weights(&ws),
                    script.join(";")
                )
            };
            if roll < 2 && !downs.is_empty() {
                let f = &downs[rng.gen_range(0..downs.len())];
                let after = blow_down(&before, f).expect("a -1 curve");
                let nf = negativity(&before, f).unwrap();
                let mut ok = matrix_ok(&after);
                for c in after.curves() {
                    if c.kind == CurveKind::Boundary {
                        continue;
                    }
                    let m = before.intersection(&c.id, f).unwrap();
                    let expect = negativity(&before, &c.id).unwrap() + nf.mul_int(m);
                    ok &= negativity(&after, &c.id).unwrap() == expect;
                }
                script.push(format!("down {f}"));
                rep.check(ok, || instance(&script), || "blow-down update".into());
                model = after;
                continue;
            }
            let center = if roll < 6 && !pairs.is_empty() {
                let (x, y) = pairs[rng.gen_range(0..pairs.len())].clone();
                Center::OnIntersection(x, y)
            } else {
                let ids: Vec<usize> = model.counted().collect();
                let i = ids[rng.gen_range(0..ids.len())];
                Center::OnCurve(model.curves()[i].id.clone())
            };
            let a_new = random_a(&mut rng);
            let after = blow_up(&before, &center, &a_new).expect("valid center");
            let mv = after.provenance().last().unwrap().clone();
            script.push(mv.to_string());
            let Move::Up { new_id, .. } = &mv else {
                unreachable!()
            };
            let identities = check_lemma_3b(&before, &after, &mv).expect("related models");
            rep.check(
                identities.all_hold(),
                || instance(&script),
                || {
                    identities
                        .identities
                        .iter()
                        .filter(|(_, ok)| !ok)
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(";")
                },
            );
            let inverse = blow_down(&after, new_id).expect("new curve is -1");
            rep.check(
                inverse.same_geometry(&before),
                || instance(&script),
                || "inverse move".into(),
            );
            if matches!(center, Center::OnCurve(_)) {
                if let Ok(margin) = check_cor_3c(&before, &after, &mv, &delta) {
                    rep.check(
                        !margin.is_negative(),
                        || instance(&script),
                        || format!("margin={margin}"),
                    );
                }
            }
            model = after;
        }
    }
    rep
}

/// Nested double blow-ups from a solved chain with `δ = mld`: each new
/// curve takes a log discrepancy in `[a_β + a_γ − δ/2, min(1, a_β + a_γ)]`
/// until none is available. Run lengths must respect the bound and every
/// step must raise the log discrepancy by at least `δ/2`.
fn double_runs(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("double-run");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let max_r = spec.max_r.clamp(2, 6);
    let max_w = spec.max_weight.max(2);
    let half = Rational::new(1, 2);
    for t in 0..spec.count {
        let r = rng.gen_range(2..=max_r);
        let ws: Vec<u32> = (0..r).map(|_| rng.gen_range(2..=max_w)).collect();
        let g = generate_chain(&ws).expect("valid weights");
        let (mut model, delta) = solved_model(&g);
        let pairs = intersecting_pairs(&model);
        let (mut beta, mut gamma) = pairs[rng.gen_range(0..pairs.len())].clone();
        let mut steps = Vec::new();
        let mut lift_ok = true;
        loop {
            let a_b = model.curve(&beta).unwrap().a();
            let a_g = model.curve(&gamma).unwrap().a();
            let hi = (&a_b + &a_g).min(Rational::one());
            let lo = &a_b + &a_g - &delta * &half;
            if lo > hi {
                break;
            }
            // Pick on a grid of 1/(12·denominator) inside [lo, hi].
            let den = lo.denom().clone().lcm(hi.denom()) * BigInt::from(12);
            let lo_n = (&lo * Rational::from_bigint(den.clone())).ceil();
            let hi_n = (&hi * Rational::from_bigint(den.clone())).floor();
            let span = (&hi_n - &lo_n).to_i64().unwrap();
            let pick = lo_n + BigInt::from(rng.gen_range(0..=span));
            let a_new = Rational::from_big(pick, den);
            let center = Center::OnIntersection(beta.clone(), gamma.clone());
            model = blow_up(&model, &center, &a_new).expect("curves meet");
            let Some(Move::Up { new_id, .. }) = model.provenance().last().cloned() else {
                unreachable!()
            };
            lift_ok &= a_new >= a_b.clone().max(a_g.clone()) + &delta * &half;
            steps.push(DoubleStep {
                alpha: new_id.clone(),
                beta: beta.clone(),
                gamma: gamma.clone(),
                a_alpha: a_new,
                a_beta: a_b,
                a_gamma: a_g,
            });
            if rng.gen_bool(0.5) {
                beta = new_id;
            } else {
                gamma = new_id;
            }
        }
        let instance = || {
            format!(
                "seed={} run={t} chain={} delta={delta}",
                spec.seed,
                join_weights(&ws)
            )
        };
        match count_double_run(&steps, &delta) {
            Ok((len, bound, ok)) => rep.check(ok && lift_ok, instance, || {
                format!("len={len} bound={bound}")
            }),
            Err(e) => rep.check(false, instance, || e.to_string()),
        }
    }
    rep
}

/// Top models for the blow-down family: each solved chain or fork with one
/// type-F curve attached to one of its curves, kept when the whole
/// configuration is contractible.
pub fn lemma_3a_tops(
    max_chain: usize,
    max_fork: usize,
    max_weight: u32,
) -> Vec<(String, SmoothModel, Rational)> {
    let mut graphs: Vec<(String, DualGraph)> = chain_family(max_chain, max_weight)
        .into_iter()
        .map(|(s, _, g)| (s, g))
        .collect();
    graphs.extend(fork_family(max_fork, max_weight));
    let mut out = Vec::new();
    for (name, g) in graphs {
        let (model, delta) = solved_model(&g);
        for c in model.curves() {
            let top = model.with_type_f("f", &c.id).expect("fresh id");
            if top.is_contractible() {
                out.push((format!("{name} f@{}", c.id), top, delta.clone()));
            }
        }
    }
    out
}

/// Every model reachable by blow-downs (each reached once, keyed by the set
/// of contracted curves) is checked against the negativity bounds; every
/// contraction of a curve meeting one other curve is read backwards as a
/// single blow-up and checked for the log discrepancy margin.
fn lemma_3a(spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("lemma3a");
    let max_fork = spec.max_r.min(5);
    let mut exempt = 0u64;
    let mut non_minimal = 0u64;
    let mut margins = 0u64;
    for (name, top, delta) in lemma_3a_tops(spec.max_r.min(6), max_fork, spec.max_weight.min(4)) {
        let mut seen: HashSet<BTreeSet<String>> = HashSet::new();
        let mut stack = vec![(top, BTreeSet::new(), Vec::<String>::new())];
        while let Some((model, gone, path)) = stack.pop() {
            if !seen.insert(gone.clone()) {
                continue;
            }
            let instance = || format!("{name} delta={delta} down={}", path.join(","));
            let report = check_lemma_3a(&model, &delta);
            for c in &report.components {
                match c.shape {
                    crate::blowup::ComponentShape::Chain { monotonic: true } => exempt += 1,
                    crate::blowup::ComponentShape::NonMinimal => non_minimal += 1,
                    _ => {}
                }
            }
            rep.check(report.holds(), instance, || {
                report
                    .components
                    .iter()
                    .filter(|c| !c.holds)
                    .map(|c| format!("{:?} sum={} min={}", c.shape, c.sum, c.min_curve))
                    .collect::<Vec<_>>()
                    .join(";")
            });
            for f in model.minus_one_curves() {
                let down = blow_down(&model, &f).expect("a -1 curve");
                let fi = model.index_of(&f).unwrap();
                let neighbours: Vec<usize> = model
                    .counted()
                    .filter(|&j| j != fi && model.matrix()[fi][j] != 0)
                    .collect();
                if let [b] = neighbours[..] {
                    if model.matrix()[fi][b] == 1 {
                        let beta = model.curves()[b].id.clone();
                        let mv = Move::Up {
                            center: Center::OnCurve(beta),
                            a_new: model.curves()[fi].a(),
                            new_id: f.clone(),
                        };
                        let up = crate::blowup::apply_move(&down, &mv).expect("inverse exists");
                        if let Ok(margin) = check_cor_3c(&down, &up, &mv, &delta) {
                            margins += 1;
                            rep.check(!margin.is_negative(), instance, || {
                                format!("margin={margin} at {f}")
                            });
                        }
                    }
                }
                let mut next_gone = gone.clone();
                next_gone.insert(f.clone());
                let mut next_path = path.clone();
                next_path.push(f);
                stack.push((down, next_gone, next_path));
            }
        }
    }
    rep.notes.push(format!("exempt monotonic chains: {exempt}"));
    rep.notes
        .push(format!("non-minimal components: {non_minimal}"));
    rep.notes
        .push(format!("single-move margins checked: {margins}"));
    rep
}

/// `j/60` for `j = 0..=30`.
pub fn default_tau_grid() -> Vec<Rational> {
    (0..=30).map(|j| Rational::new(j, 60)).collect()
}

/// τ tables for `m ∈ {2, 3}` over chains `r ≤ 4`, weights `≤ 4`, one boundary
/// anywhere, coefficients with denominator `≤ 10`.
pub fn lemma_4_tables() -> Vec<TauTable> {
    let chains = attached_chains(4, 4);
    let coeffs = coefficient_grid(10);
    [2, 3]
        .into_iter()
        .map(|m| transform_tau_table(m, &chains, &coeffs, &default_tau_grid()))
        .collect()
}

/// At `τ(m)`, every admissible instance is re-solved from scratch with the
/// transformed coefficient and must stay `1/m`-lc.
fn lemma_4(_spec: &EnumerationSpec) -> VerificationReport {
    let mut rep = VerificationReport::new("lemma4");
    let chains = attached_chains(4, 4);
    let coeffs = coefficient_grid(10);
    for table in lemma_4_tables() {
        let m = table.m as i64;
        let floor = Rational::new(1, m);
        rep.notes.push(format!("tau({m})={}", table.tau_m));
        for c in &chains {
            let g = generate_chain(&c.weights).unwrap();
            let order = g.chain_order().unwrap();
            let target = g.id(order[c.position]).to_string();
            for b in &coeffs {
                if c.local_mld(b) < floor {
                    continue;
                }
                let d = dtau_transform(std::slice::from_ref(b), &table.tau_m)
                    .unwrap()
                    .remove(0);
                if !StandardSet::contains(&d) {
                    continue;
                }
                let gb = g.with_boundary("b", d.clone(), &target).unwrap();
                let p = solve_log_discrepancies(&gb).expect("chain solves");
                let local = p.mld().clone().min(Rational::one() - &d);
                rep.check(
                    local >= floor,
                    || format!("m={m} {} tau={}", c.describe(b), table.tau_m),
                    || format!("mld={local}"),
                );
            }
        }
    }
    rep
}

/// One row per `(family, p)` for `p = 2..=p_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtlasRow {
    pub family: u32,
    pub p: u32,
    pub contractible: bool,
    pub mld: Option<Rational>,
    pub index: Option<BigInt>,
}

pub fn e_type_atlas(p_max: u32) -> Vec<AtlasRow> {
    let mut rows = Vec::new();
    for family in 1..=E_FAMILIES.len() as u32 {
        for p in 2..=p_max {
            let g = generate_e_type(family, p).expect("family in range");
            let contractible = g.is_contractible();
            let profile = contractible.then(|| solve_log_discrepancies(&g).expect("contractible"));
            rows.push(AtlasRow {
                family,
                p,
                contractible,
                mld: profile.as_ref().map(|x| x.mld().clone()),
                index: profile.as_ref().map(|x| x.index().clone()),
            });
        }
    }
    rows
}

pub fn atlas_csv(rows: &[AtlasRow]) -> String {
    let mut out = String::from("family,p,contractible,mld,index\n");
    for r in rows {
        let mld = r.mld.as_ref().map(Rational::to_string).unwrap_or_default();
        let index = r.index.as_ref().map(BigInt::to_string).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.family, r.p, r.contractible, mld, index
        )
        .unwrap();
    }
    out
}

/// Named suites: `quick` for smoke runs, `default` for the full desk-scale
/// check.
pub fn suite(name: &str, seed: u64) -> Option<Vec<(EnumerationSpec, Property)>> {
    let quick = name == "quick";
    if !quick && name != "default" {
        return None;
    }
    let mut chains = EnumerationSpec::new(Shape::Chains);
    chains.seed = seed;
    if quick {
        chains.max_r = 4;
        chains.max_weight = 4;
    }
    let mut forks = chains.clone();
    forks.shape = Shape::Forks;
    forks.max_r = 5;
    forks.max_weight = 4;
    if quick {
        forks.max_r = 3;
    }
    let mut etypes = chains.clone();
    etypes.shape = Shape::ETypes;
    let mut family = chains.clone();
    family.max_r = if quick { 12 } else { 60 };
    let mut sub = chains.clone();
    sub.deltas = vec![Rational::new(1, 3), Rational::new(1, 5)];
    let mut bnd = chains.clone();
    bnd.shape = Shape::Boundaries;
    bnd.deltas = vec![
        Rational::new(1, 2),
        Rational::new(1, 3),
        Rational::new(1, 4),
    ];
    if quick {
        bnd.max_denominator = 6;
        bnd.max_points = 4;
    }
    let mut grid = chains.clone();
    grid.max_denominator = 50;
    let mut towers = chains.clone();
    towers.shape = Shape::Towers;
    towers.max_r = 6;
    towers.max_weight = 4;
    if quick {
        towers.count = 100;
    }
    let mut down = towers.clone();
    down.count = 0;
    if quick {
        down.max_r = 3;
    }
    Some(vec![
        (chains.clone(), Property::Residual),
        (forks.clone(), Property::Residual),
        (etypes.clone(), Property::Residual),
        (chains.clone(), Property::Unimodality),
        (chains.clone(), Property::MonotoneDifference),
        (family, Property::ClosedForm),
        (chains.clone(), Property::LrBound),
        (forks.clone(), Property::DrReduce),
        (forks, Property::DrMonotone),
        (chains.clone(), Property::ContractibleChains),
        (etypes, Property::ClassifyRoundtrip),
        (bnd, Property::CurveComplement),
        (grid, Property::Dtau),
        (sub, Property::Subboundary),
        (towers.clone(), Property::Lemma3B),
        (down, Property::Lemma3A),
        (towers, Property::DoubleRun),
        (chains, Property::Lemma4),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn property_ids_round_trip() {
        for p in Property::ALL {
            assert_eq!(p.id().parse::<Property>().unwrap(), p);
        }
        assert!(matches!(
            "nope".parse::<Property>(),
            Err(OracleError::UnknownProperty(_))
        ));
    }

    #[test]
    fn unimodal_shapes() {
        assert!(is_unimodal(&[q(3, 4), q(1, 2), q(1, 2), q(2, 3)]));
        assert!(!is_unimodal(&[q(1, 2), q(3, 4), q(1, 2)]));
    }

    #[test]
    fn boundary_enumeration_counts() {
        // Values in (0, 1/2] with denominator ≤ 2: only 1/2; up to 3 points with sum < 2.
        let mut seen = Vec::new();
        let n = for_each_boundary(2, 3, &q(1, 2), |b| seen.push(format_list(b)));
        assert_eq!(n, 4);
        assert_eq!(seen, vec!["", "1/2", "1/2,1/2", "1/2,1/2,1/2"]);
    }

    #[test]
    fn small_suites_pass() {
        let mut spec = EnumerationSpec::new(Shape::Chains);
        spec.max_r = 3;
        spec.max_weight = 3;
        let reports = enumerate_and_verify(
            &spec,
            &[
                Property::Residual,
                Property::Unimodality,
                Property::LrBound,
                Property::Subboundary,
            ],
        )
        .unwrap();
        for r in reports {
            assert!(r.passed(), "{}: {:?}", r.property, r.failures.first());
            assert!(r.instances > 0);
        }
    }

    #[test]
    fn atlas_has_du_val_row() {
        let rows = e_type_atlas(3);
        assert_eq!(rows.len(), 30);
        let du_val = rows.iter().find(|r| r.family == 3 && r.p == 2).unwrap();
        assert_eq!(du_val.mld, Some(q(1, 1)));
        assert!(atlas_csv(&rows).starts_with("family,p,contractible,mld,index\n1,2,true,"));
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut spec = EnumerationSpec::new(Shape::Chains);
        spec.max_r = 0;
        assert!(enumerate_and_verify(&spec, &[Property::Residual]).is_err());
    }
}
