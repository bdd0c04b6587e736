//! Log discrepancies of exceptional curves.
//!
//! For every exceptional curve `E_i` the log discrepancies `a_j` satisfy
//!
//! ```text
//! a_i·w_i − Σ_j m_ij·a_j = 2 − Σ_j m_ij − Σ_C b_C·m_iC
//! ```
//!
//! where `j` runs over the other exceptional curves and `C` over boundary
//! components. This is `(K + Σ(1−a_j)E_j + Σ b_C C)·E_i = 0` with
//! `K·E_i = w_i − 2`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use thiserror::Error;

use crate::dual_graph::{DualGraph, GraphError, SingularityClass};
use crate::linalg;
use crate::rational::{lcm_of_denominators, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscrepancyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("intersection matrix is not negative definite")]
    NotContractible,
    #[error("linear system is singular")]
    Singular,
    #[error("exceptional locus is not a chain")]
    NotChain,
    #[error("exceptional locus is not a D-type fork")]
    NotFork,
    #[error("boundary attachments are not supported here")]
    BoundaryPresent,
    #[error("pair is not {delta}-lc (mld {mld})")]
    NotDeltaLc { mld: Rational, delta: Rational },
    #[error("delta must be positive, got {0}")]
    NonPositiveDelta(Rational),
    #[error("chain length {0} is below the minimum 2")]
    ChainTooShort(usize),
    #[error("profile does not match graph: {0}")]
    Mismatch(String),
    #[error("profile csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Log discrepancies of the exceptional curves of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscrepancyProfile {
    ids: Vec<String>,
    values: Vec<Rational>,
    mld: Rational,
    index: BigInt,
    valley: Option<usize>,
}

impl DiscrepancyProfile {
    /// Builds a profile from `(id, a)` pairs; mld and index are derived.
    pub fn from_values(ids: Vec<String>, values: Vec<Rational>, valley: Option<usize>) -> Self {
        assert_eq!(ids.len(), values.len());
        let mld = values.iter().cloned().min().unwrap_or_else(Rational::one);
        let index = lcm_of_denominators(&values);
        DiscrepancyProfile {
            ids,
            values,
            mld,
            index,
            valley,
        }
    }

    pub fn empty() -> Self {
        Self::from_values(Vec::new(), Vec::new(), None)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Rational> {
        self.ids
            .iter()
            .position(|x| x == id)
            .map(|k| &self.values[k])
    }

    pub fn mld(&self) -> &Rational {
        &self.mld
    }

    pub fn index(&self) -> &BigInt {
        &self.index
    }

    /// 1-based position along the chain of the first minimum, for chains.
    pub fn valley(&self) -> Option<usize> {
        self.valley
    }

    /// Values in the order of the given node indices of `graph`.
    pub fn values_along(&self, graph: &DualGraph, order: &[usize]) -> Vec<Rational> {
        order
            .iter()
            .map(|&i| self.get(graph.id(i)).expect("id present").clone())
            .collect()
    }

    pub fn is_eps_lc(&self, eps: &Rational) -> bool {
        self.mld >= *eps
    }

    /// CSV with header `id,a` and footer rows `mld` and `index`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,a\n");
        for (id, a) in self.ids.iter().zip(&self.values) {
            writeln!(out, "{id},{a}").unwrap();
        }
        writeln!(out, "mld,{}", self.mld).unwrap();
        writeln!(out, "index,{}", self.index).unwrap();
        out
    }

    /// Parses [`DiscrepancyProfile::to_csv`] output. The last two rows are the
    /// `mld` and `index` footers and must agree with the data rows.
    pub fn from_csv(text: &str) -> Result<Self, DiscrepancyError> {
        let err = |line: usize, message: &str| DiscrepancyError::Csv {
            line,
            message: message.to_string(),
        };
        let rows: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let Some(((_, header), rest)) = rows.split_first() else {
            return Err(err(1, "empty input"));
        };
        if *header != "id,a" {
            return Err(err(1, "expected header `id,a`"));
        }
        if rest.len() < 2 {
            return Err(err(rows.len(), "missing mld/index footer"));
        }
        let (data, footer) = rest.split_at(rest.len() - 2);
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for &(line, row) in data {
            let (id, a) = row
                .split_once(',')
                .ok_or_else(|| err(line, "expected two fields"))?;
            ids.push(id.to_string());
            values.push(a.parse().map_err(|e| err(line, &format!("{e}")))?);
        }
        let profile = Self::from_values(ids, values, None);
        let (mline, mrow) = footer[0];
        let mld: Rational = mrow
            .strip_prefix("mld,")
            .ok_or_else(|| err(mline, "expected `mld,` footer"))?
            .parse()
            .map_err(|e| err(mline, &format!("{e}")))?;
        let (iline, irow) = footer[1];
        let index: BigInt = irow
            .strip_prefix("index,")
            .ok_or_else(|| err(iline, "expected `index,` footer"))?
            .parse()
            .map_err(|_| err(iline, "invalid index"))?;
        if mld != profile.mld {
            return Err(err(mline, "mld footer disagrees with data"));
        }
        if index != profile.index {
            return Err(err(iline, "index footer disagrees with data"));
        }
        Ok(profile)
    }
}

/// Coefficient matrix and right-hand side of the log discrepancy system,
/// rows and columns in canonical exceptional order.
pub fn discrepancy_system(graph: &DualGraph) -> (Vec<Vec<i64>>, Vec<Rational>) {
    let exc = graph.exceptional();
    let matrix = graph
        .intersection_matrix()
        .into_iter()
        .map(|row| row.into_iter().map(|x| -x).collect())
        .collect();
    let rhs = exc
        .iter()
        .map(|&i| {
            let mut r = Rational::from_integer(2);
            for (j, m) in graph.neighbors(i) {
                let m = i64::from(m);
                match &graph.nodes()[j].kind {
                    crate::dual_graph::NodeKind::Exceptional { .. } => {
                        r -= Rational::from_integer(m)
                    }
                    crate::dual_graph::NodeKind::Boundary { coeff } => r -= coeff.mul_int(m),
                }
            }
            r
        })
        .collect();
    (matrix, rhs)
}

/// `row · a − rhs` for every row of the system; all zero for a true solution.
pub fn residuals(graph: &DualGraph, profile: &DiscrepancyProfile) -> Vec<Rational> {
    let (matrix, rhs) = discrepancy_system(graph);
    let exc = graph.exceptional();
    let a: Vec<Rational> = exc
        .iter()
        .map(|&i| profile.get(graph.id(i)).cloned().unwrap_or_default())
        .collect();
    matrix
        .iter()
        .zip(&rhs)
        .map(|(row, b)| {
            row.iter()
                .zip(&a)
                .map(|(&m, x)| x.mul_int(m))
                .sum::<Rational>()
                - b
        })
        .collect()
}

fn first_min_position(values: &[Rational]) -> Option<usize> {
    let min = values.iter().min()?;
    values.iter().position(|v| v == min).map(|k| k + 1)
}

/// Exact log discrepancies of every exceptional curve.
pub fn solve_log_discrepancies(graph: &DualGraph) -> Result<DiscrepancyProfile, DiscrepancyError> {
    let exc = graph.exceptional();
    if exc.is_empty() {
        return Ok(DiscrepancyProfile::empty());
    }
    if !graph.is_exceptional_connected() {
        return Err(GraphError::Disconnected.into());
    }
    if !graph.is_contractible() {
        return Err(DiscrepancyError::NotContractible);
    }
    let (matrix, rhs) = discrepancy_system(graph);
    let values =
        linalg::solve(&linalg::to_big(&matrix), &rhs).map_err(|_| DiscrepancyError::Singular)?;
    let ids: Vec<String> = exc.iter().map(|&i| graph.id(i).to_string()).collect();
    let mut profile = DiscrepancyProfile::from_values(ids, values, None);
    if let Some(order) = graph.chain_order() {
        profile.valley = first_min_position(&profile.values_along(graph, &order));
    }
    Ok(profile)
}

pub fn mld(profile: &DiscrepancyProfile) -> Rational {
    profile.mld.clone()
}

pub fn is_eps_lc(profile: &DiscrepancyProfile, eps: &Rational) -> bool {
    profile.is_eps_lc(eps)
}

pub fn discrepancy_index(profile: &DiscrepancyProfile) -> BigInt {
    profile.index.clone()
}

/// Closed-form solution for the chain `(3, 2, ..., 2, 4)` of length `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainClosedForm {
    /// Common step `a_i − a_{i+1}`.
    pub t: Rational,
    pub profile: DiscrepancyProfile,
}

/// Log discrepancies of the `(3, 2, ..., 2, 4)` chain from the closed forms
/// `a_i = (1 − (2i−1)t)/2` and `a_r = (1+t)/3`; `t` is the unique value for
/// which both forms agree at `i = r`.
pub fn chain_closed_form(r: usize) -> Result<ChainClosedForm, DiscrepancyError> {
    if r < 2 {
        return Err(DiscrepancyError::ChainTooShort(r));
    }
    let two = Rational::from_integer(2);
    let three = Rational::from_integer(3);
    let rr = i64::try_from(r).expect("chain length fits i64");
    // (1 − (2r−1)t)/2 = (1+t)/3, i.e. t·((2r−1)/2 + 1/3) = 1/2 − 1/3.
    let slope = Rational::new(2 * rr - 1, 2) + Rational::new(1, 3);
    let offset = Rational::new(1, 2) - Rational::new(1, 3);
    let t = offset / slope;
    let mut values: Vec<Rational> = (1..r as i64)
        .map(|i| (Rational::one() - t.mul_int(2 * i - 1)) / &two)
        .collect();
    values.push((Rational::one() + &t) / &three);
    let graph = crate::dual_graph::generate_chain(&chain_weights_3_2_4(r))?;
    let ids: Vec<String> = graph
        .chain_order()
        .expect("chain")
        .iter()
        .map(|&i| graph.id(i).to_string())
        .collect();
    let valley = first_min_position(&values);
    // Profile entries are stored in canonical (lexicographic) id order.
    let mut pairs: Vec<(String, Rational)> = ids.into_iter().zip(values).collect();
    pairs.sort_by(|x, y| x.0.cmp(&y.0));
    let (ids, values) = pairs.into_iter().unzip();
    Ok(ChainClosedForm {
        t,
        profile: DiscrepancyProfile::from_values(ids, values, valley),
    })
}

/// Weights `(3, 2, ..., 2, 4)` with `r − 2` middle entries.
pub fn chain_weights_3_2_4(r: usize) -> Vec<u32> {
    let mut w = vec![3];
    w.extend(std::iter::repeat_n(2, r.saturating_sub(2)));
    w.push(4);
    w
}

/// Counts of `w_j > 2` on either side of the valley of a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub valley: usize,
    /// `#{j : w_j > 2, valley ≤ j < r}`
    pub l: usize,
    /// `#{j : w_j > 2, 1 ≤ j ≤ valley}`
    pub l_prime: usize,
    pub delta: Rational,
    /// `l ≤ 1/δ`
    pub l_within: bool,
    /// `l + l' ≤ 2/δ`
    pub sum_within: bool,
}

pub fn bound_report(
    profile: &DiscrepancyProfile,
    graph: &DualGraph,
    delta: &Rational,
) -> Result<BoundReport, DiscrepancyError> {
    let order = graph.chain_order().ok_or(DiscrepancyError::NotChain)?;
    if !delta.is_positive() {
        return Err(DiscrepancyError::NonPositiveDelta(delta.clone()));
    }
    if !profile.is_eps_lc(delta) {
        return Err(DiscrepancyError::NotDeltaLc {
            mld: profile.mld.clone(),
            delta: delta.clone(),
        });
    }
    let values = profile.values_along(graph, &order);
    let valley = first_min_position(&values).expect("nonempty chain");
    let r = order.len();
    let heavy = |j: usize| graph.weight(order[j - 1]).unwrap() > 2;
    let l = (valley..r).filter(|&j| heavy(j)).count();
    let l_prime = (1..=valley).filter(|&j| heavy(j)).count();
    let l_within = delta.mul_int(l as i64) <= 1;
    let sum_within = delta.mul_int((l + l_prime) as i64) <= 2;
    Ok(BoundReport {
        valley,
        l,
        l_prime,
        delta: delta.clone(),
        l_within,
        sum_within,
    })
}

/// The D-type system after eliminating the two `-2` leaves.
///
/// From `2a − a_1 − 1 = 0` and `2a' − a_1 − 1 = 0` one gets
/// `a + a' = a_1 + 1`, which turns the centre row into
/// `a_1(w_1 − 1) − a_2 = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedFork {
    pub chain_ids: Vec<String>,
    pub leaf_ids: [String; 2],
    pub matrix: Vec<Vec<i64>>,
    pub rhs: Vec<Rational>,
}

impl ReducedFork {
    /// `a_1, ..., a_r` along the chain.
    pub fn solve(&self) -> Result<Vec<Rational>, DiscrepancyError> {
        linalg::solve(&linalg::to_big(&self.matrix), &self.rhs)
            .map_err(|_| DiscrepancyError::Singular)
    }

    /// Full profile with the leaves restored as `a = a' = (a_1 + 1)/2`.
    pub fn back_substitute(&self, chain: &[Rational]) -> DiscrepancyProfile {
        let leaf = (&chain[0] + Rational::one()) / Rational::from_integer(2);
        let mut pairs: Vec<(String, Rational)> = self
            .chain_ids
            .iter()
            .cloned()
            .zip(chain.iter().cloned())
            .collect();
        pairs.push((self.leaf_ids[0].clone(), leaf.clone()));
        pairs.push((self.leaf_ids[1].clone(), leaf));
        pairs.sort_by(|x, y| x.0.cmp(&y.0));
        let (ids, values) = pairs.into_iter().unzip();
        DiscrepancyProfile::from_values(ids, values, None)
    }

    pub fn solve_full(&self) -> Result<DiscrepancyProfile, DiscrepancyError> {
        Ok(self.back_substitute(&self.solve()?))
    }
}

pub fn dr_reduce(graph: &DualGraph) -> Result<ReducedFork, DiscrepancyError> {
    if graph.has_boundary() {
        return Err(DiscrepancyError::BoundaryPresent);
    }
    if !matches!(graph.classify()?, SingularityClass::D(_)) {
        return Err(DiscrepancyError::NotFork);
    }
    let fork = graph.fork_shape().ok_or(DiscrepancyError::NotFork)?;
    let r = fork.chain.len();
    let w = |k: usize| i64::from(graph.weight(fork.chain[k]).unwrap());
    let mut matrix = vec![vec![0i64; r]; r];
    let mut rhs = vec![Rational::zero(); r];
    for k in 0..r {
        matrix[k][k] = if k == 0 { w(0) - 1 } else { w(k) };
        if k > 0 {
            matrix[k][k - 1] = -1;
        }
        if k + 1 < r {
            matrix[k][k + 1] = -1;
        }
    }
    rhs[r - 1] = Rational::one();
    Ok(ReducedFork {
        chain_ids: fork
            .chain
            .iter()
            .map(|&i| graph.id(i).to_string())
            .collect(),
        leaf_ids: [
            graph.id(fork.leaves[0]).to_string(),
            graph.id(fork.leaves[1]).to_string(),
        ],
        matrix,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual_graph::{generate_chain, generate_e_type, generate_fork, parse_graph};
    use crate::rational::q;
    use num_traits::One;

    // Cramer's rule on small systems; independent of the elimination code.
    fn cramer(m: &[Vec<i64>], rhs: &[Rational]) -> Vec<Rational> {
        fn det(m: &[Vec<Rational>]) -> Rational {
            if m.len() == 1 {
                return m[0][0].clone();
            }
            (0..m.len())
                .map(|c| {
                    let minor: Vec<Vec<Rational>> = m[1..]
                        .iter()
                        .map(|row| {
                            row.iter()
                                .enumerate()
                                .filter(|&(j, _)| j != c)
                                .map(|(_, x)| x.clone())
                                .collect()
                        })
                        .collect();
                    let term = &m[0][c] * det(&minor);
                    if c % 2 == 0 {
                        term
                    } else {
                        -term
                    }
                })
                .sum()
        }
        let mr: Vec<Vec<Rational>> = m
            .iter()
            .map(|r| r.iter().map(|&x| Rational::from_integer(x)).collect())
            .collect();
        let d = det(&mr);
        (0..m.len())
            .map(|c| {
                let mut mc = mr.clone();
                for (row, b) in mc.iter_mut().zip(rhs) {
                    row[c] = b.clone();
                }
                det(&mc) / &d
            })
            .collect()
    }

    #[test]
    fn du_val_a1() {
        let p = solve_log_discrepancies(&generate_chain(&[2]).unwrap()).unwrap();
        assert_eq!(p.values(), &[q(1, 1)]);
        assert_eq!(mld(&p), q(1, 1));
        assert_eq!(discrepancy_index(&p), BigInt::one());
        assert!(is_eps_lc(&p, &q(1, 1)));
    }

    #[test]
    fn single_curve_weight_n() {
        for n in [3u32, 4, 5, 6, 7, 10] {
            let p = solve_log_discrepancies(&generate_chain(&[n]).unwrap()).unwrap();
            assert_eq!(p.values(), &[q(2, n as i64)]);
            assert_eq!(*p.index(), q(2, n as i64).denom().clone());
        }
    }

    #[test]
    fn chain_three_four_against_cramer() {
        let g = generate_chain(&[3, 4]).unwrap();
        let (m, rhs) = discrepancy_system(&g);
        let expected = cramer(&m, &rhs);
        assert_eq!(expected, vec![q(5, 11), q(4, 11)]);
        let p = solve_log_discrepancies(&g).unwrap();
        assert_eq!(p.values(), expected.as_slice());
        assert_eq!(mld(&p), q(4, 11));
        assert_eq!(*p.index(), BigInt::from(11));
        assert_eq!(p.valley(), Some(2));
        assert!(!is_eps_lc(&p, &q(1, 2)));
        assert!(is_eps_lc(&p, &q(4, 11)));
        assert!(residuals(&g, &p).iter().all(Rational::is_zero));
    }

    #[test]
    fn boundary_enters_rhs() {
        let g = generate_chain(&[3])
            .unwrap()
            .with_boundary("c", q(1, 2), "e1")
            .unwrap();
        // 3a = 2 − 1/2
        let p = solve_log_discrepancies(&g).unwrap();
        assert_eq!(p.values(), &[q(1, 2)]);
    }

    #[test]
    fn empty_graph_is_smooth_point() {
        let p = solve_log_discrepancies(&DualGraph::empty()).unwrap();
        assert_eq!(mld(&p), q(1, 1));
        assert_eq!(discrepancy_index(&p), BigInt::one());
    }

    #[test]
    fn non_contractible_rejected() {
        let g = generate_chain(&[1, 1]).unwrap();
        assert_eq!(
            solve_log_discrepancies(&g),
            Err(DiscrepancyError::NotContractible)
        );
        let g = parse_graph("curve a w=2\ncurve b w=2").unwrap();
        assert!(matches!(
            solve_log_discrepancies(&g),
            Err(DiscrepancyError::Graph(GraphError::Disconnected))
        ));
    }

    #[test]
    fn closed_form_small_cases() {
        let c2 = chain_closed_form(2).unwrap();
        assert_eq!(c2.t, q(1, 11));
        assert_eq!(c2.profile.values(), &[q(5, 11), q(4, 11)]);
        let c3 = chain_closed_form(3).unwrap();
        assert_eq!(c3.t, q(1, 17));
        let g = generate_chain(&[3, 2, 4]).unwrap();
        let (m, rhs) = discrepancy_system(&g);
        assert_eq!(cramer(&m, &rhs), vec![q(8, 17), q(7, 17), q(6, 17)]);
        assert_eq!(c3.profile.values(), &[q(8, 17), q(7, 17), q(6, 17)]);
        assert_eq!(
            chain_closed_form(1),
            Err(DiscrepancyError::ChainTooShort(1))
        );
    }

    #[test]
    fn closed_form_matches_solver() {
        for r in 2..=30 {
            let g = generate_chain(&chain_weights_3_2_4(r)).unwrap();
            assert_eq!(
                chain_closed_form(r).unwrap().profile,
                solve_log_discrepancies(&g).unwrap(),
                "r = {r}"
            );
        }
    }

    #[test]
    fn bound_report_examples() {
        let g = generate_chain(&[3, 4]).unwrap();
        let p = solve_log_discrepancies(&g).unwrap();
        let b = bound_report(&p, &g, &q(4, 11)).unwrap();
        assert_eq!(b.l + b.l_prime, 2);
        assert!(b.l_within && b.sum_within);

        let g = generate_chain(&[2, 2, 2, 2]).unwrap();
        let p = solve_log_discrepancies(&g).unwrap();
        let b = bound_report(&p, &g, &q(1, 1)).unwrap();
        assert_eq!((b.l, b.l_prime), (0, 0));

        let g = generate_chain(&[3, 2, 4]).unwrap();
        let p = solve_log_discrepancies(&g).unwrap();
        let b = bound_report(&p, &g, p.mld()).unwrap();
        assert!(b.l_within && b.sum_within);

        assert_eq!(
            bound_report(&p, &generate_fork(&[2, 2]).unwrap(), &q(1, 2)),
            Err(DiscrepancyError::NotChain)
        );
    }

    #[test]
    fn dr_reduce_d4() {
        let g = generate_fork(&[2, 2]).unwrap();
        let red = dr_reduce(&g).unwrap();
        assert_eq!(red.matrix, vec![vec![1, -1], vec![-1, 2]]);
        let full = red.solve_full().unwrap();
        assert!(full.values().iter().all(|a| *a == 1));
        assert_eq!(full, solve_log_discrepancies(&g).unwrap());
    }

    #[test]
    fn dr_reduce_equals_full_solve() {
        for r in 2..=6 {
            let mut ws = vec![3];
            ws.extend(std::iter::repeat_n(2, r - 1));
            let g = generate_fork(&ws).unwrap();
            let red = dr_reduce(&g).unwrap();
            let chain = red.solve().unwrap();
            let full = solve_log_discrepancies(&g).unwrap();
            assert_eq!(red.back_substitute(&chain), full);
            let leaf = full.get("f1").unwrap();
            assert_eq!(
                *leaf,
                (&chain[0] + Rational::one()) / Rational::from_integer(2)
            );
        }
        assert_eq!(
            dr_reduce(&generate_chain(&[2, 2]).unwrap()),
            Err(DiscrepancyError::NotFork)
        );
    }

    #[test]
    fn e_types_have_zero_residual() {
        for f in 1..=15 {
            for p in 2..=8 {
                let g = generate_e_type(f, p).unwrap();
                let prof = solve_log_discrepancies(&g).unwrap();
                assert!(residuals(&g, &prof).iter().all(Rational::is_zero));
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = solve_log_discrepancies(&generate_chain(&[3, 4]).unwrap()).unwrap();
        let csv = p.to_csv();
        assert_eq!(csv, "id,a\ne1,5/11\ne2,4/11\nmld,4/11\nindex,11\n");
        let back = DiscrepancyProfile::from_csv(&csv).unwrap();
        assert_eq!(back.values(), p.values());
        assert_eq!(back.mld(), p.mld());
        assert!(DiscrepancyProfile::from_csv("id,a\ne1,1/2\nmld,1/3\nindex,2\n").is_err());
    }
}
