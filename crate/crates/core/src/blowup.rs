//! Smooth models over a solved singularity: blow-ups, blow-downs and the
//! negativity function `N(G) = (K + ω)·G`.
//!
//! Coefficients are fixed when a model is created from a solved graph
//! (`c = 1 − a`) and are pushed down unchanged afterwards.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::discrepancy::{DiscrepancyError, DiscrepancyProfile};
use crate::dual_graph::{CurveNode, DualGraph, NodeKind, SingularityClass};
use crate::linalg;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlowupError {
    #[error("unknown curve `{0}`")]
    UnknownId(String),
    #[error("curve `{id}` has self-intersection {self_int}, not -1")]
    NotMinusOne { id: String, self_int: i64 },
    #[error("curve `{0}` is a boundary component")]
    BoundaryCurve(String),
    #[error("curves `{0}` and `{1}` do not meet")]
    Disjoint(String, String),
    #[error("a double blow-up needs two distinct curves")]
    SameCurve,
    #[error("id `{0}` already in use")]
    DuplicateId(String),
    #[error("profile does not match graph: {0}")]
    Mismatch(String),
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("models are not related by the move: {0}")]
    Unrelated(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Discrepancy(#[from] DiscrepancyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveKind {
    /// Exceptional over the singularity, `c = 1 − a`.
    Exceptional,
    /// A `-1` curve contracted over the base but not over the singularity; `c = 0`.
    TypeF,
    /// Boundary component; contributes `c·(B·G)` to negativity.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelCurve {
    pub id: String,
    pub kind: CurveKind,
    pub coeff: Rational,
}

impl ModelCurve {
    /// Log discrepancy `a = 1 − c`.
    pub fn a(&self) -> Rational {
        Rational::one() - &self.coeff
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Center {
    OnCurve(String),
    OnIntersection(String, String),
}

/// A recorded tower move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Down(String),
    Up {
        center: Center,
        a_new: Rational,
        new_id: String,
    },
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Down(id) => write!(f, "down {id}"),
            Move::Up {
                center: Center::OnCurve(b),
                a_new,
                ..
            } => write!(f, "up-on {b} a={a_new}"),
            Move::Up {
                center: Center::OnIntersection(b, g),
                a_new,
                ..
            } => write!(f, "up-between {b} {g} a={a_new}"),
        }
    }
}

/// Curves, their symmetric intersection matrix (self-intersections on the
/// diagonal) and the log of moves applied since creation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmoothModel {
    curves: Vec<ModelCurve>,
    matrix: Vec<Vec<i64>>,
    provenance: Vec<Move>,
}

impl SmoothModel {
    pub fn new(curves: Vec<ModelCurve>, matrix: Vec<Vec<i64>>) -> Self {
        assert_eq!(curves.len(), matrix.len());
        SmoothModel {
            curves,
            matrix,
            provenance: Vec::new(),
        }
    }

    pub fn curves(&self) -> &[ModelCurve] {
        &self.curves
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn provenance(&self) -> &[Move] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, BlowupError> {
        self.curves
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| BlowupError::UnknownId(id.to_string()))
    }

    pub fn curve(&self, id: &str) -> Result<&ModelCurve, BlowupError> {
        Ok(&self.curves[self.index_of(id)?])
    }

    pub fn self_int(&self, id: &str) -> Result<i64, BlowupError> {
        let i = self.index_of(id)?;
        Ok(self.matrix[i][i])
    }

    pub fn intersection(&self, x: &str, y: &str) -> Result<i64, BlowupError> {
        Ok(self.matrix[self.index_of(x)?][self.index_of(y)?])
    }

    pub fn is_minus_one(&self, i: usize) -> bool {
        self.curves[i].kind != CurveKind::Boundary && self.matrix[i][i] == -1
    }

    /// Ids of the contractible `-1` curves, in model order.
    pub fn minus_one_curves(&self) -> Vec<String> {
        (0..self.len())
            .filter(|&i| self.is_minus_one(i))
            .map(|i| self.curves[i].id.clone())
            .collect()
    }

    /// Exceptional and type-F curves: the ones counted by negativity totals.
    pub fn counted(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.curves[i].kind != CurveKind::Boundary)
    }

    /// Curves and matrix agree; provenance is ignored.
    pub fn same_geometry(&self, other: &SmoothModel) -> bool {
        self.curves == other.curves && self.matrix == other.matrix
    }

    /// Negative definiteness of the matrix restricted to non-boundary curves.
    pub fn is_contractible(&self) -> bool {
        let idx: Vec<usize> = self.counted().collect();
        let m: Vec<Vec<i64>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.matrix[i][j]).collect())
            .collect();
        linalg::is_negative_definite(&linalg::to_big(&m))
    }

    fn fresh_id(&self) -> String {
        let used: BTreeSet<&str> = self.curves.iter().map(|c| c.id.as_str()).collect();
        (1..)
            .map(|k| format!("G{k}"))
            .find(|id| !used.contains(id.as_str()))
            .unwrap()
    }

    /// Attaches a `-1` curve with `c = 0` meeting `target` once.
    pub fn with_type_f(&self, id: &str, target: &str) -> Result<SmoothModel, BlowupError> {
        if self.index_of(id).is_ok() {
            return Err(BlowupError::DuplicateId(id.to_string()));
        }
        let t = self.index_of(target)?;
        let mut out = self.clone();
        let n = out.len();
        for (i, row) in out.matrix.iter_mut().enumerate() {
            row.push(i64::from(i == t));
        }
        let mut row: Vec<i64> = (0..n).map(|i| i64::from(i == t)).collect();
        row.push(-1);
        out.matrix.push(row);
        out.curves.push(ModelCurve {
            id: id.to_string(),
            kind: CurveKind::TypeF,
            coeff: Rational::zero(),
        });
        Ok(out)
    }

    /// Subgraph of exceptional curves as a dual graph with weights `-C²`;
    /// `None` if some self-intersection is non-negative.
    fn exceptional_subgraph(&self, members: &[usize]) -> Option<DualGraph> {
        let mut nodes = Vec::new();
        for &i in members {
            let w = (-self.matrix[i][i]).to_u32().filter(|&w| w > 0)?;
            nodes.push(CurveNode::exceptional(self.curves[i].id.clone(), w));
        }
        let mut edges = Vec::new();
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                let m = self.matrix[i][j];
                if m > 0 {
                    edges.push((
                        self.curves[i].id.clone(),
                        self.curves[j].id.clone(),
                        m as u32,
                    ));
                }
            }
        }
        DualGraph::new(nodes, edges).ok()
    }

    /// Connected components of the exceptional (not type-F) curves.
    pub fn exceptional_components(&self) -> Vec<Vec<usize>> {
        let exc: Vec<usize> = (0..self.len())
            .filter(|&i| self.curves[i].kind == CurveKind::Exceptional)
            .collect();
        let mut seen = vec![false; self.len()];
        let mut comps = Vec::new();
        for &s in &exc {
            if seen[s] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &u in &exc {
                    if !seen[u] && u != v && self.matrix[v][u] > 0 {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// `id,kind,self_int,c` per curve, then `x,y,m` per positive intersection.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,kind,self_int,c\n");
        for (i, c) in self.curves.iter().enumerate() {
            let kind = match c.kind {
                CurveKind::Exceptional => "exceptional",
                CurveKind::TypeF => "type-f",
                CurveKind::Boundary => "boundary",
            };
            writeln!(out, "{},{},{},{}", c.id, kind, self.matrix[i][i], c.coeff).unwrap();
        }
        out
    }
}

/// Top model of a solved graph: exceptional curves with `c = 1 − a` and
/// boundary components with `c = b`.
pub fn model_from_solved_graph(
    graph: &DualGraph,
    profile: &DiscrepancyProfile,
) -> Result<SmoothModel, BlowupError> {
    let exc = graph.exceptional();
    if profile.len() != exc.len() {
        return Err(BlowupError::Mismatch(format!(
            "{} values for {} curves",
            profile.len(),
            exc.len()
        )));
    }
    let n = graph.nodes().len();
    let mut curves = Vec::with_capacity(n);
    for node in graph.nodes() {
        let curve = match &node.kind {
            NodeKind::Exceptional { .. } => {
                let a = profile
                    .get(&node.id)
                    .ok_or_else(|| BlowupError::Mismatch(format!("no value for `{}`", node.id)))?;
                ModelCurve {
                    id: node.id.clone(),
                    kind: CurveKind::Exceptional,
                    coeff: Rational::one() - a,
                }
            }
            NodeKind::Boundary { coeff } => ModelCurve {
                id: node.id.clone(),
                kind: CurveKind::Boundary,
                coeff: coeff.clone(),
            },
        };
        curves.push(curve);
    }
    let matrix: Vec<Vec<i64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        graph.weight(i).map_or(0, |w| -i64::from(w))
                    } else {
                        i64::from(graph.multiplicity(i, j))
                    }
                })
                .collect()
        })
        .collect();
    let model = SmoothModel::new(curves, matrix);
    for i in model.counted().collect::<Vec<_>>() {
        if model.curves[i].kind == CurveKind::Exceptional && !negativity_at(&model, i).is_zero() {
            return Err(BlowupError::Mismatch(format!(
                "profile does not solve the system at `{}`",
                model.curves[i].id
            )));
        }
    }
    Ok(model)
}

fn negativity_at(model: &SmoothModel, g: usize) -> Rational {
    let mut n = Rational::from_integer(-2 - model.matrix[g][g]);
    for (j, c) in model.curves.iter().enumerate() {
        let m = model.matrix[j][g];
        if m != 0 {
            n += c.coeff.mul_int(m);
        }
    }
    n
}

/// `N(G) = (−2 − G²) + Σ_j c_j·(G_j·G)`, the sum including `G` itself.
pub fn negativity(model: &SmoothModel, id: &str) -> Result<Rational, BlowupError> {
    Ok(negativity_at(model, model.index_of(id)?))
}

/// Sum of `N` over exceptional and type-F curves.
pub fn total_negativity(model: &SmoothModel) -> Rational {
    model.counted().map(|i| negativity_at(model, i)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativityReport {
    pub per_curve: Vec<(String, Rational)>,
    pub total: Rational,
    /// Exceptional components with their summed negativity.
    pub components: Vec<(Vec<String>, Rational)>,
}

pub fn negativity_report(model: &SmoothModel) -> NegativityReport {
    let per_curve: Vec<(String, Rational)> = model
        .counted()
        .map(|i| (model.curves[i].id.clone(), negativity_at(model, i)))
        .collect();
    let total = per_curve.iter().map(|(_, n)| n).sum();
    let components = model
        .exceptional_components()
        .into_iter()
        .map(|comp| {
            let ids = comp.iter().map(|&i| model.curves[i].id.clone()).collect();
            let sum = comp.iter().map(|&i| negativity_at(model, i)).sum();
            (ids, sum)
        })
        .collect();
    NegativityReport {
        per_curve,
        total,
        components,
    }
}

/// Contracts a `-1` curve `F`: `C·D += (C·F)(D·F)` for all remaining `C, D`
/// (including `C = D`). Coefficients are unchanged.
pub fn blow_down(model: &SmoothModel, id: &str) -> Result<SmoothModel, BlowupError> {
    let f = model.index_of(id)?;
    if model.curves[f].kind == CurveKind::Boundary {
        return Err(BlowupError::BoundaryCurve(id.to_string()));
    }
    if model.matrix[f][f] != -1 {
        return Err(BlowupError::NotMinusOne {
            id: id.to_string(),
            self_int: model.matrix[f][f],
        });
    }
    let keep: Vec<usize> = (0..model.len()).filter(|&i| i != f).collect();
    let matrix = keep
        .iter()
        .map(|&i| {
            keep.iter()
                .map(|&j| model.matrix[i][j] + model.matrix[i][f] * model.matrix[j][f])
                .collect()
        })
        .collect();
    let curves = keep.iter().map(|&i| model.curves[i].clone()).collect();
    let mut provenance = model.provenance.clone();
    provenance.push(Move::Down(id.to_string()));
    Ok(SmoothModel {
        curves,
        matrix,
        provenance,
    })
}

/// Blows up a general point of one curve or the intersection point of two.
/// The new curve `E` gets an auto-generated id `G<k>`, self-intersection
/// `-1` and `c = 1 − a_new`; see [`blow_up_as`] to choose the id.
pub fn blow_up(
    model: &SmoothModel,
    center: &Center,
    a_new: &Rational,
) -> Result<SmoothModel, BlowupError> {
    blow_up_as(model, center, a_new, &model.fresh_id())
}

pub fn blow_up_as(
    model: &SmoothModel,
    center: &Center,
    a_new: &Rational,
    new_id: &str,
) -> Result<SmoothModel, BlowupError> {
    if model.index_of(new_id).is_ok() {
        return Err(BlowupError::DuplicateId(new_id.to_string()));
    }
    let cited: Vec<usize> = match center {
        Center::OnCurve(b) => vec![model.index_of(b)?],
        Center::OnIntersection(b, g) => {
            let (i, j) = (model.index_of(b)?, model.index_of(g)?);
            if i == j {
                return Err(BlowupError::SameCurve);
            }
            if model.matrix[i][j] < 1 {
                return Err(BlowupError::Disjoint(b.clone(), g.clone()));
            }
            vec![i, j]
        }
    };
    for &i in &cited {
        if model.curves[i].kind == CurveKind::Boundary {
            return Err(BlowupError::BoundaryCurve(model.curves[i].id.clone()));
        }
    }
    let n = model.len();
    let mut matrix = model.matrix.clone();
    for &i in &cited {
        matrix[i][i] -= 1;
    }
    if let [i, j] = cited[..] {
        matrix[i][j] -= 1;
        matrix[j][i] -= 1;
    }
    for (i, row) in matrix.iter_mut().enumerate() {
        row.push(i64::from(cited.contains(&i)));
    }
    let mut row: Vec<i64> = (0..n).map(|i| i64::from(cited.contains(&i))).collect();
    row.push(-1);
    matrix.push(row);
    let mut curves = model.curves.clone();
    curves.push(ModelCurve {
        id: new_id.to_string(),
        kind: CurveKind::Exceptional,
        coeff: Rational::one() - a_new,
    });
    let mut provenance = model.provenance.clone();
    provenance.push(Move::Up {
        center: center.clone(),
        a_new: a_new.clone(),
        new_id: new_id.to_string(),
    });
    Ok(SmoothModel {
        curves,
        matrix,
        provenance,
    })
}

/// Crepant log discrepancy for a move: `a_β + a_γ` or `a_β + 1`.
pub fn crepant_a(model: &SmoothModel, center: &Center) -> Result<Rational, BlowupError> {
    match center {
        Center::OnCurve(b) => Ok(model.curve(b)?.a() + Rational::one()),
        Center::OnIntersection(b, g) => Ok(model.curve(b)?.a() + model.curve(g)?.a()),
    }
}

/// Applies a move; for `Up` the recorded `new_id` is reused.
pub fn apply_move(model: &SmoothModel, mv: &Move) -> Result<SmoothModel, BlowupError> {
    match mv {
        Move::Down(id) => blow_down(model, id),
        Move::Up {
            center,
            a_new,
            new_id,
        } => blow_up_as(model, center, a_new, new_id),
    }
}

/// Parses a tower script: `down <id>`, `up-on <id> a=<r>`,
/// `up-between <id> <id> a=<r>`. Blank lines and `#` comments are skipped.
/// New ids are assigned while replaying, so the result is applied with
/// [`replay`].
pub fn parse_script(text: &str) -> Result<Vec<ScriptMove>, BlowupError> {
    let mut moves = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| BlowupError::Script {
            line: lineno + 1,
            message,
        };
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parse_a = |tok: &str| -> Result<Rational, BlowupError> {
            let v = tok
                .strip_prefix("a=")
                .ok_or_else(|| err(format!("expected a=<rational>, found `{tok}`")))?;
            v.parse().map_err(|e| err(format!("{e}")))
        };
        let mv = match parts.as_slice() {
            ["down", id] => ScriptMove::Down(id.to_string()),
            ["up-on", id, a] => ScriptMove::Up(Center::OnCurve(id.to_string()), parse_a(a)?),
            ["up-between", x, y, a] => ScriptMove::Up(
                Center::OnIntersection(x.to_string(), y.to_string()),
                parse_a(a)?,
            ),
            _ => return Err(err(format!("unrecognised move `{line}`"))),
        };
        moves.push(mv);
    }
    Ok(moves)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptMove {
    Down(String),
    Up(Center, Rational),
}

/// One row group of a trace: the model after `step` moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub step: usize,
    pub mv: Option<Move>,
    pub report: NegativityReport,
}

/// Replays a script from `start`, recording negativity after every step
/// (step 0 is the start model).
pub fn replay(
    start: &SmoothModel,
    script: &[ScriptMove],
) -> Result<(SmoothModel, Vec<TraceStep>), BlowupError> {
    let mut model = start.clone();
    let mut trace = vec![TraceStep {
        step: 0,
        mv: None,
        report: negativity_report(&model),
    }];
    for (k, sm) in script.iter().enumerate() {
        model = match sm {
            ScriptMove::Down(id) => blow_down(&model, id),
            ScriptMove::Up(center, a) => blow_up(&model, center, a),
        }
        .map_err(|e| BlowupError::Script {
            line: k + 1,
            message: e.to_string(),
        })?;
        trace.push(TraceStep {
            step: k + 1,
            mv: model.provenance.last().cloned(),
            report: negativity_report(&model),
        });
    }
    Ok((model, trace))
}

/// Long-format trace: `step,move,curve,N,total`.
pub fn trace_csv(trace: &[TraceStep]) -> String {
    let mut out = String::from("step,move,curve,N,total\n");
    for t in trace {
        let mv =
            t.mv.as_ref()
                .map_or_else(|| "start".to_string(), Move::to_string);
        for (id, n) in &t.report.per_curve {
            writeln!(out, "{},{},{},{},{}", t.step, mv, id, n, t.report.total).unwrap();
        }
    }
    out
}

/// Per-identity outcome of the blow-up negativity identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma3BReport {
    pub double: bool,
    /// `(name, holds)` in a fixed order.
    pub identities: Vec<(&'static str, bool)>,
    pub n_alpha: Rational,
}

impl Lemma3BReport {
    pub fn all_hold(&self) -> bool {
        self.identities.iter().all(|(_, ok)| *ok)
    }
}

/// Checks the exact negativity identities for `after = blow_up(before, mv)`.
///
/// Double: `N(α) = a_α − a_β − a_γ`, `N'(β) = N(β) − N(α)`, the same for `γ`,
/// and `total' = total − N(α)`. Single: `N(α) = a_α − a_β − 1`,
/// `N'(β) = N(β) − N(α)`, and `total' = total`.
pub fn check_lemma_3b(
    before: &SmoothModel,
    after: &SmoothModel,
    mv: &Move,
) -> Result<Lemma3BReport, BlowupError> {
    let Move::Up {
        center,
        a_new,
        new_id,
    } = mv
    else {
        return Err(BlowupError::Unrelated("not a blow-up".into()));
    };
    let expected = blow_up_as(before, center, a_new, new_id)?;
    if !expected.same_geometry(after) {
        return Err(BlowupError::Unrelated(
            "after differs from the blow-up".into(),
        ));
    }
    let n_alpha = negativity(after, new_id)?;
    let delta_total = total_negativity(after) - total_negativity(before);
    let shift = |id: &str| -> Result<bool, BlowupError> {
        Ok(negativity(after, id)? == negativity(before, id)? - &n_alpha)
    };
    let a_alpha = after.curve(new_id)?.a();
    let report = match center {
        Center::OnIntersection(b, g) => {
            let formula = &a_alpha - before.curve(b)?.a() - before.curve(g)?.a();
            Lemma3BReport {
                double: true,
                identities: vec![
                    ("N(alpha)=a_alpha-a_beta-a_gamma", n_alpha == formula),
                    ("N'(beta)=N(beta)-N(alpha)", shift(b)?),
                    ("N'(gamma)=N(gamma)-N(alpha)", shift(g)?),
                    ("total'=total-N(alpha)", delta_total == -&n_alpha),
                ],
                n_alpha,
            }
        }
        Center::OnCurve(b) => {
            let formula = &a_alpha - before.curve(b)?.a() - Rational::one();
            Lemma3BReport {
                double: false,
                identities: vec![
                    ("N(alpha)=a_alpha-a_beta-1", n_alpha == formula),
                    ("N'(beta)=N(beta)-N(alpha)", shift(b)?),
                    ("total'=total", delta_total.is_zero()),
                ],
                n_alpha,
            }
        }
    };
    Ok(report)
}

/// Strictly increasing log discrepancies along the chain from either end,
/// or a single curve.
pub fn is_strictly_monotonic(values: &[Rational]) -> bool {
    values.len() == 1
        || values.windows(2).all(|w| w[0] < w[1])
        || values.windows(2).all(|w| w[0] > w[1])
}

/// Like [`is_strictly_monotonic`] but reading from a chosen base end.
pub fn is_strictly_monotonic_from_base(values: &[Rational]) -> bool {
    values.len() == 1 || values.windows(2).all(|w| w[0] < w[1])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComponentShape {
    Chain {
        monotonic: bool,
    },
    Fork,
    EType,
    /// Contains a `-1` curve.
    NonMinimal,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentCheck {
    pub ids: Vec<String>,
    pub shape: ComponentShape,
    pub sum: Rational,
    pub min_curve: Rational,
    /// Whether a bound was asserted on this component.
    pub asserted: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma3AReport {
    /// Every counted curve has `N ≤ 0`.
    pub nonpositive: bool,
    pub components: Vec<ComponentCheck>,
}

impl Lemma3AReport {
    pub fn holds(&self) -> bool {
        self.nonpositive && self.components.iter().all(|c| c.holds)
    }
}

/// Negativity bounds on the minimal exceptional components of a model:
/// forks need `sum ≥ δ−1`; chains that are not strictly monotonic need
/// `sum ≥ 2(δ−1)`; E-shaped ones and both of these need `N(G) ≥ δ−1` for
/// every curve. Strictly monotonic chains are reported only.
pub fn check_lemma_3a(model: &SmoothModel, delta: &Rational) -> Lemma3AReport {
    let one = Rational::one();
    let per_curve_floor = delta - &one;
    let nonpositive = model
        .counted()
        .all(|i| !negativity_at(model, i).is_positive());
    let mut components = Vec::new();
    for comp in model.exceptional_components() {
        let ids: Vec<String> = comp.iter().map(|&i| model.curves[i].id.clone()).collect();
        let ns: Vec<Rational> = comp.iter().map(|&i| negativity_at(model, i)).collect();
        let sum: Rational = ns.iter().sum();
        let min_curve = ns.iter().min().cloned().unwrap();
        let shape = if comp.iter().any(|&i| model.matrix[i][i] >= -1) {
            ComponentShape::NonMinimal
        } else {
            match model.exceptional_subgraph(&comp).and_then(|g| {
                let class = g.classify().ok()?;
                Some((g, class))
            }) {
                Some((g, SingularityClass::A(_))) => {
                    let order = g.chain_order().unwrap();
                    let a: Vec<Rational> = order
                        .iter()
                        .map(|&k| model.curve(g.id(k)).unwrap().a())
                        .collect();
                    ComponentShape::Chain {
                        monotonic: is_strictly_monotonic(&a),
                    }
                }
                Some((_, SingularityClass::D(_))) => ComponentShape::Fork,
                Some((_, SingularityClass::E { .. })) => ComponentShape::EType,
                _ => ComponentShape::Other,
            }
        };
        let curve_ok = min_curve >= per_curve_floor;
        let (asserted, holds) = match shape {
            ComponentShape::Fork => (true, curve_ok && sum >= per_curve_floor),
            ComponentShape::Chain { monotonic: false } => {
                (true, curve_ok && sum >= per_curve_floor.mul_int(2))
            }
            ComponentShape::EType => (true, curve_ok),
            _ => (false, true),
        };
        components.push(ComponentCheck {
            ids,
            shape,
            sum,
            min_curve,
            asserted,
            holds,
        });
    }
    Lemma3AReport {
        nonpositive,
        components,
    }
}

/// For an admissible single blow-up of `β` (every `N ≤ 0` afterwards) with
/// `N_before(β) ≥ δ − 1`, returns the margin `a_α − a_β − δ`, which must be
/// non-negative.
pub fn check_cor_3c(
    before: &SmoothModel,
    after: &SmoothModel,
    mv: &Move,
    delta: &Rational,
) -> Result<Rational, BlowupError> {
    let Move::Up {
        center: Center::OnCurve(b),
        a_new,
        new_id,
    } = mv
    else {
        return Err(BlowupError::Precondition("not a single blow-up".into()));
    };
    let expected = blow_up_as(before, &Center::OnCurve(b.clone()), a_new, new_id)?;
    if !expected.same_geometry(after) {
        return Err(BlowupError::Unrelated(
            "after differs from the blow-up".into(),
        ));
    }
    if negativity(before, b)? < delta - Rational::one() {
        return Err(BlowupError::Precondition(format!("N({b}) < δ − 1")));
    }
    if after
        .counted()
        .any(|i| negativity_at(after, i).is_positive())
    {
        return Err(BlowupError::Precondition("move is not admissible".into()));
    }
    Ok(after.curve(new_id)?.a() - before.curve(b)?.a() - delta)
}

/// One recorded double blow-up with the log discrepancies involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleStep {
    pub alpha: String,
    pub beta: String,
    pub gamma: String,
    pub a_alpha: Rational,
    pub a_beta: Rational,
    pub a_gamma: Rational,
}

impl DoubleStep {
    pub fn n_alpha(&self) -> Rational {
        &self.a_alpha - &self.a_beta - &self.a_gamma
    }
}

/// `⌈2(1−δ)/δ⌉`
pub fn double_run_bound(delta: &Rational) -> u64 {
    ((Rational::one() - delta).mul_int(2) / delta)
        .ceil()
        .to_u64()
        .expect("small bound")
}

/// Length of a nested run of double blow-ups and whether it respects
/// [`double_run_bound`]. Each step after the first must blow up a point on
/// the previous step's new curve; every step needs `N(α) ≥ −δ/2` and all
/// log discrepancies in `[δ, 1]`.
pub fn count_double_run(
    steps: &[DoubleStep],
    delta: &Rational,
) -> Result<(u64, u64, bool), BlowupError> {
    let half = delta / Rational::new(2, 1);
    let one = Rational::one();
    for (k, s) in steps.iter().enumerate() {
        if k > 0 {
            let prev = &steps[k - 1].alpha;
            if &s.beta != prev && &s.gamma != prev {
                return Err(BlowupError::Precondition(format!(
                    "step {} is not nested",
                    k + 1
                )));
            }
        }
        if s.n_alpha() < -&half {
            return Err(BlowupError::Precondition(format!(
                "step {} has N(α) < −δ/2",
                k + 1
            )));
        }
        for a in [&s.a_alpha, &s.a_beta, &s.a_gamma] {
            if a < delta || *a > one {
                return Err(BlowupError::Precondition(format!(
                    "step {}: a = {a} outside [δ,1]",
                    k + 1
                )));
            }
        }
    }
    let bound = double_run_bound(delta);
    let len = steps.len() as u64;
    Ok((len, bound, len <= bound))
}
