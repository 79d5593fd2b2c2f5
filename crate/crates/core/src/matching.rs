//! Target-to-model cost between two CCSS images.
//!
//! The target is first moved horizontally by a global shift estimated from
//! nearest-point associations. Each row and family is then scored by the
//! cheapest injective assignment between the two point sets (the Recursive
//! Matching Matrix search) plus a penalty per unmatched point. The total is
//! the sum over all rows of both families.

use alloc::vec;
use alloc::vec::Vec;

use crate::scale_space::{
    build_ccss, threshold_shallow, CcssImage, CcssRow, ExtremumKind, ScalePoint,
};
use crate::silhouette::NormalizedSilhouette;
use crate::{Error, Result};

/// Largest row count searched by branch and bound; bigger matrices go
/// through the Hungarian method.
const EXACT_SEARCH_ROWS: usize = 9;

/// A single association pass misses the true offset as soon as a
/// neighbouring point lies closer than the offset itself; a few re-centred
/// passes settle on it.
pub const DEFAULT_SHIFT_ITERATIONS: usize = 8;

/// The `(x, c)` pairs of one family in one row, sorted by `x`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowPoints {
    entries: Vec<(f64, f64)>,
}

impl RowPoints {
    /// Sorts the entries by position. Non-finite values are rejected.
    pub fn new(mut entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.iter().any(|&(x, c)| !x.is_finite() || !c.is_finite()) {
            return Err(Error::InvalidParameter("row points must be finite"));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { entries })
    }

    pub fn from_points(points: &[ScalePoint]) -> Self {
        let mut entries: Vec<(f64, f64)> = points.iter().map(|p| (p.x_deck, p.c)).collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { entries }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    /// Weight of the position difference against the concavity difference.
    pub alpha: f64,
    /// Penalty gain per unmatched point.
    pub sigma_gain: f64,
    /// Unit in which positions and concavities are expressed, relative to
    /// the scale the gain was tuned for (0.01: percent of length).
    pub unit: f64,
    /// Association passes of the shift estimate; 1 is a single
    /// nearest-point pass, see [`refined_shift`].
    pub shift_iterations: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self::from_alpha(0.2)
    }
}

impl MatchParams {
    /// `alpha` with the gain tied to it as `sigma_gain = 70 * alpha`.
    pub fn from_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            sigma_gain: 70.0 * alpha,
            unit: 0.01,
            shift_iterations: DEFAULT_SHIFT_ITERATIONS,
        }
    }

    /// Cost of one unmatched point.
    pub fn penalty(&self) -> f64 {
        self.sigma_gain * self.unit
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 1]"));
        }
        if !(self.sigma_gain >= 0.0) || !self.sigma_gain.is_finite() {
            return Err(Error::InvalidParameter("sigma_gain must be finite and non-negative"));
        }
        if !(self.unit > 0.0) || !self.unit.is_finite() {
            return Err(Error::InvalidParameter("unit must be finite and positive"));
        }
        if self.shift_iterations == 0 {
            return Err(Error::InvalidParameter("shift_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Dense row-major cost matrix with `rows <= cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    transposed: bool,
}

impl CostMatrix {
    /// Wraps row-major data. Fails when `rows > cols`, when the length does
    /// not match, or when a cell is negative or not finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows > cols {
            return Err(Error::InvalidParameter("cost matrix needs rows <= cols"));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter("cost matrix size mismatch"));
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("cost cells must be finite and non-negative"));
        }
        Ok(Self {
            rows,
            cols,
            data,
            transposed: false,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// True when rows hold model points and columns target points.
    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    /// The matrix without row 0 and column `col`.
    pub fn eliminate(&self, col: usize) -> CostMatrix {
        let mut data = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for r in 1..self.rows {
            for (c, &v) in self.row(r).iter().enumerate() {
                if c != col {
                    data.push(v);
                }
            }
        }
        CostMatrix {
            rows: self.rows - 1,
            cols: self.cols - 1,
            data,
            transposed: self.transposed,
        }
    }
}

/// `alpha * |dx| + (1 - alpha) * |dc|` for every target/model pair, with
/// the smaller set on the rows.
pub fn rmm_matrix(target: &RowPoints, model: &RowPoints, alpha: f64) -> CostMatrix {
    let transposed = target.len() > model.len();
    let (rs, cs) = if transposed {
        (model, target)
    } else {
        (target, model)
    };
    let mut data = Vec::with_capacity(rs.len() * cs.len());
    for &(rx, rc) in rs.entries() {
        for &(cx, cc) in cs.entries() {
            data.push(alpha * (rx - cx).abs() + (1.0 - alpha) * (rc - cc).abs());
        }
    }
    CostMatrix {
        rows: rs.len(),
        cols: cs.len(),
        data,
        transposed,
    }
}

/// Sum of the chosen cells in the order the recursive search adds them:
/// `c0 + (c1 + (... + c_last))`. Fixing the order keeps every search
/// strategy bit-compatible with the plain recursion.
fn assignment_sum(m: &CostMatrix, cols: &[usize]) -> f64 {
    cols.iter()
        .enumerate()
        .rev()
        .fold(0.0, |acc, (r, &c)| m.get(r, c) + acc)
}

/// The literal recursion: for every column of row 0, add its cell to the
/// optimum of the matrix without that row and column. No pruning; cost
/// grows as `cols! / (cols - rows)!`.
pub fn rmm_exhaustive_cost(m: &CostMatrix) -> f64 {
    if m.rows == 0 {
        return 0.0;
    }
    (0..m.cols)
        .map(|i| m.get(0, i) + rmm_exhaustive_cost(&m.eliminate(i)))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum over all injective row-to-column assignments of the summed
/// cells; 0 for a matrix without rows.
///
/// Small matrices are searched exactly by branch and bound, with the
/// columns of each row tried cheapest first and branches cut when the
/// partial cost plus the row-minimum bound of the remaining rows cannot
/// beat the incumbent. The result equals [`rmm_exhaustive_cost`].
pub fn rmm_optimal_cost(m: &CostMatrix) -> f64 {
    if m.rows == 0 {
        return 0.0;
    }
    let cols = if m.rows <= EXACT_SEARCH_ROWS {
        branch_and_bound(m)
    } else {
        hungarian(m)
    };
    assignment_sum(m, &cols)
}

struct Search<'a> {
    m: &'a CostMatrix,
    order: Vec<Vec<usize>>,
    /// `bound[r]`: sum of the row minima of rows `r..`.
    bound: Vec<f64>,
    used: Vec<bool>,
    current: Vec<usize>,
    best: f64,
    best_cols: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, r: usize, partial: f64) {
        if r == self.m.rows {
            let total = assignment_sum(self.m, &self.current);
            if total < self.best {
                self.best = total;
                self.best_cols.clone_from(&self.current);
            }
            return;
        }
        for k in 0..self.m.cols {
            let c = self.order[r][k];
            if self.used[c] {
                continue;
            }
            let p = partial + self.m.get(r, c);
            // Partial sums are accumulated in a different order from the
            // final sum; the slack keeps rounding from cutting an optimum.
            let slack = 1e-12 * (self.best.abs() + 1e-300);
            if p + self.bound[r + 1] > self.best + slack {
                // Columns are sorted by cost, so later ones are worse.
                break;
            }
            self.used[c] = true;
            self.current.push(c);
            self.run(r + 1, p);
            self.current.pop();
            self.used[c] = false;
        }
    }
}

fn branch_and_bound(m: &CostMatrix) -> Vec<usize> {
    let order: Vec<Vec<usize>> = (0..m.rows)
        .map(|r| {
            let mut idx: Vec<usize> = (0..m.cols).collect();
            idx.sort_by(|&a, &b| m.get(r, a).total_cmp(&m.get(r, b)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut bound = vec![0.0; m.rows + 1];
    for r in (0..m.rows).rev() {
        bound[r] = bound[r + 1] + m.get(r, order[r][0]);
    }
    let mut s = Search {
        m,
        order,
        bound,
        used: vec![false; m.cols],
        current: Vec::with_capacity(m.rows),
        best: f64::INFINITY,
        best_cols: Vec::new(),
    };
    s.run(0, 0.0);
    s.best_cols
}

/// Hungarian method with potentials for `rows <= cols`; returns the column
/// of every row.
fn hungarian(m: &CostMatrix) -> Vec<usize> {
    let (n, w) = (m.rows, m.cols);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; w + 1];
    // p[j]: row (1-based) assigned to column j; p[0] is the row being added.
    let mut p = vec![0usize; w + 1];
    let mut way = vec![0usize; w + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; w + 1];
        let mut used = vec![false; w + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=w {
                if used[j] {
                    continue;
                }
                let cur = m.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=w {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut cols = vec![0; n];
    for j in 1..=w {
        if p[j] != 0 {
            cols[p[j] - 1] = j - 1;
        }
    }
    cols
}

/// Optimal assignment cost plus `|#target - #model|` times the penalty.
pub fn row_cost(target: &RowPoints, model: &RowPoints, params: &MatchParams) -> f64 {
    let opt = rmm_optimal_cost(&rmm_matrix(target, model, params.alpha));
    let unmatched = target.len().abs_diff(model.len());
    opt + unmatched as f64 * params.penalty()
}

/// Horizontal offset estimate between two images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEstimate {
    /// Offset to add to every target position.
    pub offset: f64,
    /// Mean model-minus-target difference of the maxima associations, if
    /// any target maximum had a counterpart.
    pub maxima: Option<f64>,
    pub minima: Option<f64>,
}

impl ShiftEstimate {
    /// Disagreement between the two family averages; large values flag
    /// non-corresponding images. Zero when a family is missing.
    pub fn divergence(&self) -> f64 {
        match (self.maxima, self.minima) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        }
    }
}

fn family_shift(target: &CcssImage, model: &CcssImage, kind: ExtremumKind, offset: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (t, m) in target.rows().iter().zip(model.rows()) {
        let candidates = m.family(kind);
        for p in t.family(kind) {
            let x = p.x_deck + offset;
            // Strict comparison keeps the lowest index on ties.
            let mut best: Option<(f64, f64)> = None;
            for q in candidates {
                let d = (q.x_deck - x).abs();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, q.x_deck - x));
                }
            }
            if let Some((_, diff)) = best {
                sum += diff;
                count += 1;
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

fn estimate_at(target: &CcssImage, model: &CcssImage, offset: f64) -> ShiftEstimate {
    let maxima = family_shift(target, model, ExtremumKind::Maximum, offset);
    let minima = family_shift(target, model, ExtremumKind::Minimum, offset);
    let residual = match (maxima, minima) {
        (Some(a), Some(b)) => (a + b) / 2.0,
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 0.0,
    };
    ShiftEstimate {
        offset: offset + residual,
        maxima,
        minima,
    }
}

/// Global shift: every target point is associated with the nearest model
/// point of the same row and family (lowest index on ties), the signed
/// differences are averaged per family, and the family averages are
/// averaged. Families without associations are left out.
pub fn shift_correction(target: &CcssImage, model: &CcssImage) -> ShiftEstimate {
    estimate_at(target, model, 0.0)
}

/// Repeats the association with the target moved by the current estimate,
/// up to `iterations` passes in total, stopping once the estimate settles.
/// Each pass adds the mean residual of the re-associated points, so a
/// settled estimate has zero mean residual.
pub fn refined_shift(target: &CcssImage, model: &CcssImage, iterations: usize) -> ShiftEstimate {
    let mut est = estimate_at(target, model, 0.0);
    for _ in 1..iterations.max(1) {
        let next = estimate_at(target, model, est.offset);
        let settled = next.offset == est.offset;
        est = next;
        if settled {
            break;
        }
    }
    est
}

/// Cost of matching a target image against a model image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchCost {
    pub total_cost: f64,
    /// Offset that was added to the target positions.
    pub shift_applied: f64,
    pub maxima_cost: f64,
    pub minima_cost: f64,
    pub shift: ShiftEstimate,
}

fn family_cost(
    target: &CcssImage,
    model: &CcssImage,
    kind: ExtremumKind,
    offset: f64,
    params: &MatchParams,
) -> f64 {
    target
        .rows()
        .iter()
        .zip(model.rows())
        .map(|(t, m): (&CcssRow, &CcssRow)| {
            let tp = RowPoints {
                entries: t.family(kind).iter().map(|p| (p.x_deck + offset, p.c)).collect(),
            };
            row_cost(&tp, &RowPoints::from_points(m.family(kind)), params)
        })
        .sum()
}

/// Shift-corrected cost: the target is moved by the estimate of
/// [`refined_shift`] (a single pass is exactly [`shift_correction`]), then
/// [`row_cost`] is summed over every row of the maxima, then of the minima.
pub fn match_cost(target: &CcssImage, model: &CcssImage, params: &MatchParams) -> Result<MatchCost> {
    params.validate()?;
    if target.schedule() != model.schedule() {
        return Err(Error::ScheduleMismatch {
            target_rows: target.rows().len(),
            model_rows: model.rows().len(),
        });
    }
    let shift = refined_shift(target, model, params.shift_iterations);
    let offset = shift.offset;
    let maxima_cost = family_cost(target, model, ExtremumKind::Maximum, offset, params);
    let minima_cost = family_cost(target, model, ExtremumKind::Minimum, offset, params);
    Ok(MatchCost {
        total_cost: maxima_cost + minima_cost,
        shift_applied: offset,
        maxima_cost,
        minima_cost,
        shift,
    })
}

/// Lower of the costs of `target` against a model and against the model's
/// mirrored descriptor. Returns the cost and whether the mirrored branch
/// won (ties keep the direct one).
pub fn match_either(
    target: &CcssImage,
    model: &CcssImage,
    model_mirrored: &CcssImage,
    params: &MatchParams,
) -> Result<(MatchCost, bool)> {
    let direct = match_cost(target, model, params)?;
    let flipped = match_cost(target, model_mirrored, params)?;
    Ok(if flipped.total_cost < direct.total_cost {
        (flipped, true)
    } else {
        (direct, false)
    })
}

/// Describes the target silhouette and its horizontal mirror on the model's
/// schedule (thresholded at `tau`) and keeps the cheaper match.
pub fn mirror_min(
    target: &NormalizedSilhouette,
    model: &CcssImage,
    params: &MatchParams,
    tau: f64,
) -> Result<(MatchCost, bool)> {
    let schedule = model.schedule();
    let direct = threshold_shallow(&build_ccss(target, schedule)?, tau);
    let flipped = threshold_shallow(&build_ccss(&target.mirrored(), schedule)?, tau);
    let a = match_cost(&direct, model, params)?;
    let b = match_cost(&flipped, model, params)?;
    Ok(if b.total_cost < a.total_cost {
        (b, true)
    } else {
        (a, false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale_space::ScaleSchedule;

    fn rp(v: &[(f64, f64)]) -> RowPoints {
        RowPoints::new(v.to_vec()).unwrap()
    }

    #[test]
    fn eq1_examples() {
        let m = rmm_matrix(&rp(&[(0.5, 0.1)]), &rp(&[(0.5, 0.1)]), 0.2);
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert_eq!(m.get(0, 0), 0.0);
        let m = rmm_matrix(&rp(&[(0.3, 0.05)]), &rp(&[(0.5, 0.10)]), 0.2);
        assert!((m.get(0, 0) - 0.08).abs() < 1e-15);
    }

    #[test]
    fn matrix_is_oriented_rows_le_cols() {
        let i = rp(&[(0.1, 0.02), (0.4, -0.03), (0.9, 0.05)]);
        let mm = rp(&[(0.2, 0.01), (0.7, 0.04)]);
        let m = rmm_matrix(&i, &mm, 0.3);
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert!(m.is_transposed());
        for (r, &(mx, mc)) in mm.entries().iter().enumerate() {
            for (c, &(ix, ic)) in i.entries().iter().enumerate() {
                let want = 0.3 * (ix - mx).abs() + 0.7 * (ic - mc).abs();
                assert_eq!(m.get(r, c), want);
            }
        }
    }

    #[test]
    fn small_optimal_costs() {
        let empty = CostMatrix::new(0, 3, vec![]).unwrap();
        assert_eq!(rmm_optimal_cost(&empty), 0.0);
        let m = CostMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(rmm_optimal_cost(&m), 5.0);
        assert_eq!(rmm_exhaustive_cost(&m), 5.0);
        assert!(CostMatrix::new(3, 2, vec![0.0; 6]).is_err());
    }

    #[test]
    fn hungarian_agrees_with_search_on_large_rows() {
        // Deterministic pseudo-random 10 x 12 matrix.
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let data: Vec<f64> = (0..120)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let m = CostMatrix::new(10, 12, data).unwrap();
        let h = assignment_sum(&m, &hungarian(&m));
        let b = assignment_sum(&m, &branch_and_bound(&m));
        assert!((h - b).abs() < 1e-12, "{h} vs {b}");
    }

    #[test]
    fn row_cost_penalises_cardinality() {
        let p = MatchParams::default();
        assert_eq!(row_cost(&RowPoints::default(), &RowPoints::default(), &p), 0.0);
        let m = rp(&[(0.2, 0.1), (0.6, -0.1)]);
        assert!((row_cost(&RowPoints::default(), &m, &p) - 0.28).abs() < 1e-12);
        assert_eq!(row_cost(&m, &m, &p), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(MatchParams::default().validate().is_ok());
        assert_eq!(MatchParams::default().sigma_gain, 14.0);
        let bad = MatchParams {
            alpha: 1.5,
            ..MatchParams::default()
        };
        assert!(bad.validate().is_err());
    }

    fn image(rows: &[&[(f64, f64)]]) -> CcssImage {
        let schedule = ScaleSchedule::uniform(64, rows.len()).unwrap();
        let rows = rows
            .iter()
            .enumerate()
            .map(|(r, pts)| {
                let mut row = CcssRow::default();
                for &(x, c) in pts.iter() {
                    let p = ScalePoint {
                        x_deck: x,
                        row: r,
                        c,
                        kind: if c >= 0.0 {
                            ExtremumKind::Maximum
                        } else {
                            ExtremumKind::Minimum
                        },
                    };
                    match p.kind {
                        ExtremumKind::Maximum => row.maxima.push(p),
                        ExtremumKind::Minimum => row.minima.push(p),
                    }
                }
                row
            })
            .collect();
        CcssImage::new(schedule, rows).unwrap()
    }

    #[test]
    fn shift_recovers_translation() {
        let t = image(&[
            &[(0.1, 0.05), (0.3, -0.02), (0.55, 0.03), (0.8, -0.04)],
            &[(0.2, 0.04), (0.6, -0.01)],
        ]);
        assert_eq!(shift_correction(&t, &t).offset, 0.0);
        let m = t.translated(0.03);
        let s = shift_correction(&t, &m);
        assert!((s.offset - 0.03).abs() < 1e-9);
        let cost = match_cost(&t, &m, &MatchParams::default()).unwrap();
        assert!(cost.total_cost < 1e-6);
        assert_eq!(match_cost(&t, &t, &MatchParams::default()).unwrap().total_cost, 0.0);
    }

    #[test]
    fn shift_ties_pick_lowest_index() {
        let t = image(&[&[(0.5, 0.05)]]);
        let m = image(&[&[(0.4, 0.05), (0.6, 0.05)]]);
        let s = shift_correction(&t, &m);
        assert!((s.offset + 0.1).abs() < 1e-12);
        assert_eq!(s.minima, None);
    }

    #[test]
    fn schedule_mismatch_is_an_error() {
        let a = image(&[&[(0.5, 0.05)]]);
        let b = image(&[&[(0.5, 0.05)], &[]]);
        assert!(matches!(
            match_cost(&a, &b, &MatchParams::default()),
            Err(Error::ScheduleMismatch { .. })
        ));
    }
}
