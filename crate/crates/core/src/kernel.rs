//! Gaussian kernel sums over a sorted sample.
//!
//! Every estimate in the shrinkage rule reduces to two sums at a point `y`:
//! `Σ K((y − Y_j)/h)` and `Σ (Y_j − y) K((y − Y_j)/h)`. [`KernelSmoother`]
//! sorts the sample once and evaluates them either exactly (all points) or
//! over a window found by binary search.
//!
//! The window keeps every point whose kernel weight is within
//! `exp(−τ²/2)` of the largest weight at `y`: its radius is
//! `√(d² + τ²h²)` where `d` is the distance to the nearest observation.
//! Inside the window, cells of width `h/2` holding many points are summed
//! through a truncated Taylor expansion of `exp(u·t)` about the cell
//! center, so dense windows cost `O(cells · order)` instead of
//! `O(points)`.

use crate::error::{Error, Result};
use crate::normal::INV_SQRT_2PI;

/// Order of the per-cell expansion. With cell half-width `h/4` and
/// `|u| ≤ EXPANSION_MAX_U` the remainder is below 1e-19 of the cell sum.
const EXPANSION_ORDER: usize = 32;
const EXPANSION_MAX_U: f64 = 12.0;
/// Cells with fewer points than this are summed directly.
const EXPANSION_MIN_POINTS: usize = 24;
const CELL_WIDTH_IN_H: f64 = 0.5;

/// Default window radius in units of `h`.
pub const DEFAULT_WINDOW_TAU: f64 = 10.0;
/// Smallest window radius accepted.
pub const MIN_WINDOW_TAU: f64 = 6.0;

/// Unnormalized kernel sums at one evaluation point, scaled by
/// `exp(−log_scale)` so that the largest single weight is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSums {
    /// Exponent of the largest kernel weight, `−d²/(2h²)`.
    pub log_scale: f64,
    /// `Σ w_j`.
    pub weight: f64,
    /// `Σ w_j (Y_j − y)`.
    pub first_moment: f64,
    /// Number of observations entering the normalization `1/(n h)`.
    pub n: usize,
}

impl KernelSums {
    /// `ĝ'(y) / ĝ(y)`.
    pub fn score(&self, h: f64) -> f64 {
        self.first_moment / self.weight / (h * h)
    }
}

#[derive(Debug, Clone)]
struct Cell {
    start: usize,
    end: usize,
    center: f64,
    /// `Σ e^{−t²/2} t^k / k!`, `t = (Y_j − center)/h`.
    moments: [f64; EXPANSION_ORDER + 1],
    /// `Σ e^{−t²/2} t^{k+1} / k!`.
    shifted_moments: [f64; EXPANSION_ORDER + 1],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    /// Sum over every observation.
    Exact,
    /// Sum over the window of radius `√(d² + τ²h²)`.
    Window { tau: f64 },
}

impl Evaluation {
    pub fn window(tau: f64) -> Result<Self> {
        if tau >= MIN_WINDOW_TAU && tau.is_finite() {
            Ok(Evaluation::Window { tau })
        } else {
            Err(Error::invalid(format!(
                "window_tau must be >= {MIN_WINDOW_TAU} and finite, got {tau}"
            )))
        }
    }
}

/// Sorted sample plus bandwidth, ready for repeated kernel sums.
#[derive(Debug, Clone)]
pub struct KernelSmoother {
    h: f64,
    sorted: Vec<f64>,
    /// `position[i]` is where original observation `i` sits in `sorted`.
    position: Vec<usize>,
    evaluation: Evaluation,
    cells: Vec<Cell>,
}

impl KernelSmoother {
    pub fn new(sample: &[f64], h: f64, evaluation: Evaluation) -> Result<Self> {
        Self::build(sample, h, evaluation, true)
    }

    /// Windowed evaluation with plain per-point summation inside the window.
    pub fn without_expansion(sample: &[f64], h: f64, tau: f64) -> Result<Self> {
        Self::build(sample, h, Evaluation::window(tau)?, false)
    }

    fn build(sample: &[f64], h: f64, evaluation: Evaluation, expand: bool) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::invalid("kernel smoother needs at least one observation"));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::invalid(format!(
                "bandwidth must be positive and finite, got {h}"
            )));
        }
        if let Some(bad) = sample.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("observation {bad} is not finite")));
        }
        if let Evaluation::Window { tau } = evaluation {
            Evaluation::window(tau)?;
        }
        let mut order: Vec<usize> = (0..sample.len()).collect();
        order.sort_by(|&a, &b| sample[a].total_cmp(&sample[b]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| sample[i]).collect();
        let mut position = vec![0; sample.len()];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        let cells = match evaluation {
            Evaluation::Window { .. } if expand => build_cells(&sorted, h),
            _ => Vec::new(),
        };
        Ok(Self {
            h,
            sorted,
            position,
            evaluation,
            cells,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn evaluation(&self) -> Evaluation {
        self.evaluation
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Original observation `i` (input order).
    pub fn observation(&self, i: usize) -> f64 {
        self.sorted[self.position[i]]
    }

    /// Kernel density estimate `(1/(n h)) Σ φ((y − Y_j)/h)`.
    pub fn density(&self, y: f64) -> f64 {
        let s = self.sums(y, None).expect("sums without exclusion cannot fail");
        INV_SQRT_2PI / (s.n as f64 * self.h) * s.log_scale.exp() * s.weight
    }

    /// Derivative of [`density`](Self::density) in `y`.
    pub fn density_grad(&self, y: f64) -> f64 {
        let s = self.sums(y, None).expect("sums without exclusion cannot fail");
        INV_SQRT_2PI / (s.n as f64 * self.h * self.h * self.h) * s.log_scale.exp() * s.first_moment
    }

    /// Kernel sums at `y`, optionally leaving out original observation
    /// `exclude`.
    pub fn sums(&self, y: f64, exclude: Option<usize>) -> Result<KernelSums> {
        let skip = match exclude {
            Some(i) if i >= self.sorted.len() => {
                return Err(Error::invalid(format!(
                    "exclude index {i} out of range for {} observations",
                    self.sorted.len()
                )))
            }
            Some(_) if self.sorted.len() < 2 => {
                return Err(Error::invalid("leaving out the only observation leaves none"))
            }
            Some(i) => Some(self.position[i]),
            None => None,
        };
        let n = self.sorted.len() - usize::from(skip.is_some());
        let h = self.h;
        let nearest = self.nearest_distance(y, skip);
        let log_scale = -nearest * nearest / (2.0 * h * h);

        let (lo, hi) = match self.evaluation {
            Evaluation::Exact => (0, self.sorted.len()),
            Evaluation::Window { tau } => {
                let radius = (nearest * nearest + tau * tau * h * h).sqrt();
                let lo = self.sorted.partition_point(|&x| x < y - radius);
                let hi = self.sorted.partition_point(|&x| x <= y + radius);
                (lo, hi)
            }
        };

        let mut acc = Accumulator::default();
        if self.cells.is_empty() {
            self.direct(y, log_scale, lo, hi, skip, &mut acc);
        } else {
            let first = self.cells.partition_point(|c| c.end <= lo);
            let last = self.cells.partition_point(|c| c.start < hi);
            for cell in &self.cells[first..last] {
                let u = (y - cell.center) / h;
                let holds_skip = skip.is_some_and(|p| p >= cell.start && p < cell.end);
                if cell.end - cell.start >= EXPANSION_MIN_POINTS && u.abs() <= EXPANSION_MAX_U && !holds_skip {
                    let (w, m) = expand_cell(cell, u, log_scale);
                    acc.add(w, h * m);
                } else {
                    self.direct(y, log_scale, cell.start.max(lo), cell.end.min(hi), skip, &mut acc);
                }
            }
        }
        Ok(KernelSums {
            log_scale,
            weight: acc.weight(),
            first_moment: acc.moment(),
            n,
        })
    }

    fn direct(&self, y: f64, log_scale: f64, lo: usize, hi: usize, skip: Option<usize>, acc: &mut Accumulator) {
        let inv = 1.0 / (2.0 * self.h * self.h);
        for (pos, &x) in self.sorted[lo..hi].iter().enumerate() {
            if Some(lo + pos) == skip {
                continue;
            }
            let d = x - y;
            let w = (-d * d * inv - log_scale).exp();
            acc.add(w, w * d);
        }
    }

    fn nearest_distance(&self, y: f64, skip: Option<usize>) -> f64 {
        let n = self.sorted.len();
        let idx = self.sorted.partition_point(|&x| x < y);
        let mut best = f64::INFINITY;
        // step over the excluded slot on either side
        let mut right = idx;
        if Some(right) == skip {
            right += 1;
        }
        if right < n {
            best = best.min(self.sorted[right] - y);
        }
        let mut left = idx;
        if left > 0 {
            left -= 1;
            if Some(left) == skip {
                if left > 0 {
                    best = best.min(y - self.sorted[left - 1]);
                }
            } else {
                best = best.min(y - self.sorted[left]);
            }
        }
        best
    }
}

/// Compensated accumulation of the two sums; far-field cells can add many
/// small terms to a few large ones.
#[derive(Default)]
struct Accumulator {
    w: f64,
    w_c: f64,
    m: f64,
    m_c: f64,
}

impl Accumulator {
    #[inline]
    fn add(&mut self, w: f64, m: f64) {
        neumaier(&mut self.w, &mut self.w_c, w);
        neumaier(&mut self.m, &mut self.m_c, m);
    }

    fn weight(&self) -> f64 {
        self.w + self.w_c
    }

    fn moment(&self) -> f64 {
        self.m + self.m_c
    }
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

fn build_cells(sorted: &[f64], h: f64) -> Vec<Cell> {
    let width = CELL_WIDTH_IN_H * h;
    let origin = sorted[0];
    let mut cells = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let slot = ((sorted[start] - origin) / width).floor();
        let upper = origin + (slot + 1.0) * width;
        let end = start + sorted[start..].partition_point(|&x| x < upper);
        // guard against rounding placing sorted[start] at or above `upper`
        let end = end.max(start + 1);
        let center = origin + (slot + 0.5) * width;
        let mut moments = [0.0; EXPANSION_ORDER + 1];
        let mut shifted_moments = [0.0; EXPANSION_ORDER + 1];
        for &x in &sorted[start..end] {
            let t = (x - center) / h;
            let mut term = (-0.5 * t * t).exp();
            for k in 0..=EXPANSION_ORDER {
                moments[k] += term;
                shifted_moments[k] += term * t;
                term *= t / (k + 1) as f64;
            }
        }
        cells.push(Cell {
            start,
            end,
            center,
            moments,
            shifted_moments,
        });
        start = end;
    }
    cells
}

/// Cell contribution to `(Σ w, Σ w (Y_j − y)/h)` via
/// `e^{−(u−t)²/2} = e^{−u²/2} e^{−t²/2} Σ_k u^k t^k / k!`.
#[inline]
fn expand_cell(cell: &Cell, u: f64, log_scale: f64) -> (f64, f64) {
    let mut zeroth = 0.0;
    let mut first = 0.0;
    for k in (0..=EXPANSION_ORDER).rev() {
        zeroth = zeroth * u + cell.moments[k];
        first = first * u + cell.shifted_moments[k];
    }
    let factor = (-0.5 * u * u - log_scale).exp();
    let w = factor * zeroth;
    // Σ w (t − u) with Y_j − y = h (t − u)
    (w, factor * first - u * w)
}
