use rayon::prelude::*;

use super::{discriminant, newton_refine, CandidateSource, CuspError, GcpCandidate, GcpStatus, NewtonOptions};
use crate::flow::{integrate_loop, monodromy, wrap_phase, FlowOptions, Monodromy, MonodromyOptions};
use crate::model::{LoopSpec, ParamMatrixFn, Point};

/// Closed axis-aligned rectangle `[lo.x, hi.x] × [lo.y, hi.y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Result<Self, CuspError> {
        let ok = [x.0, x.1, y.0, y.1].iter().all(|v| v.is_finite()) && x.0 < x.1 && y.0 < y.1;
        if !ok {
            return Err(CuspError::InvalidRect(format!("[{}, {}] x [{}, {}]", x.0, x.1, y.0, y.1)));
        }
        Ok(Self {
            lo: Point::new(x.0, y.0),
            hi: Point::new(x.1, y.1),
        })
    }

    pub fn width(&self) -> f64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> f64 {
        self.hi.y - self.lo.y
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        Point::new((self.lo.x + self.hi.x) / 2.0, (self.lo.y + self.hi.y) / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    fn expanded(&self, by: f64) -> Rect {
        Rect {
            lo: Point::new(self.lo.x - by, self.lo.y - by),
            hi: Point::new(self.hi.x + by, self.hi.y + by),
        }
    }

    fn quadrants(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect { lo: self.lo, hi: c },
            Rect { lo: Point::new(c.x, self.lo.y), hi: Point::new(self.hi.x, c.y) },
            Rect { lo: Point::new(self.lo.x, c.y), hi: Point::new(c.x, self.hi.y) },
            Rect { lo: c, hi: self.hi },
        ]
    }

    fn grid(&self, n: usize) -> impl Iterator<Item = Point> + '_ {
        let m = (n - 1) as f64;
        (0..n * n).map(move |k| {
            let (i, j) = (k % n, k / n);
            Point::new(
                self.lo.x + self.width() * i as f64 / m,
                self.lo.y + self.height() * j as f64 / m,
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeOptions {
    pub max_depth: usize,
    pub newton: NewtonOptions,
    /// Defaults to `10 · root_tol`.
    pub dedup_radius: Option<f64>,
    /// Per-cell sample grid for `|Δ|`, points per side.
    pub seed_grid: usize,
    /// Seeds come from `|Δ|` values below `seed_ratio · median(|Δ|)`.
    pub seed_ratio: f64,
    /// Points per side of the domain-wide `|Δ|` grid.
    pub median_grid: usize,
    /// Corner radius of cell loops relative to the shorter cell side.
    pub corner_fraction: f64,
    /// Outward offsets, relative to the shorter cell side, tried after a
    /// failed boundary integration.
    pub jitters: Vec<f64>,
    /// A cell with trivial permutation but some `|α_j|` above this is
    /// subdivided. Loops enclosing nothing carry phases of the order of
    /// their area, so this only catches cells that enclose or nearly touch
    /// a coalescence.
    pub phase_tol: f64,
    pub flow: FlowOptions,
    pub monodromy: MonodromyOptions,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        Self {
            max_depth: 8,
            newton: NewtonOptions::default(),
            dedup_radius: None,
            seed_grid: 9,
            seed_ratio: 1e-2,
            median_grid: 129,
            corner_fraction: 0.05,
            jitters: vec![0.1, 0.17, 0.23],
            phase_tol: 0.05,
            flow: FlowOptions {
                steps_per_period: 512,
                ..FlowOptions::default()
            },
            monodromy: MonodromyOptions::default(),
        }
    }
}

/// A smallest cell whose boundary monodromy is not trivial.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatedCell {
    pub rect: Rect,
    pub permutation: Vec<usize>,
    /// Nontrivial cycles of the permutation; for a single coalescence this
    /// is the pair of swapped eigenvalue indices.
    pub cycles: Vec<Vec<usize>>,
    pub phases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalizeReport {
    /// Verified and ambiguous candidates inside the domain, sorted by location.
    pub candidates: Vec<GcpCandidate>,
    /// Converged points outside the domain.
    pub rejected: Vec<GcpCandidate>,
    pub indicated_cells: Vec<IndicatedCell>,
    /// Cells whose boundary could not be integrated at any jitter.
    pub unresolved_cells: Vec<Rect>,
    pub cells_examined: usize,
    /// Newton runs that did not converge.
    pub failed_seeds: usize,
    /// `|Δ|` threshold for seeding, zero when `n > 2`.
    pub seed_threshold: f64,
}

struct Outcome {
    rect: Rect,
    depth: usize,
    mono: Option<Monodromy>,
    /// Smallest `|Δ|` on the cell grid and where it occurs.
    grid_min: Option<(f64, Point)>,
}

impl Outcome {
    fn subdivide(&self, phase_tol: f64) -> bool {
        match &self.mono {
            None => true,
            Some(m) => {
                !m.is_identity()
                    || wrap_phase(m.phases.iter().sum::<f64>() - std::f64::consts::PI).abs() < phase_tol
                    || m.phases.iter().any(|a| a.abs() > phase_tol)
            }
        }
    }
}

/// Boundary monodromy, trying the nominal boundary and then each jitter,
/// after skipping the first `skip` of these.
fn cell_monodromy(f: &ParamMatrixFn, rect: &Rect, opts: &LocalizeOptions, skip: usize) -> Option<Monodromy> {
    let side = rect.width().min(rect.height());
    let offsets = std::iter::once(0.0).chain(opts.jitters.iter().copied()).skip(skip);
    for offset in offsets {
        let r = rect.expanded(offset * side);
        let radius = opts.corner_fraction * r.width().min(r.height());
        let Ok(gamma) = LoopSpec::rectangle((r.lo.x, r.hi.x), (r.lo.y, r.hi.y), radius) else {
            continue;
        };
        let result = integrate_loop(f, &gamma, 0.0, 1, &opts.flow).and_then(|p| monodromy(&p, &opts.monodromy));
        if let Ok(m) = result {
            return Some(m);
        }
    }
    None
}

fn examine(f: &ParamMatrixFn, rect: Rect, depth: usize, opts: &LocalizeOptions, skip: usize) -> Outcome {
    let mono = cell_monodromy(f, &rect, opts, skip);
    let grid_min = (f.dim() == 2).then(|| {
        rect.grid(opts.seed_grid)
            .filter_map(|p| discriminant(f, p).ok().map(|d| (d.norm(), p)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((f64::INFINITY, rect.center()))
    });
    Outcome { rect, depth, mono, grid_min }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Seeds at discrete local minima of `|Δ|` on the domain grid that fall
/// below the threshold, plus the threshold itself.
fn global_seeds(f: &ParamMatrixFn, rect: &Rect, opts: &LocalizeOptions) -> Result<(f64, Vec<Point>), CuspError> {
    let n = opts.median_grid.max(3);
    let points: Vec<Point> = rect.grid(n).collect();
    let values = points
        .par_iter()
        .map(|&p| discriminant(f, p).map(|d| d.norm()))
        .collect::<Result<Vec<f64>, _>>()?;
    let threshold = opts.seed_ratio * median(values.clone());
    let mut seeds = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let v = values[j * n + i];
            if !(v < threshold) {
                continue;
            }
            let is_min = (j.saturating_sub(1)..=(j + 1).min(n - 1))
                .flat_map(|jj| (i.saturating_sub(1)..=(i + 1).min(n - 1)).map(move |ii| (ii, jj)))
                .all(|(ii, jj)| values[jj * n + ii] >= v);
            if is_min {
                seeds.push(points[j * n + i]);
            }
        }
    }
    Ok((threshold, seeds))
}

/// Quadtree search for coalescence points in `rect`.
///
/// Cells whose boundary monodromy is nontrivial, or which carry a phase, are
/// subdivided down to `max_depth`; the smallest such cells seed Newton at
/// their `|Δ|` minimizer. Cells with trivial monodromy seed Newton wherever
/// `|Δ|` drops below the threshold, which is the only way to see pairs whose
/// effects cancel on the boundary. A candidate is marked
/// [`CandidateSource::Monodromy`] when a circle of one smallest cell side
/// around it swaps a pair. For `n > 2` only the indicated cells are reported.
pub fn localize(f: &ParamMatrixFn, rect: Rect, opts: &LocalizeOptions) -> Result<LocalizeReport, CuspError> {
    Rect::new((rect.lo.x, rect.hi.x), (rect.lo.y, rect.hi.y))?;
    let two = f.dim() == 2;
    let mut report = LocalizeReport::default();
    let mut seeds: Vec<(Point, CandidateSource)> = Vec::new();
    if two {
        let (threshold, global) = global_seeds(f, &rect, opts)?;
        report.seed_threshold = threshold;
        seeds.extend(global.into_iter().map(|p| (p, CandidateSource::Discriminant)));
    }

    // Siblings, and whether their parent's boundary permuted eigenvalues.
    let mut level: Vec<(Vec<Rect>, usize, bool)> = vec![(vec![rect], 0, false)];
    while !level.is_empty() {
        let examine_all = |cells: &Vec<Rect>, depth: usize, skip: usize| -> Vec<Outcome> {
            cells.par_iter().map(|&r| examine(f, r, depth, opts, skip)).collect()
        };
        let groups: Vec<Vec<Outcome>> = level
            .par_iter()
            .map(|(cells, depth, parent_moves)| {
                let outs = examine_all(cells, *depth, 0);
                let silent = outs.iter().all(|o| o.mono.as_ref().is_none_or(Monodromy::is_identity));
                if *parent_moves && silent {
                    // The coalescence lies on an edge or corner shared by
                    // the siblings; their expanded boundaries overlap it.
                    examine_all(cells, *depth, 1)
                } else {
                    outs
                }
            })
            .collect();
        report.cells_examined += groups.iter().map(Vec::len).sum::<usize>();
        let mut next = Vec::new();
        for o in groups.into_iter().flatten() {
            if o.subdivide(opts.phase_tol) {
                if o.depth < opts.max_depth {
                    let moves = o.mono.as_ref().is_some_and(|m| !m.is_identity());
                    next.push((o.rect.quadrants().to_vec(), o.depth + 1, moves));
                    continue;
                }
                match &o.mono {
                    None => report.unresolved_cells.push(o.rect),
                    Some(m) if !m.is_identity() => report.indicated_cells.push(IndicatedCell {
                        rect: o.rect,
                        permutation: m.permutation.clone(),
                        cycles: m.cycles().into_iter().filter(|c| c.len() > 1).collect(),
                        phases: m.phases.clone(),
                    }),
                    Some(_) => {}
                }
                if let Some((_, p)) = o.grid_min {
                    let certified = o.mono.as_ref().is_some_and(|m| !m.is_identity());
                    let source = if certified {
                        CandidateSource::Monodromy
                    } else {
                        CandidateSource::Discriminant
                    };
                    seeds.push((p, source));
                }
            } else if let Some((v, p)) = o.grid_min {
                if v < report.seed_threshold {
                    seeds.push((p, CandidateSource::Discriminant));
                }
            }
        }
        level = next;
    }

    if !two {
        return Ok(report);
    }
    let refined: Vec<_> = seeds
        .par_iter()
        .map(|&(p, source)| newton_refine(f, p, &opts.newton).map(|c| GcpCandidate { source, ..c }))
        .collect();
    let radius = opts.dedup_radius.unwrap_or(10.0 * opts.newton.root_tol);
    let mut found: Vec<GcpCandidate> = Vec::new();
    for r in refined {
        match r {
            Ok(c) => found.push(c),
            Err(CuspError::NoConvergence { .. }) => report.failed_seeds += 1,
            Err(e) => return Err(e),
        }
    }
    for c in dedup(found, radius) {
        if c.status == GcpStatus::Rejected || !rect.contains(c.location) {
            report.rejected.push(GcpCandidate {
                status: GcpStatus::Rejected,
                ..c
            });
        } else {
            report.candidates.push(c);
        }
    }
    let cell = rect.width().min(rect.height()) / (1u64 << opts.max_depth.min(60)) as f64;
    let locations: Vec<Point> = report.candidates.iter().map(|c| c.location).collect();
    let swaps: Vec<bool> = locations
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let nearest = locations
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.distance(*q))
                .fold(f64::INFINITY, f64::min);
            small_loop_swaps(f, p, cell.min(nearest / 2.0), opts)
        })
        .collect();
    for (c, swapped) in report.candidates.iter_mut().zip(swaps) {
        if swapped {
            c.source = CandidateSource::Monodromy;
        }
    }
    Ok(report)
}

/// Whether a circle of radius `r` about `p` swaps exactly one pair of eigenvalues.
fn small_loop_swaps(f: &ParamMatrixFn, p: Point, r: f64, opts: &LocalizeOptions) -> bool {
    let Ok(gamma) = LoopSpec::circle(p, r) else {
        return false;
    };
    integrate_loop(f, &gamma, 0.0, 1, &opts.flow)
        .and_then(|path| monodromy(&path, &opts.monodromy))
        .is_ok_and(|m| m.cycle_type() == [2])
}

fn rank(c: &GcpCandidate) -> (u8, u8) {
    let status = match c.status {
        GcpStatus::Verified => 0,
        GcpStatus::Ambiguous => 1,
        GcpStatus::Rejected => 2,
    };
    let source = match c.source {
        CandidateSource::Monodromy => 0,
        CandidateSource::Discriminant => 1,
        CandidateSource::Seed => 2,
    };
    (status, source)
}

/// Clusters candidates within `radius`, keeping the best-ranked member of
/// each cluster with the smallest residual, sorted lexicographically.
fn dedup(mut found: Vec<GcpCandidate>, radius: f64) -> Vec<GcpCandidate> {
    found.sort_by(|a, b| rank(a).cmp(&rank(b)).then(a.f_residual.total_cmp(&b.f_residual)));
    let mut kept: Vec<GcpCandidate> = Vec::new();
    for c in found {
        if kept.iter().all(|k| k.location.distance(c.location) > radius) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.location.x.total_cmp(&b.location.x).then(a.location.y.total_cmp(&b.location.y)));
    kept
}
