//! Segment prediction: mean value mode, forward (temporal) mode and
//! inter-pixel (spatiotemporal) mode, with motion-vector prediction.
//!
//! Every search runs over reconstructed intervals only, so the decoder can
//! rebuild any predictor from the signalled motion vector.

use std::cmp::Ordering;

/// Number of most recent forward-mode vectors averaged for the temporal MVP.
pub const FM_MVP_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    Mvm,
    Fm,
    Inter,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Mvm, Mode::Fm, Mode::Inter];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// `(x, y)` pixel offset of the reference and `t`, its interval offset.
///
/// For the current pixel `t >= 1` counts intervals back from the segment
/// start. For a neighbour, the reference window starts at the segment's own
/// start index minus `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct MotionVector {
    pub x: i32,
    pub y: i32,
    pub t: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { x: 0, y: 0, t: 0 };

    pub fn new(x: i32, y: i32, t: i32) -> Self {
        MotionVector { x, y, t }
    }

    pub fn temporal(t: i32) -> Self {
        MotionVector { x: 0, y: 0, t }
    }

    /// `self - other`, component-wise: with `self` the predictor this is the
    /// coded difference.
    pub fn diff(self, other: MotionVector) -> MotionVector {
        MotionVector::new(self.x - other.x, self.y - other.y, self.t - other.t)
    }

    fn search_key(self) -> (i32, i32, i32, i32, i32) {
        (self.t.abs(), self.x.abs() + self.y.abs(), self.t, self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideInfo {
    /// Segment mean minus the previous mean value.
    MeanDiff(i64),
    /// Motion-vector predictor minus the chosen vector.
    Mvd(MotionVector),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub mode: Mode,
    pub mv: MotionVector,
    pub side_info: SideInfo,
    /// Reference interval per position; also the quantiser's `t_pred`.
    pub predictor: Vec<u32>,
    pub residuals: Vec<i64>,
}

fn residuals(isis: &[u32], predictor: &[u32]) -> Vec<i64> {
    isis.iter().zip(predictor).map(|(&t, &p)| t as i64 - p as i64).collect()
}

/// Integer mean rounded half away from zero; 0 for an empty set.
pub fn rounded_mean(sum: i64, count: usize) -> i64 {
    if count == 0 {
        return 0;
    }
    let n = count as i64;
    let q = (2 * sum.abs() + n) / (2 * n);
    if sum < 0 {
        -q
    } else {
        q
    }
}

pub fn segment_mean(isis: &[u32]) -> u32 {
    let sum: i64 = isis.iter().map(|&t| t as i64).sum();
    rounded_mean(sum, isis.len()).max(1) as u32
}

pub fn predict_mvm(isis: &[u32], prev_mean: u32) -> Prediction {
    let m = segment_mean(isis);
    let predictor = vec![m; isis.len()];
    Prediction {
        mode: Mode::Mvm,
        mv: MotionVector::ZERO,
        side_info: SideInfo::MeanDiff(m as i64 - prev_mean as i64),
        residuals: residuals(isis, &predictor),
        predictor,
    }
}

/// Temporal MVP: rounded mean of the last [`FM_MVP_DEPTH`] forward-mode
/// vectors of the pixel, or 0.
pub fn mvp_fm(prior_fm: &[i32]) -> i32 {
    let recent = &prior_fm[prior_fm.len().saturating_sub(FM_MVP_DEPTH)..];
    rounded_mean(recent.iter().map(|&t| t as i64).sum(), recent.len()) as i32
}

pub fn reciprocals(isis: &[u32]) -> Vec<f64> {
    isis.iter().map(|&t| 1.0 / t as f64).collect()
}

/// Reconstructed intervals of one reference pixel.
#[derive(Clone, Copy, Debug)]
pub struct RefPixel<'a> {
    pub isis: &'a [u32],
    pub recips: &'a [f64],
}

impl<'a> RefPixel<'a> {
    pub fn new(isis: &'a [u32], recips: &'a [f64]) -> Self {
        debug_assert_eq!(isis.len(), recips.len());
        RefPixel { isis, recips }
    }

    pub fn len(&self) -> usize {
        self.isis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.isis.is_empty()
    }
}

/// Where the `k`-th reference interval comes from.
#[derive(Clone, Copy, Debug)]
enum Window {
    /// Current pixel: the last `period` intervals before the segment,
    /// repeated as needed.
    Periodic { base: usize, period: usize },
    /// Neighbour: consecutive intervals from `start`, clamped to the list.
    Clamped { start: i64, last: usize },
}

impl Window {
    fn current(history_len: usize, mv_t: i32) -> Option<Window> {
        let period = usize::try_from(mv_t).ok()?;
        (period >= 1 && period <= history_len).then(|| Window::Periodic {
            base: history_len - period,
            period,
        })
    }

    fn neighbour(len: usize, seg_start: usize, mv_t: i32, n: usize) -> Option<Window> {
        let start = seg_start as i64 - mv_t as i64;
        (len > 0 && start < len as i64 && start + n as i64 > 0).then(|| Window::Clamped {
            start,
            last: len - 1,
        })
    }

    #[inline]
    fn index(&self, k: usize) -> usize {
        match *self {
            Window::Periodic { base, period } => base + k % period,
            Window::Clamped { start, last } => (start + k as i64).clamp(0, last as i64) as usize,
        }
    }

    /// Sum of squared reciprocal differences against `target`, abandoned
    /// once it reaches `limit`.
    #[inline]
    fn cost(&self, target: &[f64], recips: &[f64], limit: f64) -> Option<f64> {
        let mut sum = 0.0;
        match *self {
            Window::Clamped { start, last } if start >= 0 && start as usize + target.len() <= last + 1 => {
                let r = &recips[start as usize..start as usize + target.len()];
                for (chunk_t, chunk_r) in target.chunks(8).zip(r.chunks(8)) {
                    for (a, b) in chunk_t.iter().zip(chunk_r) {
                        let d = a - b;
                        sum += d * d;
                    }
                    if sum >= limit {
                        return None;
                    }
                }
            }
            _ => {
                for (k, a) in target.iter().enumerate() {
                    let d = a - recips[self.index(k)];
                    sum += d * d;
                    if k % 8 == 7 && sum >= limit {
                        return None;
                    }
                }
                if sum >= limit {
                    return None;
                }
            }
        }
        Some(sum)
    }

    fn gather(&self, isis: &[u32], n: usize) -> Vec<u32> {
        (0..n).map(|k| isis[self.index(k)]).collect()
    }
}

/// Reference intervals for the current pixel with temporal offset `mv_t`,
/// or `None` when `mv_t` is outside `[1, history.len()]`.
pub fn fm_window(history: &[u32], mv_t: i32, n: usize) -> Option<Vec<u32>> {
    Window::current(history.len(), mv_t).map(|w| w.gather(history, n))
}

/// Reference intervals from a neighbour's reconstructed list.
pub fn neighbour_window(isis: &[u32], seg_start: usize, mv_t: i32, n: usize) -> Option<Vec<u32>> {
    Window::neighbour(isis.len(), seg_start, mv_t, n).map(|w| w.gather(isis, n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchResult {
    pub mv: MotionVector,
    /// Sum of squared reciprocal differences; the distance is
    /// `sqrt(cost / n)`.
    pub cost: f64,
}

impl SearchResult {
    pub fn distance(&self, n: usize) -> f64 {
        (self.cost / n as f64).sqrt()
    }
}

fn better(cand: f64, mv: MotionVector, best: &Option<SearchResult>) -> bool {
    match best {
        None => true,
        Some(b) => match cand.partial_cmp(&b.cost) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => mv.search_key() < b.mv.search_key(),
            _ => false,
        },
    }
}

/// Temporal motion estimation over `mv_t in [1, min(tr, history.len())]`.
pub fn fm_search(target: &[f64], history: RefPixel<'_>, tr: u16) -> Option<SearchResult> {
    let mut best: Option<SearchResult> = None;
    let max_t = (tr as usize).min(history.len());
    for t in 1..=max_t {
        let mv = MotionVector::temporal(t as i32);
        let Some(w) = Window::current(history.len(), mv.t) else { continue };
        let limit = best.map_or(f64::INFINITY, |b| b.cost);
        if let Some(cost) = w.cost(target, history.recips, limit) {
            if better(cost, mv, &best) {
                best = Some(SearchResult { mv, cost });
                if cost == 0.0 {
                    break;
                }
            }
        }
    }
    best
}

pub fn predict_fm(
    isis: &[u32],
    history: &[u32],
    tr: u16,
    prior_fm: &[i32],
) -> Option<Prediction> {
    let recips = reciprocals(history);
    let found = fm_search(&reciprocals(isis), RefPixel::new(history, &recips), tr)?;
    let predictor = fm_window(history, found.mv.t, isis.len())?;
    let pred_t = mvp_fm(prior_fm);
    Some(Prediction {
        mode: Mode::Fm,
        mv: found.mv,
        side_info: SideInfo::Mvd(MotionVector::temporal(pred_t - found.mv.t)),
        residuals: residuals(isis, &predictor),
        predictor,
    })
}

/// Candidate offsets in tie-break order for a spatial range `sr` and
/// temporal range `tr`, restricted to causal positions in raster order.
#[derive(Clone, Debug)]
pub struct SearchPattern {
    sr: u8,
    offsets: Vec<MotionVector>,
}

impl SearchPattern {
    pub fn new(sr: u8, tr: u16) -> Self {
        let (sr_i, tr_i) = (sr as i32, tr as i32);
        let mut offsets = Vec::new();
        for dy in -sr_i..=0 {
            for dx in -sr_i..=sr_i {
                if dy == 0 && dx > 0 {
                    continue;
                }
                let ts = if dx == 0 && dy == 0 { 1..=tr_i } else { -tr_i..=tr_i };
                for t in ts {
                    offsets.push(MotionVector::new(dx, dy, t));
                }
            }
        }
        offsets.sort_by_key(|mv| mv.search_key());
        SearchPattern { sr, offsets }
    }

    pub fn sr(&self) -> u8 {
        self.sr
    }

    pub fn offsets(&self) -> &[MotionVector] {
        &self.offsets
    }

    pub fn contains(&self, mv: MotionVector) -> bool {
        self.offsets.binary_search_by_key(&mv.search_key(), |m| m.search_key()).is_ok()
    }
}

/// Reconstructed intervals visible from the pixel being coded, addressed by
/// spatial offset. The `(0, 0)` cell holds only the current pixel's history.
#[derive(Clone, Debug)]
pub struct Neighborhood<'a> {
    sr: i32,
    cells: Vec<Option<RefPixel<'a>>>,
}

impl<'a> Neighborhood<'a> {
    pub fn new(sr: u8) -> Self {
        let side = 2 * sr as usize + 1;
        Neighborhood {
            sr: sr as i32,
            cells: vec![None; side * side],
        }
    }

    fn slot(&self, dx: i32, dy: i32) -> Option<usize> {
        let side = 2 * self.sr + 1;
        (dx.abs() <= self.sr && dy.abs() <= self.sr)
            .then(|| ((dy + self.sr) * side + dx + self.sr) as usize)
    }

    pub fn set(&mut self, dx: i32, dy: i32, r: RefPixel<'a>) {
        if let Some(i) = self.slot(dx, dy) {
            self.cells[i] = (!r.is_empty()).then_some(r);
        }
    }

    pub fn get(&self, dx: i32, dy: i32) -> Option<RefPixel<'a>> {
        self.slot(dx, dy).and_then(|i| self.cells[i])
    }
}

fn window_for(r: RefPixel<'_>, mv: MotionVector, seg_start: usize, n: usize) -> Option<Window> {
    if mv.x == 0 && mv.y == 0 {
        Window::current(r.len(), mv.t)
    } else {
        Window::neighbour(r.len(), seg_start, mv.t, n)
    }
}

/// Spatiotemporal motion estimation over all pattern offsets with a
/// reference in `hood`.
pub fn inter_search(
    target: &[f64],
    seg_start: usize,
    hood: &Neighborhood<'_>,
    pattern: &SearchPattern,
) -> Option<SearchResult> {
    let mut best: Option<SearchResult> = None;
    for &mv in &pattern.offsets {
        let Some(r) = hood.get(mv.x, mv.y) else { continue };
        let Some(w) = window_for(r, mv, seg_start, target.len()) else { continue };
        let limit = best.map_or(f64::INFINITY, |b| b.cost);
        if let Some(cost) = w.cost(target, r.recips, limit) {
            if better(cost, mv, &best) {
                best = Some(SearchResult { mv, cost });
                if cost == 0.0 {
                    break;
                }
            }
        }
    }
    best
}

/// Reference intervals for an inter-mode vector, as the decoder rebuilds them.
pub fn inter_window(hood: &Neighborhood<'_>, mv: MotionVector, seg_start: usize, n: usize) -> Option<Vec<u32>> {
    let r = hood.get(mv.x, mv.y)?;
    window_for(r, mv, seg_start, n).map(|w| w.gather(r.isis, n))
}

pub fn predict_inter(
    isis: &[u32],
    seg_start: usize,
    hood: &Neighborhood<'_>,
    pattern: &SearchPattern,
    mvp: MotionVector,
) -> Option<Prediction> {
    let found = inter_search(&reciprocals(isis), seg_start, hood, pattern)?;
    let predictor = inter_window(hood, found.mv, seg_start, isis.len())?;
    Some(Prediction {
        mode: Mode::Inter,
        mv: found.mv,
        side_info: SideInfo::Mvd(mvp.diff(found.mv)),
        residuals: residuals(isis, &predictor),
        predictor,
    })
}

/// Mode and vector of every coded segment, per pixel in raster order.
#[derive(Clone, Debug, Default)]
pub struct ModeMap {
    width: usize,
    pixels: Vec<Vec<(Mode, MotionVector)>>,
}

impl ModeMap {
    pub fn new(width: u16, height: u16) -> Self {
        ModeMap {
            width: width as usize,
            pixels: vec![Vec::new(); width as usize * height as usize],
        }
    }

    pub fn push(&mut self, x: u32, y: u32, mode: Mode, mv: MotionVector) {
        self.pixels[y as usize * self.width + x as usize].push((mode, mv));
    }

    fn inter_mv(&self, x: i64, y: i64, seg: i64) -> Option<MotionVector> {
        if x < 0 || y < 0 || x >= self.width as i64 || seg < 0 {
            return None;
        }
        let segs = self.pixels.get(y as usize * self.width + x as usize)?;
        match segs.get(seg as usize) {
            Some(&(Mode::Inter, mv)) => Some(mv),
            _ => None,
        }
    }
}

/// Spatiotemporal MVP for segment `seg` of pixel `(x, y)`: the rounded mean
/// of inter-coded vectors from the pixel's own segments `seg-1`, `seg-2` and
/// segments `seg-1..=seg+1` of the left, top-left, top and top-right pixels.
pub fn mvp_inter(modes: &ModeMap, x: u32, y: u32, seg: usize) -> MotionVector {
    let (x, y, i) = (x as i64, y as i64, seg as i64);
    let own = [(x, y, i - 1), (x, y, i - 2)];
    let neighbours = [(x - 1, y), (x - 1, y - 1), (x, y - 1), (x + 1, y - 1)]
        .into_iter()
        .flat_map(|(nx, ny)| [(nx, ny, i - 1), (nx, ny, i), (nx, ny, i + 1)]);
    let mvs: Vec<MotionVector> = own
        .into_iter()
        .chain(neighbours)
        .filter_map(|(px, py, s)| modes.inter_mv(px, py, s))
        .collect();
    mean_vector(&mvs)
}

pub fn mean_vector(mvs: &[MotionVector]) -> MotionVector {
    let sum = |f: fn(&MotionVector) -> i32| mvs.iter().map(|m| f(m) as i64).sum::<i64>();
    MotionVector::new(
        rounded_mean(sum(|m| m.x), mvs.len()) as i32,
        rounded_mean(sum(|m| m.y), mvs.len()) as i32,
        rounded_mean(sum(|m| m.t), mvs.len()) as i32,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mvm_cases() {
        let p = predict_mvm(&[7, 7, 7, 7], 0);
        assert_eq!(p.residuals, vec![0; 4]);
        assert_eq!(p.side_info, SideInfo::MeanDiff(7));
        assert_eq!(p.predictor, vec![7; 4]);

        let p = predict_mvm(&[4, 6], 5);
        assert_eq!(p.residuals, vec![-1, 1]);
        assert_eq!(p.side_info, SideInfo::MeanDiff(0));

        let p = predict_mvm(&[10], 10);
        assert_eq!((p.residuals.clone(), p.side_info), (vec![0], SideInfo::MeanDiff(0)));
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(rounded_mean(5, 2), 3);
        assert_eq!(rounded_mean(-5, 2), -3);
        assert_eq!(rounded_mean(4, 3), 1);
        assert_eq!(rounded_mean(0, 0), 0);
    }

    #[test]
    fn fm_recovers_period() {
        let period = [5u32, 9, 3, 12, 7];
        let history: Vec<u32> = period.iter().cycle().take(30).copied().collect();
        let p = predict_fm(&period, &history, 32, &[]).unwrap();
        assert_eq!(p.mv.t, 5);
        assert_eq!(p.residuals, vec![0; 5]);
        // no previous forward-mode vectors: predictor 0
        assert_eq!(p.side_info, SideInfo::Mvd(MotionVector::temporal(-5)));
    }

    #[test]
    fn fm_periodic_extension_covers_long_segments() {
        let history = vec![4u32, 8, 4, 8];
        let seg = vec![4u32, 8, 4, 8, 4, 8, 4, 8, 4, 8];
        let p = predict_fm(&seg, &history, 32, &[]).unwrap();
        assert_eq!(p.mv.t, 2);
        assert_eq!(p.residuals, vec![0; 10]);
    }

    #[test]
    fn fm_mvp() {
        assert_eq!(mvp_fm(&[]), 0);
        assert_eq!(mvp_fm(&[2, 4]), 3);
        assert_eq!(mvp_fm(&[100, 1, 1, 1, 2]), 1);
        let history = vec![3u32, 20, 20, 20];
        let p = predict_fm(&[3], &history, 32, &[2, 4]).unwrap();
        assert_eq!(p.mv.t, 4);
        assert_eq!(p.side_info, SideInfo::Mvd(MotionVector::temporal(3 - 4)));
    }

    #[test]
    fn fm_needs_history() {
        assert!(predict_fm(&[3, 4], &[], 32, &[]).is_none());
        assert!(predict_fm(&[3, 4], &[5], 0, &[]).is_none());
    }

    #[test]
    fn fm_respects_temporal_range() {
        let history = vec![9u32, 1, 1, 1, 1];
        let p = predict_fm(&[9], &history, 3, &[]).unwrap();
        assert!(p.mv.t <= 3);
        assert_ne!(p.residuals, vec![0]);
    }

    fn hood_with<'a>(sr: u8, cells: &[((i32, i32), RefPixel<'a>)]) -> Neighborhood<'a> {
        let mut h = Neighborhood::new(sr);
        for &((dx, dy), r) in cells {
            h.set(dx, dy, r);
        }
        h
    }

    #[test]
    fn inter_exact_spatial_copy() {
        let left: Vec<u32> = (0..64).map(|i| 5 + (i * 7 % 11)).collect();
        let rl = reciprocals(&left);
        let hood = hood_with(3, &[((-1, 0), RefPixel::new(&left, &rl))]);
        let pattern = SearchPattern::new(3, 32);
        let seg = &left[32..64];
        let p = predict_inter(seg, 32, &hood, &pattern, MotionVector::ZERO).unwrap();
        assert_eq!(p.mv, MotionVector::new(-1, 0, 0));
        assert_eq!(p.residuals, vec![0; 32]);
        assert_eq!(p.side_info, SideInfo::Mvd(MotionVector::new(1, 0, 0)));
    }

    #[test]
    fn zero_spatial_range_is_temporal_search() {
        let history: Vec<u32> = [6u32, 2, 9].iter().cycle().take(12).copied().collect();
        let rh = reciprocals(&history);
        let mut hood = Neighborhood::new(0);
        hood.set(0, 0, RefPixel::new(&history, &rh));
        let pattern = SearchPattern::new(0, 32);
        assert!(pattern.offsets().iter().all(|m| m.x == 0 && m.y == 0 && m.t >= 1));
        let seg = [6u32, 2, 9, 6];
        let inter = predict_inter(&seg, 12, &hood, &pattern, MotionVector::ZERO).unwrap();
        let fm = predict_fm(&seg, &history, 32, &[]).unwrap();
        assert_eq!(inter.mv, fm.mv);
        assert_eq!(inter.predictor, fm.predictor);
    }

    #[test]
    fn inter_tie_prefers_small_offsets() {
        let a = vec![10u32; 40];
        let ra = reciprocals(&a);
        let hood = hood_with(
            2,
            &[
                ((-2, -2), RefPixel::new(&a, &ra)),
                ((0, -1), RefPixel::new(&a, &ra)),
                ((-1, 0), RefPixel::new(&a, &ra)),
            ],
        );
        let pattern = SearchPattern::new(2, 8);
        let p = predict_inter(&[10; 8], 8, &hood, &pattern, MotionVector::ZERO).unwrap();
        // (0,-1,0) and (-1,0,0) both have |t| = 0 and L1 = 1; t, then x decides.
        assert_eq!(p.mv, MotionVector::new(-1, 0, 0));
    }

    #[test]
    fn inter_without_references() {
        let hood = Neighborhood::new(3);
        assert!(predict_inter(&[3], 0, &hood, &SearchPattern::new(3, 32), MotionVector::ZERO).is_none());
    }

    #[test]
    fn neighbour_windows_clamp_at_edges() {
        let isis = [1u32, 2, 3];
        assert_eq!(neighbour_window(&isis, 0, 2, 4).unwrap(), vec![1, 1, 1, 2]);
        assert_eq!(neighbour_window(&isis, 2, -0, 3).unwrap(), vec![3, 3, 3]);
        assert!(neighbour_window(&isis, 5, 0, 3).is_none());
        assert!(neighbour_window(&isis, 0, 4, 4).is_none());
    }

    #[test]
    fn pattern_is_causal_and_ordered() {
        let p = SearchPattern::new(3, 32);
        assert!(p.offsets().iter().all(|m| m.y < 0 || (m.y == 0 && m.x <= 0)));
        assert!(p.offsets().iter().all(|m| m.x.abs() <= 3 && m.y.abs() <= 3 && m.t.abs() <= 32));
        assert!(!p.contains(MotionVector::new(0, 0, 0)));
        assert!(p.contains(MotionVector::new(0, 0, 1)));
        assert!(p.contains(MotionVector::new(3, -1, -32)));
        assert!(!p.contains(MotionVector::new(1, 0, 0)));
        assert_eq!(p.offsets()[0], MotionVector::new(-1, 0, 0));
    }

    #[test]
    fn mvp_cases() {
        let mut modes = ModeMap::new(4, 4);
        assert_eq!(mvp_inter(&modes, 1, 1, 0), MotionVector::ZERO);

        modes.push(0, 0, Mode::Inter, MotionVector::new(1, 0, 2));
        modes.push(1, 0, Mode::Inter, MotionVector::new(3, 0, 4));
        assert_eq!(mvp_inter(&modes, 1, 1, 0), MotionVector::new(2, 0, 3));

        let mut single = ModeMap::new(4, 4);
        single.push(2, 0, Mode::Fm, MotionVector::new(0, 0, 1));
        single.push(2, 0, Mode::Inter, MotionVector::new(-1, 1, 5));
        // top-right of (1,1) is (2,0): segments 0..=2 for seg 1
        assert_eq!(mvp_inter(&single, 1, 1, 1), MotionVector::new(-1, 1, 5));
        // own segments i-1 and i-2 only
        single.push(3, 3, Mode::Inter, MotionVector::new(0, -2, 7));
        assert_eq!(mvp_inter(&single, 3, 3, 1), MotionVector::new(0, -2, 7));
        assert_eq!(mvp_inter(&single, 3, 3, 0), MotionVector::ZERO);
        assert_eq!(mvp_inter(&single, 3, 3, 4), MotionVector::ZERO);
    }

    #[test]
    fn reconstruction_is_exact_before_quantisation() {
        let history: Vec<u32> = (1..50).map(|i| 3 + i % 13).collect();
        let seg: Vec<u32> = (0..20).map(|i| 2 + (i * 5) % 17).collect();
        let preds = [
            predict_mvm(&seg, 4),
            predict_fm(&seg, &history, 32, &[3]).unwrap(),
        ];
        for p in preds {
            for ((t, pr), r) in seg.iter().zip(&p.predictor).zip(&p.residuals) {
                assert_eq!(*pr as i64 + r, *t as i64);
            }
        }
    }
}
