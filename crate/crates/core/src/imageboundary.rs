//! Shapes of black/white images, their outer boundaries and encircled sets,
//! the small-shape recoloring, boundary path covers, boundary-distance
//! censuses, and move experiments on sparse-boundary images.
//!
//! Pixels are `(row, col)`, 0-based; the outer pixel is `(0, 0)`. Black is any
//! nonzero symbol. Shapes use the 4-neighborhood.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{param, Result};
use crate::math::trial_rng;
use crate::structures::{Image, Symbol};

pub type Pixel = (usize, usize);

fn black(v: Symbol) -> bool {
    v != 0
}

fn neighbors(r: usize, c: usize, rows: usize, cols: usize) -> impl Iterator<Item = Pixel> {
    let mut out = [(usize::MAX, usize::MAX); 4];
    if r > 0 {
        out[0] = (r - 1, c);
    }
    if r + 1 < rows {
        out[1] = (r + 1, c);
    }
    if c > 0 {
        out[2] = (r, c - 1);
    }
    if c + 1 < cols {
        out[3] = (r, c + 1);
    }
    out.into_iter().filter(|p| p.0 != usize::MAX)
}

pub fn is_framed(img: &Image) -> bool {
    let (m, n) = (img.rows(), img.cols());
    (0..m).all(|r| !black(img.get(r, 0)) && !black(img.get(r, n - 1)))
        && (0..n).all(|c| !black(img.get(0, c)) && !black(img.get(m - 1, c)))
}

/// Adds a one-pixel white border.
pub fn frame(img: &Image) -> Image {
    let (m, n) = (img.rows(), img.cols());
    Image::from_fn(m + 2, n + 2, img.sigma().max(2), |r, c| {
        if r == 0 || c == 0 || r == m + 1 || c == n + 1 {
            0
        } else {
            img.get(r - 1, c - 1)
        }
    })
    .expect("framed image is valid")
}

/// Black pixels with a white neighbor (4-neighborhood, or all eight
/// surrounding pixels when `eight` is set).
pub fn black_boundary(img: &Image, eight: bool) -> usize {
    let (m, n) = (img.rows(), img.cols());
    let mut count = 0;
    for r in 0..m {
        for c in 0..n {
            if !black(img.get(r, c)) {
                continue;
            }
            let mut white_near = false;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if (dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                    if rr >= 0
                        && cc >= 0
                        && (rr as usize) < m
                        && (cc as usize) < n
                        && !black(img.get(rr as usize, cc as usize))
                    {
                        white_near = true;
                    }
                }
            }
            count += usize::from(white_near);
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub id: usize,
    pub color: Symbol,
    pub pixels: Vec<Pixel>,
    pub is_outer: bool,
    /// Inclusive bounding box (r0, c0, r1, c1).
    pub bbox: (usize, usize, usize, usize),
}

/// 4-connected monochromatic components of a framed image.
#[derive(Debug, Clone)]
pub struct Decomposition {
    img: Image,
    labels: Vec<usize>,
    shapes: Vec<Shape>,
    pub framed_added: bool,
}

/// Reachability of the outer pixel around one shape, restricted to a window
/// that contains the shape with a one-pixel margin.
struct Window {
    r0: usize,
    c0: usize,
    h: usize,
    w: usize,
    /// true: in R_S (reachable from the outer pixel avoiding the shape)
    reach: Vec<bool>,
}

impl Window {
    fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.r0 && c >= self.c0 && r < self.r0 + self.h && c < self.c0 + self.w
    }

    /// Whether (r, c) lies in R_S; pixels outside the window always do.
    fn reached(&self, r: usize, c: usize) -> bool {
        !self.contains(r, c) || self.reach[(r - self.r0) * self.w + (c - self.c0)]
    }
}

impl Decomposition {
    /// Frames the image first (with a warning) when its border is not white.
    pub fn new(img: &Image) -> Result<Self> {
        if img.pixels().iter().any(|&v| v > 1) {
            return param("boundary analysis needs a black/white image");
        }
        let framed_added = !is_framed(img);
        let img = if framed_added {
            log::warn!(
                "image border is not white; adding a white frame ({}x{} -> {}x{})",
                img.rows(),
                img.cols(),
                img.rows() + 2,
                img.cols() + 2
            );
            frame(img)
        } else {
            img.clone()
        };
        let (m, n) = (img.rows(), img.cols());
        let mut labels = vec![usize::MAX; m * n];
        let mut shapes = Vec::new();
        for start in 0..m * n {
            if labels[start] != usize::MAX {
                continue;
            }
            let id = shapes.len();
            let color = img.pixels()[start];
            let mut pixels = Vec::new();
            let mut queue = VecDeque::from([start]);
            labels[start] = id;
            let mut bbox = (usize::MAX, usize::MAX, 0, 0);
            while let Some(i) = queue.pop_front() {
                let (r, c) = (i / n, i % n);
                pixels.push((r, c));
                bbox = (bbox.0.min(r), bbox.1.min(c), bbox.2.max(r), bbox.3.max(c));
                for (rr, cc) in neighbors(r, c, m, n) {
                    let j = rr * n + cc;
                    if labels[j] == usize::MAX && img.pixels()[j] == color {
                        labels[j] = id;
                        queue.push_back(j);
                    }
                }
            }
            pixels.sort_unstable();
            shapes.push(Shape {
                id,
                color,
                pixels,
                is_outer: id == 0,
                bbox,
            });
        }
        Ok(Decomposition {
            img,
            labels,
            shapes,
            framed_added,
        })
    }

    pub fn image(&self) -> &Image {
        &self.img
    }

    pub fn side(&self) -> usize {
        self.img.rows().max(self.img.cols())
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn shape_of(&self, p: Pixel) -> usize {
        self.labels[p.0 * self.img.cols() + p.1]
    }

    fn inner(&self, s: usize) -> Result<&Shape> {
        match self.shapes.get(s) {
            None => param(format!("no shape {s}")),
            Some(sh) if sh.is_outer => param("the outer shape has no outer boundary"),
            Some(sh) => Ok(sh),
        }
    }

    fn window(&self, s: usize) -> Window {
        let sh = &self.shapes[s];
        // framed: inner shapes never touch the border, so the margin fits
        let (r0, c0) = (sh.bbox.0 - 1, sh.bbox.1 - 1);
        let (h, w) = (sh.bbox.2 - sh.bbox.0 + 3, sh.bbox.3 - sh.bbox.1 + 3);
        let mut reach = vec![false; h * w];
        let mut queue = VecDeque::new();
        let n = self.img.cols();
        for i in 0..h {
            for j in 0..w {
                if i == 0 || j == 0 || i == h - 1 || j == w - 1 {
                    reach[i * w + j] = true;
                    queue.push_back((i, j));
                }
            }
        }
        while let Some((i, j)) = queue.pop_front() {
            for (a, b) in neighbors(i, j, h, w) {
                let k = a * w + b;
                if !reach[k] && self.labels[(a + r0) * n + (b + c0)] != s {
                    reach[k] = true;
                    queue.push_back((a, b));
                }
            }
        }
        Window { r0, c0, h, w, reach }
    }

    /// B(S): pixels of S with a neighbor reachable from the outer pixel
    /// without touching S.
    pub fn outer_boundary(&self, s: usize) -> Result<Vec<Pixel>> {
        let sh = self.inner(s)?;
        let win = self.window(s);
        let (m, n) = (self.img.rows(), self.img.cols());
        Ok(sh
            .pixels
            .iter()
            .copied()
            .filter(|&(r, c)| neighbors(r, c, m, n).any(|(a, b)| self.labels[a * n + b] != s && win.reached(a, b)))
            .collect())
    }

    /// Pixels every path from the outer pixel to which meets S (S included).
    pub fn encircled(&self, s: usize) -> Result<Vec<Pixel>> {
        self.inner(s)?;
        let win = self.window(s);
        let mut out = Vec::new();
        for i in 0..win.h {
            for j in 0..win.w {
                if !win.reach[i * win.w + j] {
                    out.push((i + win.r0, j + win.c0));
                }
            }
        }
        Ok(out)
    }

    /// Γ(S): clockwise walk of the curve separating the encircled set from
    /// the rest, listing the encircled pixel on the right of every unit
    /// segment and the corner pixel at every left turn.
    pub fn path_cover(&self, s: usize) -> Result<Vec<Pixel>> {
        self.inner(s)?;
        let win = self.window(s);
        let inside = |r: usize, c: usize| !win.reached(r, c);
        // directed unit segments keyed by start vertex (y, x): (end, right pixel, direction)
        // directions: 0 east, 1 south, 2 west, 3 north
        let mut next: HashMap<(usize, usize), ((usize, usize), Pixel, u8)> = HashMap::new();
        let mut first = None;
        for i in 0..win.h {
            for j in 0..win.w {
                let (r, c) = (i + win.r0, j + win.c0);
                if !inside(r, c) {
                    continue;
                }
                let mut add = |from: (usize, usize), to: (usize, usize), dir: u8| {
                    let prev = next.insert(from, (to, (r, c), dir));
                    debug_assert!(prev.is_none(), "pinched boundary at {from:?}");
                    if first.map_or(true, |f| from < f) {
                        first = Some(from);
                    }
                };
                if !inside(r - 1, c) {
                    add((r, c), (r, c + 1), 0);
                }
                if !inside(r, c + 1) {
                    add((r, c + 1), (r + 1, c + 1), 1);
                }
                if !inside(r + 1, c) {
                    add((r + 1, c + 1), (r + 1, c), 2);
                }
                if !inside(r, c - 1) {
                    add((r + 1, c), (r, c), 3);
                }
            }
        }
        let start = first.expect("inner shapes are nonempty");
        let mut path: Vec<Pixel> = Vec::new();
        let mut v = start;
        let mut prev: Option<(Pixel, u8)> = None;
        loop {
            let (to, px, dir) = next[&v];
            if let Some((ppx, pdir)) = prev {
                let left_turn = (pdir + 3) % 4 == dir;
                if left_turn {
                    let a = (ppx.0, px.1);
                    let b = (px.0, ppx.1);
                    let corner = if inside(a.0, a.1) { a } else { b };
                    path.push(corner);
                }
            }
            path.push(px);
            prev = Some((px, dir));
            v = to;
            if v == start {
                break;
            }
        }
        // close the loop: the turn back onto the first segment
        let (_, px0, dir0) = next[&start];
        if let Some((ppx, pdir)) = prev {
            if (pdir + 3) % 4 == dir0 {
                let a = (ppx.0, px0.1);
                let b = (px0.0, ppx.1);
                path.push(if inside(a.0, a.1) { a } else { b });
            }
        }
        path.dedup();
        if path.len() > 1 && path.first() == path.last() {
            path.pop();
        }
        Ok(path)
    }

    /// Union of B(S) over the inner shapes, as a mask.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let n = self.img.cols();
        let mut mask = vec![false; self.labels.len()];
        for sh in self.shapes.iter().filter(|s| !s.is_outer) {
            for (r, c) in self.outer_boundary(sh.id).expect("inner shape") {
                mask[r * n + c] = true;
            }
        }
        mask
    }

    pub fn boundary_report(&self) -> BoundaryReport {
        let (m, n) = (self.img.rows(), self.img.cols());
        let mut per_shape = Vec::new();
        let mut in_b = vec![false; m * n];
        let mut encircled_ok = true;
        let mut max_encircled_ratio: f64 = 0.0;
        for sh in self.shapes.iter().filter(|s| !s.is_outer) {
            let b = self.outer_boundary(sh.id).expect("inner shape");
            let enc = self.encircled(sh.id).expect("inner shape").len();
            if enc > b.len() * b.len() {
                encircled_ok = false;
            }
            max_encircled_ratio = max_encircled_ratio.max(enc as f64 / (b.len() * b.len()) as f64);
            for &(r, c) in &b {
                in_b[r * n + c] = true;
            }
            per_shape.push(ShapeBoundary {
                shape: sh.id,
                color: sh.color,
                size: sh.pixels.len(),
                boundary: b.len(),
                encircled: enc,
            });
        }
        // each bichromatic neighbor pair has an endpoint in its shape's B
        let mut violations = 0;
        for r in 0..m {
            for c in 0..n {
                for (a, b) in [(r + 1, c), (r, c + 1)] {
                    if a >= m || b >= n {
                        continue;
                    }
                    if black(self.img.get(r, c)) != black(self.img.get(a, b))
                        && !in_b[r * n + c]
                        && !in_b[a * n + b]
                    {
                        violations += 1;
                    }
                }
            }
        }
        let total = in_b.iter().filter(|&&x| x).count();
        let bb = black_boundary(&self.img, false);
        BoundaryReport {
            side: self.side(),
            per_shape,
            total_boundary: total,
            sparsity: total as f64 / self.side() as f64,
            black_boundary: bb,
            c: bb as f64 / self.side() as f64,
            boundary_pixel_violations: violations,
            encircled_within_square: encircled_ok,
            max_encircled_ratio,
        }
    }
}

/// Shapes of the (auto-framed) image; shape 0 is the outer shape.
pub fn shapes(img: &Image) -> Result<Vec<Shape>> {
    Ok(Decomposition::new(img)?.shapes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeBoundary {
    pub shape: usize,
    pub color: Symbol,
    pub size: usize,
    pub boundary: usize,
    pub encircled: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub side: usize,
    pub per_shape: Vec<ShapeBoundary>,
    /// |B(I)|.
    pub total_boundary: usize,
    /// |B(I)| / n.
    pub sparsity: f64,
    /// Black pixels with a white neighbor.
    pub black_boundary: usize,
    /// black_boundary / n.
    pub c: f64,
    pub boundary_pixel_violations: usize,
    /// |encircled(S)| ≤ |B(S)|² for every inner shape.
    pub encircled_within_square: bool,
    pub max_encircled_ratio: f64,
}

pub fn boundary_report(img: &Image) -> Result<BoundaryReport> {
    Ok(Decomposition::new(img)?.boundary_report())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizeResult {
    pub image: Image,
    pub iterations: usize,
    /// Pixels whose color changed.
    pub modified: u64,
    /// |B(J)| before the first and after every iteration.
    pub boundary_sizes: Vec<usize>,
    pub strictly_decreasing: bool,
    /// Each recoloring changed at most |B(S)|² pixels.
    pub per_iteration_bound_ok: bool,
    pub framed_added: bool,
}

/// Repeatedly recolors everything encircled by the inner shape with the
/// smallest |B(S)| ≤ √δ·n (ties by shape id), until no such shape is left.
pub fn regularize(img: &Image, delta: f64) -> Result<RegularizeResult> {
    if !(delta > 0.0 && delta < 1.0) {
        return param("δ must lie in (0, 1)");
    }
    let mut dec = Decomposition::new(img)?;
    let framed_added = dec.framed_added;
    let limit = delta.sqrt() * dec.side() as f64;
    let mut sizes = vec![dec.boundary_mask().iter().filter(|&&x| x).count()];
    let mut modified = 0u64;
    let mut bound_ok = true;
    let mut iterations = 0;
    let max_iterations = dec.image().pixels().len() + 1;
    loop {
        let mut pick: Option<(usize, usize)> = None;
        for sh in dec.shapes().iter().filter(|s| !s.is_outer) {
            let b = dec.outer_boundary(sh.id)?.len();
            if (b as f64) <= limit && pick.map_or(true, |(pb, _)| b < pb) {
                pick = Some((b, sh.id));
            }
        }
        let Some((b, s)) = pick else { break };
        let color = dec.shapes()[s].color;
        let opposite = 1 - color.min(1);
        let mut pixels = dec.image().pixels().to_vec();
        let n = dec.image().cols();
        let mut changed = 0u64;
        for (r, c) in dec.encircled(s)? {
            if pixels[r * n + c] != opposite {
                pixels[r * n + c] = opposite;
                changed += 1;
            }
        }
        if changed > (b * b) as u64 {
            bound_ok = false;
        }
        modified += changed;
        let next = Image::new(dec.image().rows(), n, pixels, dec.image().sigma())?;
        dec = Decomposition::new(&next)?;
        sizes.push(dec.boundary_mask().iter().filter(|&&x| x).count());
        iterations += 1;
        if iterations > max_iterations {
            log::error!("regularize did not terminate within {max_iterations} iterations");
            break;
        }
    }
    let strictly_decreasing = sizes.windows(2).all(|w| w[1] < w[0]);
    Ok(RegularizeResult {
        image: dec.img,
        iterations,
        modified,
        boundary_sizes: sizes,
        strictly_decreasing,
        per_iteration_bound_ok: bound_ok,
        framed_added,
    })
}

/// Manhattan distance of every pixel to B(I) (None when B(I) is empty).
pub fn boundary_distances(dec: &Decomposition) -> Vec<Option<usize>> {
    let (m, n) = (dec.image().rows(), dec.image().cols());
    let mask = dec.boundary_mask();
    let mut dist = vec![None; m * n];
    let mut queue = VecDeque::new();
    for (i, &b) in mask.iter().enumerate() {
        if b {
            dist[i] = Some(0);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let d = dist[i].expect("queued pixels have distances");
        for (a, b) in neighbors(i / n, i % n, m, n) {
            let j = a * n + b;
            if dist[j].is_none() {
                dist[j] = Some(d + 1);
                queue.push_back(j);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub d: usize,
    pub count: usize,
    pub boundary: usize,
    pub inner_shapes: usize,
    /// count / (d·|B(I)| + d²·shapes); None at d = 0.
    pub ratio: Option<f64>,
}

pub fn boundary_distance_census(img: &Image, d: usize) -> Result<Census> {
    let dec = Decomposition::new(img)?;
    Ok(census_of(&dec, &boundary_distances(&dec), d))
}

pub fn census_of(dec: &Decomposition, dist: &[Option<usize>], d: usize) -> Census {
    let count = dist.iter().filter(|x| x.is_some_and(|v| v <= d)).count();
    let boundary = dist.iter().filter(|x| **x == Some(0)).count();
    let inner_shapes = dec.shapes().len() - 1;
    let denom = d * boundary + d * d * inner_shapes;
    Census {
        d,
        count,
        boundary,
        inner_shapes,
        ratio: (d > 0 && denom > 0).then(|| count as f64 / denom as f64),
    }
}

// ---------------------------------------------------------------- experiments

/// Row and column arrangement after basic moves: position (r, c) shows the
/// original pixel (rows[r], cols[c]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrangement {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub moves: u64,
}

impl Arrangement {
    pub fn identity(m: usize, n: usize) -> Self {
        Arrangement {
            rows: (0..m).collect(),
            cols: (0..n).collect(),
            moves: 0,
        }
    }

    /// Moves the block of `len` rows starting at `at` down past the next
    /// `by` rows (len·by basic moves).
    pub fn shift_rows(&mut self, at: usize, len: usize, by: usize) {
        self.rows[at..at + len + by].rotate_left(len);
        self.moves += (len * by) as u64;
    }

    pub fn shift_cols(&mut self, at: usize, len: usize, by: usize) {
        self.cols[at..at + len + by].rotate_left(len);
        self.moves += (len * by) as u64;
    }

    pub fn hamming(&self, img: &Image) -> u64 {
        let mut d = 0;
        for r in 0..img.rows() {
            for c in 0..img.cols() {
                d += u64::from(img.get(r, c) != img.get(self.rows[r], self.cols[c]));
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ERExperiment {
    pub n: usize,
    pub delta: f64,
    /// ⌊δ·C(2n, 2)⌋.
    pub budget: u64,
    /// Black boundary over n.
    pub c: f64,
    pub trials: u64,
    /// Worst d_H(I, I') over random schedules, relative to n².
    pub worst_random: f64,
    pub worst_adversarial: f64,
    pub worst_schedule: String,
    /// max(worst_random, worst_adversarial) / (c·√δ).
    pub ratio: f64,
    /// Same schedules applied to the recolored image J (None if J was framed).
    pub worst_regularized: Option<f64>,
    /// d_H(I, J) relative to n².
    pub regularization_distance: f64,
}

impl ERExperiment {
    pub fn worst(&self) -> f64 {
        self.worst_random.max(self.worst_adversarial)
    }
}

fn adversarial(m: usize, n: usize, delta: f64, budget: u64) -> Vec<(String, Vec<Arrangement>)> {
    let s = ((delta.sqrt() * n as f64).floor() as usize).min(m / 2).min(n / 2);
    let b = ((budget as f64).sqrt().floor() as usize).min(m / 2).min(n / 2);
    let h = (((budget / 2) as f64).sqrt().floor() as usize).min(m / 2).min(n / 2);
    let offsets = |len: usize, side: usize| -> Vec<usize> {
        let last = side - 2 * len;
        let step = (side / 16).max(1);
        let mut v: Vec<usize> = (0..=last).step_by(step).collect();
        if v.last() != Some(&last) {
            v.push(last);
        }
        v
    };
    let mut out = Vec::new();
    let mut square = Vec::new();
    for &a in &offsets(s, m) {
        for &bo in &offsets(s, n) {
            let mut arr = Arrangement::identity(m, n);
            arr.shift_rows(a, s, s);
            arr.shift_cols(bo, s, s);
            square.push(arr);
        }
    }
    out.push(("square".to_string(), square));
    let rows = offsets(b, m)
        .into_iter()
        .map(|a| {
            let mut arr = Arrangement::identity(m, n);
            arr.shift_rows(a, b, b);
            arr
        })
        .collect();
    out.push(("rows".to_string(), rows));
    let cols = offsets(b, n)
        .into_iter()
        .map(|a| {
            let mut arr = Arrangement::identity(m, n);
            arr.shift_cols(a, b, b);
            arr
        })
        .collect();
    out.push(("cols".to_string(), cols));
    let mut split = Vec::new();
    for &a in &offsets(h, m) {
        for &bo in &offsets(h, n) {
            let mut arr = Arrangement::identity(m, n);
            arr.shift_rows(a, h, h);
            arr.shift_cols(bo, h, h);
            split.push(arr);
        }
    }
    out.push(("split".to_string(), split));
    out
}

fn random_arrangement(m: usize, n: usize, moves: u64, seed: u64, trial: u64) -> Arrangement {
    let mut rng = trial_rng(seed, trial);
    let mut arr = Arrangement::identity(m, n);
    let choices = (m - 1) + (n - 1);
    if choices == 0 {
        return arr;
    }
    for _ in 0..moves {
        let k = rng.gen_range(0..choices);
        if k < m - 1 {
            arr.rows.swap(k, k + 1);
        } else {
            let x = k - (m - 1);
            arr.cols.swap(x, x + 1);
        }
        arr.moves += 1;
    }
    arr
}

/// Worst Hamming change of an image under random and adversarial schedules
/// of at most ⌊δ·C(2n,2)⌋ row and column moves.
pub fn er_experiment(img: &Image, delta: f64, trials: u64, seed: u64) -> Result<ERExperiment> {
    if !(0.0..1.0).contains(&delta) {
        return param("δ must lie in [0, 1)");
    }
    if !img.is_square() {
        return param("move experiments use square images");
    }
    let n = img.rows();
    let area = (n * n) as f64;
    let budget = (delta * (n * (2 * n - 1)) as f64).floor() as u64;
    let c = black_boundary(img, false) as f64 / n as f64;

    let randoms: Vec<Arrangement> = (0..trials)
        .into_par_iter()
        .map(|t| random_arrangement(n, n, budget, seed, t))
        .collect();
    let adv = if delta > 0.0 { adversarial(n, n, delta, budget) } else { vec![] };

    let (j, regularization_distance) = if delta > 0.0 {
        let reg = regularize(img, delta)?;
        if reg.framed_added {
            (None, 0.0)
        } else {
            let d = img
                .pixels()
                .iter()
                .zip(reg.image.pixels())
                .filter(|(a, b)| a != b)
                .count() as f64
                / area;
            (Some(reg.image), d)
        }
    } else {
        (Some(img.clone()), 0.0)
    };

    let worst_random = randoms
        .par_iter()
        .map(|a| a.hamming(img))
        .max()
        .unwrap_or(0) as f64
        / area;
    let mut worst_adversarial = 0.0;
    let mut worst_schedule = if worst_random > 0.0 { "random" } else { "none" }.to_string();
    for (name, arrs) in &adv {
        for a in arrs {
            debug_assert!(a.moves <= budget, "{name} uses {} of {budget} moves", a.moves);
            let d = a.hamming(img) as f64 / area;
            if d > worst_adversarial {
                worst_adversarial = d;
                if d > worst_random {
                    worst_schedule.clone_from(name);
                }
            }
        }
    }
    let worst_regularized = j.map(|j| {
        let all = randoms.iter().chain(adv.iter().flat_map(|(_, a)| a.iter()));
        all.map(|a| a.hamming(&j)).max().unwrap_or(0) as f64 / area
    });
    let worst = f64::max(worst_random, worst_adversarial);
    let scale = c * delta.sqrt();
    Ok(ERExperiment {
        n,
        delta,
        budget,
        c,
        trials,
        worst_random,
        worst_adversarial,
        worst_schedule,
        ratio: if scale > 0.0 { worst / scale } else { 0.0 },
        worst_regularized,
        regularization_distance,
    })
}

/// Smallest β with worst ≤ β·c·√δ over the given runs.
pub fn fit_beta(runs: &[ERExperiment]) -> f64 {
    runs.iter().map(|r| r.ratio).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- test images

/// Black disk of the given radius (as a fraction of n) centered in an n×n image.
pub fn disk_image(n: usize, radius: f64) -> Image {
    let c = (n as f64 - 1.0) / 2.0;
    let r2 = (radius * n as f64).powi(2);
    Image::from_fn(n, n, 2, |r, col| {
        let (dr, dc) = (r as f64 - c, col as f64 - c);
        u8::from(dr * dr + dc * dc <= r2)
    })
    .expect("valid disk")
}

/// Concentric black square rings of width one, two pixels apart, inside a
/// white frame.
pub fn ring_image(n: usize) -> Image {
    Image::from_fn(n, n, 2, |r, c| {
        let d = r.min(c).min(n - 1 - r).min(n - 1 - c);
        u8::from(d >= 1 && d % 2 == 1)
    })
    .expect("valid rings")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rng;

    /// Definition-level oracle: P ∈ B(S) iff some path from (0,0) reaches P
    /// while avoiding S elsewhere, found by search over (pixel) states.
    fn brute_boundary(img: &Image, labels: &Decomposition, s: usize) -> Vec<Pixel> {
        let (m, n) = (img.rows(), img.cols());
        let mut out = Vec::new();
        for &p in &labels.shapes()[s].pixels {
            let mut seen = vec![false; m * n];
            let mut stack = vec![(0usize, 0usize)];
            seen[0] = true;
            let mut hit = false;
            while let Some((r, c)) = stack.pop() {
                if (r, c) == p {
                    hit = true;
                    break;
                }
                for q in neighbors(r, c, m, n) {
                    let allowed = q == p || labels.shape_of(q) != s;
                    if allowed && !seen[q.0 * n + q.1] {
                        seen[q.0 * n + q.1] = true;
                        stack.push(q);
                    }
                }
            }
            if hit {
                out.push(p);
            }
        }
        out
    }

    fn square(side: usize, r: usize) -> Image {
        let start = (side - r) / 2;
        Image::from_fn(side, side, 2, |a, b| {
            u8::from((start..start + r).contains(&a) && (start..start + r).contains(&b))
        })
        .unwrap()
    }

    fn seven_ring() -> Image {
        // ring on the pixels at Chebyshev distance 2 from the center, hole inside
        Image::from_fn(7, 7, 2, |r, c| {
            let d = (r as i64 - 3).abs().max((c as i64 - 3).abs());
            u8::from(d == 2)
        })
        .unwrap()
    }

    #[test]
    fn shape_counts() {
        assert_eq!(shapes(&Image::new(5, 5, vec![0; 25], 2).unwrap()).unwrap().len(), 1);
        let mut px = vec![0; 25];
        px[12] = 1;
        assert_eq!(shapes(&Image::new(5, 5, px, 2).unwrap()).unwrap().len(), 2);
        assert_eq!(shapes(&seven_ring()).unwrap().len(), 3);
    }

    #[test]
    fn square_boundary_is_perimeter() {
        for r in 1..=4 {
            let img = square(r + 4, r);
            let dec = Decomposition::new(&img).unwrap();
            let b = dec.outer_boundary(1).unwrap();
            let expect = if r == 1 { 1 } else { 4 * r - 4 };
            assert_eq!(b.len(), expect);
            assert_eq!(b, brute_boundary(&img, &dec, 1));
            let enc = dec.encircled(1).unwrap();
            assert_eq!(enc.len(), r * r);
            assert!(enc.len() <= b.len() * b.len());
        }
    }

    #[test]
    fn ring_hole_boundary_follows_definition() {
        let img = seven_ring();
        let dec = Decomposition::new(&img).unwrap();
        let hole = dec.shape_of((3, 3));
        let ring = dec.shape_of((1, 1));
        // paths may walk over the ring, so hole pixels next to it count
        let b = dec.outer_boundary(hole).unwrap();
        assert_eq!(b, brute_boundary(&img, &dec, hole));
        assert_eq!(b.len(), 8);
        let enc = dec.encircled(ring).unwrap();
        assert!(enc.contains(&(3, 3)));
        assert_eq!(enc.len(), 25);
    }

    #[test]
    fn boundary_matches_brute_force_on_random_images() {
        let mut r = rng(3);
        for _ in 0..40 {
            let img = frame(&Image::from_fn(6, 6, 2, |_, _| r.gen_range(0..2)).unwrap());
            let dec = Decomposition::new(&img).unwrap();
            for sh in dec.shapes().iter().filter(|s| !s.is_outer) {
                assert_eq!(dec.outer_boundary(sh.id).unwrap(), brute_boundary(&img, &dec, sh.id));
            }
            let rep = dec.boundary_report();
            assert_eq!(rep.boundary_pixel_violations, 0);
            assert!(rep.encircled_within_square);
        }
    }

    #[test]
    fn auto_frame_and_reports() {
        let img = Image::new(3, 3, vec![1; 9], 2).unwrap();
        let dec = Decomposition::new(&img).unwrap();
        assert!(dec.framed_added);
        assert_eq!(dec.image().rows(), 5);
        let all_white = Image::new(6, 6, vec![0; 36], 2).unwrap();
        assert_eq!(boundary_report(&all_white).unwrap().total_boundary, 0);
        let disk = disk_image(32, 0.35);
        let rep = boundary_report(&disk).unwrap();
        assert!(rep.total_boundary <= 4 * 32);
    }

    #[test]
    fn path_cover_covers_boundary() {
        let mut r = rng(5);
        for k in 0..60 {
            let img = if k < 6 {
                square(k + 5, k + 1)
            } else {
                frame(&Image::from_fn(8, 8, 2, |_, _| r.gen_range(0..2)).unwrap())
            };
            let dec = Decomposition::new(&img).unwrap();
            for sh in dec.shapes().iter().filter(|s| !s.is_outer) {
                let path = dec.path_cover(sh.id).unwrap();
                let b = dec.outer_boundary(sh.id).unwrap();
                for p in &b {
                    assert!(path.contains(p));
                }
                for w in path.windows(2) {
                    let d = w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1);
                    assert_eq!(d, 1, "path step {w:?}");
                }
                assert!(path.len() <= 4 * b.len().max(1));
            }
        }
        let dot = square(5, 1);
        assert_eq!(Decomposition::new(&dot).unwrap().path_cover(1).unwrap(), vec![(2, 2)]);
    }

    #[test]
    fn regularize_examples() {
        let mut px = vec![0; 49];
        px[24] = 1;
        let dot = Image::new(7, 7, px, 2).unwrap();
        let res = regularize(&dot, 0.5).unwrap();
        assert_eq!(res.modified, 1);
        assert!(res.image.pixels().iter().all(|&v| v == 0));
        let disk = disk_image(32, 0.35);
        let res = regularize(&disk, 0.01).unwrap();
        assert_eq!(res.modified, 0);
        assert_eq!(res.image, disk);
        let mut r = rng(8);
        for _ in 0..5 {
            let img = frame(&Image::from_fn(30, 30, 2, |_, _| r.gen_range(0..2)).unwrap());
            let shapes = Decomposition::new(&img).unwrap().shapes().len() - 1;
            let res = regularize(&img, 0.05).unwrap();
            assert!(res.iterations <= shapes);
            assert!(res.strictly_decreasing);
            assert!(res.per_iteration_bound_ok);
        }
    }

    #[test]
    fn census_examples() {
        let white = Image::new(6, 6, vec![0; 36], 2).unwrap();
        assert_eq!(boundary_distance_census(&white, 3).unwrap().count, 0);
        let disk = disk_image(16, 0.3);
        let dec = Decomposition::new(&disk).unwrap();
        let dist = boundary_distances(&dec);
        let c0 = census_of(&dec, &dist, 0);
        assert_eq!(c0.count, dec.boundary_report().total_boundary);
        let mut last = 0;
        for d in 0..40 {
            let c = census_of(&dec, &dist, d).count;
            assert!(c >= last);
            last = c;
        }
        assert_eq!(last, 256);
    }

    #[test]
    fn experiment_budgets() {
        let disk = disk_image(32, 0.35);
        let e = er_experiment(&disk, 0.0, 10, 1).unwrap();
        assert_eq!(e.worst(), 0.0);
        let e = er_experiment(&disk, 0.01, 20, 1).unwrap();
        assert_eq!(e.budget, (0.01f64 * (32.0 * 63.0)).floor() as u64);
        for (_, arrs) in adversarial(32, 32, 0.01, e.budget) {
            assert!(arrs.iter().all(|a| a.moves <= e.budget));
        }
        assert!(e.worst() > 0.0);
    }
}
