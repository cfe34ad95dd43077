//! Weighted sampling of frame indices without replacement, and the grid layout
//! the sampled frames are scored in.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("{count} frames do not fit a {side}x{side} grid")]
    Overflow { count: usize, side: usize },
    #[error("frame {0} appears more than once in the grid")]
    Duplicate(usize),
}

/// Row-major `side × side` cells, each optionally holding a frame index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub side: usize,
    pub cells: Vec<Option<usize>>,
}

impl GridLayout {
    /// `(cell, frame)` for every filled cell, in cell order.
    pub fn filled(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(cell, frame)| frame.map(|f| (cell, f)))
    }

    pub fn filled_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<usize> {
        self.cells[row * self.side + col]
    }

    /// A 1×1 grid holding a single frame.
    pub fn single(frame: usize) -> Self {
        Self {
            side: 1,
            cells: vec![Some(frame)],
        }
    }
}

/// Places `indices` into a `side × side` grid in ascending frame order,
/// row-major; unused trailing cells stay empty.
pub fn build_grid(indices: &[usize], side: usize) -> Result<GridLayout, GridError> {
    let capacity = side * side;
    if indices.len() > capacity {
        return Err(GridError::Overflow {
            count: indices.len(),
            side,
        });
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(GridError::Duplicate(w[0]));
    }
    let mut cells: Vec<Option<usize>> = sorted.into_iter().map(Some).collect();
    cells.resize(capacity, None);
    Ok(GridLayout { side, cells })
}

/// Draws up to `n` distinct indices, one at a time, each with probability
/// proportional to its weight among the indices not yet drawn.
///
/// Zero (or negative, or non-finite) weights are never drawn, so asking for
/// more than the support returns the whole support in draw order.
pub fn weighted_sample_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    n: usize,
    rng: &mut R,
) -> Vec<usize> {
    let clean: Vec<f64> = weights
        .iter()
        .map(|&w| if w.is_finite() && w > 0.0 { w } else { 0.0 })
        .collect();
    let support = clean.iter().filter(|w| **w > 0.0).count();
    let n = n.min(support);
    let mut tree = Fenwick::new(&clean);
    let mut remaining = clean;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let total = tree.total();
        let target = rng.random::<f64>() * total;
        let mut index = tree.lower_bound(target);
        if index >= remaining.len() || remaining[index] <= 0.0 {
            // Accumulated rounding in the tree can land on an exhausted slot.
            index = nearest_positive(&remaining, index.min(remaining.len() - 1));
        }
        tree.add(index, -remaining[index]);
        remaining[index] = 0.0;
        out.push(index);
    }
    out
}

fn nearest_positive(weights: &[f64], from: usize) -> usize {
    (from..weights.len())
        .find(|&i| weights[i] > 0.0)
        .or_else(|| (0..from).rev().find(|&i| weights[i] > 0.0))
        .expect("sampling past the support")
}

/// Binary indexed tree over non-negative weights.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self { tree }
    }

    fn add(&mut self, index: usize, delta: f64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut i = self.tree.len() - 1;
        let mut sum = 0.0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn lower_bound(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
