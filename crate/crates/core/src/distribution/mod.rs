//! Belief updates on a [`ScoreState`]: writing grid confidences, spreading
//! them to temporal neighbours and rebuilding the sampling distribution.

pub mod spline;

use thiserror::Error;

use crate::model::ScoreState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("frame {0} was already visited")]
    AlreadyVisited(usize),
    #[error("frame {index} is outside a {len}-frame video")]
    OutOfRange { index: usize, len: usize },
    #[error("frame {0} is scored twice in one update")]
    Repeated(usize),
    #[error("confidence {0} is not a finite number")]
    NotFinite(f64),
    #[error("distribution has no mass left and every frame is visited")]
    NoMass,
}

/// Records each `(frame, confidence)` and marks the frame visited.
///
/// The update is all-or-nothing: if any pair is invalid the state is left
/// untouched.
pub fn apply_scores(state: &mut ScoreState, pairs: &[(usize, f64)]) -> Result<(), DistributionError> {
    let len = state.len();
    let mut seen = std::collections::HashSet::with_capacity(pairs.len());
    for &(index, confidence) in pairs {
        if index >= len {
            return Err(DistributionError::OutOfRange { index, len });
        }
        if state.visited[index] {
            return Err(DistributionError::AlreadyVisited(index));
        }
        if !seen.insert(index) {
            return Err(DistributionError::Repeated(index));
        }
        if !confidence.is_finite() {
            return Err(DistributionError::NotFinite(confidence));
        }
    }
    for &(index, confidence) in pairs {
        state.scores[index] = confidence.clamp(0.0, 1.0);
        state.visited[index] = true;
    }
    Ok(())
}

/// Raises every score within `window` frames of `frame` to at least
/// `score[frame] / (|δ| + 1)`.
pub fn propagate_window(state: &mut ScoreState, frame: usize, window: usize) {
    let source = state.scores[frame];
    if source <= 0.0 {
        return;
    }
    let lo = frame.saturating_sub(window);
    let hi = (frame + window).min(state.len() - 1);
    for (i, score) in state.scores.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let spread = source / (i.abs_diff(frame) + 1) as f64;
        if spread > *score {
            *score = spread;
        }
    }
}

/// Rebuilds `state.prob` from the scores.
///
/// Control points are the visited frames and every frame with a positive
/// score, plus both ends of the video. The curve through them is floored at
/// `prob_floor` and normalized. Fewer than two control points give a uniform
/// distribution.
pub fn rebuild_probability(state: &mut ScoreState, prob_floor: f64) -> Result<(), DistributionError> {
    let curve = probability_curve(state, prob_floor);
    let total: f64 = curve.iter().sum();
    if total > 0.0 && total.is_finite() {
        state.prob = curve.into_iter().map(|v| v / total).collect();
        return Ok(());
    }
    let unvisited = state.unvisited_count();
    if unvisited == 0 {
        return Err(DistributionError::NoMass);
    }
    let share = 1.0 / unvisited as f64;
    state.prob = state.visited.iter().map(|v| if *v { 0.0 } else { share }).collect();
    Ok(())
}

/// The pre-normalization curve that [`rebuild_probability`] normalizes.
pub fn probability_curve(state: &ScoreState, prob_floor: f64) -> Vec<f64> {
    let len = state.len();
    let controls: Vec<usize> = (0..len)
        .filter(|&i| state.visited[i] || state.scores[i] > 0.0)
        .collect();
    if controls.len() <= 1 {
        return vec![1.0; len];
    }
    let mut xs = Vec::with_capacity(controls.len() + 2);
    if controls[0] != 0 {
        xs.push(0);
    }
    xs.extend_from_slice(&controls);
    if *xs.last().unwrap() != len - 1 {
        xs.push(len - 1);
    }
    let ys: Vec<f64> = xs.iter().map(|&i| state.scores[i]).collect();
    spline::interpolate(&xs, &ys, len)
        .into_iter()
        .map(|v| v.max(prob_floor).max(0.0))
        .collect()
}
