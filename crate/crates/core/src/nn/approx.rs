use crate::formula::{BoundAtom, Clause, Literal, Relation};
use crate::interval::rounding::sigmoid_enclosure;
use crate::interval::{Direction, VarId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("cell width must be positive and finite, got {0}")]
    Width(f64),
    #[error("range [{lo}, {hi}) must be finite with lo < hi")]
    Range { lo: f64, hi: f64 },
    #[error("range [{lo}, {hi}) is not an integral number of cells of width {width}")]
    NotIntegral { lo: f64, hi: f64, width: f64 },
}

fn sig_down(x: f64) -> f64 {
    sigmoid_enclosure(x).round(Direction::Down).max(0.0)
}

fn sig_up(x: f64) -> f64 {
    sigmoid_enclosure(x).round(Direction::Up).min(1.0)
}

/// Clauses relaxing `y = sig(x)` by interval boxes.
///
/// Each cell `x ∈ [a, b)` of width `width` covering `[lo, hi)` yields the
/// implication `x ≥ a ∧ x < b → y ≥ sig(a) ∧ y < sig(b)`, and the tails give
/// `x < lo → 0 ≤ y < sig(lo)` and `x ≥ hi → sig(hi) ≤ y ≤ 1`. Every
/// implication becomes two clauses, one per conclusion. The sigmoid values are
/// rounded outward.
pub fn sigmoid_box_clauses(width: f64, lo: f64, hi: f64, x: VarId, y: VarId) -> Result<Vec<Clause>, GridError> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(GridError::Width(width));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(GridError::Range { lo, hi });
    }
    let cells = ((hi - lo) / width).round();
    if cells < 1.0 || (cells * width - (hi - lo)).abs() > 1e-9 * (hi - lo) || cells > 1e7 {
        return Err(GridError::NotIntegral { lo, hi, width });
    }
    let cells = cells as usize;
    let xa = |rel, c| BoundAtom::new(x, rel, c);
    let ya = |rel, c| Literal::pos(BoundAtom::new(y, rel, c));

    let mut out = Vec::with_capacity(2 * cells + 4);
    let mut implication = |premise: &[BoundAtom], conclusions: [Literal; 2]| {
        for c in conclusions {
            let mut lits: Vec<Literal> = premise.iter().map(|a| Literal::neg(*a)).collect();
            lits.push(c);
            out.push(Clause::new(lits));
        }
    };

    implication(
        &[xa(Relation::Lt, lo)],
        [ya(Relation::Ge, 0.0), ya(Relation::Lt, sig_up(lo))],
    );
    for k in 0..cells {
        let a = lo + k as f64 * width;
        let b = if k + 1 == cells { hi } else { lo + (k + 1) as f64 * width };
        implication(
            &[xa(Relation::Ge, a), xa(Relation::Lt, b)],
            [ya(Relation::Ge, sig_down(a)), ya(Relation::Lt, sig_up(b))],
        );
    }
    implication(
        &[xa(Relation::Ge, hi)],
        [ya(Relation::Ge, sig_down(hi)), ya(Relation::Le, 1.0)],
    );
    Ok(out)
}
