//! Order-preserving piecewise-linear maps on closed intervals, given by exact breakpoints.

use crate::error::FanError;
use crate::rational::{one, zero, Q};

/// Strictly increasing piecewise-linear map through the listed breakpoints.
///
/// Between consecutive breakpoints the map is affine. Evaluation outside the
/// first/last breakpoint is an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseLinearMap {
    points: Vec<(Q, Q)>,
}

impl PiecewiseLinearMap {
    /// Builds a map, dropping exact duplicate breakpoints. Inputs and outputs must both be strictly increasing.
    pub fn new(mut points: Vec<(Q, Q)>) -> Result<Self, FanError> {
        points.dedup();
        if points.len() < 2 {
            return Err(FanError::Argument("a piecewise-linear map needs two breakpoints".into()));
        }
        for w in points.windows(2) {
            if w[0].0 >= w[1].0 || w[0].1 >= w[1].1 {
                return Err(FanError::Argument("breakpoints must be strictly increasing".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn identity() -> Self {
        Self { points: vec![(zero(), zero()), (one(), one())] }
    }

    /// Identity on `[0,1]` with the three interior constraints `lo -> lo`, `a -> b`, `hi -> hi`.
    pub fn bump(lo: &Q, a: &Q, b: &Q, hi: &Q) -> Result<Self, FanError> {
        let mut pts = vec![(zero(), zero())];
        for p in [(lo.clone(), lo.clone()), (a.clone(), b.clone()), (hi.clone(), hi.clone())] {
            if pts.last().map(|l| l.0 < p.0).unwrap_or(true) {
                pts.push(p);
            }
        }
        if pts.last().map(|l| l.0 < one()).unwrap_or(true) {
            pts.push((one(), one()));
        }
        Self::new(pts)
    }

    pub fn breakpoints(&self) -> &[(Q, Q)] {
        &self.points
    }

    pub fn domain(&self) -> (&Q, &Q) {
        (&self.points[0].0, &self.points[self.points.len() - 1].0)
    }

    pub fn range(&self) -> (&Q, &Q) {
        (&self.points[0].1, &self.points[self.points.len() - 1].1)
    }

    pub fn is_identity(&self) -> bool {
        self.points.iter().all(|(a, b)| a == b)
    }

    pub fn eval(&self, x: &Q) -> Result<Q, FanError> {
        eval_on(&self.points, x, false)
    }

    pub fn inverse_eval(&self, y: &Q) -> Result<Q, FanError> {
        eval_on(&self.points, y, true)
    }

    pub fn inverse(&self) -> Self {
        Self { points: self.points.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }

    /// `other ∘ self`; the range of `self` must lie in the domain of `other`.
    pub fn then(&self, other: &Self) -> Result<Self, FanError> {
        let mut xs: Vec<Q> = self.points.iter().map(|p| p.0.clone()).collect();
        for (a, _) in &other.points {
            if a >= self.range().0 && a <= self.range().1 {
                xs.push(self.inverse_eval(a)?);
            }
        }
        xs.sort();
        xs.dedup();
        let pts = xs
            .into_iter()
            .map(|x| {
                let y = other.eval(&self.eval(&x)?)?;
                Ok((x, y))
            })
            .collect::<Result<Vec<_>, FanError>>()?;
        Self::new(pts)
    }
}

fn eval_on(points: &[(Q, Q)], x: &Q, inverse: bool) -> Result<Q, FanError> {
    let key = |p: &(Q, Q)| if inverse { p.1.clone() } else { p.0.clone() };
    let val = |p: &(Q, Q)| if inverse { p.0.clone() } else { p.1.clone() };
    let first = key(&points[0]);
    let last = key(&points[points.len() - 1]);
    if *x < first || *x > last {
        return Err(FanError::Domain(format!("{x} outside [{first}, {last}]")));
    }
    let idx = points.partition_point(|p| key(p) <= *x);
    if idx == 0 {
        return Ok(val(&points[0]));
    }
    let (a0, b0) = (key(&points[idx - 1]), val(&points[idx - 1]));
    if a0 == *x || idx == points.len() {
        return Ok(b0);
    }
    let (a1, b1) = (key(&points[idx]), val(&points[idx]));
    Ok(&b0 + (&b1 - &b0) * (x - &a0) / (a1 - a0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn eval_and_inverse() {
        let m = PiecewiseLinearMap::new(vec![(q(0, 1), q(0, 1)), (q(1, 2), q(1, 4)), (q(1, 1), q(1, 1))]).unwrap();
        assert_eq!(m.eval(&q(1, 4)).unwrap(), q(1, 8));
        assert_eq!(m.eval(&q(3, 4)).unwrap(), q(5, 8));
        assert_eq!(m.inverse_eval(&q(5, 8)).unwrap(), q(3, 4));
        assert!(m.eval(&q(2, 1)).is_err());
    }

    #[test]
    fn composition_and_inverse_cancel() {
        let m = PiecewiseLinearMap::new(vec![(q(0, 1), q(0, 1)), (q(1, 3), q(1, 2)), (q(1, 1), q(1, 1))]).unwrap();
        let id = m.then(&m.inverse()).unwrap();
        assert!(id.is_identity());
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(PiecewiseLinearMap::new(vec![(q(0, 1), q(1, 2)), (q(1, 1), q(1, 4))]).is_err());
    }

    #[test]
    fn bump_moves_one_point() {
        let b = PiecewiseLinearMap::bump(&q(1, 10), &q(1, 5), &q(3, 10), &q(2, 5)).unwrap();
        assert_eq!(b.eval(&q(1, 5)).unwrap(), q(3, 10));
        assert_eq!(b.eval(&q(1, 20)).unwrap(), q(1, 20));
        assert_eq!(b.eval(&q(1, 2)).unwrap(), q(1, 2));
    }
}
