//! Least-squares circle (LSC) fitting and roundness.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

const MAX_REFINE_STEPS: usize = 50;
const STEP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Circle {
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        (p.0 - self.cx).hypot(p.1 - self.cy)
    }
}

/// Sum of squared radial residuals, the quantity the LSC minimizes.
pub fn geometric_cost(points: &[(f64, f64)], circle: &Circle) -> f64 {
    points
        .iter()
        .map(|p| {
            let e = circle.distance(*p) - circle.r;
            e * e
        })
        .sum()
}

fn centroid(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
    (sx / n, sy / n)
}

/// Closed-form algebraic (Kasa) fit on centroid-shifted coordinates.
pub fn fit_algebraic(points: &[(f64, f64)]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let (mx, my) = centroid(points);
    let (mut suu, mut svv, mut suv) = (0.0, 0.0, 0.0);
    let (mut suuu, mut svvv, mut suvv, mut svuu) = (0.0, 0.0, 0.0, 0.0);
    for p in points {
        let u = p.0 - mx;
        let v = p.1 - my;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    let det = suu * svv - suv * suv;
    if !(det > 1e-12 * (suu + svv) * (suu + svv)) {
        return Err(Error::CollinearPoints);
    }
    let bu = 0.5 * (suuu + suvv);
    let bv = 0.5 * (svvv + svuu);
    let uc = (bu * svv - bv * suv) / det;
    let vc = (suu * bv - suv * bu) / det;
    let r = (uc * uc + vc * vc + (suu + svv) / n).sqrt();
    Ok(Circle {
        cx: uc + mx,
        cy: vc + my,
        r,
    })
}

/// Geometric least-squares circle: algebraic start, then Gauss-Newton on
/// `sum (d_i - r)^2` with step halving so the cost never increases.
pub fn fit_lsc(points: &[(f64, f64)]) -> Result<Circle> {
    let start = fit_algebraic(points)?;
    let (mx, my) = centroid(points);
    let local: Vec<(f64, f64)> = points.iter().map(|p| (p.0 - mx, p.1 - my)).collect();
    let mut c = Circle {
        cx: start.cx - mx,
        cy: start.cy - my,
        r: start.r,
    };
    let mut cost = geometric_cost(&local, &c);
    let (start_local, start_cost) = (c, cost);

    for _ in 0..MAX_REFINE_STEPS {
        let mut jtj = Matrix3::zeros();
        let mut jte = Vector3::zeros();
        for p in &local {
            let dx = p.0 - c.cx;
            let dy = p.1 - c.cy;
            let d = dx.hypot(dy);
            if d == 0.0 {
                continue;
            }
            let j = Vector3::new(-dx / d, -dy / d, -1.0);
            jtj += j * j.transpose();
            jte += j * (d - c.r);
        }
        let Some(step) = jtj.cholesky().map(|ch| -ch.solve(&jte)) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = None;
        // close to the optimum the cost stops resolving the step (it
        // changes by ~step^2), so small full steps are taken as they are
        if step.norm() < 1e-6 * (1.0 + c.r) {
            let trial = Circle {
                cx: c.cx + step[0],
                cy: c.cy + step[1],
                r: c.r + step[2],
            };
            accepted = Some((trial, geometric_cost(&local, &trial)));
        }
        while accepted.is_none() && scale > 1e-6 {
            let trial = Circle {
                cx: c.cx + scale * step[0],
                cy: c.cy + scale * step[1],
                r: c.r + scale * step[2],
            };
            let trial_cost = geometric_cost(&local, &trial);
            if trial_cost <= cost {
                accepted = Some((trial, trial_cost));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, next_cost)) = accepted else {
            break;
        };
        let moved = scale * step.norm();
        c = next;
        cost = next_cost;
        if moved < STEP_TOLERANCE * (1.0 + c.r) {
            break;
        }
    }
    if cost > start_cost {
        c = start_local;
    }
    Ok(Circle {
        cx: c.cx + mx,
        cy: c.cy + my,
        r: c.r,
    })
}

/// Peak-to-valley radial deviation about `circle`'s center.
pub fn roundness(points: &[(f64, f64)], circle: &Circle) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let d = circle.distance(*p);
            (lo.min(d), hi.max(d))
        });
    Ok(hi - lo)
}
