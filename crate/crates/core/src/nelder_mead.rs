//! Nelder–Mead simplex search on the unit box `[0, 1]^d`.
//!
//! Trial points are projected back onto the box, so callers map their own
//! parameter bounds to the unit cube. After the simplex collapses the search
//! restarts around the incumbent until a restart stops improving or the
//! evaluation budget runs out.

use crate::num::{from_usize, lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead<F> {
    pub max_evals: usize,
    /// Simplex collapse tolerance on function values (relative to the best).
    pub ftol: F,
    /// Simplex collapse tolerance on vertex spread (unit-box coordinates).
    pub xtol: F,
    /// Edge length of the initial and restart simplices.
    pub step: F,
}

impl<F: Real> Default for NelderMead<F> {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: lit(1e-12),
            xtol: lit(1e-10),
            step: lit(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<F> {
    pub x: Vec<F>,
    pub value: F,
    pub evals: usize,
    /// The last simplex met the tolerances before the budget ran out.
    pub converged: bool,
}

fn project<F: Real>(x: &mut [F]) {
    for v in x.iter_mut() {
        *v = if v.is_nan() {
            lit(0.5)
        } else {
            v.max(F::zero()).min(F::one())
        };
    }
}

struct Budget<'a, F, G> {
    f: &'a mut G,
    evals: usize,
    max: usize,
    _m: std::marker::PhantomData<F>,
}

impl<F: Real, G: FnMut(&[F]) -> F> Budget<'_, F, G> {
    fn eval(&mut self, x: &[F]) -> F {
        if self.evals >= self.max {
            return F::infinity();
        }
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            F::infinity()
        } else {
            v
        }
    }

    fn left(&self) -> usize {
        self.max.saturating_sub(self.evals)
    }
}

impl<F: Real> NelderMead<F> {
    /// Minimizes `f` over `[0, 1]^d` starting from `x0`. NaN values count as
    /// `+∞`.
    pub fn minimize<G: FnMut(&[F]) -> F>(&self, mut f: G, x0: &[F]) -> Minimum<F> {
        let mut x0 = x0.to_vec();
        project(&mut x0);
        let mut budget = Budget {
            f: &mut f,
            evals: 0,
            max: self.max_evals.max(1),
            _m: Default::default(),
        };
        let mut best_x = x0.clone();
        let mut best = budget.eval(&x0);
        let mut converged = false;
        if x0.is_empty() {
            return Minimum {
                x: x0,
                value: best,
                evals: budget.evals,
                converged: true,
            };
        }
        while budget.left() > x0.len() {
            let (x, v, done) = self.run(&mut budget, &best_x, best);
            let improved = v < best - self.ftol * best.abs();
            if v <= best {
                best = v;
                best_x = x;
            }
            converged = done;
            if !done || !improved {
                break;
            }
        }
        Minimum {
            x: best_x,
            value: best,
            evals: budget.evals,
            converged,
        }
    }

    fn run<G: FnMut(&[F]) -> F>(
        &self,
        budget: &mut Budget<'_, F, G>,
        x0: &[F],
        f0: F,
    ) -> (Vec<F>, F, bool) {
        let d = x0.len();
        let mut simplex: Vec<(Vec<F>, F)> = Vec::with_capacity(d + 1);
        simplex.push((x0.to_vec(), f0));
        for i in 0..d {
            let mut x = x0.to_vec();
            // step inward when the start sits on the upper face
            x[i] = if x[i] + self.step <= F::one() {
                x[i] + self.step
            } else {
                x[i] - self.step
            };
            project(&mut x);
            let v = budget.eval(&x);
            simplex.push((x, v));
        }
        let half: F = lit(0.5);
        let two: F = lit(2.0);
        loop {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            let (fb, fw) = (simplex[0].1, simplex[d].1);
            let spread = simplex
                .iter()
                .skip(1)
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (*a - *b).abs()))
                .fold(F::zero(), F::max);
            let flat = fw - fb <= self.ftol * fb.abs() || (fw == fb && fb.is_finite());
            if spread <= self.xtol || (flat && spread <= lit::<F>(1e3) * self.xtol) {
                return (simplex[0].0.clone(), fb, true);
            }
            if budget.left() < 2 {
                return (simplex[0].0.clone(), fb, false);
            }

            let mut centroid = vec![F::zero(); d];
            for (x, _) in simplex.iter().take(d) {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c = *c + *v;
                }
            }
            centroid.iter_mut().for_each(|c| *c = *c / from_usize(d));
            let toward = |coef: F, w: &[F]| -> Vec<F> {
                let mut x: Vec<F> = centroid
                    .iter()
                    .zip(w)
                    .map(|(c, w)| *c + coef * (*w - *c))
                    .collect();
                project(&mut x);
                x
            };

            let worst = simplex[d].0.clone();
            let xr = toward(-F::one(), &worst);
            let fr = budget.eval(&xr);
            if fr < fb {
                let xe = toward(-two, &worst);
                let fe = budget.eval(&xe);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < fw {
                let xc = toward(-half, &worst);
                let fc = budget.eval(&xc);
                (xc, fc)
            } else {
                let xc = toward(half, &worst);
                let fc = budget.eval(&xc);
                (xc, fc)
            };
            if fc < fw.min(fr) {
                simplex[d] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for (x, v) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&best) {
                    *xi = *bi + half * (*xi - *bi);
                }
                *v = budget.eval(x);
            }
        }
    }
}
