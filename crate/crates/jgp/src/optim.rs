//! Minimal deterministic Nelder-Mead simplex minimizer.
//!
//! Bounded search is handled by the caller (the objective clamps and
//! penalizes); this implementation only runs the simplex updates with the
//! standard coefficients and a hard evaluation budget.

pub(crate) struct NelderMead {
    /// Maximum number of objective evaluations.
    pub max_evals: usize,
    /// Stop when the simplex function-value spread falls below this.
    pub ftol: f64,
    /// Initial simplex step along each coordinate.
    pub init_step: f64,
}

pub(crate) struct OptimResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub evals: usize,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const RHO: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

impl NelderMead {
    pub fn minimize(&self, f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64]) -> OptimResult {
        let dim = x0.len();
        let mut evals = 0usize;
        let mut best_x = x0.to_vec();
        let mut best_f = f64::INFINITY;

        let mut eval = |x: &[f64], evals: &mut usize, best_x: &mut Vec<f64>, best_f: &mut f64| {
            *evals += 1;
            let v = f(x);
            let v = if v.is_nan() { f64::INFINITY } else { v };
            if v < *best_f {
                *best_f = v;
                *best_x = x.to_vec();
            }
            v
        };

        // Initial simplex: x0 plus a step along each coordinate.
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(x0.to_vec());
        for i in 0..dim {
            let mut p = x0.to_vec();
            p[i] += self.init_step;
            simplex.push(p);
        }
        let mut values: Vec<f64> = Vec::with_capacity(dim + 1);
        for p in &simplex {
            if evals >= self.max_evals {
                break;
            }
            values.push(eval(p, &mut evals, &mut best_x, &mut best_f));
        }
        while values.len() < simplex.len() {
            values.push(f64::INFINITY);
        }

        while evals < self.max_evals {
            // Order the simplex by value; ties keep insertion order.
            let mut order: Vec<usize> = (0..simplex.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
            let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
            simplex = reordered;
            values = revalues;

            let spread = values[dim] - values[0];
            if spread.abs() <= self.ftol {
                break;
            }

            // Centroid of all but the worst vertex.
            let mut centroid = vec![0.0; dim];
            for p in simplex.iter().take(dim) {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v;
                }
            }
            for c in &mut centroid {
                *c /= dim as f64;
            }

            let worst = simplex[dim].clone();
            let reflected: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + ALPHA * (c - w))
                .collect();
            let fr = eval(&reflected, &mut evals, &mut best_x, &mut best_f);

            if fr < values[0] {
                if evals >= self.max_evals {
                    break;
                }
                let expanded: Vec<f64> = centroid
                    .iter()
                    .zip(&reflected)
                    .map(|(c, r)| c + GAMMA * (r - c))
                    .collect();
                let fe = eval(&expanded, &mut evals, &mut best_x, &mut best_f);
                if fe < fr {
                    simplex[dim] = expanded;
                    values[dim] = fe;
                } else {
                    simplex[dim] = reflected;
                    values[dim] = fr;
                }
            } else if fr < values[dim - 1] {
                simplex[dim] = reflected;
                values[dim] = fr;
            } else {
                if evals >= self.max_evals {
                    break;
                }
                // Contract toward the better of worst/reflected.
                let toward = if fr < values[dim] { &reflected } else { &worst };
                let f_toward = if fr < values[dim] { fr } else { values[dim] };
                let contracted: Vec<f64> = centroid
                    .iter()
                    .zip(toward)
                    .map(|(c, t)| c + RHO * (t - c))
                    .collect();
                let fc = eval(&contracted, &mut evals, &mut best_x, &mut best_f);
                if fc < f_toward {
                    simplex[dim] = contracted;
                    values[dim] = fc;
                } else {
                    // Shrink toward the best vertex.
                    for i in 1..=dim {
                        if evals >= self.max_evals {
                            break;
                        }
                        let shrunk: Vec<f64> = simplex[0]
                            .iter()
                            .zip(&simplex[i])
                            .map(|(b, p)| b + SIGMA * (p - b))
                            .collect();
                        values[i] = eval(&shrunk, &mut evals, &mut best_x, &mut best_f);
                        simplex[i] = shrunk;
                    }
                }
            }
        }

        OptimResult { best_x, best_f, evals }
    }
}
