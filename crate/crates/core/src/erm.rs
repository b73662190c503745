//! Empirical risk minimisation over piecewise-constant losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::{ParameterInterval, PiecewiseConstantLoss};

/// Pointwise mean of `functions`. Breakpoints are the sorted union of the
/// inputs' breakpoints, deduplicated only when exactly equal; adjacent
/// pieces are not merged.
pub fn average_piecewise(functions: &[PiecewiseConstantLoss]) -> Result<PiecewiseConstantLoss> {
    if functions.is_empty() {
        return Err(Error::invalid("cannot average an empty list of functions"));
    }
    if functions.len() == 1 {
        return Ok(functions[0].clone());
    }
    // Interior breakpoints tagged with their function, sorted once.
    let mut cuts: Vec<(f64, usize)> = functions
        .iter()
        .enumerate()
        .flat_map(|(i, f)| {
            let b = f.breakpoints();
            b[1..b.len() - 1].iter().map(move |&c| (c, i))
        })
        .collect();
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let count = functions.len() as f64;
    let mut piece = vec![0usize; functions.len()];
    let mut sum: f64 = functions.iter().map(|f| f.values()[0]).sum();
    let mut bps = vec![0.0];
    let mut vals = Vec::with_capacity(cuts.len() + 1);
    let mut x = 0;
    while x < cuts.len() {
        let c = cuts[x].0;
        vals.push(sum / count);
        bps.push(c);
        while x < cuts.len() && cuts[x].0 == c {
            piece[cuts[x].1] += 1;
            x += 1;
        }
        // Summed afresh in input order so rounding never accumulates.
        sum = functions
            .iter()
            .zip(&piece)
            .map(|(f, &j)| f.values()[j])
            .sum();
    }
    vals.push(sum / count);
    bps.push(1.0);
    PiecewiseConstantLoss::new(bps, vals)
}

/// Leftmost piece with the smallest value: `(piece, value, midpoint)`.
pub fn argmin_interval(f: &PiecewiseConstantLoss) -> (ParameterInterval, f64, f64) {
    let mut best = 0;
    for (j, &v) in f.values().iter().enumerate() {
        if v < f.values()[best] {
            best = j;
        }
    }
    let (iv, v) = f.piece(best);
    (iv, v, iv.midpoint())
}

/// Train and test losses at a chosen parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub theta: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    /// `test_loss - train_loss`.
    pub gap: f64,
    /// Smallest average test loss over all parameters.
    pub test_optimum: f64,
}

pub fn generalization_report(
    train: &[PiecewiseConstantLoss],
    test: &[PiecewiseConstantLoss],
    theta: f64,
) -> Result<GeneralizationReport> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("train and test sets must be nonempty"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("parameter {theta} outside [0, 1]")));
    }
    let mean_at = |fs: &[PiecewiseConstantLoss]| {
        fs.iter().map(|f| f.eval(theta)).sum::<f64>() / fs.len() as f64
    };
    let train_loss = mean_at(train);
    let test_loss = mean_at(test);
    let test_optimum = argmin_interval(&average_piecewise(test)?).1;
    Ok(GeneralizationReport {
        theta,
        train_loss,
        test_loss,
        gap: test_loss - train_loss,
        test_optimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(bps: &[f64], vals: &[f64]) -> PiecewiseConstantLoss {
        PiecewiseConstantLoss::new(bps.to_vec(), vals.to_vec()).unwrap()
    }

    #[test]
    fn two_function_average() {
        let f1 = f(&[0.0, 0.5, 1.0], &[0.2, 0.4]);
        let f2 = f(&[0.0, 0.3, 1.0], &[0.1, 0.0]);
        let avg = average_piecewise(&[f1, f2]).unwrap();
        assert_eq!(avg.breakpoints(), &[0.0, 0.3, 0.5, 1.0]);
        let want = [0.15, 0.1, 0.2];
        for (got, want) in avg.values().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        let (iv, v, rep) = argmin_interval(&avg);
        assert_eq!(iv, ParameterInterval { lo: 0.3, hi: 0.5 });
        assert!((v - 0.1).abs() < 1e-15);
        assert!((rep - 0.4).abs() < 1e-15);
    }

    #[test]
    fn identity_and_empty() {
        let g = f(&[0.0, 0.25, 1.0], &[0.5, 0.0]);
        assert_eq!(average_piecewise(std::slice::from_ref(&g)).unwrap(), g);
        assert!(average_piecewise(&[]).is_err());
    }

    #[test]
    fn shared_breakpoints_are_not_duplicated() {
        let g = f(&[0.0, 0.25, 1.0], &[0.5, 0.0]);
        let avg = average_piecewise(&[g.clone(), g]).unwrap();
        assert_eq!(avg.breakpoints(), &[0.0, 0.25, 1.0]);
    }

    #[test]
    fn argmin_ties_and_constants() {
        let c = PiecewiseConstantLoss::constant(0.3);
        assert_eq!(argmin_interval(&c), (ParameterInterval::UNIT, 0.3, 0.5));
        let g = f(&[0.0, 0.2, 0.4, 0.6, 1.0], &[0.3, 0.1, 0.2, 0.1]);
        assert_eq!(
            argmin_interval(&g).0,
            ParameterInterval { lo: 0.2, hi: 0.4 }
        );
    }

    fn random_fn(rng: &mut ChaCha8Rng) -> PiecewiseConstantLoss {
        let m = rng.random_range(1..12);
        let mut cuts: Vec<f64> = (0..m - 1).map(|_| rng.random::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.retain(|&c| c > 0.0);
        let mut bps = vec![0.0];
        bps.extend(cuts);
        bps.push(1.0);
        let vals = (0..bps.len() - 1).map(|_| rng.random::<f64>()).collect();
        PiecewiseConstantLoss::new(bps, vals).unwrap()
    }

    #[test]
    fn average_matches_pointwise_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let fs: Vec<_> = (0..50).map(|_| random_fn(&mut rng)).collect();
        let avg = average_piecewise(&fs).unwrap();
        let total: usize = fs.iter().map(|g| g.num_pieces()).sum();
        assert!(avg.num_pieces() <= 1 + total);
        for _ in 0..1000 {
            let t: f64 = rng.random();
            let mean = fs.iter().map(|g| g.eval(t)).sum::<f64>() / fs.len() as f64;
            assert!((avg.eval(t) - mean).abs() < 1e-12);
        }
        let (_, v, _) = argmin_interval(&avg);
        for g in 0..=10_000 {
            assert!(avg.eval(g as f64 / 10_000.0) >= v);
        }
    }

    #[test]
    fn reports() {
        let a = PiecewiseConstantLoss::constant(0.2);
        let b = PiecewiseConstantLoss::constant(0.3);
        let r =
            generalization_report(std::slice::from_ref(&a), std::slice::from_ref(&b), 0.5).unwrap();
        assert!((r.gap - 0.1).abs() < 1e-15);
        assert_eq!(r.test_optimum, 0.3);
        let r =
            generalization_report(std::slice::from_ref(&a), std::slice::from_ref(&a), 0.1).unwrap();
        assert_eq!(r.gap, 0.0);
        assert!(generalization_report(&[], std::slice::from_ref(&a), 0.5).is_err());
    }
}
