use crate::error::{Error, Result};

/// Listwise softmax cross-entropy and its gradient with respect to the scores.
///
/// `L = -Σ y_i · log softmax(s)_i`, computed with the max shift.
/// `∂L/∂s_j = (Σ y) · softmax(s)_j − y_j`, i.e. `softmax − y` for a single positive.
pub fn listwise_softmax_loss(labels: &[f64], scores: &[f64]) -> Result<(f64, Vec<f64>)> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch(labels.len(), scores.len()));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    let positives: f64 = labels.iter().sum();
    if positives == 0.0 {
        return Err(Error::InvalidArgument("list has no positive label".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let log_total = total.ln();

    let loss = labels
        .iter()
        .zip(scores)
        .map(|(y, s)| y * (log_total - (s - max)))
        .sum();
    let grad = exps
        .iter()
        .zip(labels)
        .map(|(e, y)| positives * e / total - y)
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_list() {
        let (l, g) = listwise_softmax_loss(&[1.0], &[7.3]).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g, [0.0]);
    }

    #[test]
    fn uniform_36() {
        let mut y = vec![0.0; 36];
        y[17] = 1.0;
        let (l, _) = listwise_softmax_loss(&y, &[0.25; 36]).unwrap();
        assert!((l - 36f64.ln()).abs() < 1e-12);
        assert!((l - 3.5835).abs() < 1e-4);
    }

    #[test]
    fn stable_for_large_scores() {
        let (l, g) = listwise_softmax_loss(&[0.0, 1.0], &[1000.0, 1000.0]).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
        assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn errors() {
        assert!(listwise_softmax_loss(&[0.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(listwise_softmax_loss(&[1.0], &[1.0, 2.0]).is_err());
        assert!(listwise_softmax_loss(&[0.5, 0.5], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn monotone_in_positive_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.random_range(2..40);
            let pos = rng.random_range(0..m);
            let mut s: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..m).map(|i| if i == pos { 1.0 } else { 0.0 }).collect();
            let (before, _) = listwise_softmax_loss(&y, &s).unwrap();
            s[pos] += rng.random_range(0.01..2.0);
            let (after, _) = listwise_softmax_loss(&y, &s).unwrap();
            assert!(after < before);
        }
    }
}
