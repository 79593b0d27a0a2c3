use super::tensor::HeatmapSet;
use crate::error::{Error, Result};

const CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy over every entry of every heatmap.
pub fn bce_loss(pred: &[HeatmapSet], target: &[HeatmapSet]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, t) in pred.iter().zip(target) {
        if p.channels != t.channels || p.length != t.length {
            return Err(Error::Shape(format!(
                "prediction {}x{} vs target {}x{}",
                p.channels, p.length, t.channels, t.length
            )));
        }
        for (&pv, &tv) in p.data.iter().zip(&t.data) {
            sum += entry_loss(pv, tv);
        }
        count += p.data.len();
    }
    Ok(sum / count as f64)
}

/// Lowest reachable mean BCE for `target`: its mean binary entropy. Soft
/// Gaussian targets keep this well above zero.
pub fn target_entropy(target: &[HeatmapSet]) -> Result<f64> {
    bce_loss(target, target)
}

fn entry_loss(p: f64, t: f64) -> f64 {
    let p = p.clamp(CLAMP, 1.0 - CLAMP);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

/// Summed loss of one sample and the gradient with respect to its
/// pre-sigmoid logits, both already divided by `denominator`.
pub(crate) fn bce_grad_logits(probs: &[f64], target: &[f64], denominator: f64) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let grad = probs
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            loss += entry_loss(p, t);
            if !(CLAMP..=1.0 - CLAMP).contains(&p) {
                // clamped region is flat
                0.0
            } else {
                let dp = -t / p + (1.0 - t) / (1.0 - p);
                dp * p * (1.0 - p) / denominator
            }
        })
        .collect();
    (loss / denominator, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn half_against_zero_is_ln2() {
        let p = vec![HeatmapSet::from_vec(6, 256, vec![0.5; 1536]).unwrap()];
        let t = vec![HeatmapSet::zeros(6, 256)];
        assert!((bce_loss(&p, &t).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let data: Vec<f64> = (0..64).map(|i| (i % 2) as f64).collect();
        let p = vec![HeatmapSet::from_vec(2, 32, data.clone()).unwrap()];
        let t = vec![HeatmapSet::from_vec(2, 32, data).unwrap()];
        assert!(bce_loss(&p, &t).unwrap() <= 1e-6);
    }

    #[test]
    fn matches_scalar_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut preds = Vec::new();
        let mut targets = Vec::new();
        for _ in 0..3 {
            preds.push(HeatmapSet::from_vec(2, 16, (0..32).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap());
            targets.push(HeatmapSet::from_vec(2, 16, (0..32).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap());
        }
        let mut oracle = 0.0;
        for b in 0..3 {
            for i in 0..32 {
                let p: f64 = preds[b].data[i].clamp(1e-7, 1.0 - 1e-7);
                let t = targets[b].data[i];
                oracle -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
            }
        }
        oracle /= 96.0;
        assert!((bce_loss(&preds, &targets).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let p = vec![HeatmapSet::zeros(2, 16)];
        let t = vec![HeatmapSet::zeros(2, 8)];
        assert!(bce_loss(&p, &t).is_err());
        assert!(bce_loss(&p, &[]).is_err());
    }
}
