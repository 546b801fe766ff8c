use crate::attacks::{difficulty, AttackKind};
use crate::error::{Error, Result};

/// Number of samples kept by a hard-example fraction, `⌈frac·n⌉`.
pub fn hard_count(n: usize, frac: f64) -> usize {
    // The small offset stops products like 0.1·30 = 3.0000000000000004 rounding up.
    ((frac * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Indices of the `⌈frac·N⌉` largest losses, ascending; ties go to the lower index.
pub fn ohem_select(losses: &[f64], frac: f64) -> Result<Vec<usize>> {
    if losses.is_empty() {
        return Err(Error::Input("ohem_select needs at least one loss".into()));
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::Config(format!("ohem fraction {frac} outside (0, 1]")));
    }
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[b].total_cmp(&losses[a]).then(a.cmp(&b)));
    order.truncate(hard_count(losses.len(), frac));
    order.sort_unstable();
    Ok(order)
}

/// Attack-aware weight of the hard-example term: `0.5·d`.
pub fn stage_lambda(stage: AttackKind) -> f64 {
    0.5 * difficulty(stage)
}

/// `mean(clean) + λ·mean(hard)`; an empty hard set contributes nothing.
pub fn total_loss(clean_losses: &[f64], hard_losses: &[f64], lambda: f64) -> f64 {
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    mean(clean_losses) + lambda * mean(hard_losses)
}
