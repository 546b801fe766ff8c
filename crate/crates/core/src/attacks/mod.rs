//! Cyber-attack injectors on raw windows and PGD in normalized feature space.

mod inject;
mod pgd;

pub use inject::{
    apply_attack, apply_bias, apply_noise, apply_replacement, apply_replay, difficulty, AttackKind,
    AttackSpec,
};
pub use pgd::{linf_distance, pgd_attack, InputGradient, PgdConfig};
