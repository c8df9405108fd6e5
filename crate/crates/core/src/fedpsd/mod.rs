//! Progressive self-distillation with logits calibration.
//!
//! A participating client trains on `L = L_CE + L_KD`:
//!
//! * `L_CE` is cross-entropy over prior-calibrated logits `f + ln P(y)`.
//! * `L_KD = KL(H || softmax(f))` distils from a fused teacher
//!   `H = alpha * P + (1 - alpha) * Y`, where `P` is the client's stored output
//!   from its previous participation (first epoch) or the model's own output
//!   from the previous epoch (later epochs), and `alpha = t / t_total`.
//!
//! After training the client keeps only its per-sample output probabilities
//! ([`ClientHistory`]); no model copy is retained.

mod calibration;
mod config;
mod distill;
mod fusion;
mod history;
mod schedule;
mod trainer;

pub use calibration::{balanced_prediction, calibrated_ce_loss};
pub use config::{FirstEpochTeacher, PsdConfig, TeacherSource};
pub use distill::psd_kd_loss;
pub use fusion::{fuse_labels, fuse_with_label, FusionLabel, TeacherKind};
pub use history::ClientHistory;
pub use schedule::alpha_schedule;
pub use trainer::{local_train_fedpsd, PsdObjective};
