/// Where the epoch `e > 1` teacher probabilities come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TeacherSource {
    /// Softmax outputs recorded during the previous epoch's own forward passes.
    #[default]
    Cached,
    /// A fresh forward sweep over the local data at the end of the previous epoch.
    Sweep,
}

/// First-epoch teacher for a client that has no stored history yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstEpochTeacher {
    /// Distil towards the one-hot labels (the `alpha -> 0` limit of the fusion).
    #[default]
    Labels,
    /// Drop the distillation term for that epoch.
    Skip,
}

/// Component switches. Each flag removes exactly one ingredient:
///
/// * `rhpk`: first-epoch distillation from the stored personalized outputs;
/// * `psd`: epoch-to-epoch self-distillation;
/// * `cll`: prior-calibrated cross-entropy (plain cross-entropy when off).
///
/// With all three off, local training is plain cross-entropy SGD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsdConfig {
    pub rhpk: bool,
    pub psd: bool,
    pub cll: bool,
    pub teacher_source: TeacherSource,
    pub first_epoch_teacher: FirstEpochTeacher,
}

impl Default for PsdConfig {
    fn default() -> Self {
        PsdConfig {
            rhpk: true,
            psd: true,
            cll: true,
            teacher_source: TeacherSource::Cached,
            first_epoch_teacher: FirstEpochTeacher::Labels,
        }
    }
}

impl PsdConfig {
    pub fn with_flags(rhpk: bool, psd: bool, cll: bool) -> Self {
        PsdConfig {
            rhpk,
            psd,
            cll,
            ..Self::default()
        }
    }
}
