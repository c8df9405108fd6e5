use log::warn;

/// Linear fusion weight `alpha = t / t_total`, clamped to 1 past the horizon.
pub fn alpha_schedule(round: usize, total_rounds: usize) -> f64 {
    assert!(total_rounds >= 1, "total_rounds must be at least 1");
    if round > total_rounds {
        warn!("round {round} is past the schedule horizon {total_rounds}; clamping alpha to 1");
        return 1.0;
    }
    round as f64 / total_rounds as f64
}
