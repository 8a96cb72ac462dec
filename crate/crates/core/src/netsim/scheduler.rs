use rand::Rng;

/// First-stage (nomination) step of a temporal-fair opportunistic scheduler.
///
/// Every UE's fading power is identically distributed, so ranking by the
/// fading CDF value `Phi(F_u)` is the same as ranking by `F_u`. Returns the
/// index into `fading` of the nominated UE, `None` for an empty cell. Exact
/// ties are broken uniformly at random.
pub fn schedule_slot<R: Rng + ?Sized>(fading: &[f64], rng: &mut R) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut ties = 0u32;
    for (i, &f) in fading.iter().enumerate() {
        match best {
            None => {
                best = Some(i);
                ties = 1;
            }
            Some(b) if f > fading[b] => {
                best = Some(i);
                ties = 1;
            }
            Some(b) if f == fading[b] => {
                // reservoir sampling over the tied set
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    best = Some(i);
                }
            }
            _ => {}
        }
    }
    best
}
