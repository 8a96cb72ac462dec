/// Shannon-fit downlink rate in bit/s:
/// `(1 - overhead) * W * log2(1 + loss * S / (noise + I))`.
///
/// `signal_mw` already contains transmit power, both boresight gains and the
/// channel gain.
pub fn shannon_rate(
    bandwidth_hz: f64,
    overhead: f64,
    loss: f64,
    signal_mw: f64,
    noise_mw: f64,
    interference_mw: f64,
) -> f64 {
    debug_assert!(noise_mw > 0.0);
    let sinr = signal_mw / (noise_mw + interference_mw);
    (1.0 - overhead) * bandwidth_hz * (1.0 + loss * sinr).log2()
}
