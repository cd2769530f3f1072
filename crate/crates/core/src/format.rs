/// 17-significant-digit scientific notation used by every CSV writer.
pub fn num(x: f64) -> String {
    // -0.0 and 0.0 print the same
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}
