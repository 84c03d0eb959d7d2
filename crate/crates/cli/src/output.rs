use std::fmt::Write as _;

/// Formats `x` rounded to 12 significant digits, in the shortest form that
/// parses back to the rounded value.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("scientific notation always parses");
    rounded.to_string()
}

/// A single `key=value key=value ...` result line.
#[derive(Debug, Default)]
pub struct Line(String);

impl Line {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        if !self.0.is_empty() {
            self.0.push(' ');
        }
        let _ = write!(self.0, "{key}={value}");
        self
    }

    pub fn num(self, key: &str, value: f64) -> Self {
        self.text(key, num(value))
    }

    pub fn finish(self) -> String {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(6.684_150_234_567_89), "6.68415023457");
        assert_eq!(num(-1.281_551_565_544_6), "-1.28155156554");
        assert_eq!(num(1e-7), "0.0000001");
    }

    #[test]
    fn rounded_values_parse_back() {
        for x in [std::f64::consts::PI, 1.0 / 3.0, 123_456_789.123_456_7, 2.5e-13] {
            let s = num(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(num(back), s);
            assert!((back - x).abs() <= 5e-12 * x.abs());
        }
    }

    #[test]
    fn line_joins_pairs() {
        let l = Line::new()
            .num("n", 7.0)
            .num("n_real", 6.5)
            .text("method", "closed-form")
            .finish();
        assert_eq!(l, "n=7 n_real=6.5 method=closed-form");
    }
}
