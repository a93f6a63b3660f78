use std::fmt::Write;

/// Cold end of the colour ramp.
pub const RAMP_COLD: (u8, u8, u8) = (0x31, 0x36, 0x95);
/// Warm end of the colour ramp.
pub const RAMP_WARM: (u8, u8, u8) = (0xa5, 0x00, 0x26);
/// Fill for days without data.
pub const NEUTRAL_COLOR: &str = "#eeeeee";

/// Linear RGB interpolation; `t` is clamped to [0, 1].
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(RAMP_COLD.0, RAMP_WARM.0),
        mix(RAMP_COLD.1, RAMP_WARM.1),
        mix(RAMP_COLD.2, RAMP_WARM.2)
    )
}

pub(crate) fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

pub(crate) fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub(crate) struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self { body: String::new(), width, height }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"{}/>"#,
            num(x),
            num(y),
            num(w),
            num(h),
            fill,
            extra
        );
    }

    pub fn rect_titled(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str, title: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"{}><title>{}</title></rect>"#,
            num(x),
            num(y),
            num(w),
            num(h),
            fill,
            extra,
            escape(title)
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="{}" text-anchor="{}" font-family="sans-serif">{}</text>"#,
            num(x),
            num(y),
            num(size),
            anchor,
            escape(text)
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        if points.is_empty() {
            return;
        }
        let coords: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            coords.join(" "),
            stroke,
            num(width)
        );
    }

    pub fn polygon(&mut self, points: &[(f64, f64)], fill: &str, opacity: f64) {
        let coords: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{}" fill-opacity="{}" stroke="none"/>"#,
            coords.join(" "),
            fill,
            num(opacity)
        );
    }

    pub fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"{}/>"#,
            num(x),
            num(y),
            num(r),
            fill,
            extra
        );
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="1.0000"/>"#,
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            stroke
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n{}</svg>\n",
            self.body,
            w = num(self.width),
            h = num(self.height)
        )
    }
}

/// Maps a data range onto a pixel range; a flat range maps to the middle.
pub(crate) struct Scale {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    pub fn new(values: impl IntoIterator<Item = f64>, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        Self { lo, hi, p0, p1 }
    }

    pub fn map(&self, v: f64) -> f64 {
        if self.hi > self.lo {
            self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
        } else {
            0.5 * (self.p0 + self.p1)
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_ends_and_clamp() {
        assert_eq!(ramp_color(0.0), "#313695");
        assert_eq!(ramp_color(1.0), "#a50026");
        assert_eq!(ramp_color(-3.0), "#313695");
        assert_eq!(ramp_color(7.0), "#a50026");
        assert_eq!(ramp_color(0.5), "#6b1b5e");
    }

    #[test]
    fn fixed_precision() {
        assert_eq!(num(1.0 / 3.0), "0.3333");
        assert_eq!(num(-0.00001), "0.0000");
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
