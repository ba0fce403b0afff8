use crate::seqdata::{Alphabet, MotifNpfm};

const COLUMN_WIDTH: f64 = 40.0;
const HEIGHT: f64 = 100.0;
const MARGIN: f64 = 10.0;
/// Cap height of a monospace glyph relative to its font size.
const CAP_RATIO: f64 = 0.72;
const FONT_SIZE: f64 = 50.0;

fn color(c: char) -> &'static str {
    match c {
        'A' => "#2e8b57",
        'C' => "#1f5fbf",
        'G' => "#e69500",
        'T' | 'U' => "#c0392b",
        _ => "#333333",
    }
}

/// SVG sequence logo. Letter heights are the squared nPFM entries, so each
/// column stack has total height 1; the largest letter sits on top.
pub fn emit_logo(motif: &MotifNpfm, alphabet: &Alphabet) -> String {
    let k = motif.k();
    let width = 2.0 * MARGIN + COLUMN_WIDTH * k as f64;
    let height = 2.0 * MARGIN + HEIGHT;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    );
    for j in 0..k {
        let mut letters = motif.ranked_letters(j, alphabet);
        // draw from the bottom up, smallest first
        letters.reverse();
        let x = MARGIN + COLUMN_WIDTH * (j as f64 + 0.5);
        let mut base = MARGIN + HEIGHT;
        for (c, w) in letters {
            let h = w * w;
            if h <= 1e-9 {
                continue;
            }
            let scale = h * HEIGHT / (FONT_SIZE * CAP_RATIO);
            out.push_str(&format!(
                "  <text x=\"0\" y=\"0\" font-family=\"monospace\" font-size=\"{FONT_SIZE:.0}\" text-anchor=\"middle\" fill=\"{}\" transform=\"translate({x:.3},{base:.3}) scale(1,{scale:.5})\" data-height=\"{h:.5}\">{c}</text>\n",
                color(c)
            ));
            base -= h * HEIGHT;
        }
    }
    out.push_str("</svg>\n");
    out
}
