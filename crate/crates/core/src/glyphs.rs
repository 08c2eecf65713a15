//! Embedded 5x7 block font for the letter stimuli.

/// Glyph rows top to bottom; bit 4 is the leftmost column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Glyph5x7 {
    pub letter: char,
    pub rows: [u8; 7],
}

pub const GLYPH_COLUMNS: usize = 5;
pub const GLYPH_ROWS: usize = 7;

const FONT: [[u8; 7]; 26] = [
    [0b01110, 0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001], // A
    [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110], // B
    [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110], // C
    [0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100], // D
    [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111], // E
    [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000], // F
    [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111], // G
    [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001], // H
    [0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110], // I
    [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100], // J
    [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001], // K
    [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111], // L
    [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001], // M
    [0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001], // N
    [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110], // O
    [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000], // P
    [0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101], // Q
    [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001], // R
    [0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110], // S
    [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100], // T
    [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110], // U
    [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100], // V
    [0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010], // W
    [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001], // X
    [0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100], // Y
    [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111], // Z
];

impl Glyph5x7 {
    /// Whether the block at (`row`, `col`) is lit.
    pub fn is_on(&self, row: usize, col: usize) -> bool {
        (self.rows[row] >> (GLYPH_COLUMNS - 1 - col)) & 1 == 1
    }

    /// Lit cells as (row, column), row-major.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..GLYPH_ROWS {
            for c in 0..GLYPH_COLUMNS {
                if self.is_on(r, c) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// The 35 bits packed row-major, top-left first.
    pub fn bits(&self) -> u64 {
        self.rows
            .iter()
            .fold(0u64, |acc, &r| (acc << GLYPH_COLUMNS) | u64::from(r))
    }
}

/// Glyph for an uppercase ASCII letter.
pub fn glyph(letter: char) -> Option<Glyph5x7> {
    if !letter.is_ascii_uppercase() {
        return None;
    }
    let i = (letter as u8 - b'A') as usize;
    Some(Glyph5x7 {
        letter,
        rows: FONT[i],
    })
}

pub fn alphabet() -> impl Iterator<Item = Glyph5x7> {
    ('A'..='Z').filter_map(glyph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn connected8(g: &Glyph5x7) -> bool {
        let cells = g.cells();
        let all: HashSet<(usize, usize)> = cells.iter().copied().collect();
        let mut seen = HashSet::new();
        let mut stack = vec![cells[0]];
        while let Some((r, c)) = stack.pop() {
            if !seen.insert((r, c)) {
                continue;
            }
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let n = ((r as i64 + dr) as usize, (c as i64 + dc) as usize);
                    if all.contains(&n) && !seen.contains(&n) {
                        stack.push(n);
                    }
                }
            }
        }
        seen.len() == all.len()
    }

    #[test]
    fn twenty_six_distinct_glyphs() {
        let bits: HashSet<u64> = alphabet().map(|g| g.bits()).collect();
        assert_eq!(bits.len(), 26);
    }

    #[test]
    fn every_glyph_is_8_connected() {
        for g in alphabet() {
            assert!(connected8(&g), "{} is not connected", g.letter);
        }
    }

    #[test]
    fn rows_fit_five_columns() {
        assert!(FONT.iter().flatten().all(|&r| r < 32));
        assert!(glyph('a').is_none());
    }
}
