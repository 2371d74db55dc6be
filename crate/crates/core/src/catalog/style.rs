use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{case, CatalogError};
use crate::scene::Color;

const INDUCER_COLORS: [Color; 8] = [
    Color::rgb(0.0, 0.0, 0.0),
    Color::rgb(0.10, 0.18, 0.55),
    Color::rgb(0.05, 0.40, 0.15),
    Color::rgb(0.45, 0.10, 0.12),
    Color::rgb(0.38, 0.15, 0.50),
    Color::rgb(0.05, 0.40, 0.42),
    Color::rgb(0.42, 0.28, 0.10),
    Color::rgb(0.30, 0.30, 0.30),
];

const JITTER_STEPS: [f64; 5] = [0.0, -16.0, 16.0, -8.0, 8.0];
const SCALES: [f64; 3] = [1.0, 0.9, 1.1];

/// Number of distinct palette/jitter/scale combinations.
pub const STYLE_SPACE: u64 = (INDUCER_COLORS.len() * JITTER_STEPS.len() * JITTER_STEPS.len() * SCALES.len()) as u64;

const MAX_JITTER: f64 = 16.0;
const SCALE_RANGE: (f64, f64) = (0.9, 1.1);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    /// Color of inducers whose color is irrelevant to the question.
    pub inducer: Color,
}

/// Illusion-irrelevant presentation parameters. Everything derives from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleParams {
    pub seed: u64,
    pub palette: Palette,
    pub jitter_x: f64,
    pub jitter_y: f64,
    /// Uniform layout scale; never applied to ratio, luma, or deviation settings.
    pub scale: f64,
    /// Angular phase in `[0, 1)` for rotationally symmetric inducer rings.
    pub phase: f64,
}

impl Default for StyleParams {
    fn default() -> Self {
        StyleParams::from_seed(0)
    }
}

impl StyleParams {
    /// Decodes a style seed: the low part indexes the combination space, the
    /// high part selects the ring phase. Seed 0 is the unjittered default.
    pub fn from_seed(seed: u64) -> StyleParams {
        let combo = seed % STYLE_SPACE;
        let n_j = JITTER_STEPS.len() as u64;
        let color = (combo % INDUCER_COLORS.len() as u64) as usize;
        let rest = combo / INDUCER_COLORS.len() as u64;
        let jx = (rest % n_j) as usize;
        let jy = ((rest / n_j) % n_j) as usize;
        let sc = ((rest / (n_j * n_j)) % SCALES.len() as u64) as usize;
        let phase = ((seed / STYLE_SPACE) % 12) as f64 / 12.0;
        StyleParams {
            seed,
            palette: Palette {
                inducer: INDUCER_COLORS[color],
            },
            jitter_x: JITTER_STEPS[jx],
            jitter_y: JITTER_STEPS[jy],
            scale: SCALES[sc],
            phase,
        }
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let bad = |m: &str| Err(CatalogError::InvalidStyle(m.to_string()));
        if !(self.jitter_x.is_finite() && self.jitter_y.is_finite())
            || self.jitter_x.abs() > MAX_JITTER
            || self.jitter_y.abs() > MAX_JITTER
        {
            return bad("layout jitter exceeds bounds");
        }
        if !(self.scale.is_finite() && self.scale >= SCALE_RANGE.0 && self.scale <= SCALE_RANGE.1) {
            return bad("layout scale outside [0.9, 1.1]");
        }
        if !(self.phase.is_finite() && (0.0..1.0).contains(&self.phase)) {
            return bad("phase outside [0, 1)");
        }
        let c = self.palette.inducer;
        if ![c.r, c.g, c.b].iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return bad("palette color outside [0, 1]");
        }
        // Inducers must stay visible against the light backgrounds used by size cases.
        if c.luma() > 0.6 {
            return bad("inducer color too light");
        }
        Ok(())
    }
}

/// Deterministic, pairwise-distinct styles for one case. The first style is always the default.
pub fn enumerate_style_variants(case_id: u8, count: u64, master_seed: u64) -> Result<Vec<StyleParams>, CatalogError> {
    case(case_id)?;
    if count == 0 {
        return Err(CatalogError::InvalidStyle("style count must be at least 1".into()));
    }
    if count > STYLE_SPACE {
        return Err(CatalogError::InvalidStyle(format!(
            "{count} styles requested but only {STYLE_SPACE} are available"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ (case_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut combos: Vec<u64> = (1..STYLE_SPACE).collect();
    combos.shuffle(&mut rng);
    let mut styles = vec![StyleParams::from_seed(0)];
    for &combo in combos.iter().take(count as usize - 1) {
        let phase_slot: u64 = rng.random_range(0..12);
        styles.push(StyleParams::from_seed(combo + STYLE_SPACE * phase_slot));
    }
    Ok(styles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_style_is_default() {
        let styles = enumerate_style_variants(5, 1, 42).unwrap();
        assert_eq!(styles, vec![StyleParams::default()]);
        let d = StyleParams::default();
        assert_eq!((d.jitter_x, d.jitter_y, d.scale, d.phase), (0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn styles_are_distinct_and_deterministic() {
        let a = enumerate_style_variants(5, 4, 7).unwrap();
        let b = enumerate_style_variants(5, 4, 7).unwrap();
        assert_eq!(a, b);
        let serialized: std::collections::BTreeSet<String> =
            a.iter().map(|s| serde_json::to_string(s).unwrap()).collect();
        assert_eq!(serialized.len(), 4);
        for s in &a {
            s.validate().unwrap();
            assert_eq!(StyleParams::from_seed(s.seed), *s);
        }
    }

    #[test]
    fn oversized_requests_rejected() {
        assert!(enumerate_style_variants(5, STYLE_SPACE + 1, 0).is_err());
        assert!(enumerate_style_variants(5, 0, 0).is_err());
        assert!(enumerate_style_variants(5, STYLE_SPACE, 0).is_ok());
    }

    #[test]
    fn out_of_range_style_rejected() {
        let mut s = StyleParams::default();
        s.jitter_x = 40.0;
        assert!(s.validate().is_err());
        let mut s = StyleParams::default();
        s.scale = 2.0;
        assert!(s.validate().is_err());
    }
}
