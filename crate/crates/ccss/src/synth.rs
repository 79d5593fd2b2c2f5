//! Procedural side-view hull silhouettes for corpus building and testing.
//!
//! A [`HullSpec`] is a hull body (raked bow, transom stern, optional raised
//! forecastle and deck notches) plus parts standing on the deck. Specs are
//! drawn from a seeded generator, so a corpus is reproducible from its seed.

use ccss_core::silhouette::Point;
use ccss_core::BinaryMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CANVAS_WIDTH: usize = 480;
pub const CANVAS_HEIGHT: usize = 160;
const DECK_Y: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartKind {
    /// Rectangular superstructure block.
    Block,
    /// Funnel, slanted backwards.
    Funnel,
    /// Mast wide enough to survive preprocessing.
    Mast,
    /// Thin antenna that preprocessing removes.
    Antenna,
    /// Low gun house or turret.
    Turret,
}

/// One deck part. Positions and sizes are in pixels; `x0` is the left edge
/// and `base` the y of its foot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part {
    pub kind: PartKind,
    pub x0: f64,
    pub width: f64,
    pub height: f64,
    pub base: f64,
}

impl Part {
    /// Parts that a perturbation may remove.
    pub fn is_small(&self) -> bool {
        matches!(self.kind, PartKind::Mast | PartKind::Turret)
    }

    fn polygon(&self) -> Vec<Point> {
        let (x0, x1) = (self.x0, self.x0 + self.width);
        let (y0, y1) = (self.base + 1.0, self.base - self.height);
        match self.kind {
            PartKind::Funnel => {
                let lean = self.height * 0.25;
                vec![
                    Point::new(x0, y0),
                    Point::new(x0 - lean, y1),
                    Point::new(x1 - lean, y1),
                    Point::new(x1, y0),
                ]
            }
            _ => vec![
                Point::new(x0, y0),
                Point::new(x0, y1),
                Point::new(x1, y1),
                Point::new(x1, y0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullSpec {
    pub class_name: String,
    /// Stern end of the deck.
    pub x0: f64,
    pub length: f64,
    /// Hull depth below the deck line.
    pub depth: f64,
    pub bow_rake: f64,
    pub stern_rake: f64,
    /// Raised forecastle as `(start x, height)`.
    pub forecastle: Option<(f64, f64)>,
    /// Deck notches as `(x0, width, depth)`.
    pub notches: Vec<(f64, f64, f64)>,
    /// Deck steps as `(x, height)`: the deck from `x` to the bow is raised.
    pub steps: Vec<(f64, f64)>,
    pub parts: Vec<Part>,
}

impl HullSpec {
    fn deck_height_at(&self, x: f64) -> f64 {
        let mut h = 0.0;
        if let Some((fx, fh)) = self.forecastle {
            if x >= fx {
                h += fh;
            }
        }
        for &(sx, sh) in &self.steps {
            if x >= sx {
                h += sh;
            }
        }
        h
    }

    /// Outline of the hull body, stern to bow along the deck first.
    pub fn hull_polygon(&self) -> Vec<Point> {
        let x_end = self.x0 + self.length;
        let bottom = DECK_Y + self.depth;
        // Deck breakpoints: forecastle, steps, notch edges.
        let mut breaks: Vec<f64> = Vec::new();
        if let Some((fx, _)) = self.forecastle {
            breaks.push(fx);
        }
        breaks.extend(self.steps.iter().map(|s| s.0));
        let mut deck = vec![Point::new(self.x0, DECK_Y - self.deck_height_at(self.x0))];
        let mut events: Vec<(f64, Option<(f64, f64)>)> = breaks.iter().map(|&x| (x, None)).collect();
        events.extend(self.notches.iter().map(|&(x, w, d)| (x, Some((w, d)))));
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, notch) in events {
            if x <= self.x0 || x >= x_end {
                continue;
            }
            let before = DECK_Y - self.deck_height_at(x - 1e-9);
            match notch {
                None => {
                    let after = DECK_Y - self.deck_height_at(x);
                    deck.push(Point::new(x, before));
                    deck.push(Point::new(x, after));
                }
                Some((w, d)) => {
                    let level = DECK_Y - self.deck_height_at(x);
                    let x1 = (x + w).min(x_end - 1.0);
                    deck.push(Point::new(x, level));
                    deck.push(Point::new(x, level + d));
                    deck.push(Point::new(x1, level + d));
                    deck.push(Point::new(x1, DECK_Y - self.deck_height_at(x1)));
                }
            }
        }
        deck.push(Point::new(x_end, DECK_Y - self.deck_height_at(x_end)));
        deck.push(Point::new(x_end - self.bow_rake, bottom));
        deck.push(Point::new(self.x0 + self.stern_rake, bottom));
        deck
    }

    pub fn render(&self) -> BinaryMask {
        let mut polys = vec![self.hull_polygon()];
        polys.extend(self.parts.iter().map(Part::polygon));
        let mut mask = BinaryMask::new(CANVAS_WIDTH, CANVAS_HEIGHT).expect("canvas is non-empty");
        for poly in &polys {
            fill_polygon(&mut mask, poly);
        }
        mask
    }

    /// Deck y (top of the hull) at `x`.
    pub fn deck_y(&self, x: f64) -> f64 {
        DECK_Y - self.deck_height_at(x)
    }

    /// Foot of a part spanning `x .. x + width`: the lower of the two deck
    /// levels, so the part never floats over a forecastle break.
    fn base_for(&self, x: f64, width: f64) -> f64 {
        self.deck_y(x).max(self.deck_y(x + width))
    }
}

/// Even-odd fill sampled at pixel centres.
pub fn fill_polygon(mask: &mut BinaryMask, poly: &[Point]) {
    let n = poly.len();
    for y in 0..mask.height() {
        let py = y as f64 + 0.5;
        let mut xs: Vec<f64> = Vec::new();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.y > py) != (b.y > py) {
                xs.push(a.x + (py - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let end = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(mask.width());
            for x in start..end {
                mask.set(x, y, true);
            }
        }
    }
}

const CLASSES: [&str; 6] = ["frigate", "destroyer", "corvette", "patrol", "cargo", "tanker"];

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Draws the `index`-th hull of the corpus identified by `seed`.
pub fn generate(seed: u64, index: u64) -> HullSpec {
    let mut rng = rng_for(seed, index);
    let class = CLASSES[rng.random_range(0..CLASSES.len())];
    let length = rng.random_range(300.0..420.0_f64).round();
    let x0 = ((CANVAS_WIDTH as f64 - length) / 2.0 + rng.random_range(-15.0..15.0_f64)).round();
    let depth = rng.random_range(18.0..32.0_f64).round();
    let bow_rake = rng.random_range(12.0..40.0_f64).round();
    let stern_rake = rng.random_range(0.0..12.0_f64).round();
    let forecastle = rng
        .random_bool(0.5)
        .then(|| ((x0 + length * rng.random_range(0.55..0.8)).round(), rng.random_range(4.0..9.0_f64).round()));
    let mut spec = HullSpec {
        class_name: class.to_string(),
        x0,
        length,
        depth,
        bow_rake,
        stern_rake,
        forecastle,
        notches: Vec::new(),
        steps: Vec::new(),
        parts: Vec::new(),
    };

    // Superstructure blocks, possibly tiered.
    let blocks = rng.random_range(1..=3);
    for _ in 0..blocks {
        let width = (length * rng.random_range(0.08..0.22)).round();
        let x = (x0 + rng.random_range(0.12..0.85) * length - width / 2.0).round();
        let base = spec.base_for(x, width);
        let height = rng.random_range(8.0..26.0_f64).round();
        spec.parts.push(Part { kind: PartKind::Block, x0: x, width, height, base });
        if rng.random_bool(0.5) {
            let w2 = (width * rng.random_range(0.35..0.7)).round();
            let x2 = (x + rng.random_range(0.0..(width - w2).max(1.0))).round();
            let h2 = rng.random_range(6.0..16.0_f64).round();
            spec.parts.push(Part { kind: PartKind::Block, x0: x2, width: w2, height: h2, base: base - height });
        }
    }
    // Funnels.
    for _ in 0..rng.random_range(0..=2) {
        let width = rng.random_range(10.0..20.0_f64).round();
        let x = (x0 + rng.random_range(0.3..0.7) * length).round();
        let height = rng.random_range(14.0..30.0_f64).round();
        spec.parts.push(Part { kind: PartKind::Funnel, x0: x, width, height, base: spec.base_for(x, width) });
    }
    // Masts.
    for _ in 0..rng.random_range(0..=3) {
        let width = rng.random_range(5.0..8.0_f64).round();
        let x = (x0 + rng.random_range(0.15..0.85) * length).round();
        let height = rng.random_range(18.0..45.0_f64).round();
        spec.parts.push(Part { kind: PartKind::Mast, x0: x, width, height, base: spec.base_for(x, width) });
    }
    // Turrets.
    for _ in 0..rng.random_range(0..=2) {
        let width = rng.random_range(12.0..22.0_f64).round();
        let x = (x0 + rng.random_range(0.08..0.9) * length).round();
        let height = rng.random_range(5.0..10.0_f64).round();
        spec.parts.push(Part { kind: PartKind::Turret, x0: x, width, height, base: spec.base_for(x, width) });
    }
    // Antennas: clutter for the morphological filter.
    for _ in 0..rng.random_range(0..=2) {
        let x = (x0 + rng.random_range(0.2..0.8) * length).round();
        let height = rng.random_range(10.0..25.0_f64).round();
        spec.parts.push(Part { kind: PartKind::Antenna, x0: x, width: 1.0, height, base: spec.deck_y(x) - 5.0 });
    }
    // Deck notches.
    for _ in 0..rng.random_range(0..=2) {
        let width = rng.random_range(8.0..20.0_f64).round();
        let x = (x0 + rng.random_range(0.1..0.85) * length).round();
        let d = rng.random_range(3.0..8.0_f64).round();
        spec.notches.push((x, width, d));
    }
    spec
}

/// Query-side perturbation: one small deck feature is added or removed,
/// then every boundary pixel is independently moved by up to one pixel.
pub fn perturb(spec: &HullSpec, seed: u64) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = spec.clone();
    let removable: Vec<usize> = (0..spec.parts.len()).filter(|&i| spec.parts[i].is_small()).collect();
    if !removable.is_empty() && rng.random_bool(0.5) {
        let victim = removable[rng.random_range(0..removable.len())];
        spec.parts.remove(victim);
    } else {
        let width = rng.random_range(6.0..12.0_f64).round();
        let x = (spec.x0 + rng.random_range(0.1..0.9) * spec.length).round();
        let height = rng.random_range(5.0..9.0_f64).round();
        spec.parts.push(Part { kind: PartKind::Turret, x0: x, width, height, base: spec.base_for(x, width) });
    }
    boundary_noise(&spec.render(), &mut rng)
}

/// Flips pixels on both sides of the boundary with probability 1/3 each: an
/// object pixel next to the background may be removed, a background pixel
/// next to the object may be added.
pub fn boundary_noise(mask: &BinaryMask, rng: &mut impl Rng) -> BinaryMask {
    let mut out = mask.clone();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let here = mask.get(x, y);
            let (xi, yi) = (x as isize, y as isize);
            let differs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|&(dx, dy)| mask.get_signed(xi + dx, yi + dy) != here);
            if differs && rng.random_range(0..3) == 0 {
                out.set(x, y, !here);
            }
        }
    }
    out
}

/// Seed of the perturbed query for hull `index` of the corpus `seed`.
pub fn query_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index.wrapping_mul(31)).wrapping_add(7)
}

/// Length of the free deck between the last deck feature and the bow.
pub fn free_bow_deck(spec: &HullSpec) -> (f64, f64) {
    let x_end = spec.x0 + spec.length;
    let mut start = spec.x0;
    for p in &spec.parts {
        start = start.max(p.x0 + p.width);
    }
    for &(x, w, _) in &spec.notches {
        start = start.max(x + w);
    }
    if let Some((fx, _)) = spec.forecastle {
        start = start.max(fx);
    }
    for &(x, _) in &spec.steps {
        start = start.max(x);
    }
    (start.min(x_end), x_end)
}

/// Two hulls that differ only by a one-pixel drop in the deck: a long,
/// mostly bare hull with its superstructure aft, and the same hull with the
/// deck lowered by one pixel from halfway along the foredeck to the bow.
pub fn step_pair(seed: u64) -> (HullSpec, HullSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = 420.0;
    let x0 = 30.0;
    let plain = HullSpec {
        class_name: "step-pair".to_string(),
        x0,
        length,
        depth: 24.0,
        bow_rake: 10.0,
        stern_rake: 6.0,
        forecastle: None,
        notches: Vec::new(),
        steps: Vec::new(),
        parts: vec![
            Part { kind: PartKind::Block, x0: x0 + 15.0, width: 60.0, height: 20.0, base: DECK_Y },
            Part { kind: PartKind::Block, x0: x0 + 25.0, width: 30.0, height: 12.0, base: DECK_Y - 20.0 },
        ],
    };
    let (a, b) = free_bow_deck(&plain);
    let mut stepped = plain.clone();
    stepped.steps.push((((a + b) / 2.0 + rng.random_range(-10.0..10.0_f64)).round(), -1.0));
    (plain, stepped)
}
