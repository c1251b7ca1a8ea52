//! Top-down value propagation with weighted conditioning bands, and the
//! bottom-up pass used to read per-level masses below a cut.
//!
//! Values follow the halving convention: the root starts with `2^n` and
//! every arc passes half of its source's value. Each level `L` carries a
//! pair of unary weights `w_L(0), w_L(1)`: `(1, 1)` for a free variable,
//! an indicator for evidence, a prior pair for weighted causes. A tested
//! arc with bit `b` multiplies by `w_L(b) / 2`; a level skipped by an arc
//! (a redundant test removed by reduction) contributes
//! `(w_L(0) + w_L(1)) / 2`, which is 1 for a free level and 1/2 for an
//! evidence level.
//!
//! A band is the level span of one weight function `f` over `W`. Inside a
//! band the variables of `W` other than the last are conditioned one
//! configuration at a time (depth first, so the prefix shared by several
//! configurations is propagated once); arcs leaving the band inject
//! `f(q, x) * v / 2`. An arc that jumps over a whole band picks up
//! `sum(f) / 2^|W|`.

use super::layout::Layout;
use super::OpCounter;

#[derive(Clone, Debug)]
pub(crate) struct Band {
    /// Levels of the function's variables, ascending.
    pub levels: Vec<usize>,
    /// Table indexed by bits, bit `d` holding the value at `levels[d]`.
    pub table: Vec<f64>,
}

impl Band {
    fn lo(&self) -> usize {
        self.levels[0]
    }

    fn hi(&self) -> usize {
        *self.levels.last().unwrap()
    }
}

pub(crate) struct Propagation {
    /// Node values; band interiors hold scratch values of the last
    /// conditioning visited.
    pub v: Vec<f64>,
    /// `readout[L][b]`: mass of all configurations with variable `L` set to
    /// `b`, for levels at or below the cut.
    pub readout: Vec<[f64; 2]>,
    pub total: f64,
}

struct Ctx<'a> {
    layout: &'a Layout,
    unary: &'a [[f64; 2]],
    bands: &'a [Band],
    cut: usize,
    /// prefix[L] = product of skip factors of levels 1..=L
    prefix: Vec<f64>,
    band_at: Vec<Option<usize>>,
}

fn mul_counted(ops: &mut OpCounter, acc: f64, factor: f64) -> f64 {
    if factor != 1.0 {
        ops.multiplications += 1;
    }
    acc * factor
}

impl Ctx<'_> {
    fn w(&self, level: usize, bit: bool) -> f64 {
        self.unary[level][bit as usize]
    }

    /// Factor for the levels strictly between `a` and `b`.
    fn gap(&self, a: usize, b: usize) -> f64 {
        if b <= a + 1 {
            return 1.0;
        }
        let mut g = self.prefix[b - 1] / self.prefix[a];
        for band in self.bands {
            if a < band.lo() && band.hi() < b {
                g *= band.table.iter().sum::<f64>();
            }
        }
        g
    }

    fn target_gap(&self, from: usize, to_level: usize) -> f64 {
        if to_level >= self.cut {
            self.gap(from, self.cut)
        } else {
            self.gap(from, to_level)
        }
    }

    fn in_band(&self, level: usize) -> bool {
        level < self.band_at.len() && self.band_at[level].is_some()
    }

    /// Contribution of an arc from a fully computed node `p` to `u`.
    fn pull(&self, v: &[f64], p: usize, bit: bool, u: usize, ops: &mut OpCounter) -> Option<f64> {
        let lp = self.layout.level(p);
        let w = self.w(lp, bit);
        if w == 0.0 {
            return None;
        }
        ops.divisions += 1;
        let mut c = v[p] / 2.0;
        c = mul_counted(ops, c, w);
        c = mul_counted(ops, c, self.target_gap(lp, self.layout.level(u)));
        Some(c)
    }
}

pub(crate) fn propagate(
    layout: &Layout,
    unary: &[[f64; 2]],
    bands: &[Band],
    cut: usize,
    ops: &mut OpCounter,
) -> Propagation {
    let n = layout.n_vars();
    debug_assert_eq!(unary.len(), n + 1);
    debug_assert!(bands.iter().all(|b| b.hi() < cut));
    let mut band_at = vec![None; n + 2];
    let mut is_w = vec![false; n + 2];
    for (bi, b) in bands.iter().enumerate() {
        for l in b.lo()..=b.hi() {
            band_at[l] = Some(bi);
        }
        for &l in &b.levels {
            is_w[l] = true;
        }
    }
    let mut prefix = vec![1.0; n + 2];
    for l in 1..=n {
        let t = if is_w[l] { 0.5 } else { (unary[l][0] + unary[l][1]) / 2.0 };
        prefix[l] = prefix[l - 1] * t;
    }
    prefix[n + 1] = prefix[n];
    let ctx = Ctx {
        layout,
        unary,
        bands,
        cut,
        prefix,
        band_at,
    };

    let m = layout.len();
    let mut v = vec![0.0; m];
    let mut acc = vec![0.0; m];
    if let Some(r) = layout.root() {
        acc[r] = 2f64.powi(n as i32) * ctx.target_gap(0, layout.level(r));
    }

    let mut i = 0;
    while i < m && layout.level(i) < cut {
        let level = layout.level(i);
        if let Some(bi) = ctx.band_at[level] {
            let end = layout.first_at_or_below(bands[bi].hi() + 1);
            run_band(&ctx, &bands[bi], i, end, &mut v, &mut acc, ops);
            i = end;
            continue;
        }
        let mut val = acc[i];
        for &(p, bit) in layout.parents(i) {
            if ctx.in_band(layout.level(p)) {
                continue;
            }
            if let Some(c) = ctx.pull(&v, p, bit, i, ops) {
                ops.additions += 1;
                val += c;
            }
        }
        v[i] = val;
        i += 1;
    }

    // entry flows into the region below the cut
    let region_start = i;
    let mut entry = vec![0.0; m];
    for u in region_start..m {
        let mut val = acc[u];
        for &(p, bit) in layout.parents(u) {
            let lp = layout.level(p);
            if lp >= cut || ctx.in_band(lp) {
                continue;
            }
            if let Some(c) = ctx.pull(&v, p, bit, u, ops) {
                ops.additions += 1;
                val += c;
            }
        }
        entry[u] = val;
    }

    region(&ctx, region_start, entry, v, ops)
}

fn run_band(
    ctx: &Ctx<'_>,
    band: &Band,
    start: usize,
    end: usize,
    v: &mut [f64],
    acc: &mut [f64],
    ops: &mut OpCounter,
) {
    let layout = ctx.layout;
    let lo = band.lo();
    let hi = band.hi();
    let k = band.levels.len();

    // values arriving from above the band are independent of the conditioning
    let mut entry = vec![0.0; end - start];
    for u in start..end {
        let mut val = acc[u];
        for &(p, bit) in layout.parents(u) {
            let lp = layout.level(p);
            if lp >= lo || ctx.in_band(lp) {
                continue;
            }
            if let Some(c) = ctx.pull(v, p, bit, u, ops) {
                ops.additions += 1;
                val += c;
            }
        }
        entry[u - start] = val;
    }

    // segment d holds nodes with level in [levels[d], levels[d+1]); the last
    // segment holds the nodes testing the band's final variable
    let mut bounds = Vec::with_capacity(k + 1);
    for &l in &band.levels {
        bounds.push(layout.first_at_or_below(l).max(start));
    }
    bounds.push(end);

    let mut q_index = vec![None; hi + 1];
    for (d, &l) in band.levels[..k - 1].iter().enumerate() {
        q_index[l] = Some(d);
    }

    let mut exits = Vec::new();
    for p in start..end {
        for bit in [false, true] {
            if let Some(c) = layout.child(p, bit) {
                if layout.level(c) > hi {
                    exits.push((p, bit, c));
                }
            }
        }
    }

    let mut st = BandState {
        ctx,
        band,
        start,
        entry,
        bounds,
        q_index,
        exits,
        qbits: vec![false; k - 1],
    };
    st.descend(0, v, acc, ops);
}

struct BandState<'a, 'b> {
    ctx: &'a Ctx<'b>,
    band: &'a Band,
    start: usize,
    entry: Vec<f64>,
    bounds: Vec<usize>,
    q_index: Vec<Option<usize>>,
    exits: Vec<(usize, bool, usize)>,
    qbits: Vec<bool>,
}

impl BandState<'_, '_> {
    /// Weight of the tested arc `bit` out of a band node at `level` under the
    /// current conditioning.
    fn tested(&self, level: usize, bit: bool) -> f64 {
        match self.q_index[level] {
            Some(d) => (self.qbits[d] == bit) as u8 as f64,
            None => self.ctx.w(level, bit),
        }
    }

    fn compute_segment(&self, seg: usize, v: &mut [f64], ops: &mut OpCounter) {
        let layout = self.ctx.layout;
        let lo = self.band.lo();
        for u in self.bounds[seg]..self.bounds[seg + 1] {
            let lu = layout.level(u);
            let mut val = self.entry[u - self.start];
            for &(p, bit) in layout.parents(u) {
                let lp = layout.level(p);
                if lp < lo {
                    continue;
                }
                let w = self.tested(lp, bit);
                if w == 0.0 {
                    continue;
                }
                ops.divisions += 1;
                let mut c = v[p] / 2.0;
                c = mul_counted(ops, c, w);
                c = mul_counted(ops, c, self.ctx.gap(lp, lu));
                ops.additions += 1;
                val += c;
            }
            v[u] = val;
        }
    }

    fn f(&self, last: bool) -> f64 {
        let k = self.band.levels.len();
        let mut idx = (last as usize) << (k - 1);
        for (d, &b) in self.qbits.iter().enumerate() {
            idx |= (b as usize) << d;
        }
        self.band.table[idx]
    }

    fn descend(&mut self, depth: usize, v: &mut [f64], acc: &mut [f64], ops: &mut OpCounter) {
        let k = self.band.levels.len();
        if depth + 1 < k {
            for bit in [false, true] {
                self.qbits[depth] = bit;
                self.compute_segment(depth, v, ops);
                self.descend(depth + 1, v, acc, ops);
            }
            return;
        }
        self.compute_segment(k - 1, v, ops);
        let layout = self.ctx.layout;
        let hi = self.band.hi();
        let (f0, f1) = (self.f(false), self.f(true));
        for &(p, bit, c) in &self.exits {
            let lp = layout.level(p);
            let weight = if lp == hi {
                if bit {
                    f1
                } else {
                    f0
                }
            } else {
                let w = self.tested(lp, bit);
                if w == 0.0 {
                    continue;
                }
                // the last band variable is skipped by this arc
                ops.additions += 1;
                ops.divisions += 1;
                mul_counted(ops, w * self.ctx.gap(lp, hi), (f0 + f1) / 2.0)
            };
            ops.divisions += 1;
            let mut contrib = v[p] / 2.0;
            contrib = mul_counted(ops, contrib, weight);
            contrib = mul_counted(ops, contrib, self.ctx.target_gap(hi, layout.level(c)));
            ops.additions += 1;
            acc[c] += contrib;
        }
    }
}

fn region(ctx: &Ctx<'_>, start: usize, entry: Vec<f64>, mut v: Vec<f64>, ops: &mut OpCounter) -> Propagation {
    let layout = ctx.layout;
    let n = layout.n_vars();
    let m = layout.len();
    let cut = ctx.cut;

    for u in start..m {
        let lu = layout.level(u);
        let mut val = mul_counted(ops, entry[u], ctx.gap(cut - 1, lu));
        for &(p, bit) in layout.parents(u) {
            let lp = layout.level(p);
            if lp < cut {
                continue;
            }
            let w = ctx.w(lp, bit);
            if w == 0.0 {
                continue;
            }
            ops.divisions += 1;
            let mut c = v[p] / 2.0;
            c = mul_counted(ops, c, w);
            c = mul_counted(ops, c, ctx.gap(lp, lu));
            ops.additions += 1;
            val += c;
        }
        v[u] = val;
    }

    // bottom-up suffix values; each arc term also yields the mass of the
    // configurations routed through that arc, so the readout shares the pass.
    // Configurations whose path skips level L go into a difference array over
    // level ranges and are split by the level's weights afterwards.
    let mut down = vec![0.0; m];
    let mut readout = vec![[0.0; 2]; n + 2];
    let mut skipped = vec![0.0; n + 2];
    let mut cover = |from: usize, to: usize, base: f64, ops: &mut OpCounter| {
        if from < to {
            skipped[from] += base;
            skipped[to] -= base;
            ops.additions += 2;
        }
    };
    for u in (start..m).rev() {
        if Some(u) == layout.term1() {
            down[u] = 1.0;
        } else {
            let lu = layout.level(u);
            let mut d = 0.0;
            for bit in [false, true] {
                let Some(c) = layout.child(u, bit) else { continue };
                let w = ctx.w(lu, bit);
                if w == 0.0 {
                    continue;
                }
                let lc = layout.level(c);
                ops.divisions += 1;
                let mut x = down[c] / 2.0;
                x = mul_counted(ops, x, w);
                x = mul_counted(ops, x, ctx.gap(lu, lc));
                ops.additions += 1;
                d += x;
                if v[u] != 0.0 {
                    let through = mul_counted(ops, x, v[u]);
                    readout[lu][bit as usize] += through;
                    ops.additions += 1;
                    cover(lu + 1, lc, through, ops);
                }
            }
            down[u] = d;
        }
        if entry[u] != 0.0 {
            let base = entry[u] * ctx.gap(cut - 1, layout.level(u)) * down[u];
            ops.multiplications += 2;
            cover(cut, layout.level(u), base, ops);
        }
    }
    let mut running = 0.0;
    for l in cut..=n {
        running += skipped[l];
        ops.additions += 1;
        if running == 0.0 {
            continue;
        }
        let w = ctx.unary[l];
        ops.additions += 1;
        for b in 0..2 {
            if w[b] != 0.0 {
                ops.divisions += 1;
                readout[l][b] += running * w[b] / (w[0] + w[1]);
                ops.multiplications += 1;
                ops.additions += 1;
            }
        }
    }

    let total = layout.term1().filter(|&t| t >= start).map(|t| v[t]).unwrap_or(0.0);
    Propagation {
        v,
        readout,
        total,
    }
}
