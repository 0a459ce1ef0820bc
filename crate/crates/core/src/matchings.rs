//! Signed perfect matchings and exact checks of the exponent bookkeeping
//! used to bound off-diagonal Pfaffian terms.
//!
//! Indices are 0-based internally; certificates report 1-based pairs. A
//! block layout cuts `0..dim` into consecutive 4-index blocks whose
//! positions 1..4 hold (λ-row, λ-column, x-row, x-column). Every matched pair
//! `(i, j)`, `i < j`, falls into exactly one regime:
//!
//! * same block, positions `(p, q)`: D1 `(1,2)`, D2,1 `(1,3)`, D2,2 `(1,4)`,
//!   D3 `(2,3),(2,4)`, D4 `(3,4)`;
//! * different blocks, position `p` in the earlier and `q` in the later block:
//!   O1 `(1,1)`, O2 `(1,2),(2,1)`, O3 `(1,3),(1,4),(3,1),(4,1)`, O4,1 `(2,2)`,
//!   O4,2 `(3,3)`, O5,1 `(2,3),(2,4),(3,2),(4,2)`, O5,2 `(3,4),(4,3)`, O6 `(4,4)`.
//!
//! The 4k+2 layout appends two indices (positions 5, 6) to the last block:
//! D5,1 `(1,5)`, D5,2 `(1,6),(2,5)`, D5,3 `(2,6)`, D5,4 `(3,5),(4,5)`,
//! D5,5 `(3,6),(4,6)`, D6 `(5,6)`; against an earlier block the extra indices
//! give O7,1 `(1,5)`, O7,2 `(1,6)`, O9,1 `(2,5)`, O9,2 `(2,6)`, O8 `(3,5)`,
//! O9,3 `(3,6)`, O9,4 `(4,5)`, O10 `(4,6)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest matching size accepted by [`enumerate_matchings`].
pub const ENUMERATION_CAP: usize = 16;

/// One perfect matching in canonical form: pairs sorted by first element,
/// each pair increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingTerm {
    pub pairs: Vec<(usize, usize)>,
    pub sign: i8,
}

impl MatchingTerm {
    /// 1-based pairs for reporting.
    pub fn one_based(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&(a, b)| (a + 1, b + 1)).collect()
    }
}

/// Lexicographic stream of all `(2N − 1)!!` matchings of `0..2N`.
#[derive(Debug, Clone)]
pub struct Matchings {
    dim: usize,
    choice: Vec<usize>,
    done: bool,
}

impl Iterator for Matchings {
    type Item = MatchingTerm;

    fn next(&mut self) -> Option<MatchingTerm> {
        if self.done {
            return None;
        }
        let term = self.current();
        // Mixed-radix increment: level ℓ has 2N − 2ℓ − 1 choices.
        let levels = self.choice.len();
        let mut l = levels;
        loop {
            if l == 0 {
                self.done = true;
                break;
            }
            l -= 1;
            let radix = self.dim - 2 * l - 1;
            if self.choice[l] + 1 < radix {
                self.choice[l] += 1;
                for c in &mut self.choice[l + 1..] {
                    *c = 0;
                }
                break;
            }
        }
        Some(term)
    }
}

impl Matchings {
    fn current(&self) -> MatchingTerm {
        let mut free: Vec<usize> = (0..self.dim).collect();
        let mut pairs = Vec::with_capacity(self.dim / 2);
        let mut parity = 0;
        for &p in &self.choice {
            let a = free.remove(0);
            let b = free.remove(p);
            parity += p;
            pairs.push((a, b));
        }
        MatchingTerm { pairs, sign: if parity % 2 == 0 { 1 } else { -1 } }
    }
}

/// All canonical matchings of `0..two_n`, in lexicographic order.
pub fn enumerate_matchings(two_n: usize) -> Result<Matchings> {
    if two_n % 2 == 1 || two_n > ENUMERATION_CAP {
        return Err(Error::InvalidArgument(format!("cannot enumerate matchings of size {two_n}")));
    }
    Ok(Matchings { dim: two_n, choice: vec![0; two_n / 2], done: false })
}

/// `(2N − 1)!!`.
pub fn double_factorial_odd(two_n: usize) -> u64 {
    (1..two_n as u64).step_by(2).product()
}

/// Upper-triangular 0-1 matrix with a one at every matched `(i, j)`, `i < j`.
pub fn lambda_matrix(m: &MatchingTerm, dim: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; dim]; dim];
    for &(a, b) in &m.pairs {
        out[a.min(b)][a.max(b)] = 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutVariant {
    /// `k` blocks of 4.
    Standard4k,
    /// `k` blocks of 4 plus two trailing indices joined to the last block.
    Extended4k2,
    /// `k + 1` blocks of 4; block pair (1, 2) is tracked separately.
    Extended4k4,
    /// Same partition as `Standard4k`, read with the D2,1 / D2,2 split.
    Goe4k,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub k: usize,
    pub variant: LayoutVariant,
}

impl BlockLayout {
    pub fn new(k: usize, variant: LayoutVariant) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("layout needs k >= 1".into()));
        }
        Ok(Self { k, variant })
    }

    pub fn dim(&self) -> usize {
        match self.variant {
            LayoutVariant::Standard4k | LayoutVariant::Goe4k => 4 * self.k,
            LayoutVariant::Extended4k2 => 4 * self.k + 2,
            LayoutVariant::Extended4k4 => 4 * self.k + 4,
        }
    }

    /// Number of 4-blocks.
    pub fn blocks(&self) -> usize {
        match self.variant {
            LayoutVariant::Extended4k4 => self.k + 1,
            _ => self.k,
        }
    }
}

/// Regime cardinalities of one matching. `bar_*` fields count the part of a
/// regime inside block pair (1, 2); they are only filled for the 4k+4 layout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeCounts {
    pub d1: i64,
    pub d21: i64,
    pub d22: i64,
    pub d3: i64,
    pub d4: i64,
    pub d51: i64,
    pub d52: i64,
    pub d53: i64,
    pub d54: i64,
    pub d55: i64,
    pub d6: i64,
    pub o1: i64,
    pub o2: i64,
    pub o3: i64,
    pub o41: i64,
    pub o42: i64,
    pub o51: i64,
    pub o52: i64,
    pub o6: i64,
    pub o71: i64,
    pub o72: i64,
    pub o8: i64,
    pub o91: i64,
    pub o92: i64,
    pub o93: i64,
    pub o94: i64,
    pub o10: i64,
    pub bar_o1: i64,
    pub bar_o2: i64,
    pub bar_o3: i64,
    pub bar_o41: i64,
    pub bar_o42: i64,
    pub bar_o51: i64,
    pub bar_o52: i64,
    pub bar_o6: i64,
}

impl RegimeCounts {
    pub fn d2(&self) -> i64 {
        self.d21 + self.d22
    }
    pub fn d5(&self) -> i64 {
        self.d51 + self.d52 + self.d53 + self.d54 + self.d55
    }
    pub fn o4(&self) -> i64 {
        self.o41 + self.o42
    }
    pub fn o5(&self) -> i64 {
        self.o51 + self.o52
    }
    pub fn o7(&self) -> i64 {
        self.o71 + self.o72
    }
    pub fn o9(&self) -> i64 {
        self.o91 + self.o92 + self.o93 + self.o94
    }
    /// `|O1| + … + |O6|`.
    pub fn off_diagonal(&self) -> i64 {
        self.o1 + self.o2 + self.o3 + self.o4() + self.o5() + self.o6
    }
    /// `|O7| + … + |O10|`.
    pub fn off_diagonal_extra(&self) -> i64 {
        self.o7() + self.o8 + self.o9() + self.o10
    }
    pub fn diagonal(&self) -> i64 {
        self.d1 + self.d2() + self.d3 + self.d4 + self.d5() + self.d6
    }
    pub fn total(&self) -> i64 {
        self.diagonal() + self.off_diagonal() + self.off_diagonal_extra()
    }
    /// `Y1 = |Ō2| + |Ō3|`.
    pub fn y1(&self) -> i64 {
        self.bar_o2 + self.bar_o3
    }
    /// `Y2 = |Ō4| + |Ō5| + |Ō6|`.
    pub fn y2(&self) -> i64 {
        self.bar_o41 + self.bar_o42 + self.bar_o51 + self.bar_o52 + self.bar_o6
    }
}

/// Exact rational in tenths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct OrdValue(pub i64);

impl OrdValue {
    pub fn tenths(self) -> i64 {
        self.0
    }
    pub fn from_fifths(v: i64) -> Self {
        Self(2 * v)
    }
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl std::ops::Add for OrdValue {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(self.0 + o.0)
    }
}

impl fmt::Display for OrdValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = gcd(self.0.unsigned_abs(), 10) as i64;
        let (num, den) = (self.0 / g, 10 / g);
        if den == 1 {
            write!(f, "{num}")
        } else {
            write!(f, "{num}/{den}")
        }
    }
}

impl Serialize for OrdValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

fn diag_regime(c: &mut RegimeCounts, p: usize, q: usize) -> Option<()> {
    match (p, q) {
        (1, 2) => c.d1 += 1,
        (1, 3) => c.d21 += 1,
        (1, 4) => c.d22 += 1,
        (2, 3) | (2, 4) => c.d3 += 1,
        (3, 4) => c.d4 += 1,
        (1, 5) => c.d51 += 1,
        (1, 6) | (2, 5) => c.d52 += 1,
        (2, 6) => c.d53 += 1,
        (3, 5) | (4, 5) => c.d54 += 1,
        (3, 6) | (4, 6) => c.d55 += 1,
        (5, 6) => c.d6 += 1,
        _ => return None,
    }
    Some(())
}

fn off_regime(c: &mut RegimeCounts, p: usize, q: usize, bar: bool) -> Option<()> {
    let (field, bar_field): (&mut i64, Option<&mut i64>) = match (p, q) {
        (1, 1) => (&mut c.o1, Some(&mut c.bar_o1)),
        (1, 2) | (2, 1) => (&mut c.o2, Some(&mut c.bar_o2)),
        (1, 3) | (1, 4) | (3, 1) | (4, 1) => (&mut c.o3, Some(&mut c.bar_o3)),
        (2, 2) => (&mut c.o41, Some(&mut c.bar_o41)),
        (3, 3) => (&mut c.o42, Some(&mut c.bar_o42)),
        (2, 3) | (2, 4) | (3, 2) | (4, 2) => (&mut c.o51, Some(&mut c.bar_o51)),
        (3, 4) | (4, 3) => (&mut c.o52, Some(&mut c.bar_o52)),
        (4, 4) => (&mut c.o6, Some(&mut c.bar_o6)),
        (1, 5) => (&mut c.o71, None),
        (1, 6) => (&mut c.o72, None),
        (2, 5) => (&mut c.o91, None),
        (2, 6) => (&mut c.o92, None),
        (3, 5) => (&mut c.o8, None),
        (3, 6) => (&mut c.o93, None),
        (4, 5) => (&mut c.o94, None),
        (4, 6) => (&mut c.o10, None),
        _ => return None,
    };
    *field += 1;
    if bar {
        *bar_field? += 1;
    }
    Some(())
}

/// Block index and 1-based position of `i`.
fn locate(layout: &BlockLayout, i: usize) -> (usize, usize) {
    if layout.variant == LayoutVariant::Extended4k2 && i >= 4 * layout.k {
        (layout.k - 1, i - 4 * layout.k + 5)
    } else {
        (i / 4, i % 4 + 1)
    }
}

/// Assigns every matched pair to its regime.
pub fn classify(m: &MatchingTerm, layout: &BlockLayout) -> Result<RegimeCounts> {
    let dim = layout.dim();
    if m.pairs.len() * 2 != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: 2 * m.pairs.len() });
    }
    let mut c = RegimeCounts::default();
    let track_bar = layout.variant == LayoutVariant::Extended4k4;
    for &(a, b) in &m.pairs {
        let (i, j) = (a.min(b), a.max(b));
        let (bi, pi) = locate(layout, i);
        let (bj, pj) = locate(layout, j);
        let ok = if bi == bj {
            diag_regime(&mut c, pi, pj)
        } else {
            off_regime(&mut c, pi, pj, track_bar && bi == 0 && bj == 1)
        };
        if ok.is_none() {
            return Err(Error::InvalidArgument(format!(
                "pair ({}, {}) has no regime in layout {:?}",
                i + 1,
                j + 1,
                layout.variant
            )));
        }
    }
    Ok(c)
}

/// `|D1| + 3/5|D2| + 3/5|D3| + 1/5|D4| + 6/5|O1| + 1/2|O2| + 3/10|O3|
///  − 1/5|O4,1| − 1/5|O4,2| − 2/5|O5| − 3/5|O6|`.
pub fn ord1(c: &RegimeCounts) -> OrdValue {
    OrdValue(
        10 * c.d1 + 6 * c.d2() + 6 * c.d3 + 2 * c.d4 + 12 * c.o1 + 5 * c.o2 + 3 * c.o3
            - 2 * c.o41
            - 2 * c.o42
            - 4 * c.o5()
            - 6 * c.o6,
    )
}

/// `Ord1 + 3/5|D5| + 1/5|D6| + 3/10|O7| − 1/5|O8| − 2/5|O9| − 3/5|O10|`.
pub fn ord2(c: &RegimeCounts) -> OrdValue {
    ord1(c) + OrdValue(6 * c.d5() + 2 * c.d6 + 3 * c.o7() - 2 * c.o8 - 4 * c.o9() - 6 * c.o10)
}

/// `Ord1 + κ(Y1, Y2)`.
pub fn ord3(c: &RegimeCounts) -> Result<OrdValue> {
    Ok(ord1(c) + kappa(c.y1() as usize, c.y2() as usize)?)
}

/// `|D1| + 3/2|D2,1| + 3/2|O1| + 1/2|O2| − 1/2|O4| − |O5| − 3/2|O6|`.
pub fn ord4(c: &RegimeCounts) -> OrdValue {
    OrdValue(10 * c.d1 + 15 * c.d21 + 15 * c.o1 + 5 * c.o2 - 5 * c.o4() - 10 * c.o5() - 15 * c.o6)
}

/// Growth exponents κ(a, b) of `∫ (√n + min{n, 1/|x|})^a min{n, 1/|x|}^b`
/// over `|x| < 1/log n`, net of `n^{a/2}`.
pub fn kappa(a: usize, b: usize) -> Result<OrdValue> {
    let halves = match (a, b) {
        (0, 0) | (0, 1) | (1, 0) | (2, 0) => 0,
        (1, 1) => 1,
        (0, 2) | (2, 1) => 2,
        (1, 2) => 3,
        (0, 3) | (2, 2) => 4,
        _ => return Err(Error::UnreachableKappa(a, b)),
    };
    Ok(OrdValue(5 * halves))
}

/// `h_σ(ℓ)`: pairs with exactly one end in 4-block `ℓ`.
pub fn crossing_counts(m: &MatchingTerm, blocks: usize) -> Vec<i64> {
    let mut h = vec![0i64; blocks];
    for &(a, b) in &m.pairs {
        let (ba, bb) = (a / 4, b / 4);
        if ba != bb {
            if ba < blocks {
                h[ba] += 1;
            }
            if bb < blocks {
                h[bb] += 1;
            }
        }
    }
    h
}

// ---------------------------------------------------------------------------
// certificates

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub check: String,
    pub pairs: Vec<(usize, usize)>,
    pub detail: String,
}

/// Outcome of one exhaustive check.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCertificate {
    pub lemma: String,
    pub k: usize,
    pub matchings_checked: u64,
    pub counterexamples: Vec<Counterexample>,
    /// Total failures; `counterexamples` keeps at most the first few.
    pub counterexample_count: u64,
    /// Per-check pass counts and informational tallies.
    pub checks: Vec<CheckTally>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckTally {
    pub name: String,
    pub evaluated: u64,
    pub failed: u64,
    /// Informational checks never count as counterexamples.
    pub informational: bool,
}

const KEEP: usize = 16;

struct Recorder {
    cert: LemmaCertificate,
}

impl Recorder {
    fn new(lemma: &str, k: usize) -> Self {
        Self {
            cert: LemmaCertificate {
                lemma: lemma.to_string(),
                k,
                matchings_checked: 0,
                counterexamples: Vec::new(),
                counterexample_count: 0,
                checks: Vec::new(),
            },
        }
    }

    fn tally(&mut self, name: &str, informational: bool) -> &mut CheckTally {
        if let Some(i) = self.cert.checks.iter().position(|t| t.name == name) {
            return &mut self.cert.checks[i];
        }
        self.cert.checks.push(CheckTally { name: name.to_string(), evaluated: 0, failed: 0, informational });
        self.cert.checks.last_mut().unwrap()
    }

    fn check<F: FnOnce() -> String>(&mut self, name: &str, ok: bool, m: &MatchingTerm, detail: F) {
        let t = self.tally(name, false);
        t.evaluated += 1;
        if !ok {
            t.failed += 1;
            self.cert.counterexample_count += 1;
            if self.cert.counterexamples.len() < KEEP {
                self.cert.counterexamples.push(Counterexample {
                    check: name.to_string(),
                    pairs: m.one_based(),
                    detail: detail(),
                });
            }
        }
    }

    fn note(&mut self, name: &str, holds: bool) {
        let t = self.tally(name, true);
        t.evaluated += 1;
        if !holds {
            t.failed += 1;
        }
    }

    fn finish(self) -> LemmaCertificate {
        self.cert
    }
}

impl LemmaCertificate {
    pub fn passed(&self) -> bool {
        self.counterexample_count == 0
    }
}

fn each_matching<F: FnMut(&MatchingTerm, &RegimeCounts) -> Result<()>>(layout: &BlockLayout, mut f: F) -> Result<u64> {
    let mut count = 0;
    for m in enumerate_matchings(layout.dim())? {
        let c = classify(&m, layout)?;
        f(&m, &c)?;
        count += 1;
    }
    Ok(count)
}

/// Counting identities for the 4k layout and the 4k+2 layout.
///
/// The 4k+2 identities use the class-count forms: index `4k+1` is in residue
/// class 1 and `4k+2` in class 2, so `W1` also counts `|O7,2|` and `W2` also
/// counts `|O9,1| + |O10|`, and the pair total is `2k + 1`. The shorter forms
/// are tallied as informational checks.
pub fn verify_identities(k: usize) -> Result<LemmaCertificate> {
    let mut rec = Recorder::new("identities", k);
    let kk = k as i64;
    let std = BlockLayout::new(k, LayoutVariant::Standard4k)?;
    let n1 = each_matching(&std, |m, c| {
        let cons1 = 2 * c.o1 + c.o2 + c.o3 + c.d1 + c.d2();
        let cons2 = c.o2 + 2 * c.o41 + c.o51 + c.d1 + c.d3;
        let cons3 = c.o3 + 2 * c.o42 + c.o51 + 2 * c.o52 + 2 * c.o6 + c.d2() + c.d3 + 2 * c.d4;
        let cons4 = c.total();
        rec.check("cons1", cons1 == kk, m, || format!("lhs {cons1}"));
        rec.check("cons2", cons2 == kk, m, || format!("lhs {cons2}"));
        rec.check("cons3", cons3 == 2 * kk, m, || format!("lhs {cons3}"));
        rec.check("cons4", cons4 == 2 * kk, m, || format!("lhs {cons4}"));
        // 6k/5 in tenths.
        let addid = 10 * c.d1
            + 6 * c.d2()
            + 6 * c.d3
            + 2 * c.d4
            + 10 * c.o1
            + 10 * c.o2
            + 6 * c.o3
            + 10 * c.o41
            + 2 * c.o42
            + 6 * c.o51
            + 2 * c.o52
            + 2 * c.o6;
        rec.check("addid", addid == 12 * kk, m, || format!("rhs {addid}/10"));
        Ok(())
    })?;
    let ext = BlockLayout::new(k, LayoutVariant::Extended4k2)?;
    let n2 = each_matching(&ext, |m, c| {
        let w1_short = 2 * c.o71 + c.o8 + c.o91 + c.o94 + 2 * c.d51 + c.d52 + c.d54 + c.d6;
        let w2_short = c.o72 + 2 * c.o92 + c.o93 + c.d52 + 2 * c.d53 + c.d55 + c.d6;
        let w1 = w1_short + c.o72;
        let w2 = w2_short + c.o91 + c.o10;
        let w3 = c.o8 + c.o93 + c.o94 + c.o10 + c.d54 + c.d55;
        let base1 = 2 * c.o1 + c.o2 + c.o3 + c.d1 + c.d2();
        let base2 = c.o2 + 2 * c.o41 + c.o51 + c.d1 + c.d3;
        let base3 = c.o3 + 2 * c.o42 + c.o51 + 2 * c.o52 + 2 * c.o6 + c.d2() + c.d3 + 2 * c.d4;
        rec.check("ext_cons1", base1 + w1 == kk + 1, m, || format!("lhs {}", base1 + w1));
        rec.check("ext_cons2", base2 + w2 == kk + 1, m, || format!("lhs {}", base2 + w2));
        rec.check("ext_cons3", base3 + w3 == 2 * kk, m, || format!("lhs {}", base3 + w3));
        rec.check("ext_cons4", c.total() == 2 * kk + 1, m, || format!("lhs {}", c.total()));
        rec.note("ext_cons1_short_w1", base1 + w1_short == kk + 1);
        rec.note("ext_cons2_short_w2", base2 + w2_short == kk + 1);
        rec.note("ext_cons4_total_2k_plus_2", c.total() == 2 * kk + 2);
        Ok(())
    })?;
    rec.cert.matchings_checked = n1 + n2;
    Ok(rec.finish())
}

fn is_diagonal(c: &RegimeCounts) -> bool {
    c.off_diagonal() + c.off_diagonal_extra() == 0
}

/// `Ord1 < 6k/5` off the diagonal, `= 6k/5` on it; the equivalent inequality
/// on `|O1|`; `|O1| ≤ |O2| + … + |O6|`; evenness of the block crossing counts.
pub fn verify_ord1(k: usize) -> Result<LemmaCertificate> {
    let mut rec = Recorder::new("ord1", k);
    let layout = BlockLayout::new(k, LayoutVariant::Standard4k)?;
    let bound = 12 * k as i64;
    let n = each_matching(&layout, |m, c| {
        let o = ord1(c);
        if is_diagonal(c) {
            rec.check("ord1_equal_on_diagonal", o.tenths() == bound, m, || format!("Ord1 = {o}"));
        } else {
            rec.check("ord1_strict_off_diagonal", o.tenths() < bound, m, || format!("Ord1 = {o}"));
            // |O1| < 3/2|O3| + 2|O4,2| + 5/2|O2| + 3|O5,2| + 4|O6| + 5|O5,1| + 6|O4,1|, in halves.
            let rhs = 3 * c.o3 + 4 * c.o42 + 5 * c.o2 + 6 * c.o52 + 8 * c.o6 + 10 * c.o51 + 12 * c.o41;
            let equiv = (2 * c.o1 < rhs) == (o.tenths() < bound);
            rec.check("equicond_equivalent", equiv, m, || format!("2|O1| = {}, rhs = {rhs}", 2 * c.o1));
        }
        let rest = c.off_diagonal() - c.o1;
        rec.check("o1_dominated", c.o1 <= rest, m, || format!("|O1| = {}, rest = {rest}", c.o1));
        let h = crossing_counts(m, layout.blocks());
        rec.check("crossing_even", h.iter().all(|v| v % 2 == 0), m, || format!("h = {h:?}"));
        Ok(())
    })?;
    rec.cert.matchings_checked = n;
    Ok(rec.finish())
}

/// `Ord2 < 6(k+1)/5` for every matching of the 4k+2 layout, and
/// `|O1| ≤ |O2| + … + |O10|`.
pub fn verify_ord2(k: usize) -> Result<LemmaCertificate> {
    let mut rec = Recorder::new("ord2", k);
    let layout = BlockLayout::new(k, LayoutVariant::Extended4k2)?;
    let bound = 12 * (k as i64 + 1);
    let n = each_matching(&layout, |m, c| {
        let o = ord2(c);
        rec.check("ord2_strict", o.tenths() < bound, m, || format!("Ord2 = {o}"));
        let rest = c.off_diagonal() - c.o1 + c.off_diagonal_extra();
        rec.check("o1_dominated_extended", c.o1 <= rest, m, || format!("|O1| = {}, rest = {rest}", c.o1));
        Ok(())
    })?;
    rec.cert.matchings_checked = n;
    Ok(rec.finish())
}

/// `Y3` with the coefficients of the `|O1|` inequality, in halves.
fn y3_halves(o2: i64, o3: i64, o41: i64, o42: i64, o51: i64, o52: i64, o6: i64) -> i64 {
    3 * o3 + 4 * o42 + 5 * o2 + 6 * o52 + 8 * o6 + 10 * o51 + 12 * o41
}

/// Checks on the 4k+4 layout (`k + 1` blocks, block pair (1, 2) close).
///
/// `Ord3 < 6(k+1)/5` is checked for off-diagonal matchings; diagonal ones
/// attain `6(k+1)/5` exactly. Also: κ-table reachability, `|O1′| ≤ Y3′` with
/// strictness in the odd case, `Ȳ3 − |Ō1| ≥ 5κ` in the odd case and `> 5κ`
/// otherwise whenever `κ > 0` (tallied as informational at `κ = 0`), and the
/// equivalence of the bound with `Y3 − |O1| > 5κ`.
pub fn verify_ord3(k: usize) -> Result<LemmaCertificate> {
    let mut rec = Recorder::new("ord3", k);
    let layout = BlockLayout::new(k, LayoutVariant::Extended4k4)?;
    let bound = 12 * (k as i64 + 1);
    let n = each_matching(&layout, |m, c| {
        let (y1, y2) = (c.y1(), c.y2());
        let kap = kappa(y1 as usize, y2 as usize);
        rec.check("kappa_reachable", kap.is_ok(), m, || format!("(Y1, Y2) = ({y1}, {y2})"));
        let Ok(kap) = kap else { return Ok(()) };
        let o = ord1(c) + kap;
        if is_diagonal(c) {
            rec.check("ord3_equal_on_diagonal", o.tenths() == bound, m, || format!("Ord3 = {o}"));
        } else {
            rec.check("ord3_strict", o.tenths() < bound, m, || format!("Ord3 = {o}"));
        }
        // Everything below in halves; 5κ in halves is κ_tenths.
        let five_kappa = kap.tenths();
        let y3 = y3_halves(c.o2, c.o3, c.o41, c.o42, c.o51, c.o52, c.o6);
        let y3_bar = y3_halves(c.bar_o2, c.bar_o3, c.bar_o41, c.bar_o42, c.bar_o51, c.bar_o52, c.bar_o6);
        let y3_prime = y3 - y3_bar;
        let o1_prime = c.o1 - c.bar_o1;
        let equiv = (y3 - 2 * c.o1 > five_kappa) == (o.tenths() < bound);
        rec.check("ord3_equivalent_form", equiv, m, || {
            format!("Y3 − |O1| = {}/2, 5κ = {}/2", y3 - 2 * c.o1, five_kappa)
        });
        let odd = c.bar_o1 + y1 > 0 && (c.bar_o1 + y1 + y2) % 2 == 1;
        rec.check("o1_prime_bound", 2 * o1_prime <= y3_prime, m, || format!("|O1'| = {o1_prime}, Y3' = {y3_prime}/2"));
        if odd {
            rec.check("o1_prime_strict_odd", 2 * o1_prime < y3_prime, m, || {
                format!("|O1'| = {o1_prime}, Y3' = {y3_prime}/2")
            });
        }
        // The bound is only needed, and only holds, where κ > 0.
        let lhs = y3_bar - 2 * c.bar_o1;
        if five_kappa == 0 {
            rec.note("bar_bound_kappa_zero", if odd { lhs >= 0 } else { lhs > 0 });
        } else if odd {
            rec.check("bar_bound_odd", lhs >= five_kappa, m, || format!("Ȳ3 − |Ō1| = {lhs}/2, 5κ = {five_kappa}/2"));
        } else {
            rec.check("bar_bound_strict", lhs > five_kappa, m, || format!("Ȳ3 − |Ō1| = {lhs}/2, 5κ = {five_kappa}/2"));
        }
        let h = crossing_counts(m, layout.blocks());
        rec.check("crossing_even", h.iter().all(|v| v % 2 == 0), m, || format!("h = {h:?}"));
        Ok(())
    })?;
    rec.cert.matchings_checked = n;
    Ok(rec.finish())
}

/// `Ord4 ≤ 3k/2`, with equality exactly when `|D2,1| = k` and no O-regime
/// is occupied.
pub fn verify_ord4(k: usize) -> Result<LemmaCertificate> {
    let mut rec = Recorder::new("ord4", k);
    let layout = BlockLayout::new(k, LayoutVariant::Goe4k)?;
    let bound = 15 * k as i64;
    let n = each_matching(&layout, |m, c| {
        let o = ord4(c);
        rec.check("ord4_bound", o.tenths() <= bound, m, || format!("Ord4 = {o}"));
        let extremal = c.d21 == k as i64 && c.off_diagonal() == 0;
        rec.check("ord4_equality_iff", (o.tenths() == bound) == extremal, m, || format!("Ord4 = {o}"));
        if !is_diagonal(c) {
            rec.check("ord4_strict_off_diagonal", o.tenths() < bound, m, || format!("Ord4 = {o}"));
        }
        Ok(())
    })?;
    rec.cert.matchings_checked = n;
    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
// 4×4 weight lemma

/// Weights of the (1,2) block entries in `Ȳ3`, in halves.
pub const Z_HALVES: [[i64; 4]; 4] = [[0, 5, 3, 3], [5, 12, 10, 10], [3, 10, 4, 6], [3, 10, 6, 8]];

/// One `X(a1, a2, a3)` cell of the weight lemma.
#[derive(Debug, Clone, Serialize)]
pub struct ZCell {
    pub a1: usize,
    pub a2: usize,
    pub a3: usize,
    pub members: usize,
    pub kappa: String,
    pub min_weight: String,
    pub bound: String,
    /// `≥` in the odd case, `>` otherwise.
    pub relation: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZReport {
    pub lemma: String,
    pub matrices_checked: usize,
    pub cells: Vec<ZCell>,
    /// Cells outside the κ table that contain at least one matrix.
    pub unreachable_cells_occupied: Vec<(usize, usize, usize)>,
}

impl ZReport {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(|c| c.holds) && self.unreachable_cells_occupied.is_empty()
    }

    /// Minimum weight of a cell as a real number.
    pub fn min_of(&self, a1: usize, a2: usize, a3: usize) -> Option<f64> {
        self.cells.iter().find(|c| (c.a1, c.a2, c.a3) == (a1, a2, a3)).map(|c| parse_fraction(&c.min_weight))
    }
}

fn parse_fraction(s: &str) -> f64 {
    match s.split_once('/') {
        Some((a, b)) => a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

fn halves_str(h: i64) -> String {
    if h % 2 == 0 {
        format!("{}", h / 2)
    } else {
        format!("{h}/2")
    }
}

/// All 0-1 4×4 matrices with row and column sums at most 1.
pub fn substochastic_01() -> Vec<[[u8; 4]; 4]> {
    let mut out = Vec::new();
    for bits in 0u32..(1 << 16) {
        let mut x = [[0u8; 4]; 4];
        for (r, row) in x.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = ((bits >> (4 * r + c)) & 1) as u8;
            }
        }
        let rows_ok = x.iter().all(|r| r.iter().map(|&v| v as u32).sum::<u32>() <= 1);
        let cols_ok = (0..4).all(|c| (0..4).map(|r| x[r][c] as u32).sum::<u32>() <= 1);
        if rows_ok && cols_ok {
            out.push(x);
        }
    }
    out
}

/// Minimum of `Σ Z·X` over every `X(a1, a2, a3)` with `κ(a2, a3) > 0`,
/// compared with `a1 + 5κ(a2, a3)`.
pub fn verify_z_lemma() -> ZReport {
    let all = substochastic_01();
    let mut cells: std::collections::BTreeMap<(usize, usize, usize), (usize, i64)> = Default::default();
    for x in &all {
        let a1 = x[0][0] as usize;
        let a2 = (1..4).map(|i| (x[0][i] + x[i][0]) as usize).sum::<usize>();
        let a3 = (1..4).flat_map(|i| (1..4).map(move |j| (i, j))).map(|(i, j)| x[i][j] as usize).sum::<usize>();
        let w: i64 =
            (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| Z_HALVES[i][j] * x[i][j] as i64).sum();
        let e = cells.entry((a1, a2, a3)).or_insert((0, i64::MAX));
        e.0 += 1;
        e.1 = e.1.min(w);
    }
    let mut out = Vec::new();
    let mut unreachable = Vec::new();
    for (&(a1, a2, a3), &(members, min_w)) in &cells {
        let kap = match kappa(a2, a3) {
            Ok(k) => k,
            Err(_) => {
                unreachable.push((a1, a2, a3));
                continue;
            }
        };
        let five_kappa_halves = kap.tenths();
        if five_kappa_halves == 0 {
            continue;
        }
        let bound = 2 * a1 as i64 + five_kappa_halves;
        let odd = a1 + a2 > 0 && (a1 + a2 + a3) % 2 == 1;
        let holds = if odd { min_w >= bound } else { min_w > bound };
        out.push(ZCell {
            a1,
            a2,
            a3,
            members,
            kappa: kap.to_string(),
            min_weight: halves_str(min_w),
            bound: halves_str(bound),
            relation: if odd { ">=".into() } else { ">".into() },
            holds,
        });
    }
    ZReport {
        lemma: "zmatrix".into(),
        matrices_checked: all.len(),
        cells: out,
        unreachable_cells_occupied: unreachable,
    }
}

// ---------------------------------------------------------------------------
// κ oracle

/// `∫_{−1/log n}^{1/log n} (√n + min{n, 1/|x|})^a min{n, 1/|x|}^b dx`, exactly.
pub fn kappa_integral(a: usize, b: usize, n: f64) -> f64 {
    let l = 1.0 / n.ln();
    let sn = n.sqrt();
    // |x| < 1/n: integrand is constant.
    let inner = (sn + n).powi(a as i32) * n.powi(b as i32) / n;
    let mut outer = 0.0;
    let mut binom = 1.0;
    for j in 0..=a {
        let p = (j + b) as f64;
        let piece =
            if (p - 1.0).abs() < 1e-12 { (n * l).ln() } else { (l.powf(1.0 - p) - n.powf(p - 1.0)) / (1.0 - p) };
        outer += binom * sn.powi((a - j) as i32) * piece;
        binom = binom * (a - j) as f64 / (j + 1) as f64;
    }
    2.0 * (inner + outer)
}

/// Least-squares exponent of `kappa_integral` over `n_grid`, net of `a/2`.
///
/// The regression uses `log I ≈ c0 + c1 log n + c2 log log n`: κ is defined
/// up to powers of `log n`, and the plain log-log slope is biased by them at
/// these `n`.
pub fn kappa_oracle(a: usize, b: usize, n_grid: &[f64]) -> Result<f64> {
    kappa(a, b)?;
    if n_grid.len() < 3 || n_grid.iter().any(|&n| n <= std::f64::consts::E) {
        return Err(Error::InvalidArgument("kappa oracle needs at least 3 grid points above e".into()));
    }
    let rows: Vec<[f64; 3]> = n_grid.iter().map(|&n| [1.0, n.ln(), n.ln().ln()]).collect();
    let ys: Vec<f64> = n_grid.iter().map(|&n| kappa_integral(a, b, n).ln()).collect();
    let x = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let y = nalgebra::DVector::from_vec(ys);
    let svd = x.svd(true, true);
    let coef = svd.solve(&y, 1e-14).map_err(|e| Error::NoConvergence(format!("least squares: {e}")))?;
    Ok(coef[1] - a as f64 / 2.0)
}

/// `(a, b)` cells of the κ table.
pub const KAPPA_CELLS: [(usize, usize); 10] =
    [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)];

/// Default grid for the oracle.
pub const KAPPA_GRID: [f64; 4] = [1e3, 1e4, 1e5, 1e6];
