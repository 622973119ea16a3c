//! Group words: a small DSL, free reduction, and compiled evaluators for the
//! induced map `w: K^m → K`, its differential, and a primitive `ζ_w` of `w*λ`.
//!
//! `ζ_w` is built by recursion over the left-fold of the reduced word:
//! letters contribute nothing, inverses negate, and a product `uv` adds the
//! cocycle `ρ(u, v)` of the multiplication map, so that `m*λ = pr₁*λ + pr₂*λ + dρ`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::forms::{check_form_args, Form, GroupMap, GroupTuple, TangentAtTuple, TangentTuple};
use crate::lie::{AlgebraElement, Group, GroupElement};

/// One letter `x_index^exponent`, with 1-based `index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Letter {
    pub index: usize,
    pub exponent: i8,
}

impl Letter {
    fn inverse(self) -> Letter {
        Letter { index: self.index, exponent: -self.exponent }
    }
}

/// A freely reduced word in `m` letters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    letters: Vec<Letter>,
    arity: usize,
}

impl Word {
    /// The empty word in `arity` letters.
    pub fn identity(arity: usize) -> Self {
        Word { letters: Vec::new(), arity }
    }

    /// Builds a word from letters, freely reducing it.
    pub fn new(letters: Vec<Letter>, arity: usize) -> Result<Self> {
        for l in &letters {
            if l.index == 0 || l.index > arity {
                return Err(Error::ArityMismatch { expected: arity, got: l.index });
            }
            if l.exponent.abs() != 1 {
                return Err(Error::InvalidSpec(format!("letter exponent {} is not ±1", l.exponent)));
            }
        }
        Ok(Word { letters: free_reduce(letters), arity })
    }

    /// `∏_{j=1}^{genus} [a_j, b_j]`.
    pub fn surface_relator(genus: usize) -> Self {
        let mut letters = Vec::with_capacity(4 * genus);
        for j in 0..genus {
            let a = 2 * j + 1;
            let b = 2 * j + 2;
            letters.push(Letter { index: a, exponent: 1 });
            letters.push(Letter { index: b, exponent: 1 });
            letters.push(Letter { index: a, exponent: -1 });
            letters.push(Letter { index: b, exponent: -1 });
        }
        Word { letters, arity: 2 * genus }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Signed exponent sum of each letter.
    pub fn degree_vector(&self) -> Vec<i64> {
        let mut d = vec![0; self.arity];
        for l in &self.letters {
            d[l.index - 1] += l.exponent as i64;
        }
        d
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| l.inverse()).collect(), arity: self.arity }
    }

    /// Concatenation, freely reduced.
    pub fn concat(&self, other: &Word) -> Word {
        let arity = self.arity.max(other.arity);
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { letters: free_reduce(letters), arity }
    }

    /// Same word viewed in at least `arity` letters.
    pub fn with_arity(mut self, arity: usize) -> Word {
        self.arity = self.arity.max(arity);
        self
    }

    /// Product of the letters' values.
    pub fn eval(&self, group: &Group, p: &GroupTuple) -> Result<GroupElement> {
        if p.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: p.len() });
        }
        let mut acc = group.identity();
        for l in &self.letters {
            let x = &p.0[l.index - 1];
            acc = if l.exponent > 0 { &acc * x } else { &acc * &x.inverse() };
        }
        Ok(acc)
    }

    /// Compiled plan as a JSON tree of `{op, children}` nodes (left fold).
    pub fn plan(&self) -> Value {
        let leaf = |l: &Letter| {
            let letter = json!({"op": "letter", "index": l.index});
            if l.exponent > 0 {
                letter
            } else {
                json!({"op": "inverse", "children": [letter]})
            }
        };
        let mut it = self.letters.iter();
        let Some(first) = it.next() else {
            return json!({"op": "identity"});
        };
        it.fold(leaf(first), |acc, l| json!({"op": "product", "children": [acc, leaf(l)]}))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let names: Vec<String> = self
            .letters
            .iter()
            .map(|l| {
                let base = letter_name(l.index);
                if l.exponent > 0 {
                    base
                } else {
                    format!("{base}^-1")
                }
            })
            .collect();
        write!(f, "{}", names.join(" "))
    }
}

fn letter_name(index: usize) -> String {
    let j = index.div_ceil(2);
    if index % 2 == 1 {
        format!("a{j}")
    } else {
        format!("b{j}")
    }
}

fn free_reduce(letters: Vec<Letter>) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for l in letters {
        match out.last() {
            Some(&top) if top == l.inverse() => {
                out.pop();
            }
            _ => out.push(l),
        }
    }
    out
}

/// Parses the word DSL:
///
/// ```text
/// word := term+
/// term := IDENT | IDENT "^-1" | "[" word "," word "]"
/// ```
///
/// `a_j` and `b_j` are letters `2j−1` and `2j`; `x_k` is letter `k`. The
/// commutator `[u, v]` expands to `u v u⁻¹ v⁻¹`. The arity is the smallest
/// one covering every letter, rounded up to whole `(a_j, b_j)` pairs when
/// those names are used. `1` is the empty word.
pub fn parse_word(src: &str) -> Result<Word> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, arity: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(Error::Parse { pos: 0, msg: "empty word".into() });
    }
    if src.trim() == "1" {
        return Ok(Word::identity(0));
    }
    let letters = p.word()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(Error::Parse { pos: p.pos, msg: format!("unexpected `{}`", p.src[p.pos] as char) });
    }
    Word::new(letters, p.arity)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    arity: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn word(&mut self) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c == b'[' || c.is_ascii_alphabetic() => out.extend(self.term()?),
                _ => break,
            }
        }
        if out.is_empty() && !self.at_end() {
            return Err(Error::Parse {
                pos: self.pos,
                msg: format!("expected a letter or `[`, found `{}`", self.src[self.pos] as char),
            });
        }
        if out.is_empty() {
            return Err(Error::Parse { pos: self.pos, msg: "expected a letter or `[`".into() });
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<Vec<Letter>> {
        let mut letters = if self.peek() == Some(b'[') {
            self.pos += 1;
            let u = self.word()?;
            self.skip_ws();
            self.expect(b',')?;
            let v = self.word()?;
            self.skip_ws();
            self.expect(b']')?;
            let inv = |w: &[Letter]| w.iter().rev().map(|l| l.inverse()).collect::<Vec<_>>();
            let mut out = u.clone();
            out.extend_from_slice(&v);
            out.extend(inv(&u));
            out.extend(inv(&v));
            out
        } else {
            vec![self.ident()?]
        };
        if self.src[self.pos..].starts_with(b"^-1") {
            self.pos += 3;
            letters = letters.iter().rev().map(|l| l.inverse()).collect();
        } else if self.peek() == Some(b'^') {
            return Err(Error::Parse { pos: self.pos, msg: "only `^-1` exponents are supported".into() });
        }
        Ok(letters)
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |b| format!("`{}`", b as char));
            Err(Error::Parse { pos: self.pos, msg: format!("expected `{}`, found {found}", c as char) })
        }
    }

    fn ident(&mut self) -> Result<Letter> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let ident = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let unknown = || Error::UnknownIdentifier { pos: start, ident: ident.to_string() };
        let (head, digits) = ident.split_at(1);
        let j: usize = match digits.parse() {
            Ok(j) if j >= 1 && !digits.starts_with('0') => j,
            _ => return Err(unknown()),
        };
        let (index, arity) = match head {
            "a" => (2 * j - 1, 2 * j),
            "b" => (2 * j, 2 * j),
            "x" => (j, j),
            _ => return Err(unknown()),
        };
        self.arity = self.arity.max(arity);
        Ok(Letter { index, exponent: 1 })
    }
}

/// A candidate for the product cocycle `ρ(u, v)`, evaluated on the prefix
/// value `g_u`, the letter value `g_v` and their left-trivialized
/// differentials along two tangents.
pub trait Cocycle: Send + Sync {
    fn name(&self) -> &'static str;
    fn eval(
        &self,
        group: &Group,
        gu: &GroupElement,
        lu: [&AlgebraElement; 2],
        gv: &GroupElement,
        lv: [&AlgebraElement; 2],
    ) -> Result<f64>;
}

/// `s·½(⟨u⁻¹du₁, dv₂ v⁻¹⟩ − ⟨u⁻¹du₂, dv₁ v⁻¹⟩)`.
struct LeftRight(f64, &'static str);

/// `s·½(⟨du₁ u⁻¹, v⁻¹dv₂⟩ − ⟨du₂ u⁻¹, v⁻¹dv₁⟩)`.
struct RightLeft(f64, &'static str);

impl Cocycle for LeftRight {
    fn name(&self) -> &'static str {
        self.1
    }
    fn eval(
        &self,
        group: &Group,
        _gu: &GroupElement,
        lu: [&AlgebraElement; 2],
        gv: &GroupElement,
        lv: [&AlgebraElement; 2],
    ) -> Result<f64> {
        let r2 = group.adjoint(gv, lv[1])?;
        let r1 = group.adjoint(gv, lv[0])?;
        Ok(self.0 * 0.5 * (group.inner(lu[0], &r2)? - group.inner(lu[1], &r1)?))
    }
}

impl Cocycle for RightLeft {
    fn name(&self) -> &'static str {
        self.1
    }
    fn eval(
        &self,
        group: &Group,
        gu: &GroupElement,
        lu: [&AlgebraElement; 2],
        _gv: &GroupElement,
        lv: [&AlgebraElement; 2],
    ) -> Result<f64> {
        let r1 = group.adjoint(gu, lu[0])?;
        let r2 = group.adjoint(gu, lu[1])?;
        Ok(self.0 * 0.5 * (group.inner(&r1, lv[1])? - group.inner(&r2, lv[0])?))
    }
}

/// Name of the cocycle convention selected by calibration: the only one of
/// the four candidates for which `dζ − w*λ` converges to zero on `[a1, b1]`.
pub const CALIBRATED_COCYCLE: &str = "lr-";

fn cocycle_registry() -> &'static BTreeMap<&'static str, Arc<dyn Cocycle>> {
    static REGISTRY: OnceLock<BTreeMap<&'static str, Arc<dyn Cocycle>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let all: [Arc<dyn Cocycle>; 4] = [
            Arc::new(LeftRight(1.0, "lr+")),
            Arc::new(LeftRight(-1.0, "lr-")),
            Arc::new(RightLeft(1.0, "rl+")),
            Arc::new(RightLeft(-1.0, "rl-")),
        ];
        all.into_iter().map(|c| (c.name(), c)).collect()
    })
}

/// Registered cocycle conventions, by name.
pub fn cocycle_names() -> Vec<&'static str> {
    cocycle_registry().keys().copied().collect()
}

pub fn cocycle_by_name(name: &str) -> Result<Arc<dyn Cocycle>> {
    cocycle_registry()
        .get(name)
        .cloned()
        .ok_or_else(|| Error::Config(format!("unknown cocycle `{name}`; known: {:?}", cocycle_names())))
}

/// A compiled word: the map `w`, its differential, and the 2-form `ζ_w`.
#[derive(Clone)]
pub struct WordForm {
    group: Group,
    word: Word,
    cocycle: Arc<dyn Cocycle>,
}

impl fmt::Debug for WordForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WordForm")
            .field("word", &self.word.to_string())
            .field("cocycle", &self.cocycle.name())
            .finish()
    }
}

impl WordForm {
    pub fn new(group: Group, word: Word) -> Self {
        let cocycle = cocycle_by_name(CALIBRATED_COCYCLE).expect("calibrated cocycle is registered");
        WordForm { group, word, cocycle }
    }

    pub fn with_cocycle(group: Group, word: Word, cocycle: Arc<dyn Cocycle>) -> Self {
        WordForm { group, word, cocycle }
    }

    pub fn parse(group: Group, src: &str) -> Result<Self> {
        Ok(WordForm::new(group, parse_word(src)?))
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn cocycle_name(&self) -> &'static str {
        self.cocycle.name()
    }

    pub fn degree_vector(&self) -> Vec<i64> {
        self.word.degree_vector()
    }

    /// The same word and cocycle over the group with a new metric scale.
    pub fn rescaled(&self, metric_scale: f64) -> Result<WordForm> {
        Ok(WordForm { group: self.group.rescaled(metric_scale)?, word: self.word.clone(), cocycle: self.cocycle.clone() })
    }

    /// Evaluates `w(p)`, the differentials along `tangents`, and (for exactly
    /// two tangents) `ζ_w`.
    fn fold(&self, p: &GroupTuple, tangents: &[&TangentTuple]) -> Result<(GroupElement, Vec<AlgebraElement>, f64)> {
        let g = &self.group;
        let m = self.word.arity;
        if p.len() != m {
            return Err(Error::ArityMismatch { expected: m, got: p.len() });
        }
        for t in tangents {
            if t.len() != m {
                return Err(Error::ArityMismatch { expected: m, got: t.len() });
            }
        }
        let mut gu = g.identity();
        let mut lu: Vec<AlgebraElement> = vec![g.zero(); tangents.len()];
        let mut zeta = 0.0;
        for (k, letter) in self.word.letters.iter().enumerate() {
            let x = &p.0[letter.index - 1];
            let (gv, lv): (GroupElement, Vec<AlgebraElement>) = if letter.exponent > 0 {
                (x.clone(), tangents.iter().map(|t| t.0[letter.index - 1].clone()).collect())
            } else {
                let lv = tangents
                    .iter()
                    .map(|t| Ok(-&g.adjoint(x, &t.0[letter.index - 1])?))
                    .collect::<Result<Vec<_>>>()?;
                (x.inverse(), lv)
            };
            if k > 0 && tangents.len() == 2 {
                zeta += self.cocycle.eval(g, &gu, [&lu[0], &lu[1]], &gv, [&lv[0], &lv[1]])?;
            }
            for (a, b) in lu.iter_mut().zip(&lv) {
                *a = &g.adjoint_inv(&gv, a)? + b;
            }
            gu = &gu * &gv;
        }
        Ok((gu, lu, zeta))
    }

    /// `ζ_w` on two tangents at a common base point.
    pub fn zeta_eval(&self, t1: &TangentAtTuple, t2: &TangentAtTuple) -> Result<f64> {
        if t1.base != t2.base {
            return Err(Error::BaseMismatch("tangents of ζ_w are based at different points".into()));
        }
        self.eval(&t1.base, &[&t1.components, &t2.components])
    }
}

impl GroupMap for WordForm {
    fn group(&self) -> &Group {
        &self.group
    }

    fn arity(&self) -> usize {
        self.word.arity
    }

    fn apply(&self, p: &GroupTuple) -> Result<GroupElement> {
        self.word.eval(&self.group, p)
    }

    fn differential(&self, p: &GroupTuple, v: &TangentTuple) -> Result<AlgebraElement> {
        let (_, mut l, _) = self.fold(p, &[v])?;
        Ok(l.pop().expect("one tangent"))
    }
}

impl Form for WordForm {
    fn degree(&self) -> usize {
        2
    }

    fn arity(&self) -> usize {
        self.word.arity
    }

    fn eval(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(2, self.word.arity, p, v)?;
        Ok(self.fold(p, v)?.2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{exterior_derivative, PulledCartan};
    use crate::lie::GroupSpec;
    use crate::rng::stream;

    #[test]
    fn parse_single_letter() {
        let w = parse_word("a1").unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.degree_vector(), vec![1, 0]);
    }

    #[test]
    fn parse_commutator_sugar() {
        let w = parse_word("[a1,b1]").unwrap();
        assert_eq!(w.to_string(), "a1 b1 a1^-1 b1^-1");
        assert_eq!(w.degree_vector(), vec![0, 0]);
    }

    #[test]
    fn parse_genus_two_relator() {
        let w = parse_word("[a1,b1][a2,b2]").unwrap();
        assert_eq!(w.len(), 8);
        assert_eq!(w.degree_vector(), vec![0, 0, 0, 0]);
        assert_eq!(w, Word::surface_relator(2));
    }

    #[test]
    fn parse_reduces_and_handles_nesting() {
        let w = parse_word("a1 a1^-1 b1").unwrap();
        assert_eq!(w.to_string(), "b1");
        let w = parse_word("[a1, b1]^-1").unwrap();
        assert_eq!(w.to_string(), "b1 a1 b1^-1 a1^-1");
        let w = parse_word("[[a1,b1],a2]").unwrap();
        assert_eq!(w.len(), 10);
        assert_eq!(w.arity(), 4);
        let w = parse_word("x3 x1^-1").unwrap();
        assert_eq!(w.arity(), 3);
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert!(matches!(parse_word(""), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(parse_word("[a1 b1]"), Err(Error::Parse { pos: 6, .. })));
        assert!(matches!(parse_word("a1 c2"), Err(Error::UnknownIdentifier { pos: 3, .. })));
        assert!(matches!(parse_word("a0"), Err(Error::UnknownIdentifier { pos: 0, .. })));
        assert!(matches!(parse_word("a1^2"), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(parse_word("a1 )"), Err(Error::Parse { pos: 3, .. })));
    }

    #[test]
    fn plan_dump_is_a_left_fold() {
        let w = parse_word("a1 b1^-1").unwrap();
        let plan = w.plan();
        assert_eq!(plan["op"], "product");
        assert_eq!(plan["children"][0]["op"], "letter");
        assert_eq!(plan["children"][1]["op"], "inverse");
        assert_eq!(Word::identity(2).plan()["op"], "identity");
    }

    #[test]
    fn eval_relator_trivial_cases() {
        let g = Group::su2();
        let r = Word::surface_relator(2);
        let e = GroupTuple::identity(&g, 4);
        assert!(g.dist(&r.eval(&g, &e).unwrap(), &g.identity()) == 0.0);
        let e3 = g.basis()[2].clone();
        let p = GroupTuple(vec![
            g.exp(&e3.scale(0.3)).unwrap(),
            g.exp(&e3.scale(1.1)).unwrap(),
            g.exp(&e3.scale(-0.7)).unwrap(),
            g.exp(&e3.scale(2.0)).unwrap(),
        ]);
        assert!(g.dist(&r.eval(&g, &p).unwrap(), &g.identity()) < 1e-14);
    }

    #[test]
    fn eval_commutator_matches_direct_product() {
        let g = Group::su2();
        let w = parse_word("[a1,b1]").unwrap();
        let mut rng = stream(30, 0);
        for _ in 0..20 {
            let p = GroupTuple::random(&g, &mut rng, 2, 1.0);
            let a = p.0[0].matrix();
            let b = p.0[1].matrix();
            let direct = a * b * a.adjoint() * b.adjoint();
            assert!((w.eval(&g, &p).unwrap().matrix() - direct).norm() < 1e-14);
        }
        let short = GroupTuple::identity(&g, 1);
        assert!(matches!(w.eval(&g, &short), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn differential_trivial_cases() {
        let g = Group::su2();
        let mut rng = stream(31, 0);
        let p = GroupTuple::random(&g, &mut rng, 2, 1.0);
        let v = TangentTuple::random(&g, &mut rng, 2, 1.0);
        let a1 = WordForm::parse(g.clone(), "a1").unwrap();
        assert_eq!(a1.differential(&p, &v).unwrap(), v.0[0]);
        let r = WordForm::parse(g.clone(), "[a1,b1]").unwrap();
        assert!(r.differential(&p, &TangentTuple::zero(&g, 2)).unwrap().norm() == 0.0);
    }

    fn fd_differential(g: &Group, wf: &WordForm, p: &GroupTuple, v: &TangentTuple, h: f64) -> f64 {
        // Left-trivialized derivative: w(p)⁻¹ · (w(p e^{hv}) − w(p e^{−hv})) / 2h.
        let base = wf.apply(p).unwrap();
        let plus = wf.apply(&p.step(g, v, h).unwrap()).unwrap();
        let minus = wf.apply(&p.step(g, v, -h).unwrap()).unwrap();
        let fd = base.matrix().adjoint() * (plus.matrix() - minus.matrix()) / num_complex::Complex64::new(2.0 * h, 0.0);
        (wf.differential(p, v).unwrap().matrix() - fd).norm()
    }

    #[test]
    fn differential_matches_finite_differences_at_second_order() {
        let g = Group::su2();
        let wf = WordForm::new(g.clone(), Word::surface_relator(2));
        let mut rng = stream(32, 0);
        for _ in 0..5 {
            let p = GroupTuple::random(&g, &mut rng, 4, 1.0);
            let v = TangentTuple::random(&g, &mut rng, 4, 1.0);
            let e1 = fd_differential(&g, &wf, &p, &v, 1e-3);
            let e2 = fd_differential(&g, &wf, &p, &v, 5e-4);
            let order = (e1 / e2).log2();
            assert!(order >= 1.9, "order {order} ({e1:e}, {e2:e})");
        }
    }

    fn closedness_residual(g: &Group, wf: &WordForm, p: &GroupTuple, v: &[TangentTuple], h: f64) -> f64 {
        let refs: Vec<&TangentTuple> = v.iter().collect();
        let dz = exterior_derivative(g, |q, t| wf.eval(q, t), p, &refs, h).unwrap();
        let pulled = PulledCartan { map: wf };
        (dz - pulled.eval(p, &refs).unwrap()).abs()
    }

    /// The calibration run: exactly one registered convention makes `ζ` a
    /// primitive of `w*λ` on the genus-1 relator.
    #[test]
    fn cocycle_calibration_selects_unique_convention() {
        let g = Group::su2();
        let word = parse_word("a1 b1 a1^-1 b1^-1").unwrap();
        let mut converging = Vec::new();
        for name in cocycle_names() {
            let wf = WordForm::with_cocycle(g.clone(), word.clone(), cocycle_by_name(name).unwrap());
            let mut rng = stream(33, 0);
            let mut ok = true;
            for _ in 0..10 {
                let p = GroupTuple::random(&g, &mut rng, 2, 1.0);
                let v: Vec<TangentTuple> = (0..3).map(|_| TangentTuple::random(&g, &mut rng, 2, 1.0)).collect();
                let coarse = closedness_residual(&g, &wf, &p, &v, 1e-2);
                let fine = closedness_residual(&g, &wf, &p, &v, 2.5e-3);
                ok &= fine < 1e-5 && fine < coarse / 4.0;
            }
            if ok {
                converging.push(name);
            }
        }
        assert_eq!(converging, vec![CALIBRATED_COCYCLE]);
    }

    #[test]
    fn zeta_trivial_cases() {
        let g = Group::su2();
        let mut rng = stream(34, 0);
        let p = GroupTuple::random(&g, &mut rng, 2, 1.0);
        let v = TangentTuple::random(&g, &mut rng, 2, 1.0);
        let w = TangentTuple::random(&g, &mut rng, 2, 1.0);
        let r = WordForm::new(g.clone(), Word::surface_relator(1));
        assert_eq!(r.eval(&p, &[&v, &v]).unwrap(), 0.0);
        let a = r.eval(&p, &[&v, &w]).unwrap();
        let b = r.eval(&p, &[&w, &v]).unwrap();
        assert!((a + b).abs() < 1e-15);
        let letter = WordForm::parse(g.clone(), "b1").unwrap();
        assert_eq!(letter.eval(&p, &[&v, &w]).unwrap(), 0.0);
        let t1 = TangentAtTuple::new(p.clone(), v.clone()).unwrap();
        let t2 = TangentAtTuple::new(GroupTuple::identity(&g, 2), w.clone()).unwrap();
        assert!(matches!(r.zeta_eval(&t1, &t2), Err(Error::BaseMismatch(_))));
    }

    #[test]
    fn zeta_is_conjugation_invariant() {
        let g = Group::su2();
        let r = WordForm::new(g.clone(), Word::surface_relator(2));
        let mut rng = stream(35, 0);
        for _ in 0..20 {
            let p = GroupTuple::random(&g, &mut rng, 4, 1.0);
            let v = TangentTuple::random(&g, &mut rng, 4, 1.0);
            let w = TangentTuple::random(&g, &mut rng, 4, 1.0);
            let h = g.random_element(&mut rng, 2.0);
            let a = r.eval(&p, &[&v, &w]).unwrap();
            let b = r
                .eval(&p.conjugate(&h), &[&v.adjoint(&g, &h).unwrap(), &w.adjoint(&g, &h).unwrap()])
                .unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn genus_two_relator_zeta_is_primitive_in_su3() {
        let g = Group::new(GroupSpec::su(3)).unwrap();
        let wf = WordForm::new(g.clone(), Word::surface_relator(2));
        let mut rng = stream(36, 0);
        let p = GroupTuple::random(&g, &mut rng, 4, 1.0);
        let v: Vec<TangentTuple> = (0..3).map(|_| TangentTuple::random(&g, &mut rng, 4, 1.0)).collect();
        let r1 = closedness_residual(&g, &wf, &p, &v, 4e-3);
        let r2 = closedness_residual(&g, &wf, &p, &v, 2e-3);
        assert!(r2 < r1 / 3.0 && r2 < 1e-5, "{r1:e} {r2:e}");
    }
}
