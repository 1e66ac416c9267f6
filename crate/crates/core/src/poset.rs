//! Finite posets with a fixed linear extension, and their order ideals.
//!
//! Elements are stored in τ order: the element at index `k` is the `k`-th
//! element of the linear extension, so `a <τ b` is plain integer comparison
//! and an ideal is a `u128` bitset over τ positions.

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::fmt;

use crate::error::{Error, Result};

/// Width of the [`Ideal`] bitset.
pub const MAX_ELEMENTS: usize = 128;

/// An element, identified by its position in τ.
pub type Elem = usize;

/// A subset of the ground set as a bitset over τ positions.
///
/// Downward closure is a property relative to a [`Poset`]; see
/// [`Poset::is_ideal`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Ideal(u128);

impl Ideal {
    pub const EMPTY: Ideal = Ideal(0);

    pub fn from_bits(bits: u128) -> Self {
        Ideal(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn from_elems<I: IntoIterator<Item = Elem>>(elems: I) -> Self {
        Ideal(elems.into_iter().fold(0u128, |acc, e| acc | (1u128 << e)))
    }

    pub fn contains(self, e: Elem) -> bool {
        self.0 >> e & 1 == 1
    }

    pub fn with(self, e: Elem) -> Self {
        Ideal(self.0 | (1u128 << e))
    }

    pub fn without(self, e: Elem) -> Self {
        Ideal(self.0 & !(1u128 << e))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: Ideal) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Ideal) -> Self {
        Ideal(self.0 | other.0)
    }

    pub fn difference(self, other: Ideal) -> Self {
        Ideal(self.0 & !other.0)
    }

    /// The τ-largest member.
    pub fn max_elem(self) -> Option<Elem> {
        (self.0 != 0).then(|| 127 - self.0.leading_zeros() as usize)
    }

    /// Number of members strictly τ-after `e`.
    pub fn count_above(self, e: Elem) -> usize {
        if e >= 127 {
            0
        } else {
            (self.0 >> (e + 1)).count_ones() as usize
        }
    }

    /// Members in ascending τ order.
    pub fn iter(self) -> impl Iterator<Item = Elem> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let e = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(e)
            }
        })
    }
}

impl fmt::Debug for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite poset together with the linear extension τ.
#[derive(Clone, Debug, PartialEq)]
pub struct Poset {
    ids: Vec<String>,
    index: HashMap<String, Elem>,
    covers: Vec<(Elem, Elem)>,
    pred: Vec<u128>,
    declared: Vec<Elem>,
}

impl Poset {
    /// Builds a poset from element ids in declaration order and cover pairs
    /// `(lower, upper)`. Without `tau`, the linear extension is the
    /// topological order that always picks the lexicographically smallest
    /// available id.
    pub fn new<S: AsRef<str>>(
        elements: &[S],
        covers: &[(S, S)],
        tau: Option<&[S]>,
    ) -> Result<Self> {
        let n = elements.len();
        if n > MAX_ELEMENTS {
            return Err(Error::TooManyElements(n));
        }
        let mut decl_index = HashMap::with_capacity(n);
        for (k, id) in elements.iter().enumerate() {
            if decl_index.insert(id.as_ref().to_string(), k).is_some() {
                return Err(Error::DuplicateElement(id.as_ref().to_string()));
            }
        }
        let lookup = |id: &str| {
            decl_index
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownElement(id.to_string()))
        };
        let mut up: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut decl_covers = Vec::with_capacity(covers.len());
        for (lo, hi) in covers {
            let (l, h) = (lookup(lo.as_ref())?, lookup(hi.as_ref())?);
            if l == h {
                return Err(Error::Cycle(lo.as_ref().to_string()));
            }
            up[l].insert(h);
            decl_covers.push((l, h));
        }

        // Kahn's algorithm, smallest id first; leftover vertices mean a cycle.
        let mut indeg = vec![0usize; n];
        for ups in &up {
            for &h in ups {
                indeg[h] += 1;
            }
        }
        let name = |k: usize| elements[k].as_ref();
        let mut heap: BinaryHeap<Reverse<(&str, usize)>> = (0..n)
            .filter(|&k| indeg[k] == 0)
            .map(|k| Reverse((name(k), k)))
            .collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(Reverse((_, k))) = heap.pop() {
            topo.push(k);
            for &h in &up[k] {
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    heap.push(Reverse((name(h), h)));
                }
            }
        }
        if topo.len() < n {
            let stuck = (0..n).find(|&k| indeg[k] > 0).unwrap();
            return Err(Error::Cycle(name(stuck).to_string()));
        }

        let order: Vec<usize> = match tau {
            None => topo,
            Some(t) => {
                if t.len() != n {
                    return Err(Error::BadTau(format!(
                        "tau lists {} elements, poset has {}",
                        t.len(),
                        n
                    )));
                }
                let mut seen = vec![false; n];
                let mut order = Vec::with_capacity(n);
                for id in t {
                    let k = lookup(id.as_ref())?;
                    if std::mem::replace(&mut seen[k], true) {
                        return Err(Error::BadTau(format!(
                            "`{}` listed twice",
                            id.as_ref()
                        )));
                    }
                    order.push(k);
                }
                order
            }
        };
        let mut rank = vec![0usize; n];
        for (r, &k) in order.iter().enumerate() {
            rank[k] = r;
        }
        for &(l, h) in &decl_covers {
            if rank[l] > rank[h] {
                return Err(Error::BadTau(format!(
                    "`{}` precedes `{}` in the order but not in tau",
                    name(l),
                    name(h)
                )));
            }
        }

        let ids: Vec<String> = order.iter().map(|&k| name(k).to_string()).collect();
        let covers: Vec<(Elem, Elem)> = decl_covers
            .iter()
            .map(|&(l, h)| (rank[l], rank[h]))
            .collect();
        // Transitive closure in τ order: every predecessor has a smaller rank.
        let mut pred = vec![0u128; n];
        let mut direct = vec![0u128; n];
        for &(l, h) in &covers {
            direct[h] |= 1u128 << l;
        }
        for e in 0..n {
            let mut acc = direct[e];
            for l in Ideal(direct[e]).iter() {
                acc |= pred[l];
            }
            pred[e] = acc;
        }
        let index = ids
            .iter()
            .enumerate()
            .map(|(k, id)| (id.clone(), k))
            .collect();
        let declared = (0..n).map(|k| rank[k]).collect();
        Ok(Poset {
            ids,
            index,
            covers,
            pred,
            declared,
        })
    }

    pub fn chain<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let covers: Vec<(&str, &str)> = ids
            .windows(2)
            .map(|w| (w[0].as_ref(), w[1].as_ref()))
            .collect();
        let ids: Vec<&str> = ids.iter().map(|s| s.as_ref()).collect();
        Poset::new(&ids, &covers, None)
    }

    pub fn antichain<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let ids: Vec<&str> = ids.iter().map(|s| s.as_ref()).collect();
        Poset::new(&ids, &[], None)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Element ids in τ order.
    pub fn tau(&self) -> &[String] {
        &self.ids
    }

    /// Element ids in declaration order.
    pub fn declared_ids(&self) -> impl Iterator<Item = &str> {
        self.declared.iter().map(|&e| self.ids[e].as_str())
    }

    pub fn id(&self, e: Elem) -> &str {
        &self.ids[e]
    }

    pub fn elem(&self, id: &str) -> Result<Elem> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownElement(id.to_string()))
    }

    /// Cover pairs as declared, in τ positions.
    pub fn covers(&self) -> &[(Elem, Elem)] {
        &self.covers
    }

    /// Strict predecessors `Pred(e)`.
    pub fn pred(&self, e: Elem) -> Ideal {
        Ideal(self.pred[e])
    }

    pub fn precedes(&self, a: Elem, b: Elem) -> bool {
        self.pred[b] >> a & 1 == 1
    }

    pub fn comparable(&self, a: Elem, b: Elem) -> bool {
        a == b || self.precedes(a, b) || self.precedes(b, a)
    }

    pub fn full(&self) -> Ideal {
        if self.len() == MAX_ELEMENTS {
            Ideal(u128::MAX)
        } else {
            Ideal((1u128 << self.len()) - 1)
        }
    }

    pub fn is_ideal(&self, set: Ideal) -> bool {
        set.is_subset(self.full()) && set.iter().all(|e| self.pred(e).is_subset(set))
    }

    pub fn check_ideal(&self, set: Ideal) -> Result<()> {
        if self.is_ideal(set) {
            Ok(())
        } else {
            Err(Error::NotIdeal(self.render(set)))
        }
    }

    /// Whether `a` can be added to `set`: absent, with all predecessors present.
    pub fn is_admissible(&self, set: Ideal, a: Elem) -> bool {
        a < self.len() && !set.contains(a) && self.pred(a).is_subset(set)
    }

    /// `A(I)`: elements outside `i` whose predecessors all lie in `i`,
    /// in ascending τ order.
    pub fn admissible_additions(&self, i: Ideal) -> Result<Vec<Elem>> {
        self.check_ideal(i)?;
        Ok(self.admissible_unchecked(i))
    }

    pub(crate) fn admissible_unchecked(&self, i: Ideal) -> Vec<Elem> {
        (0..self.len()).filter(|&a| self.is_admissible(i, a)).collect()
    }

    /// Parses an ideal written as ids joined by `+`, `-` for the empty set.
    pub fn parse_ideal(&self, text: &str) -> Result<Ideal> {
        let text = text.trim();
        if text == "-" || text.is_empty() {
            return Ok(Ideal::EMPTY);
        }
        let mut set = Ideal::EMPTY;
        for id in text.split('+') {
            set = set.with(self.elem(id.trim())?);
        }
        self.check_ideal(set)?;
        Ok(set)
    }

    /// Renders a set as lexicographically sorted ids joined by `+`
    /// (`-` when empty). Inverse of [`Poset::parse_ideal`].
    pub fn render(&self, set: Ideal) -> String {
        if set.is_empty() {
            return "-".to_string();
        }
        let mut names: Vec<&str> = set.iter().map(|e| self.id(e)).collect();
        names.sort_unstable();
        names.join("+")
    }
}

fn valid_id(id: &str) -> bool {
    id != "-"
        && !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

/// Parses the line-oriented poset format:
///
/// ```text
/// # comment
/// elem a
/// elem b
/// cover a b
/// tau a b
/// ```
pub fn parse_poset(text: &str) -> Result<Poset> {
    let mut elements: Vec<String> = Vec::new();
    let mut covers: Vec<(String, String)> = Vec::new();
    let mut tau: Option<Vec<String>> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap();
        let args: Vec<&str> = words.collect();
        let bad = |msg: String| Error::Parse { line: line_no, msg };
        for a in &args {
            if !valid_id(a) {
                return Err(bad(format!("invalid element id `{a}`")));
            }
        }
        match keyword {
            "elem" => {
                if args.len() != 1 {
                    return Err(bad("`elem` takes exactly one id".into()));
                }
                elements.push(args[0].to_string());
            }
            "cover" => {
                if args.len() != 2 {
                    return Err(bad("`cover` takes exactly two ids".into()));
                }
                covers.push((args[0].to_string(), args[1].to_string()));
            }
            "tau" => {
                if tau.is_some() {
                    return Err(bad("`tau` given twice".into()));
                }
                tau = Some(args.iter().map(|s| s.to_string()).collect());
            }
            other => return Err(bad(format!("unknown directive `{other}`"))),
        }
    }
    Poset::new(&elements, &covers, tau.as_deref())
}

/// Writes a poset in the format read by [`parse_poset`], with an explicit
/// `tau` line.
pub fn write_poset(p: &Poset) -> String {
    let mut out = String::new();
    for id in p.declared_ids() {
        out.push_str(&format!("elem {id}\n"));
    }
    for &(l, h) in p.covers() {
        out.push_str(&format!("cover {} {}\n", p.id(l), p.id(h)));
    }
    out.push_str("tau");
    for id in p.tau() {
        out.push(' ');
        out.push_str(id);
    }
    out.push('\n');
    out
}
