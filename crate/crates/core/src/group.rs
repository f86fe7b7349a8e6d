//! Group arithmetic for the supported amenable groups.
//!
//! Three presentations are available: the lattice `Z^d`, the discrete
//! Heisenberg group (integer upper unitriangular 3x3 matrices, written as
//! triples) and finite abelian products `Z/m_1 x ... x Z/m_k`. The finite
//! groups are not amenable-infinite in the usual sense; they are kept because
//! every quantity over them is finitely computable and gives exact oracles.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{input, Error, Result};

pub type Coords = SmallVec<[i64; 4]>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement(pub Coords);

impl GroupElement {
    pub fn new(coords: &[i64]) -> Self {
        GroupElement(Coords::from_slice(coords))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Lattice { dim: usize },
    Heisenberg3,
    FiniteAbelian { moduli: Vec<u64> },
}

impl GroupSpec {
    pub fn lattice(dim: usize) -> Self {
        GroupSpec::Lattice { dim }
    }

    pub fn finite_abelian(moduli: &[u64]) -> Self {
        GroupSpec::FiniteAbelian {
            moduli: moduli.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::Lattice { dim } if *dim == 0 => input("lattice dimension must be at least 1"),
            GroupSpec::FiniteAbelian { moduli } if moduli.is_empty() => {
                input("finite abelian group needs at least one modulus")
            }
            GroupSpec::FiniteAbelian { moduli } if moduli.iter().any(|&m| m == 0) => {
                input("finite abelian moduli must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Length of the coordinate vector of an element.
    pub fn rank(&self) -> usize {
        match self {
            GroupSpec::Lattice { dim } => *dim,
            GroupSpec::Heisenberg3 => 3,
            GroupSpec::FiniteAbelian { moduli } => moduli.len(),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, GroupSpec::FiniteAbelian { .. })
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self, GroupSpec::Heisenberg3)
    }

    /// Order of the group, `None` for infinite groups.
    pub fn order(&self) -> Option<u64> {
        match self {
            GroupSpec::FiniteAbelian { moduli } => Some(moduli.iter().product()),
            _ => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(smallvec::smallvec![0; self.rank()])
    }

    /// Builds an element, reducing residues for finite groups.
    pub fn element(&self, coords: &[i64]) -> Result<GroupElement> {
        if coords.len() != self.rank() {
            return input(format!(
                "element has {} coordinates, group expects {}",
                coords.len(),
                self.rank()
            ));
        }
        let mut g = GroupElement::new(coords);
        if let GroupSpec::FiniteAbelian { moduli } = self {
            for (c, &m) in g.0.iter_mut().zip(moduli) {
                *c = c.rem_euclid(m as i64);
            }
        }
        Ok(g)
    }

    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if g.len() != self.rank() {
            return input(format!(
                "element {g} has {} coordinates, group expects {}",
                g.len(),
                self.rank()
            ));
        }
        if let GroupSpec::FiniteAbelian { moduli } = self {
            for (&c, &m) in g.0.iter().zip(moduli) {
                if c < 0 || c >= m as i64 {
                    return input(format!("residue {c} of {g} not reduced modulo {m}"));
                }
            }
        }
        Ok(())
    }

    pub fn multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul(g, h))
    }

    /// Unchecked product; callers guarantee membership.
    #[inline]
    pub(crate) fn mul(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match self {
            GroupSpec::Lattice { .. } => {
                GroupElement(g.0.iter().zip(&h.0).map(|(a, b)| a + b).collect())
            }
            GroupSpec::Heisenberg3 => {
                let (a, b, c) = (g.0[0], g.0[1], g.0[2]);
                let (a2, b2, c2) = (h.0[0], h.0[1], h.0[2]);
                GroupElement(smallvec::smallvec![a + a2, b + b2, c + c2 + a * b2])
            }
            GroupSpec::FiniteAbelian { moduli } => GroupElement(
                g.0.iter()
                    .zip(&h.0)
                    .zip(moduli)
                    .map(|((a, b), &m)| (a + b).rem_euclid(m as i64))
                    .collect(),
            ),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(self.inv(g))
    }

    #[inline]
    pub(crate) fn inv(&self, g: &GroupElement) -> GroupElement {
        match self {
            GroupSpec::Lattice { .. } => GroupElement(g.0.iter().map(|a| -a).collect()),
            GroupSpec::Heisenberg3 => {
                let (a, b, c) = (g.0[0], g.0[1], g.0[2]);
                GroupElement(smallvec::smallvec![-a, -b, -c + a * b])
            }
            GroupSpec::FiniteAbelian { moduli } => GroupElement(
                g.0.iter()
                    .zip(moduli)
                    .map(|(a, &m)| (-a).rem_euclid(m as i64))
                    .collect(),
            ),
        }
    }

    /// Symmetric generating set: `+-e_i` for lattices, `x^{+-1}, y^{+-1}`
    /// for the Heisenberg group, `e_i` and its inverse for finite groups
    /// (deduplicated).
    pub fn standard_generators(&self) -> Vec<GroupElement> {
        let mut out = Vec::new();
        match self {
            GroupSpec::Heisenberg3 => {
                for c in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]] {
                    out.push(GroupElement::new(&c));
                }
            }
            _ => {
                let r = self.rank();
                for i in 0..r {
                    for s in [1i64, -1] {
                        let mut c = vec![0i64; r];
                        c[i] = s;
                        // element() only fails on rank mismatch
                        let g = self.element(&c).expect("rank matches");
                        if g != self.identity() && !out.contains(&g) {
                            out.push(g);
                        }
                    }
                }
            }
        }
        out
    }

    /// All elements of a finite group in lexicographic order.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        let GroupSpec::FiniteAbelian { moduli } = self else {
            return Err(Error::Unsupported(
                "cannot enumerate an infinite group".into(),
            ));
        };
        let ranges: Vec<i64> = moduli.iter().map(|&m| m as i64).collect();
        Ok(box_elements(&ranges))
    }

    /// Breadth-first word ball of the given radius. Elements are returned in
    /// BFS discovery order together with their word length.
    pub fn word_ball(
        &self,
        generators: &[GroupElement],
        radius: usize,
        budget: usize,
    ) -> Result<Vec<(GroupElement, usize)>> {
        for g in generators {
            self.check(g)?;
        }
        let e = self.identity();
        let mut seen: HashSet<GroupElement> = HashSet::new();
        let mut out = vec![(e.clone(), 0)];
        seen.insert(e.clone());
        let mut queue = VecDeque::from([(e, 0usize)]);
        while let Some((g, len)) = queue.pop_front() {
            if len == radius {
                continue;
            }
            for s in generators {
                let h = self.mul(&g, s);
                if seen.insert(h.clone()) {
                    if out.len() >= budget {
                        return Err(Error::Budget {
                            what: format!("word ball of radius {radius}"),
                            budget: budget as u64,
                        });
                    }
                    out.push((h.clone(), len + 1));
                    queue.push_back((h, len + 1));
                }
            }
        }
        Ok(out)
    }
}

/// Lexicographic enumeration of the box `[0, sides[0]) x ... x [0, sides[k-1])`.
pub(crate) fn box_elements(sides: &[i64]) -> Vec<GroupElement> {
    if sides.iter().any(|&s| s <= 0) {
        return Vec::new();
    }
    let total: i64 = sides.iter().product();
    let mut out = Vec::with_capacity(total as usize);
    let mut cur: Coords = smallvec::smallvec![0; sides.len()];
    loop {
        out.push(GroupElement(cur.clone()));
        let mut i = sides.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < sides[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn heis_matrix(g: &GroupElement) -> [[i64; 3]; 3] {
        [[1, g.0[0], g.0[2]], [0, 1, g.0[1]], [0, 0, 1]]
    }

    fn matmul(a: [[i64; 3]; 3], b: [[i64; 3]; 3]) -> [[i64; 3]; 3] {
        let mut c = [[0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    }

    #[test]
    fn lattice_product_is_componentwise() {
        let z2 = GroupSpec::lattice(2);
        let g = z2.element(&[1, 2]).unwrap();
        let h = z2.element(&[3, -1]).unwrap();
        assert_eq!(z2.multiply(&g, &h).unwrap(), GroupElement::new(&[4, 1]));
    }

    #[test]
    fn heisenberg_product_matches_matrix_oracle() {
        let h3 = GroupSpec::Heisenberg3;
        let x = GroupElement::new(&[1, 0, 0]);
        let y = GroupElement::new(&[0, 1, 0]);
        let xy = h3.multiply(&x, &y).unwrap();
        assert_eq!(xy, GroupElement::new(&[1, 1, 1]));
        assert_eq!(matmul(heis_matrix(&x), heis_matrix(&y)), heis_matrix(&xy));

        let mut rng = crate::rng::rng(1, 0);
        for _ in 0..1000 {
            let g = GroupElement::new(&[rng.gen_range(-50..50), rng.gen_range(-50..50), rng.gen_range(-50..50)]);
            let h = GroupElement::new(&[rng.gen_range(-50..50), rng.gen_range(-50..50), rng.gen_range(-50..50)]);
            let p = h3.mul(&g, &h);
            assert_eq!(matmul(heis_matrix(&g), heis_matrix(&h)), heis_matrix(&p));
        }
    }

    #[test]
    fn identity_is_neutral_on_random_elements() {
        let mut rng = crate::rng::rng(2, 0);
        for spec in [
            GroupSpec::lattice(3),
            GroupSpec::Heisenberg3,
            GroupSpec::finite_abelian(&[4, 6]),
        ] {
            let e = spec.identity();
            for _ in 0..100 {
                let c: Vec<i64> = (0..spec.rank()).map(|_| rng.gen_range(-100..100)).collect();
                let g = spec.element(&c).unwrap();
                assert_eq!(spec.multiply(&e, &g).unwrap(), g);
                assert_eq!(spec.multiply(&g, &e).unwrap(), g);
            }
        }
    }

    #[test]
    fn finite_axioms_hold_exhaustively() {
        for moduli in [vec![8], vec![2, 3], vec![4, 4], vec![2, 2, 2, 2], vec![1, 5]] {
            let spec = GroupSpec::finite_abelian(&moduli);
            let all = spec.elements().unwrap();
            assert_eq!(all.len() as u64, spec.order().unwrap());
            assert!(all.len() <= 64);
            let e = spec.identity();
            for a in &all {
                assert_eq!(spec.mul(a, &spec.inv(a)), e);
                for b in &all {
                    for c in &all {
                        assert_eq!(
                            spec.mul(&spec.mul(a, b), c),
                            spec.mul(a, &spec.mul(b, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn infinite_axioms_hold_on_random_triples() {
        let mut rng = crate::rng::rng(3, 0);
        for spec in [GroupSpec::lattice(2), GroupSpec::Heisenberg3] {
            let e = spec.identity();
            for _ in 0..10_000 {
                let mut draw = || {
                    let c: Vec<i64> = (0..spec.rank()).map(|_| rng.gen_range(-1000..1000)).collect();
                    spec.element(&c).unwrap()
                };
                let (a, b, c) = (draw(), draw(), draw());
                assert_eq!(spec.mul(&spec.mul(&a, &b), &c), spec.mul(&a, &spec.mul(&b, &c)));
                assert_eq!(spec.mul(&a, &spec.inv(&a)), e);
                assert_eq!(spec.mul(&spec.inv(&a), &a), e);
            }
        }
    }

    #[test]
    fn mismatched_elements_are_rejected() {
        let z2 = GroupSpec::lattice(2);
        let g = GroupElement::new(&[1, 2, 3]);
        assert!(matches!(z2.multiply(&g, &g), Err(Error::Input(_))));
        let f = GroupSpec::finite_abelian(&[3]);
        assert!(f.multiply(&GroupElement::new(&[5]), &GroupElement::new(&[0])).is_err());
        assert!(GroupSpec::lattice(0).validate().is_err());
        assert!(GroupSpec::finite_abelian(&[2, 0]).validate().is_err());
    }

    #[test]
    fn heisenberg_unit_ball_has_five_elements() {
        let h3 = GroupSpec::Heisenberg3;
        let ball = h3.word_ball(&h3.standard_generators(), 1, 1000).unwrap();
        assert_eq!(ball.len(), 5);
        assert!(h3.word_ball(&h3.standard_generators(), 6, 50).is_err());
    }
}
