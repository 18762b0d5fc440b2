//! The group generated by the four isometries `x ↦ x`, `x ↦ x + 2α`,
//! `x ↦ 2 − x` and `x ↦ 2α − x`.
//!
//! Every element has the unique normal form `x ↦ a·x + 2α·b + 2c` with
//! `a = ±1` and integers `b`, `c`.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::algebra::{AlgebraicPoint, Rational};

/// Default cap for [`enumerate_ball`].
pub const MAX_BALL_RADIUS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("ball radius {radius} exceeds the configured maximum {max}")]
    BallTooLarge { radius: usize, max: usize },
    #[error("invalid sign {0}; expected +1 or -1")]
    InvalidSign(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(a: i64) -> Result<Self, GroupError> {
        match a {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(GroupError::InvalidSign(other)),
        }
    }

    fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// The four generating isometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    /// `x ↦ x`
    Id,
    /// `x ↦ x + 2α`
    T,
    /// `x ↦ 2 − x`
    R2,
    /// `x ↦ 2α − x`
    R2a,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::Id, Generator::T, Generator::R2, Generator::R2a];

    pub fn element(self) -> GroupElement {
        match self {
            Generator::Id => GroupElement::IDENTITY,
            Generator::T => GroupElement::new(Sign::Plus, 1, 0),
            Generator::R2 => GroupElement::new(Sign::Minus, 0, 1),
            Generator::R2a => GroupElement::new(Sign::Minus, 1, 0),
        }
    }

    pub fn apply(self, x: &AlgebraicPoint) -> AlgebraicPoint {
        self.element().apply(x)
    }

    /// Applies the inverse map (only `T` is not an involution).
    pub fn apply_inverse(self, x: &AlgebraicPoint) -> AlgebraicPoint {
        self.element().inverse().apply(x)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Generator::Id => "Id",
            Generator::T => "T",
            Generator::R2 => "R2",
            Generator::R2a => "R2a",
        };
        f.write_str(s)
    }
}

/// `x ↦ a·x + 2α·b + 2c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub a: Sign,
    pub b: i64,
    pub c: i64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        a: Sign::Plus,
        b: 0,
        c: 0,
    };

    pub const fn new(a: Sign, b: i64, c: i64) -> Self {
        GroupElement { a, b, c }
    }

    /// Builds from an integer sign, which must be `±1`.
    pub fn from_triple(a: i64, b: i64, c: i64) -> Result<Self, GroupError> {
        Ok(GroupElement::new(Sign::from_value(a)?, b, c))
    }

    pub fn triple(&self) -> [i64; 3] {
        [self.a.value(), self.b, self.c]
    }

    pub fn is_identity(&self) -> bool {
        *self == GroupElement::IDENTITY
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let a = self.a.value();
        GroupElement {
            a: self.a.times(other.a),
            b: a * other.b + self.b,
            c: a * other.c + self.c,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let a = self.a.value();
        GroupElement {
            a: self.a,
            b: -a * self.b,
            c: -a * self.c,
        }
    }

    /// The translation part `2c + 2b·α`.
    pub fn offset(&self) -> AlgebraicPoint {
        AlgebraicPoint::from_ints(2 * self.c, 2 * self.b)
    }

    pub fn apply(&self, x: &AlgebraicPoint) -> AlgebraicPoint {
        let offset = self.offset();
        match self.a {
            Sign::Plus => x + &offset,
            Sign::Minus => &offset - x,
        }
    }

    /// The element `x ↦ a·x + u + v·α`, if it lies in the group.
    pub fn from_affine(a: Sign, u: &Rational, v: &Rational) -> Option<GroupElement> {
        let half = |r: &Rational| -> Option<i64> {
            if !r.is_integer() {
                return None;
            }
            let n = r.to_integer();
            if !n.is_even() {
                return None;
            }
            i64::try_from(n / 2).ok()
        };
        Some(GroupElement::new(a, half(v)?, half(u)?))
    }
}

pub fn compose(g: &GroupElement, h: &GroupElement) -> GroupElement {
    g.compose(h)
}

pub fn inverse(g: &GroupElement) -> GroupElement {
    g.inverse()
}

pub fn apply(g: &GroupElement, x: &AlgebraicPoint) -> AlgebraicPoint {
    g.apply(x)
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.a.value(), self.b, self.c)
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.triple().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [a, b, c] = <[i64; 3]>::deserialize(d)?;
        GroupElement::from_triple(a, b, c).map_err(serde::de::Error::custom)
    }
}

/// Evaluates a word with the first letter applied first, i.e.
/// `[g1, g2, g3]` is `g3 ∘ g2 ∘ g1`.
pub fn word_to_element(word: &[Generator]) -> GroupElement {
    word.iter()
        .fold(GroupElement::IDENTITY, |acc, g| g.element().compose(&acc))
}

/// All elements expressible as words of length at most `radius`, deduplicated
/// by normal form. Radius is capped at [`MAX_BALL_RADIUS`].
pub fn enumerate_ball(radius: usize) -> Result<BTreeSet<GroupElement>, GroupError> {
    enumerate_ball_capped(radius, MAX_BALL_RADIUS)
}

pub fn enumerate_ball_capped(radius: usize, max: usize) -> Result<BTreeSet<GroupElement>, GroupError> {
    if radius > max {
        return Err(GroupError::BallTooLarge { radius, max });
    }
    let mut ball = BTreeSet::from([GroupElement::IDENTITY]);
    let mut frontier = vec![GroupElement::IDENTITY];
    for _ in 0..radius {
        let mut next = Vec::new();
        for g in &frontier {
            for gen in Generator::ALL {
                let h = gen.element().compose(g);
                if ball.insert(h) {
                    next.push(h);
                }
            }
        }
        frontier = next;
    }
    Ok(ball)
}

/// Whether `x ↦ a·x + u + v·α` belongs to the group: both `u` and `v` must be
/// even integers.
pub fn is_member(a: Sign, u: &Rational, v: &Rational) -> bool {
    GroupElement::from_affine(a, u, v).is_some()
}

/// [`is_member`] with integer `u`, `v`.
pub fn is_member_ints(a: Sign, u: i64, v: i64) -> bool {
    let r = |n: i64| Rational::from_integer(n.into());
    is_member(a, &r(u), &r(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use proptest::prelude::*;
    use Generator::*;

    fn el(a: i64, b: i64, c: i64) -> GroupElement {
        GroupElement::from_triple(a, b, c).unwrap()
    }

    #[test]
    fn compose_examples() {
        let g = el(-1, 3, -2);
        assert_eq!(GroupElement::IDENTITY.compose(&g), g);
        assert_eq!(T.element().compose(&T.element()), el(1, 2, 0));
        assert_eq!(R2.element().compose(&T.element()), el(-1, -1, 1));
        // 2 − (x + 2α) at a few points
        let h = R2.element().compose(&T.element());
        for x in [
            AlgebraicPoint::ratio(1, 3),
            AlgebraicPoint::from_ints(5, -7),
            AlgebraicPoint::ratio(-9, 4),
        ] {
            assert_eq!(h.apply(&x), R2.apply(&T.apply(&x)));
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(GroupElement::IDENTITY.inverse(), GroupElement::IDENTITY);
        assert_eq!(R2.element().inverse(), R2.element());
        assert_eq!(T.element().inverse(), el(1, -1, 0));
    }

    #[test]
    fn apply_examples() {
        let x = AlgebraicPoint::ratio(7, 5);
        assert_eq!(GroupElement::IDENTITY.apply(&x), x);
        assert_eq!(T.apply(&AlgebraicPoint::zero()), AlgebraicPoint::from_ints(0, 2));
        assert_eq!(
            el(-1, -1, 1).apply(&AlgebraicPoint::ratio(1, 2)),
            AlgebraicPoint::new(Rational::new(3.into(), 2.into()), Rational::from_integer((-2).into()))
        );
    }

    #[test]
    fn words() {
        assert_eq!(word_to_element(&[]), GroupElement::IDENTITY);
        assert_eq!(word_to_element(&[R2, R2]), GroupElement::IDENTITY);
        // T first, then R2: 2 − (x + 2α).
        assert_eq!(word_to_element(&[T, R2]), el(-1, -1, 1));
        let x = AlgebraicPoint::ratio(2, 9);
        assert_eq!(word_to_element(&[T, R2]).apply(&x), R2.apply(&T.apply(&x)));
    }

    #[test]
    fn small_balls() {
        assert_eq!(enumerate_ball(0).unwrap(), BTreeSet::from([GroupElement::IDENTITY]));
        let one: BTreeSet<_> = Generator::ALL.iter().map(|g| g.element()).collect();
        assert_eq!(enumerate_ball(1).unwrap(), one);
        assert_eq!(
            enumerate_ball(11),
            Err(GroupError::BallTooLarge {
                radius: 11,
                max: MAX_BALL_RADIUS
            })
        );
        for l in 0..=10usize {
            for g in enumerate_ball(l).unwrap() {
                assert!(g.b.unsigned_abs() as usize <= l && g.c.unsigned_abs() as usize <= l);
            }
        }
    }

    #[test]
    fn membership() {
        assert!(is_member_ints(Sign::Plus, 0, 0));
        assert!(!is_member_ints(Sign::Plus, 0, 1));
        assert!(is_member_ints(Sign::Minus, 2, 0));
        let half = Rational::new(1.into(), 2.into());
        assert!(!is_member(Sign::Plus, &half, &Rational::zero()));
        // Translation by α is not reachable within the largest ball either.
        let shift = GroupElement::from_affine(Sign::Plus, &Rational::zero(), &Rational::one());
        assert!(shift.is_none());
        for g in enumerate_ball(10).unwrap() {
            assert_ne!(g.apply(&AlgebraicPoint::zero()), AlgebraicPoint::alpha());
        }
    }

    #[test]
    fn display_triple() {
        assert_eq!(el(-1, 2, -3).to_string(), "[-1, 2, -3]");
    }

    fn element() -> impl Strategy<Value = GroupElement> {
        (prop_oneof![Just(1i64), Just(-1i64)], -20i64..20, -20i64..20).prop_map(|(a, b, c)| el(a, b, c))
    }

    fn point() -> impl Strategy<Value = AlgebraicPoint> {
        (-30i64..30, 1i64..12, -10i64..10).prop_map(|(n, d, v)| {
            AlgebraicPoint::new(Rational::new(n.into(), d.into()), Rational::from_integer(v.into()))
        })
    }

    proptest! {
        #[test]
        fn group_axioms(g in element(), h in element(), k in element()) {
            prop_assert_eq!(g.compose(&h).compose(&k), g.compose(&h.compose(&k)));
            prop_assert_eq!(g.compose(&g.inverse()), GroupElement::IDENTITY);
            prop_assert_eq!(g.inverse().compose(&g), GroupElement::IDENTITY);
            prop_assert_eq!(GroupElement::IDENTITY.compose(&g), g);
            prop_assert_eq!(g.compose(&GroupElement::IDENTITY), g);
        }

        #[test]
        fn apply_is_a_homomorphism(g in element(), h in element(), x in point()) {
            prop_assert_eq!(g.compose(&h).apply(&x), g.apply(&h.apply(&x)));
        }

        #[test]
        fn words_match_sequential_application(word in prop::collection::vec(0usize..4, 0..12), x in point()) {
            let word: Vec<Generator> = word.into_iter().map(|i| Generator::ALL[i]).collect();
            let expected = word.iter().fold(x.clone(), |p, g| g.apply(&p));
            prop_assert_eq!(word_to_element(&word).apply(&x), expected);
        }
    }

    #[test]
    fn ball_inverses_and_recovery() {
        // Γ is not symmetric (T⁻¹ = R2a∘T∘R2a), so inverses need two extra letters.
        for l in 1..=8 {
            let ball = enumerate_ball(l).unwrap();
            let wider = enumerate_ball(l + 2).unwrap();
            assert_eq!(ball.contains(&T.element().inverse()), l >= 3);
            assert!(ball.iter().all(|g| wider.contains(&g.inverse())));
        }
        assert_eq!(word_to_element(&[R2a, T, R2a]), T.element().inverse());
        let ball = enumerate_ball(8).unwrap();
        assert!(ball.contains(&GroupElement::IDENTITY));
        let x0 = AlgebraicPoint::ratio(1, 7);
        let x1 = AlgebraicPoint::ratio(4, 5);
        let dx = &x1.u - &x0.u;
        for g in &ball {
            // Recover (a, b, c) from the images of two rational points.
            let (y0, y1) = (g.apply(&x0), g.apply(&x1));
            assert_eq!(y1.v, y0.v);
            let slope = (&y1.u - &y0.u) / &dx;
            let a = if slope.is_one() { Sign::Plus } else { Sign::Minus };
            let shift = &y0 - &x0.scale(&Rational::from_integer(a.value().into()));
            assert_eq!(GroupElement::from_affine(a, &shift.u, &shift.v), Some(*g));
        }
    }
}
