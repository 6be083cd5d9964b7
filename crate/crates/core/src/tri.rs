//! Three-valued logic values with Kleene semantics.

use std::fmt;
use std::ops::Not;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tri {
    Zero,
    One,
    X,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::One
        } else {
            Tri::Zero
        }
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            Tri::Zero => Some(false),
            Tri::One => Some(true),
            Tri::X => None,
        }
    }

    pub fn is_x(self) -> bool {
        self == Tri::X
    }

    pub fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::Zero, _) | (_, Tri::Zero) => Tri::Zero,
            (Tri::One, Tri::One) => Tri::One,
            _ => Tri::X,
        }
    }

    pub fn or(self, o: Tri) -> Tri {
        !(!self).and(!o)
    }

    pub fn xor(self, o: Tri) -> Tri {
        match (self.to_bool(), o.to_bool()) {
            (Some(a), Some(b)) => Tri::from_bool(a ^ b),
            _ => Tri::X,
        }
    }

    /// `0`, `1` or `x`.
    pub fn as_char(self) -> char {
        match self {
            Tri::Zero => '0',
            Tri::One => '1',
            Tri::X => 'x',
        }
    }

    pub fn from_char(c: char) -> Option<Tri> {
        match c {
            '0' => Some(Tri::Zero),
            '1' => Some(Tri::One),
            'x' | 'X' => Some(Tri::X),
            _ => None,
        }
    }
}

impl Not for Tri {
    type Output = Tri;
    fn not(self) -> Tri {
        match self {
            Tri::Zero => Tri::One,
            Tri::One => Tri::Zero,
            Tri::X => Tri::X,
        }
    }
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[cfg(test)]
mod tests {
    use super::Tri::{self, *};

    #[test]
    fn kleene_tables() {
        assert_eq!(X.and(Zero), Zero);
        assert_eq!(X.and(One), X);
        assert_eq!(X.or(One), One);
        assert_eq!(X.or(Zero), X);
        assert_eq!(X.xor(X), X);
        assert_eq!(!X, X);
        for a in [Zero, One] {
            for b in [Zero, One] {
                let (x, y) = (a == One, b == One);
                assert_eq!(a.and(b), Tri::from_bool(x && y));
                assert_eq!(a.or(b), Tri::from_bool(x || y));
                assert_eq!(a.xor(b), Tri::from_bool(x ^ y));
            }
        }
    }
}
