//! Early/late × rise/fall analysis corners.

use serde::{Deserialize, Serialize};

/// Four values indexed by [`Corner::index`]: ER, EF, LR, LF.
pub type Quad = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Analysis {
    Early,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Transition {
    Rise,
    Fall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    EarlyRise,
    EarlyFall,
    LateRise,
    LateFall,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::EarlyRise, Corner::EarlyFall, Corner::LateRise, Corner::LateFall];

    pub fn new(analysis: Analysis, transition: Transition) -> Self {
        match (analysis, transition) {
            (Analysis::Early, Transition::Rise) => Corner::EarlyRise,
            (Analysis::Early, Transition::Fall) => Corner::EarlyFall,
            (Analysis::Late, Transition::Rise) => Corner::LateRise,
            (Analysis::Late, Transition::Fall) => Corner::LateFall,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn analysis(self) -> Analysis {
        match self {
            Corner::EarlyRise | Corner::EarlyFall => Analysis::Early,
            Corner::LateRise | Corner::LateFall => Analysis::Late,
        }
    }

    pub fn transition(self) -> Transition {
        match self {
            Corner::EarlyRise | Corner::LateRise => Transition::Rise,
            Corner::EarlyFall | Corner::LateFall => Transition::Fall,
        }
    }

    pub fn is_early(self) -> bool {
        self.analysis() == Analysis::Early
    }

    /// Two-letter token used by the label sidecar format.
    pub fn token(self) -> &'static str {
        match self {
            Corner::EarlyRise => "ER",
            Corner::EarlyFall => "EF",
            Corner::LateRise => "LR",
            Corner::LateFall => "LF",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "ER" => Some(Corner::EarlyRise),
            "EF" => Some(Corner::EarlyFall),
            "LR" => Some(Corner::LateRise),
            "LF" => Some(Corner::LateFall),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_round_trip() {
        for c in Corner::ALL {
            assert_eq!(Corner::from_token(c.token()), Some(c));
            assert_eq!(Corner::new(c.analysis(), c.transition()), c);
        }
        assert_eq!(Corner::from_token("XX"), None);
    }
}
