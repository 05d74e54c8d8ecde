//! Surface element modes and per-element restrictions.
//!
//! A restriction set is how benchmark schemes constrain the optimizer:
//! each element either chooses freely among an allowed subset of modes or
//! is pinned to one mode. The surface can also be absent entirely.

use serde::{Deserialize, Serialize};

/// Operating mode of one surface element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Reflect,
    Transmit,
    Jam,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Reflect, Mode::Transmit, Mode::Jam];

    /// Row index used by `beta` tables (reflect, transmit, jam).
    pub fn index(self) -> usize {
        match self {
            Mode::Reflect => 0,
            Mode::Transmit => 1,
            Mode::Jam => 2,
        }
    }
}

/// What one element is allowed to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementRule {
    /// Mode chosen by the optimizer among the flagged modes
    /// (reflect, transmit, jam).
    Choose([bool; 3]),
    /// Mode pinned in advance.
    Fixed(Mode),
}

impl ElementRule {
    pub fn free() -> Self {
        ElementRule::Choose([true, true, true])
    }

    /// May this element operate in `mode` at all?
    pub fn allows(&self, mode: Mode) -> bool {
        match self {
            ElementRule::Choose(mask) => mask[mode.index()],
            ElementRule::Fixed(m) => *m == mode,
        }
    }

    pub fn fixed_mode(&self) -> Option<Mode> {
        match self {
            ElementRule::Fixed(m) => Some(*m),
            ElementRule::Choose(mask) => {
                let active: Vec<Mode> = Mode::ALL.into_iter().filter(|m| mask[m.index()]).collect();
                if active.len() == 1 {
                    Some(active[0])
                } else {
                    None
                }
            }
        }
    }
}

/// Per-element restrictions for a whole surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeRestrictions {
    /// One rule per element; empty means the surface is switched off
    /// entirely (all coefficients zero, direct links only).
    pub rules: Vec<ElementRule>,
    pub surface_off: bool,
}

impl ModeRestrictions {
    /// All three modes available on every element.
    pub fn free(k: usize) -> Self {
        ModeRestrictions {
            rules: vec![ElementRule::free(); k],
            surface_off: false,
        }
    }

    /// Surface absent: every coefficient forced to zero.
    pub fn surface_off(k: usize) -> Self {
        ModeRestrictions {
            rules: vec![ElementRule::Choose([false, false, false]); k],
            surface_off: true,
        }
    }

    pub fn elements(&self) -> usize {
        self.rules.len()
    }

    /// Elements that may operate in `mode`.
    pub fn support(&self, mode: Mode) -> Vec<usize> {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.allows(mode))
            .map(|(i, _)| i)
            .collect()
    }

    /// Does any element have a real choice left?
    pub fn any_choice(&self) -> bool {
        self.rules.iter().any(|r| r.fixed_mode().is_none() && !matches!(r, ElementRule::Choose(m) if m.iter().all(|x| !x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_queries() {
        let free = ElementRule::free();
        assert!(free.allows(Mode::Jam));
        assert_eq!(free.fixed_mode(), None);
        let fixed = ElementRule::Fixed(Mode::Transmit);
        assert!(fixed.allows(Mode::Transmit));
        assert!(!fixed.allows(Mode::Reflect));
        assert_eq!(fixed.fixed_mode(), Some(Mode::Transmit));
        let only_r = ElementRule::Choose([true, false, false]);
        assert_eq!(only_r.fixed_mode(), Some(Mode::Reflect));
    }

    #[test]
    fn support_sets() {
        let mut r = ModeRestrictions::free(4);
        r.rules[1] = ElementRule::Fixed(Mode::Transmit);
        r.rules[3] = ElementRule::Choose([true, false, true]);
        assert_eq!(r.support(Mode::Reflect), vec![0, 2, 3]);
        assert_eq!(r.support(Mode::Transmit), vec![0, 1, 2]);
        assert_eq!(r.support(Mode::Jam), vec![0, 2, 3]);
        assert!(r.any_choice());
        assert!(!ModeRestrictions::surface_off(4).any_choice());
    }
}
