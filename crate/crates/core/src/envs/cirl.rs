//! Two-state cooperative inverse RL example in which a corrupted view of the
//! human's action makes two reward hypotheses indistinguishable.

use serde::Serialize;

pub const S1: usize = 0;
pub const S2: usize = 1;

/// Agent actions: `a1`, `a2` move to `s1`, `s2`; `w` lets the human act.
pub const A1: usize = 0;
pub const A2: usize = 1;
pub const WAIT: usize = 2;

pub const HUMAN_1: usize = 0;
pub const HUMAN_2: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: &'static str,
    pub p: f64,
    /// True reward of `s1`, `s2`.
    pub true_reward: [f64; 2],
    pub s2_corrupt: bool,
    /// `policy[state][human_action]`: the human's true action distribution.
    pub human_policy: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CirlExample {
    pub hypotheses: [Hypothesis; 2],
}

impl CirlExample {
    /// `P(s' | s, a, a^H)` under hypothesis `h`, as `[P(s1), P(s2)]`.
    pub fn transition(&self, h: usize, state: usize, action: usize, human: usize) -> [f64; 2] {
        let p = self.hypotheses[h].p;
        match (state, action, human) {
            (_, A1, _) => [1.0, 0.0],
            (_, A2, _) => [0.0, 1.0],
            (S1, _, _) => [1.0, 0.0],
            (_, _, HUMAN_1) => [1.0 - p, p],
            _ => [0.5 - p, 0.5 + p],
        }
    }

    /// `P(observed human action | s, true human action)` under `h`, as
    /// `[P(â1), P(â2)]`. A corrupt `s2` always shows `â2`.
    pub fn observation(&self, h: usize, state: usize, human: usize) -> [f64; 2] {
        if state == S2 && self.hypotheses[h].s2_corrupt {
            return [0.0, 1.0];
        }
        let mut out = [0.0; 2];
        out[human] = 1.0;
        out
    }
}

/// The two hypotheses:
///
/// | hypothesis | p   | best state | `s2` corrupt |
/// |------------|-----|------------|--------------|
/// | H1         | 0.5 | `s1`       | yes          |
/// | H2         | 0   | `s2`       | no           |
///
/// In `s2` the human plays `a1^H` under H1 and `a2^H` under H2. In `s1` the
/// human's action has no effect on anything, and the human picks uniformly
/// under both hypotheses.
pub fn cirl_example() -> CirlExample {
    CirlExample {
        hypotheses: [
            Hypothesis {
                name: "H1",
                p: 0.5,
                true_reward: [1.0, 0.0],
                s2_corrupt: true,
                human_policy: [[0.5, 0.5], [1.0, 0.0]],
            },
            Hypothesis {
                name: "H2",
                p: 0.0,
                true_reward: [0.0, 1.0],
                s2_corrupt: false,
                human_policy: [[0.5, 0.5], [0.0, 1.0]],
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_table_matches_the_hypotheses() {
        let ex = cirl_example();
        assert_eq!(ex.transition(0, S2, WAIT, HUMAN_1), [0.5, 0.5]);
        assert_eq!(ex.transition(1, S2, WAIT, HUMAN_2), [0.5, 0.5]);
        assert_eq!(ex.transition(1, S2, WAIT, HUMAN_1), [1.0, 0.0]);
        assert_eq!(ex.transition(0, S1, WAIT, HUMAN_2), [1.0, 0.0]);
        assert_eq!(ex.transition(1, S1, A2, HUMAN_1), [0.0, 1.0]);
    }

    #[test]
    fn corrupt_channel_reports_second_action() {
        let ex = cirl_example();
        assert_eq!(ex.observation(0, S2, HUMAN_1), [0.0, 1.0]);
        assert_eq!(ex.observation(1, S2, HUMAN_2), [0.0, 1.0]);
        assert_eq!(ex.observation(0, S1, HUMAN_1), [1.0, 0.0]);
    }
}
