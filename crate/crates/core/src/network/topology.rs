use super::{
    build_mixing_pair, generate_round_graph, phi_backward, pi_sequence, BaseKind, Digraph,
    MixingPair, ProbSequences,
};
use crate::Result;

/// Deterministic source of round graphs. Any round can be produced
/// independently of the others.
#[derive(Debug, Clone)]
pub enum TopologyPlan {
    /// Edges of `base` kept with probability `keep_prob`, seeded per round.
    Sampled {
        base: Digraph,
        keep_prob: f64,
        seed: u64,
    },
    /// A recorded sequence; rounds past its end reuse the last graph.
    Recorded(Vec<Digraph>),
}

impl TopologyPlan {
    pub fn sampled(kind: BaseKind, n: usize, keep_prob: f64, seed: u64) -> Result<Self> {
        let base = kind.build(n, seed)?;
        // Validate keep_prob up front.
        generate_round_graph(&base, keep_prob, seed, 0)?;
        Ok(TopologyPlan::Sampled {
            base,
            keep_prob,
            seed,
        })
    }

    /// Fixed graph every round.
    pub fn fixed(g: Digraph) -> Self {
        TopologyPlan::Recorded(vec![g])
    }

    pub fn n(&self) -> usize {
        match self {
            TopologyPlan::Sampled { base, .. } => base.n(),
            TopologyPlan::Recorded(gs) => gs[0].n(),
        }
    }

    pub fn graph(&self, t: usize) -> Result<Digraph> {
        match self {
            TopologyPlan::Sampled {
                base,
                keep_prob,
                seed,
            } => generate_round_graph(base, *keep_prob, *seed, t),
            TopologyPlan::Recorded(gs) => Ok(gs[t.min(gs.len() - 1)].clone()),
        }
    }

    pub fn pair(&self, t: usize) -> Result<MixingPair> {
        Ok(build_mixing_pair(&self.graph(t)?, t))
    }

    pub fn pairs(&self, rounds: usize) -> Result<Vec<MixingPair>> {
        (0..rounds).map(|t| self.pair(t)).collect()
    }

    /// Mixing pairs for rounds `0..T` plus `φ_t` and `π_t` for
    /// `t = 0..=T`. Extra rounds past `T` are generated (doubling) until the
    /// backward product for `φ_T` converges to `tol`.
    pub fn sequences(&self, rounds: usize, tol: f64) -> Result<(Vec<MixingPair>, ProbSequences)> {
        let mut pairs = self.pairs(rounds + 1)?;
        let mut extra = 64;
        loop {
            while pairs.len() < rounds + 1 + extra {
                pairs.push(self.pair(pairs.len())?);
            }
            match phi_backward(&pairs, rounds, tol) {
                Ok((phi, window)) => {
                    pairs.truncate(rounds);
                    let pi = pi_sequence_from(&pairs, self.n());
                    return Ok((pairs, ProbSequences { phi, pi, window }));
                }
                Err(e) if extra >= 1 << 16 => return Err(e),
                Err(_) => extra *= 2,
            }
        }
    }
}

fn pi_sequence_from(pairs: &[MixingPair], n: usize) -> Vec<Vec<f64>> {
    if pairs.is_empty() {
        vec![vec![1.0 / n as f64; n]]
    } else {
        pi_sequence(pairs)
    }
}
