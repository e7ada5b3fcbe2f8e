use super::{Candidate, CandidateSet, ProposeError, Proposer};
use crate::codec::encode;
use crate::data::Dataset;
use crate::datagen::{sample_function, GenConfig};
use crate::labeler::{identify_with_params, LabelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Labels of random functions from the data generator, restricted to the
/// dataset's dimension. Same seed, same candidates.
#[derive(Clone, Debug)]
pub struct RandomProposer {
    pub seed: u64,
    pub m: usize,
    /// Draws attempted per requested candidate before giving up.
    pub attempts_per_candidate: usize,
}

impl RandomProposer {
    pub fn new(seed: u64) -> RandomProposer {
        RandomProposer { seed, m: crate::netcore::M_SMALL, attempts_per_candidate: 200 }
    }
}

impl Proposer for RandomProposer {
    fn name(&self) -> String {
        format!("random:{}", self.seed)
    }

    fn replicas(&self) -> usize {
        self.m
    }

    fn propose(&self, data: &Dataset, k: usize) -> Result<CandidateSet, ProposeError> {
        if k == 0 {
            return Err(ProposeError::ZeroK);
        }
        let d = data.dim();
        let base = if d <= 4 { GenConfig::small(self.seed) } else { GenConfig::large(self.seed) };
        let dims: Vec<(usize, f64)> = (1..=d).map(|i| (i, 1.0)).collect();
        let cfg = GenConfig { d_max: d.max(base.d_max), dim_dist: dims, m: self.m, ..base };
        let lc = LabelConfig::new(self.m, d);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut raw: Vec<Candidate> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..k * self.attempts_per_candidate {
            if raw.len() == k {
                break;
            }
            let f = sample_function(&cfg, &mut rng);
            let Ok((s, _)) = identify_with_params(&f.expr, lc) else { continue };
            let Ok(label) = encode(&s, lc.l_max) else { continue };
            if seen.insert(label.clone()) {
                let score = -(raw.len() as f64);
                raw.push(Candidate { label, score, provenance: format!("random:{}", f.expr) });
            }
        }
        let set = CandidateSet::build(raw, k, self.m, d);
        if set.is_empty() {
            return Err(ProposeError::Exhausted(format!(
                "no labelable function in {} draws",
                k * self.attempts_per_candidate
            )));
        }
        Ok(set)
    }
}
